//! Random exact problems for property tests.

use rand::Rng;

use crate::kernel::{AcceptanceMatrix, FiniteKernel, MhProblem};
use crate::measure::Dist;
use crate::rational::{self, Rational};
use crate::space::StateSpace;

/// Which acceptance rule a random problem uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleChoice {
    Mh,
    Barker,
    /// Random rates `k/4`.
    Explicit,
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomProblemOptions {
    pub n: usize,
    /// Allow self-proposals.
    pub lazy: bool,
    pub rule: RuleChoice,
    /// Chance an off-diagonal proposal weight is zero.
    pub sparsity: f64,
}

impl RandomProblemOptions {
    pub fn new(n: usize) -> Self {
        RandomProblemOptions {
            n,
            lazy: true,
            rule: RuleChoice::Any,
            sparsity: 0.25,
        }
    }
}

fn normalize(weights: Vec<i64>) -> Vec<Rational> {
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| rational::ratio(w, total)).collect()
}

/// Random proposal kernel with small integer weights.
pub fn random_kernel<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    lazy: bool,
    sparsity: f64,
) -> FiniteKernel {
    let space = StateSpace::numbered(n);
    let rows = (0..n)
        .map(|x| {
            let mut w: Vec<i64> = (0..n)
                .map(|z| {
                    if z == x {
                        if lazy && rng.random_bool(0.5) {
                            rng.random_range(1..=3)
                        } else {
                            0
                        }
                    } else if rng.random_bool(sparsity) {
                        0
                    } else {
                        rng.random_range(1..=4)
                    }
                })
                .collect();
            if w.iter().all(|&v| v == 0) {
                let target = if n == 1 { 0 } else { (x + 1) % n };
                w[target] = 1;
            }
            normalize(w)
        })
        .collect();
    FiniteKernel::new(space, rows).expect("rows are normalized")
}

pub fn random_target<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dist {
    let w = (0..n).map(|_| rng.random_range(1..=5)).collect();
    Dist::new(StateSpace::numbered(n), normalize(w)).expect("positive weights")
}

pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, options: &RandomProblemOptions) -> MhProblem {
    let n = options.n;
    let q = random_kernel(rng, n, options.lazy, options.sparsity);
    let rule = match options.rule {
        RuleChoice::Any => [RuleChoice::Mh, RuleChoice::Barker, RuleChoice::Explicit]
            [rng.random_range(0..3)],
        r => r,
    };
    let pi = random_target(rng, n);
    let a = match rule {
        RuleChoice::Mh => crate::kernel::mh_acceptance(&pi, &q).expect("positive target"),
        RuleChoice::Barker => crate::kernel::barker_acceptance(&pi, &q).expect("positive target"),
        _ => {
            let rows = (0..n)
                .map(|x| {
                    (0..n)
                        .map(|z| {
                            if z == x {
                                rational::one()
                            } else {
                                rational::ratio(rng.random_range(0..=4), 4)
                            }
                        })
                        .collect()
                })
                .collect();
            AcceptanceMatrix::new(q.space().clone(), rows).expect("rates in [0,1]")
        }
    };
    MhProblem::new(q, a).expect("generated kernel is valid")
}
