//! Coupled chains on finite state spaces, driven by exact kernels from
//! `mhcoupling` and sampled in floating point.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mhcoupling::measure::{build_maximal_coupling, tv_distance};
use mhcoupling::rational::{one, to_f64};
use mhcoupling::{JointDist, MhProblem, Rational, ResidualStrategy};

use crate::coupling::AcceptanceCoupling;
use crate::error::Result;
use crate::rng::{stream, Role};
use crate::simulate::CoupledChain;
use crate::stats::Frequency;

/// Sampler for a joint distribution on `n x n` cells.
#[derive(Debug, Clone)]
pub struct JointSampler {
    n: usize,
    index: WeightedIndex<f64>,
}

impl JointSampler {
    pub fn new(joint: &JointDist) -> Self {
        let w: Vec<f64> = joint.weights().iter().map(to_f64).collect();
        JointSampler {
            n: joint.n(),
            index: WeightedIndex::new(w).expect("joint distribution has positive mass"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let k = self.index.sample(rng);
        (k / self.n, k % self.n)
    }
}

/// How the two proposals are coupled in a finite two-step coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiniteProposalCoupling {
    Independent,
    /// Common uniform pushed through both inverse CDFs.
    Crn,
    /// Maximal coupling of the two proposal rows (product residual).
    Maximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiniteCouplingKind {
    /// Maximal coupling of the transition rows, sampled directly.
    KernelMaximal,
    /// Independent transitions.
    Independent,
    /// Common uniform pushed through both transition inverse CDFs.
    Crn,
    /// Coupled proposal then coupled acceptance.
    TwoStep {
        proposal: FiniteProposalCoupling,
        acceptance: AcceptanceCoupling,
    },
}

impl FiniteCouplingKind {
    pub fn name(&self) -> String {
        match self {
            FiniteCouplingKind::KernelMaximal => "kernel-maximal".into(),
            FiniteCouplingKind::Independent => "independent".into(),
            FiniteCouplingKind::Crn => "crn".into(),
            FiniteCouplingKind::TwoStep { proposal, acceptance } => {
                let p = match proposal {
                    FiniteProposalCoupling::Independent => "independent",
                    FiniteProposalCoupling::Crn => "crn",
                    FiniteProposalCoupling::Maximal => "maximal",
                };
                let a = match acceptance {
                    AcceptanceCoupling::CommonUniform => "common_uniform",
                    AcceptanceCoupling::Independent => "independent",
                };
                format!("proposal-{p}:{a}")
            }
        }
    }

    /// Every built-in finite coupling.
    pub fn all() -> Vec<FiniteCouplingKind> {
        let mut out = vec![
            FiniteCouplingKind::KernelMaximal,
            FiniteCouplingKind::Independent,
            FiniteCouplingKind::Crn,
        ];
        for proposal in [
            FiniteProposalCoupling::Independent,
            FiniteProposalCoupling::Crn,
            FiniteProposalCoupling::Maximal,
        ] {
            for acceptance in [AcceptanceCoupling::CommonUniform, AcceptanceCoupling::Independent] {
                out.push(FiniteCouplingKind::TwoStep { proposal, acceptance });
            }
        }
        out
    }
}

fn cumulative(row: &[Rational]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = row
        .iter()
        .map(|v| {
            acc += to_f64(v);
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// A finite coupled MH chain. Pair tables are built once for every `(x, y)`.
pub struct FiniteCoupling {
    pub kind: FiniteCouplingKind,
    pub faithful: bool,
    n: usize,
    p_cdf: Vec<Vec<f64>>,
    q_cdf: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    pair_tables: Vec<Option<JointSampler>>,
}

impl FiniteCoupling {
    pub fn new(problem: &MhProblem, kind: FiniteCouplingKind) -> Result<Self> {
        let n = problem.n();
        let p_rows = problem.p().rows();
        let q_rows = problem.q().rows();
        let mut pair_tables = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                let table = match kind {
                    FiniteCouplingKind::KernelMaximal => Some(build_maximal_coupling(
                        &p_rows[x],
                        &p_rows[y],
                        &ResidualStrategy::Product,
                    )?),
                    FiniteCouplingKind::TwoStep {
                        proposal: FiniteProposalCoupling::Maximal,
                        ..
                    } => Some(build_maximal_coupling(
                        &q_rows[x],
                        &q_rows[y],
                        &ResidualStrategy::Product,
                    )?),
                    _ => None,
                };
                pair_tables.push(table.as_ref().map(JointSampler::new));
            }
        }
        Ok(FiniteCoupling {
            kind,
            faithful: true,
            n,
            p_cdf: p_rows.iter().map(|d| cumulative(d.weights())).collect(),
            q_cdf: q_rows.iter().map(|d| cumulative(d.weights())).collect(),
            a: problem.a().rows().iter().map(|r| r.iter().map(to_f64).collect()).collect(),
            pair_tables,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn marginal_step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        inverse_cdf(&self.p_cdf[x], rng.random())
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R) -> (usize, usize) {
        if self.faithful && x == y {
            let z = self.marginal_step(x, rng);
            return (z, z);
        }
        match self.kind {
            FiniteCouplingKind::KernelMaximal => self.pair_tables[x * self.n + y]
                .as_ref()
                .expect("built for every pair")
                .sample(rng),
            FiniteCouplingKind::Independent => (self.marginal_step(x, rng), self.marginal_step(y, rng)),
            FiniteCouplingKind::Crn => {
                let u = rng.random();
                (inverse_cdf(&self.p_cdf[x], u), inverse_cdf(&self.p_cdf[y], u))
            }
            FiniteCouplingKind::TwoStep { proposal, acceptance } => {
                let (xp, yp) = match proposal {
                    FiniteProposalCoupling::Independent => (
                        inverse_cdf(&self.q_cdf[x], rng.random()),
                        inverse_cdf(&self.q_cdf[y], rng.random()),
                    ),
                    FiniteProposalCoupling::Crn => {
                        let u = rng.random();
                        (inverse_cdf(&self.q_cdf[x], u), inverse_cdf(&self.q_cdf[y], u))
                    }
                    FiniteProposalCoupling::Maximal => self.pair_tables[x * self.n + y]
                        .as_ref()
                        .expect("built for every pair")
                        .sample(rng),
                };
                let (ux, uy) = match acceptance {
                    AcceptanceCoupling::CommonUniform => {
                        let u: f64 = rng.random();
                        (u, u)
                    }
                    AcceptanceCoupling::Independent => (rng.random(), rng.random()),
                };
                // u in [0,1) and b = 1{u < a}: accepted with probability a exactly.
                let nx = if ux < self.a[x][xp] { xp } else { x };
                let ny = if uy < self.a[y][yp] { yp } else { y };
                (nx, ny)
            }
        }
    }
}

impl CoupledChain for FiniteCoupling {
    type State = usize;

    fn step(&self, x: &usize, y: &usize, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
        Ok(self.sample(*x, *y, rng))
    }

    fn pair_key(&self, x: &usize, y: &usize) -> Option<(usize, usize)> {
        Some((*x, *y))
    }
}

/// Exact coupling-inequality bound `1 - TV(P(x,·), P(y,·))`.
pub fn meeting_bound(problem: &MhProblem, x: usize, y: usize) -> Result<Rational> {
    Ok(one() - tv_distance(problem.p().row(x), problem.p().row(y))?)
}

/// Empirical one-step meeting frequency from a fixed pair.
pub fn one_step_meeting_frequency(
    coupling: &FiniteCoupling,
    pair: (usize, usize),
    steps: u64,
    seed: u64,
) -> Frequency {
    let mut rng = stream(seed, 0, Role::Chain);
    let hits = (0..steps)
        .filter(|_| {
            let (a, b) = coupling.sample(pair.0, pair.1, &mut rng);
            a == b
        })
        .count() as u64;
    Frequency { hits, trials: steps }
}

/// Pair, observed frequency and exact bound.
pub type BoundViolation = ((usize, usize), Frequency, f64);

/// Pairs whose empirical meeting frequency exceeds the exact bound by more
/// than `k` standard errors.
pub fn bound_violations(
    problem: &MhProblem,
    counts: &std::collections::BTreeMap<(usize, usize), Frequency>,
    k: f64,
) -> Result<Vec<BoundViolation>> {
    let mut out = Vec::new();
    for (&(x, y), f) in counts {
        let bound = to_f64(&meeting_bound(problem, x, y)?);
        let se = f.se().max(f.se_at(bound.clamp(1e-12, 1.0 - 1e-12)));
        if f.value() > bound + k * se {
            out.push(((x, y), *f, bound));
        }
    }
    Ok(out)
}
