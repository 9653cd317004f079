use std::sync::Arc;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::FiniteKernel;
use crate::measure::{build_maximal_coupling, Dist, JointDist, ResidualStrategy};
use crate::rational::{self, Rational};
use crate::space::StateSpace;

/// Starting point of the null-space walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrechetStart {
    Independent,
    Maximal,
    /// Either of the above, picked per draw.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetOptions {
    pub start: FrechetStart,
    /// Number of cycle perturbations `t(e_ij - e_i'j - e_ij' + e_i'j')`.
    pub perturbations: usize,
    /// Chance a perturbation is pushed to the edge of its feasible range,
    /// which zeroes an entry and reaches the boundary of the polytope.
    pub extreme_probability: f64,
    /// Step sizes are `k / denominator` of the feasible range.
    pub denominator: i64,
}

impl Default for FrechetOptions {
    fn default() -> Self {
        FrechetOptions {
            start: FrechetStart::Independent,
            perturbations: 6,
            extreme_probability: 0.3,
            denominator: 4,
        }
    }
}

/// Random element of `Γ(P(x,·), P(y,·))` with the default options.
pub fn sample_frechet_coupling(p: &FiniteKernel, pair: (usize, usize), seed: u64) -> JointDist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_frechet_coupling_with(
        p.row(pair.0),
        p.row(pair.1),
        &FrechetOptions::default(),
        &mut rng,
    )
}

/// Walks the Fréchet polytope from a starting coupling by adding multiples
/// of zero-margin 2×2 cycles, each clipped to keep every entry non-negative.
pub fn sample_frechet_coupling_with<R: Rng + ?Sized>(
    mu: &Dist,
    nu: &Dist,
    options: &FrechetOptions,
    rng: &mut R,
) -> JointDist {
    let space: Arc<StateSpace> = mu.space().clone();
    let n = space.len();
    let start = match options.start {
        FrechetStart::Mixed if rng.random_bool(0.5) => FrechetStart::Maximal,
        FrechetStart::Mixed => FrechetStart::Independent,
        s => s,
    };
    let mut gamma = match start {
        FrechetStart::Maximal => build_maximal_coupling(mu, nu, &ResidualStrategy::Product)
            .expect("marginals share a space"),
        _ => JointDist::product(mu.weights(), nu.weights(), space.clone()),
    };
    if n < 2 {
        return gamma;
    }
    let support_x: Vec<usize> = (0..n).filter(|&i| !mu.mass(i).is_zero()).collect();
    let support_y: Vec<usize> = (0..n).filter(|&j| !nu.mass(j).is_zero()).collect();
    if support_x.len() < 2 || support_y.len() < 2 {
        return gamma;
    }
    let pick_two = |rng: &mut R, from: &[usize]| {
        let a = rng.random_range(0..from.len());
        let mut b = rng.random_range(0..from.len() - 1);
        if b >= a {
            b += 1;
        }
        (from[a], from[b])
    };
    for _ in 0..options.perturbations {
        let (i, i2) = pick_two(rng, &support_x);
        let (j, j2) = pick_two(rng, &support_y);
        // Adding t to (i,j),(i2,j2) and subtracting from (i2,j),(i,j2) keeps
        // every margin fixed.
        let up = rational::min(gamma.get(i2, j), gamma.get(i, j2));
        if up.is_zero() {
            continue;
        }
        let t: Rational = if rng.random_bool(options.extreme_probability) {
            up
        } else {
            let d = options.denominator.max(1);
            let k = rng.random_range(0..=d);
            up * rational::ratio(k, d)
        };
        if t.is_zero() {
            continue;
        }
        gamma.add_at(i, j, &t);
        gamma.add_at(i2, j2, &t);
        gamma.add_at(i2, j, &-t.clone());
        gamma.add_at(i, j2, &-t);
    }
    gamma
}
