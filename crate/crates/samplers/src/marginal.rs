//! Marginal correctness of coupled chains.
//!
//! Chain output is autocorrelated, so two long runs are not valid inputs to a
//! two-sample KS test. Instead each replicate runs `steps` transitions from a
//! fixed start and contributes its final state: the samples are iid draws of
//! the law of `X_steps`, for the coupled chain and for an uncoupled reference.

use rayon::prelude::*;

use crate::coupling::CouplingSpec;
use crate::error::Result;
use crate::proposal::{mh_step, Proposal};
use crate::rng::{stream, Role};
use crate::simulate::{CoupledChain, ContinuousCoupling};
use crate::stats::{ks_two_sample, KsResult};
use crate::target::Target;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalCheck {
    pub x: KsResult,
    pub y: KsResult,
}

impl MarginalCheck {
    pub fn passes(&self, alpha: f64) -> bool {
        self.x.p_value > alpha && self.y.p_value > alpha
    }
}

/// Final first coordinates of `replicates` uncoupled chains.
pub fn uncoupled_final_states(
    target: &dyn Target,
    proposal: &Proposal,
    x0: &[f64],
    steps: usize,
    replicates: u64,
    seed: u64,
) -> Vec<f64> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r, Role::Reference);
            let mut x = x0.to_vec();
            for _ in 0..steps {
                x = mh_step(target, proposal, &x, &mut rng).state;
            }
            x[0]
        })
        .collect()
}

/// Final first coordinates of both chains of `replicates` coupled runs.
pub fn coupled_final_states(
    coupling: &ContinuousCoupling<'_>,
    init: (&[f64], &[f64]),
    steps: usize,
    replicates: u64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r, Role::Chain);
            let (mut x, mut y) = (init.0.to_vec(), init.1.to_vec());
            for _ in 0..steps {
                (x, y) = coupling.step(&x, &y, &mut rng)?;
            }
            Ok((x[0], y[0]))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// KS-compare both coupled marginals with independent uncoupled runs from
/// the same starting points.
pub fn marginal_ks_check(
    target: &dyn Target,
    proposal: Proposal,
    spec: CouplingSpec,
    init: (&[f64], &[f64]),
    steps: usize,
    replicates: u64,
    seed: u64,
) -> Result<MarginalCheck> {
    let coupling = ContinuousCoupling::new(target, proposal, spec)?;
    let (xs, ys) = coupled_final_states(&coupling, init, steps, replicates, seed)?;
    // Reference streams use a different seed so they share nothing with the
    // coupled runs.
    let ref_x = uncoupled_final_states(target, &proposal, init.0, steps, replicates, seed ^ 0x5eed);
    let ref_y = uncoupled_final_states(target, &proposal, init.1, steps, replicates, seed ^ 0x5eed ^ 1);
    Ok(MarginalCheck {
        x: ks_two_sample(&xs, &ref_x),
        y: ks_two_sample(&ys, &ref_y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{AcceptanceCoupling, ProposalCoupling};
    use crate::target::StandardGaussian;

    #[test]
    fn reflection_rwm_keeps_marginals() {
        let t = StandardGaussian { d: 1 };
        let spec = CouplingSpec::new(ProposalCoupling::Reflection, AcceptanceCoupling::CommonUniform);
        let check = marginal_ks_check(&t, Proposal::Rwm { sigma: 1.0 }, spec, (&[3.0], &[-2.0]), 5, 4000, 1).unwrap();
        assert!(check.passes(1e-3), "{check:?}");
    }

    #[test]
    fn a_biased_chain_is_detected() {
        // Comparing a chain started elsewhere must fail: the test has power.
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 0.5 };
        let a = uncoupled_final_states(&t, &p, &[3.0], 5, 4000, 1);
        let b = uncoupled_final_states(&t, &p, &[2.5], 5, 4000, 2);
        assert!(ks_two_sample(&a, &b).p_value < 1e-3);
    }
}
