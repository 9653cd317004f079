//! Marginal proposals and the single-chain MH step.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SamplerError};
use crate::target::Target;

/// Gaussian proposals with isotropic covariance.
///
/// RWM draws `N(x, sigma^2 I)`. MALA draws `N(x + tau grad log pi(x), 2 tau I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Proposal {
    Rwm { sigma: f64 },
    Mala { tau: f64 },
}

impl Proposal {
    pub fn validate(&self, target: &dyn Target) -> Result<()> {
        let scale = match *self {
            Proposal::Rwm { sigma } => sigma,
            Proposal::Mala { tau } => tau,
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(SamplerError::Config(format!("proposal scale must be positive, got {scale}")));
        }
        if matches!(self, Proposal::Mala { .. })
            && target.grad_log_density(&vec![0.0; target.dim()]).is_none()
        {
            return Err(SamplerError::MissingGradient);
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, Proposal::Rwm { .. })
    }

    /// Standard deviation of each coordinate.
    pub fn sd(&self) -> f64 {
        match *self {
            Proposal::Rwm { sigma } => sigma,
            Proposal::Mala { tau } => (2.0 * tau).sqrt(),
        }
    }

    pub fn mean(&self, target: &dyn Target, x: &[f64]) -> Vec<f64> {
        match *self {
            Proposal::Rwm { .. } => x.to_vec(),
            Proposal::Mala { tau } => {
                let g = target
                    .grad_log_density(x)
                    .expect("validated: MALA target has a gradient");
                x.iter().zip(g).map(|(v, gi)| v + tau * gi).collect()
            }
        }
    }

    /// Log density of proposing `to` from `from`, normalizing constant included.
    pub fn log_q(&self, target: &dyn Target, from: &[f64], to: &[f64]) -> f64 {
        let m = self.mean(target, from);
        log_normal(to, &m, self.sd())
    }

    /// Draw `mean + sd * z` for a supplied innovation `z`.
    pub fn shift(&self, mean: &[f64], z: &[f64]) -> Vec<f64> {
        let s = self.sd();
        mean.iter().zip(z).map(|(m, zi)| m + s * zi).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, target: &dyn Target, x: &[f64], rng: &mut R) -> Vec<f64> {
        let m = self.mean(target, x);
        self.shift(&m, &innovation(m.len(), rng))
    }
}

pub fn innovation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub(crate) fn log_normal(x: &[f64], mean: &[f64], sd: f64) -> f64 {
    let d = x.len() as f64;
    let sq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * sq / (sd * sd) - d * (sd.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
}

/// Log MH ratio `log[pi(x') q(x',x) / pi(x) q(x,x')]`.
///
/// Returns `-inf` when the target is not finite at the proposal; the caller
/// sees that through [`MhStep::flagged`].
pub fn log_mh_ratio(target: &dyn Target, proposal: &Proposal, x: &[f64], x_prime: &[f64]) -> f64 {
    let lp = target.log_density(x_prime);
    if !lp.is_finite() {
        return f64::NEG_INFINITY;
    }
    let mut r = lp - target.log_density(x);
    if !proposal.is_symmetric() {
        r += proposal.log_q(target, x_prime, x) - proposal.log_q(target, x, x_prime);
    }
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Acceptance probability `1 ∧ exp(log ratio)`.
pub fn acceptance_probability(target: &dyn Target, proposal: &Proposal, x: &[f64], x_prime: &[f64]) -> f64 {
    log_mh_ratio(target, proposal, x, x_prime).min(0.0).exp()
}

/// Accept iff `log u <= log ratio`.
pub fn accepts(log_u: f64, log_ratio: f64) -> bool {
    log_u <= log_ratio
}

pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // random::<f64>() is in [0, 1); 1 - u is in (0, 1].
    (1.0 - rng.random::<f64>()).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhStep {
    pub state: Vec<f64>,
    pub proposal: Vec<f64>,
    pub accepted: bool,
    /// The target was not finite at the proposal.
    pub flagged: bool,
}

pub fn mh_step<R: Rng + ?Sized>(
    target: &dyn Target,
    proposal: &Proposal,
    x: &[f64],
    rng: &mut R,
) -> MhStep {
    let x_prime = proposal.sample(target, x, rng);
    let flagged = !target.log_density(&x_prime).is_finite();
    let accepted = accepts(log_uniform(rng), log_mh_ratio(target, proposal, x, &x_prime));
    MhStep {
        state: if accepted { x_prime.clone() } else { x.to_vec() },
        proposal: x_prime,
        accepted,
        flagged,
    }
}

/// Run a single chain and keep every state after the start.
pub fn run_chain<R: Rng + ?Sized>(
    target: &dyn Target,
    proposal: &Proposal,
    x0: &[f64],
    steps: usize,
    rng: &mut R,
) -> (Vec<Vec<f64>>, f64) {
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps);
    let mut accepted = 0usize;
    for _ in 0..steps {
        let s = mh_step(target, proposal, &x, rng);
        accepted += s.accepted as usize;
        x = s.state;
        out.push(x.clone());
    }
    (out, accepted as f64 / steps.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::batch_means;
    use crate::target::{StandardGaussian, UniformBox};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_target_always_accepts_inside() {
        let t = UniformBox { d: 1, lo: -100.0, hi: 100.0 };
        let p = Proposal::Rwm { sigma: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, rate) = run_chain(&t, &p, &[0.0], 2000, &mut rng);
        assert_eq!(rate, 1.0);
    }

    #[test]
    fn outside_support_is_flagged_and_rejected() {
        let t = UniformBox { d: 1, lo: 0.0, hi: 1.0 };
        let p = Proposal::Rwm { sigma: 50.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = (0..20)
            .map(|_| mh_step(&t, &p, &[0.5], &mut rng))
            .find(|s| s.flagged)
            .unwrap();
        assert!(!s.accepted);
        assert_eq!(s.state, vec![0.5]);
    }

    // Oracle from direct 2-D integration: E[1 ∧ exp(-(x'^2 - x^2)/2)] under
    // x ~ N(0,1), x' ~ N(x, 2.4^2) is 0.4423.
    #[test]
    fn rwm_acceptance_rate_on_standard_normal() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 2.4 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, rate) = run_chain(&t, &p, &[0.0], 100_000, &mut rng);
        assert!((rate - 0.4423).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn mala_moments_on_standard_normal() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Mala { tau: 0.25 };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (xs, _) = run_chain(&t, &p, &[0.0], 100_000, &mut rng);
        let v: Vec<f64> = xs.iter().map(|v| v[0]).collect();
        let sq: Vec<f64> = v.iter().map(|a| a * a).collect();
        let (mean, se) = batch_means(&v, 100);
        assert!(mean.abs() < 4.0 * se, "mean {mean} se {se}");
        let (second, se2) = batch_means(&sq, 100);
        assert!((second - 1.0).abs() < 4.0 * se2, "E[x^2] {second} se {se2}");
    }

    #[test]
    fn mala_ratio_uses_proposal_asymmetry() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Mala { tau: 0.3 };
        let (x, y) = ([0.7], [-1.2]);
        let direct = (t.log_density(&y) + p.log_q(&t, &y, &x)) - (t.log_density(&x) + p.log_q(&t, &x, &y));
        assert!((log_mh_ratio(&t, &p, &x, &y) - direct).abs() < 1e-12);
        assert!(p.log_q(&t, &x, &y) != p.log_q(&t, &y, &x));
    }
}
