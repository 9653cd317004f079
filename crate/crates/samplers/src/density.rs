//! Densities of the two-step representation of a kernel coupling on R^d.
//!
//! For a transition coupling with absolutely continuous part `p` on
//! `{x}^c x {y}^c`, half-stay densities `pbar_y(x,x')`, `pbar_x(y,y')` and
//! stay mass `rbar`, the proposal coupling density is
//!
//! `qbar = p + pbar_y m(y,·) + m(x,·) pbar_x + m(x,·) m(y,·) rbar`
//!
//! with `m(x,x') = q(x,x')(1 - a(x,x')) / r(x)`.

use rand::Rng;

use crate::proposal::{acceptance_probability, Proposal};
use crate::target::Target;

/// A numerical value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// How to compute the rejection probability `r(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integration {
    /// Double-exponential quadrature over `mean ± width·sd`, split into
    /// `pieces` intervals. One dimension only.
    Quadrature { width: f64, pieces: usize, tol: f64 },
    /// Plain Monte Carlo with the given number of proposal draws.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for Integration {
    fn default() -> Self {
        Integration::Quadrature {
            width: 12.0,
            pieces: 24,
            tol: 1e-13,
        }
    }
}

/// Integrate `f` over `[lo, hi]` in `pieces` equal intervals, bisecting any
/// interval whose error estimate exceeds its share of `tol`. Bisection
/// localizes kinks such as the boundary where the acceptance rate reaches 1.
pub fn integrate_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, pieces: usize, tol: f64) -> Estimate {
    let h = (hi - lo) / pieces as f64;
    let mut est = Estimate { value: 0.0, error: 0.0 };
    for k in 0..pieces {
        let a = lo + k as f64 * h;
        let piece = adaptive(&f, a, a + h, tol / pieces as f64, 40);
        est.value += piece.value;
        est.error += piece.error;
    }
    est
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Estimate {
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol || depth == 0 {
        return Estimate {
            value: out.integral,
            error: out.error_estimate,
        };
    }
    let mid = 0.5 * (a + b);
    let left = adaptive(f, a, mid, 0.5 * tol, depth - 1);
    let right = adaptive(f, mid, b, 0.5 * tol, depth - 1);
    Estimate {
        value: left.value + right.value,
        error: left.error + right.error,
    }
}

/// Probability that a proposal from `x` is rejected.
pub fn rejection_probability(
    target: &dyn Target,
    proposal: &Proposal,
    x: &[f64],
    method: Integration,
) -> Estimate {
    match method {
        Integration::Quadrature { width, pieces, tol } => {
            assert_eq!(x.len(), 1, "quadrature is one-dimensional; use MonteCarlo");
            let m = proposal.mean(target, x)[0];
            let s = proposal.sd();
            integrate_1d(
                |z| {
                    let zp = [z];
                    proposal.log_q(target, x, &zp).exp() * (1.0 - acceptance_probability(target, proposal, x, &zp))
                },
                m - width * s,
                m + width * s,
                pieces,
                tol,
            )
        }
        Integration::MonteCarlo { samples, seed } => {
            let mut rng = crate::rng::stream(seed, 0, crate::rng::Role::Reference);
            let vals: Vec<f64> = (0..samples)
                .map(|_| {
                    let z = proposal.sample(target, x, &mut rng);
                    1.0 - acceptance_probability(target, proposal, x, &z)
                })
                .collect();
            let n = samples as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Estimate {
                value: mean,
                error: (var / n).sqrt(),
            }
        }
    }
}

/// Transition coupling whose two-step density is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum PbarSpec {
    /// `P(x,·) x P(y,·)`.
    Independent,
    /// Minorization split with a Gaussian `nu = N(nu_mean, nu_sd^2 I)`. Only
    /// the part off the diagonal is absolutely continuous; `qbar` here is
    /// that part.
    Split { epsilon: f64, nu_mean: Vec<f64>, nu_sd: f64 },
}

/// All terms at one point `(x', y')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepDensity {
    pub qbar: f64,
    pub p: f64,
    pub pbar_y: f64,
    pub pbar_x: f64,
    pub m_x: f64,
    pub m_y: f64,
    pub rbar: f64,
    /// `P(b_x = 1 | x, y, x', y') = (p + pbar_y m_y) / qbar`.
    pub accept_x: f64,
    /// `P(b_y = 1 | x, y, x', y') = (p + m_x pbar_x) / qbar`.
    pub accept_y: f64,
}

/// Evaluates the two-step density at a fixed current pair. The rejection
/// probabilities are integrated once on construction.
pub struct TwoStepEvaluator<'a> {
    target: &'a dyn Target,
    proposal: Proposal,
    spec: PbarSpec,
    x: Vec<f64>,
    y: Vec<f64>,
    pub r_x: Estimate,
    pub r_y: Estimate,
}

impl<'a> TwoStepEvaluator<'a> {
    pub fn new(
        target: &'a dyn Target,
        proposal: Proposal,
        spec: PbarSpec,
        x: &[f64],
        y: &[f64],
        method: Integration,
    ) -> Self {
        TwoStepEvaluator {
            target,
            proposal,
            spec,
            x: x.to_vec(),
            y: y.to_vec(),
            r_x: rejection_probability(target, &proposal, x, method),
            r_y: rejection_probability(target, &proposal, y, method),
        }
    }

    /// Proposal density `q(from, to)`.
    pub fn q(&self, from: &[f64], to: &[f64]) -> f64 {
        self.proposal.log_q(self.target, from, to).exp()
    }

    /// Acceptance rate `a(from, to)`.
    pub fn a(&self, from: &[f64], to: &[f64]) -> f64 {
        acceptance_probability(self.target, &self.proposal, from, to)
    }

    /// Accepted-move density `p(from, to) = q a`.
    pub fn p(&self, from: &[f64], to: &[f64]) -> f64 {
        self.q(from, to) * self.a(from, to)
    }

    /// `m(from, to)`; identically zero when `r = 0`.
    pub fn m(&self, from: &[f64], to: &[f64], r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.q(from, to) * (1.0 - self.a(from, to)) / r
        }
    }

    pub fn at(&self, x_prime: &[f64], y_prime: &[f64]) -> TwoStepDensity {
        let (x, y) = (&self.x[..], &self.y[..]);
        let (rx, ry) = (self.r_x.value, self.r_y.value);
        let px = self.p(x, x_prime);
        let py = self.p(y, y_prime);
        let m_x = self.m(x, x_prime, rx);
        let m_y = self.m(y, y_prime, ry);
        let (p, pbar_y, pbar_x, rbar) = match &self.spec {
            PbarSpec::Independent => (px * py, px * ry, rx * py, rx * ry),
            PbarSpec::Split { epsilon, nu_mean, nu_sd } => {
                let nu = |z: &[f64]| crate::proposal::log_normal(z, nu_mean, *nu_sd).exp();
                let rx_part = px - epsilon * nu(x_prime);
                let ry_part = py - epsilon * nu(y_prime);
                let k = 1.0 / (1.0 - epsilon);
                (k * rx_part * ry_part, k * rx_part * ry, k * rx * ry_part, k * rx * ry)
            }
        };
        let qbar = p + pbar_y * m_y + m_x * pbar_x + m_x * m_y * rbar;
        let ratio = |num: f64| if qbar > 0.0 { num / qbar } else { 0.0 };
        TwoStepDensity {
            qbar,
            p,
            pbar_y,
            pbar_x,
            m_x,
            m_y,
            rbar,
            accept_x: ratio(p + pbar_y * m_y),
            accept_y: ratio(p + m_x * pbar_x),
        }
    }

    /// `∫∫ qbar` over `mean ± width·sd` in each coordinate (1-D chains).
    pub fn total_mass(&self, width: f64, pieces: usize, tol: f64) -> Estimate {
        let s = self.proposal.sd();
        let mx = self.proposal.mean(self.target, &self.x)[0];
        let my = self.proposal.mean(self.target, &self.y)[0];
        let inner_error = std::cell::Cell::new(0.0f64);
        let outer = integrate_1d(
            |xp| {
                let inner = integrate_1d(|yp| self.at(&[xp], &[yp]).qbar, my - width * s, my + width * s, pieces, tol);
                inner_error.set(inner_error.get().max(inner.error));
                inner.value
            },
            mx - width * s,
            mx + width * s,
            pieces,
            tol,
        );
        Estimate {
            value: outer.value,
            error: outer.error + inner_error.get(),
        }
    }
}

/// Convenience wrapper evaluating one point.
pub fn two_step_density(
    target: &dyn Target,
    proposal: Proposal,
    spec: PbarSpec,
    pair: (&[f64], &[f64]),
    proposals: (&[f64], &[f64]),
) -> TwoStepDensity {
    TwoStepEvaluator::new(target, proposal, spec, pair.0, pair.1, Integration::default())
        .at(proposals.0, proposals.1)
}

/// Draw a proposal pair from the independent two-step coupling by simulating
/// the transitions and filling rejected moves from `m`; used to sanity-check
/// the density by Monte Carlo.
pub fn sample_rejected_proposal<R: Rng + ?Sized>(
    target: &dyn Target,
    proposal: &Proposal,
    x: &[f64],
    rng: &mut R,
    max_loop: usize,
) -> Option<Vec<f64>> {
    (0..max_loop).find_map(|_| {
        let z = proposal.sample(target, x, rng);
        let reject = rng.random::<f64>() >= acceptance_probability(target, proposal, x, &z);
        reject.then_some(z)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{StandardGaussian, UniformBox};

    #[test]
    fn flat_region_has_no_rejection() {
        let t = UniformBox { d: 1, lo: -1e6, hi: 1e6 };
        let p = Proposal::Rwm { sigma: 1.0 };
        let e = TwoStepEvaluator::new(&t, p, PbarSpec::Independent, &[0.0], &[3.0], Integration::default());
        assert!(e.r_x.value.abs() < 1e-12);
        let d = e.at(&[0.4], &[2.2]);
        assert_eq!(d.m_x, 0.0);
        assert!((d.qbar - d.p).abs() < 1e-15);
    }

    #[test]
    fn quadrature_and_monte_carlo_agree() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 2.0 };
        let quad = rejection_probability(&t, &p, &[0.7], Integration::default());
        let mc = rejection_probability(&t, &p, &[0.7], Integration::MonteCarlo { samples: 200_000, seed: 1 });
        assert!(quad.error < 1e-8, "{quad:?}");
        assert!((quad.value - mc.value).abs() < 4.0 * mc.error, "{quad:?} {mc:?}");
    }

    #[test]
    fn independent_qbar_is_product_of_proposals() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 1.5 };
        let e = TwoStepEvaluator::new(&t, p, PbarSpec::Independent, &[-0.5], &[1.0], Integration::default());
        for (xp, yp) in [(0.0, 0.0), (-2.0, 1.5), (0.3, -0.8)] {
            let d = e.at(&[xp], &[yp]);
            let prod = e.q(&[-0.5], &[xp]) * e.q(&[1.0], &[yp]);
            assert!((d.qbar - prod).abs() <= 1e-9 * prod);
            assert!((d.accept_x - e.a(&[-0.5], &[xp])).abs() < 1e-9);
        }
    }

    #[test]
    fn rejected_proposals_follow_m() {
        // E[Z | rejected] under m(x,·) by quadrature vs Monte Carlo.
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 1.0 };
        let x = [1.0];
        let e = TwoStepEvaluator::new(&t, p, PbarSpec::Independent, &x, &x, Integration::default());
        let mean = integrate_1d(|z| z * e.m(&x, &[z], e.r_x.value), -11.0, 13.0, 24, 1e-12).value;
        let mut rng = crate::rng::stream(4, 0, crate::rng::Role::Reference);
        let draws: Vec<f64> = (0..50_000)
            .map(|_| sample_rejected_proposal(&t, &p, &x, &mut rng, 10_000).unwrap()[0])
            .collect();
        let (mc, se) = crate::stats::batch_means(&draws, 100);
        assert!((mc - mean).abs() < 4.0 * se, "{mc} vs {mean}");
    }
}
