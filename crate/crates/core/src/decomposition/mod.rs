//! Splitting a transition kernel coupling into a proposal coupling and a
//! coupled acceptance mechanism, and going back again.

mod acceptance;
mod algorithm1;
mod frechet;
mod specialization;
mod verify;

use std::sync::Arc;

use num_traits::{Signed, Zero};

pub use acceptance::{
    check_acceptance_rates, check_theorem1_conditions, extract_acceptance_coupling,
    regenerate_pbar, AcceptanceCoupling, AcceptanceRateReport, RateViolation, Outcome,
};
pub use algorithm1::algorithm1_resampled_qbar;
pub use frechet::{sample_frechet_coupling, sample_frechet_coupling_with, FrechetOptions, FrechetStart};
pub use specialization::{discrete_specialization, DiscreteSpecialization};
pub use verify::{
    verify_cam, verify_cam_with, CamReport, Condition3Violation, RectangleCase, RectangleMode,
    RectangleViolation,
};

use crate::error::{CoreError, Result};
use crate::kernel::FiniteKernel;
use crate::measure::{check_coupling, Dist, JointDist, SubDist};
use crate::rational::{self, Rational};
use crate::space::{ensure_same, StateSpace};

/// `α₀`, `α₁`, `β` and `μ`, all determined by the marginal kernels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Helpers {
    /// `α₀(x,·)`: proposals that are rejected.
    pub alpha0: Vec<SubDist>,
    /// `α₁(x,·)`: proposals that are accepted.
    pub alpha1: Vec<SubDist>,
    /// `β(x)`: chance a stay at `x` came from an accepted self-proposal.
    pub beta: Vec<Rational>,
    /// `μ(x,·)`: law of the proposal given rejection.
    pub mu: Vec<Dist>,
}

impl Helpers {
    pub fn alpha0_total(&self, x: usize) -> Rational {
        self.alpha0[x].total()
    }
}

/// Helper quantities from `(Q, P)`. Fails when `P` is not weakly dominated by
/// `Q` off the diagonal, or keeps less mass at `x` than `Q` proposes there.
pub fn compute_helpers(q: &FiniteKernel, p: &FiniteKernel) -> Result<Helpers> {
    ensure_same(q.space(), p.space())?;
    let space = q.space().clone();
    let n = q.n();
    let mut alpha0 = Vec::with_capacity(n);
    let mut alpha1 = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for x in 0..n {
        let mut a0 = vec![rational::zero(); n];
        let mut a1 = vec![rational::zero(); n];
        for z in 0..n {
            if z == x {
                a1[z] = q.get(x, x).clone();
                continue;
            }
            let diff = q.get(x, z) - p.get(x, z);
            if diff.is_negative() {
                return Err(CoreError::NotDominated {
                    x: space.label(x).into(),
                    x_prime: space.label(z).into(),
                });
            }
            a0[z] = diff;
            a1[z] = p.get(x, z).clone();
        }
        if p.get(x, x) < q.get(x, x) {
            return Err(CoreError::NotDominated {
                x: space.label(x).into(),
                x_prime: space.label(x).into(),
            });
        }
        let b = if p.get(x, x).is_zero() {
            rational::one()
        } else {
            q.get(x, x) / p.get(x, x)
        };
        let rejected = rational::sum(&a0);
        let m = if rejected.is_zero() {
            Dist::point_mass(space.clone(), x)
        } else {
            Dist::new(space.clone(), a0.iter().map(|v| v / &rejected).collect())?
        };
        alpha0.push(SubDist::new(space.clone(), a0)?);
        alpha1.push(SubDist::new(space.clone(), a1)?);
        beta.push(b);
        mu.push(m);
    }
    Ok(Helpers {
        alpha0,
        alpha1,
        beta,
        mu,
    })
}

/// Coupled acceptance mechanism `Φ = (Φ₁₁, Φ₁₀, Φ₀₁, Φ₀₀)` at one current pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cam {
    pub pair: (usize, usize),
    pub phi11: JointDist,
    pub phi10: JointDist,
    pub phi01: JointDist,
    pub phi00: JointDist,
}

impl Cam {
    pub fn zeros(space: Arc<StateSpace>, pair: (usize, usize)) -> Self {
        Cam {
            pair,
            phi11: JointDist::zeros(space.clone()),
            phi10: JointDist::zeros(space.clone()),
            phi01: JointDist::zeros(space.clone()),
            phi00: JointDist::zeros(space),
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.phi11.space()
    }

    /// Components in outcome order `11, 10, 01, 00`.
    pub fn components(&self) -> [&JointDist; 4] {
        [&self.phi11, &self.phi10, &self.phi01, &self.phi00]
    }

    pub fn component(&self, outcome: Outcome) -> &JointDist {
        self.components()[outcome.index()]
    }

    /// `Φ₁₁ + Φ₁₀ + Φ₀₁ + Φ₀₀`.
    pub fn total(&self) -> JointDist {
        let mut out = self.phi11.clone();
        for phi in [&self.phi10, &self.phi01, &self.phi00] {
            out = out.plus(phi).expect("components share a space");
        }
        out
    }
}

fn negative(display: &'static str, location: String) -> CoreError {
    CoreError::NegativeMass { display, location }
}

/// Builds `Φ` and `Q̄ = ΣΦ` from `P̄((x,y),·)` using the β-weighted split of
/// `P̄` for the both-accepted part and product measures for the rest.
pub fn build_cam(
    pbar: &JointDist,
    helpers: &Helpers,
    q: &FiniteKernel,
    p: &FiniteKernel,
    pair: (usize, usize),
) -> Result<(Cam, JointDist)> {
    ensure_same(pbar.space(), p.space())?;
    ensure_same(q.space(), p.space())?;
    let (x, y) = pair;
    let space = p.space().clone();
    let n = space.len();
    let report = check_coupling(pbar, p.row(x), p.row(y));
    if !report.holds() {
        return Err(CoreError::NotACoupling(report.describe(&space)));
    }
    let (bx, by) = (&helpers.beta[x], &helpers.beta[y]);

    let mut phi11 = JointDist::zeros(space.clone());
    for i in 0..n {
        for j in 0..n {
            let mut v = pbar.get(i, j).clone();
            if v.is_zero() {
                continue;
            }
            if i == x {
                v *= bx;
            }
            if j == y {
                v *= by;
            }
            phi11.set(i, j, v);
        }
    }

    let rows = phi11.x_marginal();
    let cols = phi11.y_marginal();
    let mut psi10 = Vec::with_capacity(n);
    let mut psi01 = Vec::with_capacity(n);
    for s in 0..n {
        let a = helpers.alpha1[x].mass(s) - &rows[s];
        if a.is_negative() {
            return Err(negative("Psi10", format!("state {}", space.label(s))));
        }
        psi10.push(a);
        let b = helpers.alpha1[y].mass(s) - &cols[s];
        if b.is_negative() {
            return Err(negative("Psi01", format!("state {}", space.label(s))));
        }
        psi01.push(b);
    }
    let psi00 = rational::one() - helpers.alpha1[x].total() - helpers.alpha1[y].total()
        + phi11.total();
    if psi00.is_negative() {
        return Err(negative("Psi00", format!("pair ({},{})", space.label(x), space.label(y))));
    }

    let mu_x = helpers.mu[x].weights();
    let mu_y = helpers.mu[y].weights();
    let phi10 = JointDist::product(&psi10, mu_y, space.clone());
    let phi01 = JointDist::product(mu_x, &psi01, space.clone());
    let phi00 = JointDist::product(mu_x, mu_y, space.clone()).scaled(&psi00);

    let cam = Cam {
        pair,
        phi11,
        phi10,
        phi01,
        phi00,
    };
    let qbar = cam.total();
    let report = check_coupling(&qbar, q.row(x), q.row(y));
    if !report.holds() {
        return Err(CoreError::Internal(format!(
            "proposal coupling marginals: {}",
            report.describe(&space)
        )));
    }
    let verdict = verify_cam(&cam, &qbar, pbar, q, pair);
    if !verdict.holds() {
        return Err(CoreError::Internal(format!(
            "constructed mechanism fails its conditions: {}",
            verdict.summary(&space)
        )));
    }
    Ok((cam, qbar))
}

#[cfg(test)]
mod tests;
