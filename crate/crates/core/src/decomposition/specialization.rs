use num_traits::Zero;

use super::{build_cam, compute_helpers};
use crate::error::{CoreError, Result};
use crate::kernel::FiniteKernel;
use crate::measure::{check_coupling, JointDist};
use crate::rational::{self, Rational};

/// Matrix form of the mechanism for proposals that never stay put.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteSpecialization {
    pub m11: JointDist,
    pub m10: JointDist,
    pub m01: JointDist,
    pub m00: JointDist,
    pub mu_x: Vec<Rational>,
    pub mu_y: Vec<Rational>,
}

impl DiscreteSpecialization {
    pub fn qbar(&self) -> JointDist {
        let sum = self.m11.plus(&self.m10).and_then(|s| s.plus(&self.m01));
        sum.and_then(|s| s.plus(&self.m00)).expect("matrices share a space")
    }
}

/// Rejection law: `(Q(x,i) - P(x,i)) / r` off `i₀`, zero at `i₀`, where `r` is
/// the rejection probability `P(x,x)`; a point mass at `i₀` when `r = 0`.
fn rejection_law(q: &FiniteKernel, p: &FiniteKernel, x: usize) -> Vec<Rational> {
    let n = q.n();
    let r = p.get(x, x);
    (0..n)
        .map(|i| {
            if r.is_zero() {
                if i == x {
                    rational::one()
                } else {
                    rational::zero()
                }
            } else if i == x {
                rational::zero()
            } else {
                (q.get(x, i) - p.get(x, i)) / r
            }
        })
        .collect()
}

/// Direct matrix construction for non-lazy proposals, cross-checked entry by
/// entry against [`build_cam`].
pub fn discrete_specialization(
    pbar: &JointDist,
    q: &FiniteKernel,
    p: &FiniteKernel,
    pair: (usize, usize),
) -> Result<DiscreteSpecialization> {
    if let Some(s) = (0..q.n()).find(|&s| !q.get(s, s).is_zero()) {
        return Err(CoreError::LazyProposal(q.space().label(s).into()));
    }
    let (i0, j0) = pair;
    let space = pbar.space().clone();
    let n = space.len();
    let report = check_coupling(pbar, p.row(i0), p.row(j0));
    if !report.holds() {
        return Err(CoreError::NotACoupling(report.describe(&space)));
    }
    let mu_x = rejection_law(q, p, i0);
    let mu_y = rejection_law(q, p, j0);

    let mut m11 = JointDist::zeros(space.clone());
    let mut m10 = JointDist::zeros(space.clone());
    let mut m01 = JointDist::zeros(space.clone());
    for i in 0..n {
        for j in 0..n {
            if i != i0 && j != j0 {
                m11.set(i, j, pbar.get(i, j).clone());
            }
            if i != i0 {
                m10.set(i, j, pbar.get(i, j0) * &mu_y[j]);
            }
            if j != j0 {
                m01.set(i, j, &mu_x[i] * pbar.get(i0, j));
            }
        }
    }
    let m00 = JointDist::product(&mu_x, &mu_y, space.clone()).scaled(pbar.get(i0, j0));
    let out = DiscreteSpecialization {
        m11,
        m10,
        m01,
        m00,
        mu_x,
        mu_y,
    };

    let helpers = compute_helpers(q, p)?;
    let (cam, _) = build_cam(pbar, &helpers, q, p, pair)?;
    let pairs = [
        ("M11", &out.m11, &cam.phi11),
        ("M10", &out.m10, &cam.phi10),
        ("M01", &out.m01, &cam.phi01),
        ("M00", &out.m00, &cam.phi00),
    ];
    for (name, m, phi) in pairs {
        if m != phi {
            return Err(CoreError::Internal(format!(
                "{name} differs from the general construction"
            )));
        }
    }
    Ok(out)
}
