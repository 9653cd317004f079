use num_traits::Zero;

use super::acceptance::{extract_acceptance_coupling, AcceptanceCoupling, Outcome};
use super::Cam;
use crate::error::{CoreError, Result};
use crate::measure::JointDist;
use crate::rational;
use crate::space::ensure_same;

/// Exact output law of the resampling procedure that keeps accepted proposals
/// and redraws each rejected coordinate from its proposal law conditioned on
/// the same acceptance outcome.
///
/// Returns the new proposal coupling and the acceptance coupling read off
/// from the outcome-split measures. Outcomes of probability zero contribute
/// nothing.
pub fn algorithm1_resampled_qbar(
    qm: &JointDist,
    bm: &AcceptanceCoupling,
    pair: (usize, usize),
) -> Result<(JointDist, AcceptanceCoupling)> {
    ensure_same(qm.space(), bm.space())?;
    if bm.pair() != pair {
        return Err(CoreError::Internal("acceptance coupling belongs to another pair".into()));
    }
    let space = qm.space().clone();
    let n = space.len();
    let mut cam = Cam::zeros(space.clone(), pair);
    for outcome in Outcome::ALL {
        let mut w = JointDist::zeros(space.clone());
        for i in 0..n {
            for j in 0..n {
                let m = qm.get(i, j);
                if !m.is_zero() {
                    w.set(i, j, m * bm.prob(i, j, outcome));
                }
            }
        }
        let weight = w.total();
        if weight.is_zero() {
            continue;
        }
        let (keep_x, keep_y) = outcome.bits();
        let resampled = if keep_x && keep_y {
            w
        } else {
            // Accepted coordinates keep their joint draw only when both are
            // accepted; otherwise the two coordinates are independent given
            // the outcome, each with its conditional marginal.
            let rows = w.x_marginal();
            let cols = w.y_marginal();
            JointDist::product(&rows, &cols, space.clone()).scaled(&(rational::one() / &weight))
        };
        match outcome {
            Outcome::Both => cam.phi11 = resampled,
            Outcome::OnlyX => cam.phi10 = resampled,
            Outcome::OnlyY => cam.phi01 = resampled,
            Outcome::Neither => cam.phi00 = resampled,
        }
    }
    let qbar = cam.total();
    let b = extract_acceptance_coupling(&cam, &qbar);
    Ok((qbar, b))
}
