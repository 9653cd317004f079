//! Small worked problems used by tests, the CLI and documentation.

use crate::decomposition::AcceptanceCoupling;
use crate::kernel::{AcceptanceMatrix, FiniteKernel, MhProblem};
use crate::measure::{Dist, JointDist};
use crate::rational::{int, ratio, Rational};
use crate::space::StateSpace;

fn r(a: i64, b: i64) -> Rational {
    ratio(a, b)
}

/// Two states, uniform lazy proposal `Q(x,·) = (1/2, 1/2)`, target
/// `π = (1/3, 2/3)` with MH acceptance. Gives `P(1,·) = (1/2,1/2)` and
/// `P(2,·) = (1/4,3/4)`.
pub fn two_state() -> MhProblem {
    let s = StateSpace::numbered(2);
    let q = FiniteKernel::new(s.clone(), vec![vec![r(1, 2), r(1, 2)]; 2]).unwrap();
    MhProblem::with_mh(q, &two_state_target()).unwrap()
}

pub fn two_state_target() -> Dist {
    Dist::new(StateSpace::numbered(2), vec![r(1, 3), r(2, 3)]).unwrap()
}

/// Non-maximal coupling of the two-state kernels at pair `(1,2)`:
/// `(x',y') = (2,1)` w.p. 1/4, `(1,2)` w.p. 1/2, `(2,2)` w.p. 1/4.
pub fn two_state_pbar() -> JointDist {
    JointDist::from_entries(
        StateSpace::numbered(2),
        [((1, 0), r(1, 4)), ((0, 1), r(1, 2)), ((1, 1), r(1, 4))],
    )
    .unwrap()
}

/// Uniform proposal coupling at `(1,2)` for the two-state problem.
pub fn two_state_uniform_qbar() -> JointDist {
    JointDist::from_rows(StateSpace::numbered(2), vec![vec![r(1, 4); 2]; 2]).unwrap()
}

/// Three states where the only maximal transition coupling at `(1,2)` cannot
/// come from any maximal proposal coupling. `Q(3,·) = (0,1,0)` and
/// `π = (2/5, 2/5, 1/5)`.
pub fn three_state_nonmax() -> MhProblem {
    let s = StateSpace::numbered(3);
    let q = FiniteKernel::new(
        s.clone(),
        vec![
            vec![int(0), r(1, 2), r(1, 2)],
            vec![r(1, 2), int(0), r(1, 2)],
            vec![int(0), int(1), int(0)],
        ],
    )
    .unwrap();
    let pi = Dist::new(s, vec![r(2, 5), r(2, 5), r(1, 5)]).unwrap();
    MhProblem::with_mh(q, &pi).unwrap()
}

/// Four states with explicit acceptance rates, built so that a maximal
/// transition coupling at `(1,2)` is generated by a maximal proposal coupling
/// with off-diagonal mass and a positive chance of rejection.
pub fn four_state_resampling() -> MhProblem {
    let s = StateSpace::numbered(4);
    let third = r(1, 3);
    let q = FiniteKernel::new(
        s.clone(),
        vec![
            vec![int(0), r(1, 4), r(3, 8), r(3, 8)],
            vec![r(1, 4), int(0), r(3, 8), r(3, 8)],
            vec![third.clone(), third.clone(), int(0), third.clone()],
            vec![third.clone(), third.clone(), third, int(0)],
        ],
    )
    .unwrap();
    let half = r(1, 2);
    let a = AcceptanceMatrix::new(
        s,
        vec![
            vec![int(1), int(1), half.clone(), half.clone()],
            vec![int(0), int(1), half.clone(), half],
            vec![int(1); 4],
            vec![int(1); 4],
        ],
    )
    .unwrap();
    MhProblem::new(q, a).unwrap()
}

/// Maximal proposal coupling at `(1,2)` for [`four_state_resampling`]:
/// `(2,1)` w.p. 1/4, `(3,3)` and `(4,4)` w.p. 3/8 each.
pub fn four_state_maximal_qbar() -> JointDist {
    JointDist::from_entries(
        StateSpace::numbered(4),
        [((1, 0), r(1, 4)), ((2, 2), r(3, 8)), ((3, 3), r(3, 8))],
    )
    .unwrap()
}

/// Acceptance coupling paired with [`four_state_maximal_qbar`]: the x-chain
/// rejects at `(2,1)`, both chains accept or both reject at `(3,3)` and
/// `(4,4)` with probability 1/2 each. Together they generate a maximal
/// transition coupling.
pub fn four_state_maximal_acceptance() -> AcceptanceCoupling {
    AcceptanceCoupling::from_fn(StateSpace::numbered(4), (0, 1), |i, j| match (i, j) {
        (1, 0) => [int(0), int(1), int(0), int(0)],
        (2, 2) | (3, 3) => [r(1, 2), int(0), int(0), r(1, 2)],
        _ => [int(1), int(0), int(0), int(0)],
    })
    .unwrap()
}
