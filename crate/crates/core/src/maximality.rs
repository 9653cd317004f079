//! Maximal transition kernel couplings: Hahn sets per state pair, the
//! acceptance-based characterization, constructions and the certificate
//! that some maximal couplings need non-maximal proposals.

use num_traits::Zero;

use crate::decomposition::{
    check_theorem1_conditions, regenerate_pbar, AcceptanceCoupling, Outcome,
};
use crate::error::{CoreError, Result};
use crate::fixtures;
use crate::kernel::{AcceptanceMatrix, FiniteKernel, MhProblem, PairMap};
use crate::measure::{
    build_maximal_coupling, hahn_jordan, is_maximal_coupling, maximal_coupling_dimension,
    JointDist, MaximalityVerdict, ResidualStrategy,
};
use crate::rational::{self, Rational};

/// `S_xy = {z : P(x,z) ≥ P(y,z)}`.
pub fn hahn_set_for_kernels(p: &FiniteKernel, x: usize, y: usize) -> Vec<usize> {
    hahn_jordan(p.row(x), p.row(y))
        .expect("rows share a space")
        .positive_set
}

/// One forbidden acceptance outcome found on the support of `Q̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionWitness {
    /// Condition number, 3 to 6.
    pub condition: u8,
    pub proposal: (usize, usize),
    /// `Q̄(x',y') · P(outcome | x,y,x',y')`.
    pub mass: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalityReport {
    pub pair: (usize, usize),
    pub s_xy: Vec<usize>,
    /// Conditions 1 to 6; the first two are preconditions and always true
    /// in a returned report.
    pub conditions: [bool; 6],
    pub witnesses: Vec<ConditionWitness>,
    /// Hahn test on the regenerated coupling, when the cross-check ran.
    pub cross_check: Option<MaximalityVerdict>,
}

impl MaximalityReport {
    pub fn verdict(&self) -> bool {
        self.conditions.iter().all(|&c| c)
    }
}

/// Evaluates conditions 3-6 pointwise on the support of `Q̄`.
///
/// With `cross_check` (always on in debug builds) the verdict is compared
/// with the Hahn maximality test on the regenerated coupling; a mismatch is
/// an internal error.
pub fn check_max_conditions(
    qbar: &JointDist,
    b: &AcceptanceCoupling,
    q: &FiniteKernel,
    a: &AcceptanceMatrix,
    p: &FiniteKernel,
    pair: (usize, usize),
    cross_check: bool,
) -> Result<MaximalityReport> {
    let rates = check_theorem1_conditions(qbar, b, q, a, pair)?;
    if !rates.holds() {
        return Err(CoreError::AcceptanceConditions(rates.describe(q.space())));
    }
    let (x, y) = pair;
    let s_xy = hahn_set_for_kernels(p, x, y);
    let in_s = |z: usize| s_xy.binary_search(&z).is_ok();
    let n = qbar.n();
    let mut conditions = [true; 6];
    let mut witnesses = Vec::new();
    for xp in 0..n {
        for yp in 0..n {
            let mass = qbar.get(xp, yp);
            if mass.is_zero() {
                continue;
            }
            let scoped = [
                (3u8, Outcome::Both, xp != yp && (!in_s(xp) || in_s(yp))),
                (4, Outcome::OnlyX, xp != y && (!in_s(xp) || in_s(y))),
                (5, Outcome::OnlyY, yp != x && (!in_s(x) || in_s(yp))),
                (6, Outcome::Neither, x != y && (!in_s(x) || in_s(y))),
            ];
            for (condition, outcome, applies) in scoped {
                let prob = b.prob(xp, yp, outcome);
                if applies && !prob.is_zero() {
                    conditions[condition as usize - 1] = false;
                    witnesses.push(ConditionWitness {
                        condition,
                        proposal: (xp, yp),
                        mass: mass * prob,
                    });
                }
            }
        }
    }
    let mut report = MaximalityReport {
        pair,
        s_xy,
        conditions,
        witnesses,
        cross_check: None,
    };
    if cross_check || cfg!(debug_assertions) {
        let pbar = regenerate_pbar(qbar, b, pair)?;
        let verdict = is_maximal_coupling(&pbar, p.row(x), p.row(y))?;
        if verdict.maximal != report.verdict() {
            return Err(CoreError::Disagreement(format!(
                "acceptance conditions say {}, Hahn test says {}",
                report.verdict(),
                verdict.maximal
            )));
        }
        report.cross_check = Some(verdict);
    }
    Ok(report)
}

/// Maximal coupling of `P(x,·)` and `P(y,·)` at every ordered pair.
pub fn build_maximal_kernel_coupling(
    p: &FiniteKernel,
    residual: &ResidualStrategy,
) -> Result<PairMap<JointDist>> {
    let n = p.n();
    let mut out = PairMap::new();
    for x in 0..n {
        for y in 0..n {
            out.insert((x, y), build_maximal_coupling(p.row(x), p.row(y), residual)?);
        }
    }
    Ok(out)
}

/// Evidence that the maximal transition coupling of the three-state problem
/// at `(1,2)` cannot be generated from its maximal proposal coupling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonmaxCertificate {
    pub problem: MhProblem,
    pub pair: (usize, usize),
    pub maximal_pbar: JointDist,
    pub maximal_qbar: JointDist,
    /// Dimension of the polytope of maximal proposal couplings; zero means a
    /// single point.
    pub maximal_qbar_dimension: usize,
    /// Destination pair that needs mass under `P̄` but gets none from `Q̄`.
    pub witness: (usize, usize),
    /// `P̄((x,y), witness)`.
    pub required_mass: Rational,
    /// `Q̄((x,y), witness)`; any generated transition to the witness with both
    /// coordinates moved must be proposed there.
    pub available_mass: Rational,
    pub alternative_qbar: JointDist,
    pub alternative_acceptance: AcceptanceCoupling,
    pub alternative_is_maximal: bool,
    pub alternative_rates_hold: bool,
    pub alternative_regenerates: bool,
}

impl NonmaxCertificate {
    pub fn maximal_qbar_is_unique(&self) -> bool {
        self.maximal_qbar_dimension == 0
    }

    /// All the claimed facts hold: unique maximal proposal coupling,
    /// required mass 1/2 against none available, and the alternative
    /// proposal coupling regenerates the maximal transition coupling.
    pub fn reproduces(&self) -> bool {
        self.maximal_qbar_is_unique()
            && self.required_mass == rational::ratio(1, 2)
            && self.available_mass.is_zero()
            && self.required_mass > self.available_mass
            && !self.alternative_is_maximal
            && self.alternative_rates_hold
            && self.alternative_regenerates
    }
}

pub fn certify_nonmax_example() -> Result<NonmaxCertificate> {
    let problem = fixtures::three_state_nonmax();
    let space = problem.space().clone();
    let pair = (0, 1);
    let (x, y) = pair;
    let (q, p) = (problem.q(), problem.p());
    let maximal_pbar = build_maximal_coupling(p.row(x), p.row(y), &ResidualStrategy::Product)?;
    let maximal_qbar = build_maximal_coupling(q.row(x), q.row(y), &ResidualStrategy::Product)?;
    let maximal_qbar_dimension = maximal_coupling_dimension(q.row(x), q.row(y))?;

    // Both chains move, to states 2 and 3.
    let witness = (1, 2);
    let required_mass = maximal_pbar.get(witness.0, witness.1).clone();
    let available_mass = maximal_qbar.get(witness.0, witness.1).clone();

    let half = rational::ratio(1, 2);
    let alternative_qbar =
        JointDist::from_entries(space.clone(), [((1, 2), half.clone()), ((2, 0), half)])?;
    let zero = rational::zero;
    let one = rational::one;
    let alternative_acceptance = AcceptanceCoupling::from_fn(space, pair, |i, j| match (i, j) {
        (2, 0) => [zero(), zero(), one(), zero()],
        _ => [one(), zero(), zero(), zero()],
    })?;
    let alternative_is_maximal =
        is_maximal_coupling(&alternative_qbar, q.row(x), q.row(y))?.maximal;
    let alternative_rates_hold =
        check_theorem1_conditions(&alternative_qbar, &alternative_acceptance, q, problem.a(), pair)?
            .holds();
    let alternative_regenerates =
        regenerate_pbar(&alternative_qbar, &alternative_acceptance, pair)? == maximal_pbar;

    Ok(NonmaxCertificate {
        problem,
        pair,
        maximal_pbar,
        maximal_qbar,
        maximal_qbar_dimension,
        witness,
        required_mass,
        available_mass,
        alternative_qbar,
        alternative_acceptance,
        alternative_is_maximal,
        alternative_rates_hold,
        alternative_regenerates,
    })
}
