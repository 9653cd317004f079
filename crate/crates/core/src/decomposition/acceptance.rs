use std::sync::Arc;

use num_traits::{Signed, Zero};

use super::Cam;
use crate::error::{CoreError, Result};
use crate::kernel::{AcceptanceMatrix, FiniteKernel};
use crate::measure::{check_coupling, JointDist};
use crate::rational::{self, format_rational, Rational};
use crate::space::{ensure_same, StateSpace};

/// Joint acceptance outcome `(b_x, b_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Both,
    OnlyX,
    OnlyY,
    Neither,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Both, Outcome::OnlyX, Outcome::OnlyY, Outcome::Neither];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Outcome::Both => (true, true),
            Outcome::OnlyX => (true, false),
            Outcome::OnlyY => (false, true),
            Outcome::Neither => (false, false),
        }
    }

    pub fn from_bits(b_x: bool, b_y: bool) -> Self {
        match (b_x, b_y) {
            (true, true) => Outcome::Both,
            (true, false) => Outcome::OnlyX,
            (false, true) => Outcome::OnlyY,
            (false, false) => Outcome::Neither,
        }
    }

    /// `"11"`, `"10"`, `"01"` or `"00"`.
    pub fn code(self) -> &'static str {
        ["11", "10", "01", "00"][self.index()]
    }
}

/// Acceptance indicator coupling at one current pair: a law on `{0,1}²` for
/// every proposal pair `(x', y')`, stored in outcome order `11, 10, 01, 00`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptanceCoupling {
    space: Arc<StateSpace>,
    pair: (usize, usize),
    probs: Vec<[Rational; 4]>,
    off_support: Vec<bool>,
}

fn always_accept() -> [Rational; 4] {
    [rational::one(), rational::zero(), rational::zero(), rational::zero()]
}

impl AcceptanceCoupling {
    /// All proposals accepted by both chains.
    pub fn all_accept(space: Arc<StateSpace>, pair: (usize, usize)) -> Self {
        let n = space.len();
        AcceptanceCoupling {
            space,
            pair,
            probs: vec![always_accept(); n * n],
            off_support: vec![false; n * n],
        }
    }

    /// From explicit vectors; each must be a probability vector.
    pub fn from_fn(
        space: Arc<StateSpace>,
        pair: (usize, usize),
        f: impl Fn(usize, usize) -> [Rational; 4],
    ) -> Result<Self> {
        let n = space.len();
        let mut probs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = f(i, j);
                if v.iter().any(Signed::is_negative) || rational::sum(&v) != rational::one() {
                    return Err(CoreError::AcceptanceConditions(format!(
                        "acceptance law at ({},{}) is not a probability vector",
                        space.label(i),
                        space.label(j)
                    )));
                }
                probs.push(v);
            }
        }
        Ok(AcceptanceCoupling {
            space,
            pair,
            probs,
            off_support: vec![false; n * n],
        })
    }

    /// Common uniform: `b_x = 1{u ≤ a(x,x')}`, `b_y = 1{u ≤ a(y,y')}`.
    pub fn common_uniform(a: &AcceptanceMatrix, pair: (usize, usize)) -> Self {
        let (x, y) = pair;
        Self::from_fn(a.space().clone(), pair, |i, j| {
            let (ax, ay) = (a.get(x, i), a.get(y, j));
            let both = rational::min(ax, ay);
            [
                both.clone(),
                ax - &both,
                ay - &both,
                rational::one() - rational::min(&rational::one(), &(ax + ay - &both)),
            ]
        })
        .expect("common uniform law is a probability vector")
    }

    /// Independent Bernoulli indicators.
    pub fn independent(a: &AcceptanceMatrix, pair: (usize, usize)) -> Self {
        let (x, y) = pair;
        let one = rational::one();
        Self::from_fn(a.space().clone(), pair, |i, j| {
            let (ax, ay) = (a.get(x, i), a.get(y, j));
            [
                ax * ay,
                ax * (&one - ay),
                (&one - ax) * ay,
                (&one - ax) * (&one - ay),
            ]
        })
        .expect("independent law is a probability vector")
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn probs(&self, i: usize, j: usize) -> &[Rational; 4] {
        &self.probs[i * self.n() + j]
    }

    pub fn prob(&self, i: usize, j: usize, outcome: Outcome) -> &Rational {
        &self.probs(i, j)[outcome.index()]
    }

    pub fn set(&mut self, i: usize, j: usize, v: [Rational; 4]) {
        let n = self.n();
        self.probs[i * n + j] = v;
        self.off_support[i * n + j] = false;
    }

    /// Entry filled with the default `(1,0,0,0)` because `Q̄` puts no mass there.
    pub fn is_off_support(&self, i: usize, j: usize) -> bool {
        self.off_support[i * self.n() + j]
    }

    /// Table of one outcome's probabilities, rows indexed by `x'`.
    pub fn table(&self, outcome: Outcome) -> JointDist {
        let n = self.n();
        let mut out = JointDist::zeros(self.space.clone());
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.prob(i, j, outcome).clone());
            }
        }
        out
    }
}

/// `φᵢⱼ = dΦᵢⱼ / dQ̄` on the support of `Q̄`; `(1,0,0,0)` off it, flagged.
pub fn extract_acceptance_coupling(cam: &Cam, qbar: &JointDist) -> AcceptanceCoupling {
    let space = qbar.space().clone();
    let n = space.len();
    let mut probs = Vec::with_capacity(n * n);
    let mut off_support = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mass = qbar.get(i, j);
            if mass.is_zero() {
                probs.push(always_accept());
                off_support.push(true);
                continue;
            }
            let v = cam.components().map(|phi| phi.get(i, j) / mass);
            probs.push(v);
            off_support.push(false);
        }
    }
    AcceptanceCoupling {
        space,
        pair: cam.pair,
        probs,
        off_support,
    }
}

/// Law of `(b_x x' + (1-b_x) x, b_y y' + (1-b_y) y)`.
pub fn regenerate_pbar(
    qbar: &JointDist,
    b: &AcceptanceCoupling,
    pair: (usize, usize),
) -> Result<JointDist> {
    ensure_same(qbar.space(), b.space())?;
    let (x, y) = pair;
    let n = qbar.n();
    let mut out = JointDist::zeros(qbar.space().clone());
    for i in 0..n {
        for j in 0..n {
            let mass = qbar.get(i, j);
            if mass.is_zero() {
                continue;
            }
            let v = b.probs(i, j);
            if rational::sum(v) != rational::one() || v.iter().any(Signed::is_negative) {
                return Err(CoreError::AcceptanceConditions(format!(
                    "acceptance law at ({},{}) is not a probability vector",
                    qbar.space().label(i),
                    qbar.space().label(j)
                )));
            }
            let targets = [(i, j), (i, y), (x, j), (x, y)];
            for (p, &(ti, tj)) in v.iter().zip(&targets) {
                if !p.is_zero() {
                    out.add_at(ti, tj, &(mass * p));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateViolation {
    pub x_chain: bool,
    /// Proposed state `x'` (or `y'`).
    pub proposal: usize,
    pub actual: Rational,
    pub expected: Rational,
}

/// Marginal acceptance identities; empty lists mean both chains accept `x'`
/// with probability `a(x,x')` (and likewise for `y'`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AcceptanceRateReport {
    pub violations: Vec<RateViolation>,
}

impl AcceptanceRateReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn describe(&self, space: &StateSpace) -> String {
        match self.violations.first() {
            None => "marginal acceptance rates hold".into(),
            Some(v) => format!(
                "{} chain accepts proposal {} with mass {}, expected {}",
                if v.x_chain { "x" } else { "y" },
                space.label(v.proposal),
                format_rational(&v.actual),
                format_rational(&v.expected)
            ),
        }
    }
}

/// `Σ_{y'} Q̄(x',y')(p₁₁+p₁₀) = a(x,x')Q(x,x')` for every `x'` with
/// `Q(x,x') > 0`, and the mirror identity for `y'`.
pub fn check_acceptance_rates(
    qbar: &JointDist,
    b: &AcceptanceCoupling,
    q: &FiniteKernel,
    a: &AcceptanceMatrix,
    pair: (usize, usize),
) -> AcceptanceRateReport {
    let (x, y) = pair;
    let n = qbar.n();
    let mut report = AcceptanceRateReport::default();
    for xp in 0..n {
        if q.get(x, xp).is_zero() {
            continue;
        }
        let actual = (0..n).fold(rational::zero(), |acc, yp| {
            let v = b.probs(xp, yp);
            acc + qbar.get(xp, yp) * (&v[0] + &v[1])
        });
        let expected = a.get(x, xp) * q.get(x, xp);
        if actual != expected {
            report.violations.push(RateViolation {
                x_chain: true,
                proposal: xp,
                actual,
                expected,
            });
        }
    }
    for yp in 0..n {
        if q.get(y, yp).is_zero() {
            continue;
        }
        let actual = (0..n).fold(rational::zero(), |acc, xp| {
            let v = b.probs(xp, yp);
            acc + qbar.get(xp, yp) * (&v[0] + &v[2])
        });
        let expected = a.get(y, yp) * q.get(y, yp);
        if actual != expected {
            report.violations.push(RateViolation {
                x_chain: false,
                proposal: yp,
                actual,
                expected,
            });
        }
    }
    report
}

/// Conditions 1-2 of the representation theorem. Requires `Q̄ ∈ Γ(Q(x,·), Q(y,·))`.
pub fn check_theorem1_conditions(
    qbar: &JointDist,
    b: &AcceptanceCoupling,
    q: &FiniteKernel,
    a: &AcceptanceMatrix,
    pair: (usize, usize),
) -> Result<AcceptanceRateReport> {
    ensure_same(qbar.space(), q.space())?;
    let (x, y) = pair;
    let report = check_coupling(qbar, q.row(x), q.row(y));
    if !report.holds() {
        return Err(CoreError::NotACoupling(format!(
            "proposal coupling: {}",
            report.describe(q.space())
        )));
    }
    Ok(check_acceptance_rates(qbar, b, q, a, pair))
}
