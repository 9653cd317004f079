//! Exact finite measures: distributions, joint distributions on pairs of
//! states, total variation, Hahn/Jordan decompositions and maximal couplings.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{CoreError, Result};
use crate::rational::{self, format_rational, Rational};
use crate::space::{ensure_same, StateSpace};

/// Probability vector over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist {
    space: Arc<StateSpace>,
    weights: Vec<Rational>,
}

/// Non-negative vector with total mass at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubDist {
    space: Arc<StateSpace>,
    weights: Vec<Rational>,
}

fn check_weights(space: &StateSpace, weights: &[Rational]) -> Result<Rational> {
    if weights.len() != space.len() {
        return Err(CoreError::InvalidDistribution(format!(
            "expected {} weights, got {}",
            space.len(),
            weights.len()
        )));
    }
    if let Some(i) = weights.iter().position(|w| w.is_negative()) {
        return Err(CoreError::InvalidDistribution(format!(
            "negative weight {} at state {}",
            format_rational(&weights[i]),
            space.label(i)
        )));
    }
    Ok(rational::sum(weights))
}

impl Dist {
    pub fn new(space: Arc<StateSpace>, weights: Vec<Rational>) -> Result<Self> {
        let total = check_weights(&space, &weights)?;
        if total != rational::one() {
            return Err(CoreError::InvalidDistribution(format!(
                "weights sum to {}, not 1",
                format_rational(&total)
            )));
        }
        Ok(Dist { space, weights })
    }

    pub fn point_mass(space: Arc<StateSpace>, at: usize) -> Self {
        let mut weights = vec![rational::zero(); space.len()];
        weights[at] = rational::one();
        Dist { space, weights }
    }

    pub fn uniform(space: Arc<StateSpace>) -> Self {
        let n = space.len() as i64;
        let weights = vec![rational::ratio(1, n); space.len()];
        Dist { space, weights }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self, i: usize) -> &Rational {
        &self.weights[i]
    }

    /// Mass of the subset `members`.
    pub fn mass_of(&self, members: &[usize]) -> Rational {
        members.iter().fold(rational::zero(), |acc, &i| acc + &self.weights[i])
    }

    pub fn to_sub(&self) -> SubDist {
        SubDist {
            space: self.space.clone(),
            weights: self.weights.clone(),
        }
    }
}

impl SubDist {
    pub fn new(space: Arc<StateSpace>, weights: Vec<Rational>) -> Result<Self> {
        let total = check_weights(&space, &weights)?;
        if total > rational::one() {
            return Err(CoreError::InvalidDistribution(format!(
                "sub-probability weights sum to {}",
                format_rational(&total)
            )));
        }
        Ok(SubDist { space, weights })
    }

    pub fn zeros(space: Arc<StateSpace>) -> Self {
        let weights = vec![rational::zero(); space.len()];
        SubDist { space, weights }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn mass(&self, i: usize) -> &Rational {
        &self.weights[i]
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.weights)
    }

    pub fn mass_of(&self, members: &[usize]) -> Rational {
        members.iter().fold(rational::zero(), |acc, &i| acc + &self.weights[i])
    }

    /// Rescales to a probability vector; `None` for the zero measure.
    pub fn normalized(&self) -> Option<Dist> {
        let total = self.total();
        if total.is_zero() {
            return None;
        }
        let weights = self.weights.iter().map(|w| w / &total).collect();
        Some(Dist {
            space: self.space.clone(),
            weights,
        })
    }
}

/// Measure on destination pairs. Entry `(i, j)` is the mass of
/// `(x' = s_i, y' = s_j)`: the first index is always the x-chain.
#[derive(Clone, PartialEq, Eq)]
pub struct JointDist {
    space: Arc<StateSpace>,
    weights: Vec<Rational>,
}

impl fmt::Debug for JointDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.space.len();
        let mut map = f.debug_map();
        for i in 0..n {
            for j in 0..n {
                let w = self.get(i, j);
                if !w.is_zero() {
                    map.entry(
                        &format_args!("({},{})", self.space.label(i), self.space.label(j)),
                        &format_args!("{}", format_rational(w)),
                    );
                }
            }
        }
        map.finish()
    }
}

impl JointDist {
    pub fn zeros(space: Arc<StateSpace>) -> Self {
        let n = space.len();
        JointDist {
            space,
            weights: vec![rational::zero(); n * n],
        }
    }

    /// From rows indexed by the x destination.
    pub fn from_rows(space: Arc<StateSpace>, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = space.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::InvalidDistribution(format!(
                "joint matrix must be {n}x{n}"
            )));
        }
        let weights: Vec<Rational> = rows.into_iter().flatten().collect();
        if let Some(k) = weights.iter().position(|w| w.is_negative()) {
            return Err(CoreError::InvalidDistribution(format!(
                "negative joint mass at ({},{})",
                space.label(k / n),
                space.label(k % n)
            )));
        }
        Ok(JointDist { space, weights })
    }

    /// From a display laid out with y destinations as rows and x destinations
    /// as columns; transposed into the x-first convention.
    pub fn from_y_rows(space: Arc<StateSpace>, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = space.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::InvalidDistribution(format!(
                "joint matrix must be {n}x{n}"
            )));
        }
        let mut transposed = vec![vec![rational::zero(); n]; n];
        for (j, row) in rows.into_iter().enumerate() {
            for (i, w) in row.into_iter().enumerate() {
                transposed[i][j] = w;
            }
        }
        Self::from_rows(space, transposed)
    }

    /// Sparse constructor from `((x', y'), mass)` index entries.
    pub fn from_entries(
        space: Arc<StateSpace>,
        entries: impl IntoIterator<Item = ((usize, usize), Rational)>,
    ) -> Result<Self> {
        let mut out = Self::zeros(space);
        for ((i, j), w) in entries {
            if w.is_negative() {
                return Err(CoreError::InvalidDistribution("negative joint mass".into()));
            }
            out.add_at(i, j, &w);
        }
        Ok(out)
    }

    /// Product measure `mu ⊗ nu`.
    pub fn product(mu: &[Rational], nu: &[Rational], space: Arc<StateSpace>) -> Self {
        let n = space.len();
        let mut out = Self::zeros(space);
        for i in 0..n {
            if mu[i].is_zero() {
                continue;
            }
            for j in 0..n {
                out.weights[i * n + j] = &mu[i] * &nu[j];
            }
        }
        out
    }

    /// Diagonal pushforward of `mu`.
    pub fn diagonal(mu: &[Rational], space: Arc<StateSpace>) -> Self {
        let mut out = Self::zeros(space);
        for (i, w) in mu.iter().enumerate() {
            out.set(i, i, w.clone());
        }
        out
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.weights[i * self.n() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        let n = self.n();
        self.weights[i * n + j] = value;
    }

    pub fn add_at(&mut self, i: usize, j: usize, value: &Rational) {
        let n = self.n();
        self.weights[i * n + j] += value;
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Rows indexed by x destination.
    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.weights.chunks(self.n()).map(|c| c.to_vec()).collect()
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.weights)
    }

    /// `γ(· × X)`, the x-chain marginal.
    pub fn x_marginal(&self) -> Vec<Rational> {
        self.weights.chunks(self.n()).map(rational::sum).collect()
    }

    /// `γ(X × ·)`, the y-chain marginal.
    pub fn y_marginal(&self) -> Vec<Rational> {
        let n = self.n();
        (0..n)
            .map(|j| (0..n).fold(rational::zero(), |acc, i| acc + self.get(i, j)))
            .collect()
    }

    pub fn diagonal_mass(&self) -> Rational {
        (0..self.n()).fold(rational::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Total mass on entries where `keep(i, j)` holds.
    pub fn mass_where(&self, keep: impl Fn(usize, usize) -> bool) -> Rational {
        let n = self.n();
        let mut acc = rational::zero();
        for i in 0..n {
            for j in 0..n {
                if keep(i, j) {
                    acc += self.get(i, j);
                }
            }
        }
        acc
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        JointDist {
            space: self.space.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    pub fn plus(&self, other: &JointDist) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        Ok(JointDist {
            space: self.space.clone(),
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(Zero::is_zero)
    }

    /// Non-zero entries in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n * n)
            .filter(|&k| !self.weights[k].is_zero())
            .map(|k| (k / n, k % n))
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(rational::is_nonnegative)
    }
}

/// Hahn decomposition of `mu - nu` together with its Jordan parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HahnDecomposition {
    /// `S`: states where `mu >= nu` (ties included).
    pub positive_set: Vec<usize>,
    /// Upper variation `mu^r`, vanishing off `S`.
    pub upper: SubDist,
    /// Lower variation `nu^r`, vanishing on `S`.
    pub lower: SubDist,
    /// Meet measure `mu ∧ nu`.
    pub meet: SubDist,
}

impl HahnDecomposition {
    pub fn in_positive_set(&self, i: usize) -> bool {
        self.positive_set.binary_search(&i).is_ok()
    }
}

/// `‖mu - nu‖_TV = ½ Σ |mu_i - nu_i|`.
pub fn tv_distance(mu: &Dist, nu: &Dist) -> Result<Rational> {
    ensure_same(&mu.space, &nu.space)?;
    Ok(tv_of_slices(&mu.weights, &nu.weights))
}

pub(crate) fn tv_of_slices(mu: &[Rational], nu: &[Rational]) -> Rational {
    let l1 = mu
        .iter()
        .zip(nu)
        .fold(rational::zero(), |acc, (a, b)| acc + (a - b).abs());
    l1 / rational::int(2)
}

pub fn hahn_jordan(mu: &Dist, nu: &Dist) -> Result<HahnDecomposition> {
    ensure_same(&mu.space, &nu.space)?;
    let n = mu.len();
    let mut positive_set = Vec::new();
    let mut upper = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut meet = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (&mu.weights[i], &nu.weights[i]);
        if a >= b {
            positive_set.push(i);
        }
        upper.push(rational::positive_part(&(a - b)));
        lower.push(rational::positive_part(&(b - a)));
        meet.push(rational::min(a, b));
    }
    let space = mu.space.clone();
    Ok(HahnDecomposition {
        positive_set,
        upper: SubDist {
            space: space.clone(),
            weights: upper,
        },
        lower: SubDist {
            space: space.clone(),
            weights: lower,
        },
        meet: SubDist {
            space,
            weights: meet,
        },
    })
}

/// Which marginal a [`MarginalViolation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalViolation {
    pub axis: Axis,
    pub state: usize,
    pub expected: Rational,
    pub actual: Rational,
}

/// Outcome of [`check_coupling`]: empty violation lists mean `γ ∈ Γ(μ, ν)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CouplingReport {
    pub marginal_violations: Vec<MarginalViolation>,
    pub negative_entries: Vec<(usize, usize)>,
}

impl CouplingReport {
    pub fn holds(&self) -> bool {
        self.marginal_violations.is_empty() && self.negative_entries.is_empty()
    }

    pub fn describe(&self, space: &StateSpace) -> String {
        if let Some(v) = self.marginal_violations.first() {
            let which = match v.axis {
                Axis::X => "x-marginal",
                Axis::Y => "y-marginal",
            };
            return format!(
                "{which} at state {} is {}, expected {}",
                space.label(v.state),
                format_rational(&v.actual),
                format_rational(&v.expected)
            );
        }
        if let Some(&(i, j)) = self.negative_entries.first() {
            return format!("negative mass at ({},{})", space.label(i), space.label(j));
        }
        "coupling holds".into()
    }
}

/// Checks `γ(A × X) = μ(A)` and `γ(X × A) = ν(A)` exactly, entry by entry.
pub fn check_coupling(gamma: &JointDist, mu: &Dist, nu: &Dist) -> CouplingReport {
    check_coupling_slices(gamma, &mu.weights, &nu.weights)
}

pub(crate) fn check_coupling_slices(
    gamma: &JointDist,
    mu: &[Rational],
    nu: &[Rational],
) -> CouplingReport {
    let mut report = CouplingReport::default();
    for (state, (actual, expected)) in gamma.x_marginal().into_iter().zip(mu).enumerate() {
        if &actual != expected {
            report.marginal_violations.push(MarginalViolation {
                axis: Axis::X,
                state,
                expected: expected.clone(),
                actual,
            });
        }
    }
    for (state, (actual, expected)) in gamma.y_marginal().into_iter().zip(nu).enumerate() {
        if &actual != expected {
            report.marginal_violations.push(MarginalViolation {
                axis: Axis::Y,
                state,
                expected: expected.clone(),
                actual,
            });
        }
    }
    let n = gamma.n();
    for i in 0..n {
        for j in 0..n {
            if gamma.get(i, j).is_negative() {
                report.negative_entries.push((i, j));
            }
        }
    }
    report
}

/// Result of the Hahn maximality test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalityVerdict {
    pub maximal: bool,
    /// Hahn set used for the test.
    pub positive_set: Vec<usize>,
    /// `γ((Sᶜ × X) \ Δ)`.
    pub off_diagonal_from_negative: Rational,
    /// `γ((X × S) \ Δ)`.
    pub off_diagonal_into_positive: Rational,
    pub diagonal_mass: Rational,
    /// `1 - TV(μ, ν)`.
    pub bound: Rational,
}

impl MaximalityVerdict {
    /// `1 - TV - γ(Δ)`, zero exactly when maximal.
    pub fn diagonal_deficit(&self) -> Rational {
        &self.bound - &self.diagonal_mass
    }
}

/// Hahn maximality condition: `γ` is maximal iff `γ((Sᶜ×X)∖Δ) = γ((X×S)∖Δ) = 0`.
///
/// The verdict is cross-checked against `γ(Δ) = 1 - TV(μ, ν)`; disagreement
/// is reported as an internal error.
pub fn is_maximal_coupling(gamma: &JointDist, mu: &Dist, nu: &Dist) -> Result<MaximalityVerdict> {
    ensure_same(gamma.space(), mu.space())?;
    let report = check_coupling(gamma, mu, nu);
    if !report.holds() {
        return Err(CoreError::NotACoupling(report.describe(gamma.space())));
    }
    let hahn = hahn_jordan(mu, nu)?;
    let tv = hahn.upper.total();
    let in_s = |i: usize| hahn.in_positive_set(i);
    let from_negative = gamma.mass_where(|i, j| i != j && !in_s(i));
    let into_positive = gamma.mass_where(|i, j| i != j && in_s(j));
    let diagonal_mass = gamma.diagonal_mass();
    let bound = rational::one() - tv;
    let maximal = from_negative.is_zero() && into_positive.is_zero();
    if maximal != (diagonal_mass == bound) {
        return Err(CoreError::Internal(
            "Hahn condition and diagonal-mass test disagree".into(),
        ));
    }
    Ok(MaximalityVerdict {
        maximal,
        positive_set: hahn.positive_set,
        off_diagonal_from_negative: from_negative,
        off_diagonal_into_positive: into_positive,
        diagonal_mass,
        bound,
    })
}

/// Couples two residual sub-distributions; rows are indexed by the x destination.
pub type ResidualCoupler = Arc<dyn Fn(&[Rational], &[Rational]) -> Vec<Vec<Rational>> + Send + Sync>;

/// How the residual measures `mu^r`, `nu^r` are coupled off the diagonal.
#[derive(Clone, Default)]
pub enum ResidualStrategy {
    /// `mu^r ⊗ nu^r / TV`.
    #[default]
    Product,
    /// Greedy north-west corner transport between the residuals.
    NorthWest,
    /// Caller-supplied coupling of `(mu^r, nu^r)`, returned as n×n rows
    /// indexed by the x destination.
    Custom(ResidualCoupler),
}

impl fmt::Debug for ResidualStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResidualStrategy::Product => f.write_str("Product"),
            ResidualStrategy::NorthWest => f.write_str("NorthWest"),
            ResidualStrategy::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn north_west(upper: &[Rational], lower: &[Rational]) -> Vec<Vec<Rational>> {
    let n = upper.len();
    let mut out = vec![vec![rational::zero(); n]; n];
    let mut supply: Vec<Rational> = upper.to_vec();
    let mut demand: Vec<Rational> = lower.to_vec();
    let (mut i, mut j) = (0, 0);
    while i < n && j < n {
        if supply[i].is_zero() {
            i += 1;
            continue;
        }
        if demand[j].is_zero() {
            j += 1;
            continue;
        }
        let moved = rational::min(&supply[i], &demand[j]);
        supply[i] -= &moved;
        demand[j] -= &moved;
        out[i][j] = moved;
    }
    out
}

/// Maximal coupling: meet on the diagonal plus a coupling of the residuals.
pub fn build_maximal_coupling(
    mu: &Dist,
    nu: &Dist,
    residual: &ResidualStrategy,
) -> Result<JointDist> {
    let hahn = hahn_jordan(mu, nu)?;
    let space = mu.space.clone();
    let mut gamma = JointDist::diagonal(hahn.meet.weights(), space.clone());
    let tv = hahn.upper.total();
    if tv.is_zero() {
        return Ok(gamma);
    }
    let rows = match residual {
        ResidualStrategy::Product => {
            let prod = JointDist::product(hahn.upper.weights(), hahn.lower.weights(), space.clone());
            prod.scaled(&(rational::one() / &tv)).rows()
        }
        ResidualStrategy::NorthWest => north_west(hahn.upper.weights(), hahn.lower.weights()),
        ResidualStrategy::Custom(f) => f(hahn.upper.weights(), hahn.lower.weights()),
    };
    let residual_coupling = JointDist::from_rows(space, rows)?;
    let report = check_coupling_slices(&residual_coupling, hahn.upper.weights(), hahn.lower.weights());
    if !report.holds() {
        return Err(CoreError::NotACoupling(format!(
            "residual coupling: {}",
            report.describe(residual_coupling.space())
        )));
    }
    if !residual_coupling.diagonal_mass().is_zero() {
        return Err(CoreError::Internal("residual coupling charges the diagonal".into()));
    }
    gamma = gamma.plus(&residual_coupling)?;
    Ok(gamma)
}

/// True when `Γmax(μ, ν)` is a single point, i.e. one of the residuals is
/// supported on at most one state.
pub fn maximal_coupling_is_unique(mu: &Dist, nu: &Dist) -> Result<bool> {
    Ok(maximal_coupling_dimension(mu, nu)? == 0)
}

/// Dimension of the polytope `Γmax(μ, ν)`:
/// `(|supp μ^r| - 1)(|supp ν^r| - 1)`, or 0 when the residuals vanish.
pub fn maximal_coupling_dimension(mu: &Dist, nu: &Dist) -> Result<usize> {
    let hahn = hahn_jordan(mu, nu)?;
    let support = |w: &[Rational]| w.iter().filter(|v| !v.is_zero()).count();
    let (a, b) = (support(hahn.upper.weights()), support(hahn.lower.weights()));
    if a == 0 || b == 0 {
        return Ok(0);
    }
    Ok((a - 1) * (b - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ratio, zero};

    fn dist(space: &Arc<StateSpace>, w: &[(i64, i64)]) -> Dist {
        Dist::new(space.clone(), w.iter().map(|&(a, b)| ratio(a, b)).collect()).unwrap()
    }

    #[test]
    fn tv_of_two_state_kernel_rows() {
        let s = StateSpace::numbered(2);
        let mu = dist(&s, &[(1, 2), (1, 2)]);
        let nu = dist(&s, &[(1, 4), (3, 4)]);
        assert_eq!(tv_distance(&mu, &nu).unwrap(), ratio(1, 4));
        assert_eq!(tv_distance(&mu, &mu).unwrap(), zero());
        let a = Dist::point_mass(s.clone(), 0);
        let b = Dist::point_mass(s.clone(), 1);
        assert_eq!(tv_distance(&a, &b).unwrap(), ratio(1, 1));
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = Dist::uniform(StateSpace::numbered(2));
        let b = Dist::uniform(StateSpace::new(["a", "b"]).unwrap());
        assert!(matches!(tv_distance(&a, &b), Err(CoreError::SpaceMismatch(_))));
        assert!(hahn_jordan(&a, &b).is_err());
    }

    #[test]
    fn hahn_two_state() {
        let s = StateSpace::numbered(2);
        let mu = dist(&s, &[(1, 2), (1, 2)]);
        let nu = dist(&s, &[(1, 4), (3, 4)]);
        let h = hahn_jordan(&mu, &nu).unwrap();
        assert_eq!(h.positive_set, vec![0]);
        assert_eq!(h.upper.weights(), &[ratio(1, 4), zero()]);
        assert_eq!(h.lower.weights(), &[zero(), ratio(1, 4)]);
        assert_eq!(h.meet.weights(), &[ratio(1, 4), ratio(1, 2)]);
    }

    #[test]
    fn hahn_ties_go_into_positive_set() {
        let s = StateSpace::numbered(3);
        let mu = dist(&s, &[(1, 3), (1, 3), (1, 3)]);
        let h = hahn_jordan(&mu, &mu).unwrap();
        assert_eq!(h.positive_set, vec![0, 1, 2]);
        assert!(h.upper.total().is_zero());
        assert_eq!(h.meet.weights(), mu.weights());

        let mu = dist(&s, &[(0, 1), (1, 2), (1, 2)]);
        let nu = dist(&s, &[(1, 2), (0, 1), (1, 2)]);
        let h = hahn_jordan(&mu, &nu).unwrap();
        assert_eq!(h.positive_set, vec![1, 2]);
        assert_eq!(h.upper.weights(), &[zero(), ratio(1, 2), zero()]);
        assert_eq!(h.lower.weights(), &[ratio(1, 2), zero(), zero()]);
    }

    #[test]
    fn coupling_checks() {
        let s = StateSpace::numbered(2);
        let half = dist(&s, &[(1, 2), (1, 2)]);
        let qbar = JointDist::from_entries(
            s.clone(),
            [
                ((0, 0), ratio(1, 6)),
                ((1, 0), ratio(1, 3)),
                ((0, 1), ratio(1, 3)),
                ((1, 1), ratio(1, 6)),
            ],
        )
        .unwrap();
        assert!(check_coupling(&qbar, &half, &half).holds());

        let nu = dist(&s, &[(1, 4), (3, 4)]);
        let indep = JointDist::product(half.weights(), nu.weights(), s.clone());
        assert!(check_coupling(&indep, &half, &nu).holds());

        let corner = JointDist::from_entries(s.clone(), [((0, 1), ratio(1, 1))]).unwrap();
        let report = check_coupling(&corner, &half, &nu);
        assert!(!report.holds());
        assert!(!report.marginal_violations.is_empty());
    }

    #[test]
    fn two_state_maximal_coupling() {
        let s = StateSpace::numbered(2);
        let mu = dist(&s, &[(1, 2), (1, 2)]);
        let nu = dist(&s, &[(1, 4), (3, 4)]);
        let g = build_maximal_coupling(&mu, &nu, &ResidualStrategy::Product).unwrap();
        let expected = JointDist::from_entries(
            s.clone(),
            [((0, 0), ratio(1, 4)), ((1, 1), ratio(1, 2)), ((0, 1), ratio(1, 4))],
        )
        .unwrap();
        assert_eq!(g, expected);
        assert!(is_maximal_coupling(&g, &mu, &nu).unwrap().maximal);
        let nw = build_maximal_coupling(&mu, &nu, &ResidualStrategy::NorthWest).unwrap();
        assert_eq!(nw, expected);
    }

    #[test]
    fn non_maximal_coupling_is_detected() {
        let s = StateSpace::numbered(2);
        let mu = dist(&s, &[(1, 2), (1, 2)]);
        let nu = dist(&s, &[(1, 4), (3, 4)]);
        // x' indexes rows here: (x'=2,y'=1) = 1/4, (x'=1,y'=2) = 1/2, (2,2) = 1/4.
        let g = JointDist::from_entries(
            s.clone(),
            [((1, 0), ratio(1, 4)), ((0, 1), ratio(1, 2)), ((1, 1), ratio(1, 4))],
        )
        .unwrap();
        let v = is_maximal_coupling(&g, &mu, &nu).unwrap();
        assert!(!v.maximal);
        assert_eq!(v.diagonal_mass, ratio(1, 4));
        assert_eq!(v.diagonal_deficit(), ratio(1, 2));
    }

    #[test]
    fn equal_marginals_give_diagonal() {
        let s = StateSpace::numbered(3);
        let mu = dist(&s, &[(1, 6), (1, 3), (1, 2)]);
        let g = build_maximal_coupling(&mu, &mu, &ResidualStrategy::Product).unwrap();
        assert_eq!(g, JointDist::diagonal(mu.weights(), s.clone()));
        assert!(is_maximal_coupling(&g, &mu, &mu).unwrap().maximal);
    }

    #[test]
    fn three_state_unique_maximal() {
        let s = StateSpace::numbered(3);
        let mu = dist(&s, &[(0, 1), (1, 2), (1, 2)]);
        let nu = dist(&s, &[(1, 2), (0, 1), (1, 2)]);
        let g = build_maximal_coupling(&mu, &nu, &ResidualStrategy::Product).unwrap();
        let expected =
            JointDist::from_entries(s.clone(), [((1, 0), ratio(1, 2)), ((2, 2), ratio(1, 2))])
                .unwrap();
        assert_eq!(g, expected);
        assert!(maximal_coupling_is_unique(&mu, &nu).unwrap());
    }

    #[test]
    fn not_a_coupling_is_an_error() {
        let s = StateSpace::numbered(2);
        let mu = dist(&s, &[(1, 2), (1, 2)]);
        let g = JointDist::from_entries(s.clone(), [((0, 1), ratio(1, 1))]).unwrap();
        assert!(matches!(
            is_maximal_coupling(&g, &mu, &mu),
            Err(CoreError::NotACoupling(_))
        ));
    }

    #[test]
    fn display_orientation_is_transposed() {
        let s = StateSpace::numbered(2);
        // y rows, x columns.
        let g = JointDist::from_y_rows(
            s.clone(),
            vec![vec![zero(), ratio(1, 4)], vec![ratio(1, 2), ratio(1, 4)]],
        )
        .unwrap();
        assert_eq!(g.get(1, 0), &ratio(1, 4));
        assert_eq!(g.get(0, 1), &ratio(1, 2));
    }
}
