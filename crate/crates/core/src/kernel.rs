//! Finite Markov kernels and MH-like kernels generated by a proposal and an
//! acceptance rate function.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{CoreError, Result};
use crate::measure::{check_coupling, Dist, JointDist};
use crate::rational::{self, format_rational, Rational};
use crate::space::{ensure_same, StateSpace};

/// Joint kernel restricted to the pairs that have been supplied, keyed by
/// current-state indices `(x, y)`.
pub type PairMap<T> = BTreeMap<(usize, usize), T>;

/// Row-stochastic kernel; row `i` is `Θ(s_i, ·)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteKernel {
    space: Arc<StateSpace>,
    rows: Vec<Dist>,
}

impl FiniteKernel {
    pub fn new(space: Arc<StateSpace>, rows: Vec<Vec<Rational>>) -> Result<Self> {
        if rows.len() != space.len() {
            return Err(CoreError::InvalidKernel(format!(
                "expected {} rows, got {}",
                space.len(),
                rows.len()
            )));
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                Dist::new(space.clone(), r).map_err(|e| {
                    CoreError::InvalidKernel(format!("row {}: {e}", space.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteKernel { space, rows })
    }

    pub fn from_dists(space: Arc<StateSpace>, rows: Vec<Dist>) -> Result<Self> {
        if rows.len() != space.len() {
            return Err(CoreError::InvalidKernel("row count mismatch".into()));
        }
        for r in &rows {
            ensure_same(&space, r.space())?;
        }
        Ok(FiniteKernel { space, rows })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn row(&self, x: usize) -> &Dist {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Dist] {
        &self.rows
    }

    pub fn get(&self, x: usize, x_prime: usize) -> &Rational {
        self.rows[x].mass(x_prime)
    }

    /// True when some state proposes itself with positive probability.
    pub fn is_lazy(&self) -> bool {
        (0..self.n()).any(|x| !self.get(x, x).is_zero())
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        self.rows.iter().map(|r| r.weights().to_vec()).collect()
    }
}

/// Acceptance rate function `a(x, x')` with `a(x, x) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptanceMatrix {
    space: Arc<StateSpace>,
    a: Vec<Vec<Rational>>,
    unreachable: Vec<Vec<bool>>,
}

impl AcceptanceMatrix {
    /// Validates an explicit matrix; entries must lie in `[0, 1]` with ones on
    /// the diagonal.
    pub fn new(space: Arc<StateSpace>, a: Vec<Vec<Rational>>) -> Result<Self> {
        let n = space.len();
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(CoreError::InvalidKernel(format!(
                "acceptance matrix must be {n}x{n}"
            )));
        }
        let one = rational::one();
        for (x, row) in a.iter().enumerate() {
            if row[x] != one {
                return Err(CoreError::InvalidKernel(format!(
                    "a({0},{0}) must be 1",
                    space.label(x)
                )));
            }
            for (xp, v) in row.iter().enumerate() {
                if v.is_negative() || v > &one {
                    return Err(CoreError::InvalidKernel(format!(
                        "a({},{}) = {} outside [0,1]",
                        space.label(x),
                        space.label(xp),
                        format_rational(v)
                    )));
                }
            }
        }
        let unreachable = vec![vec![false; n]; n];
        Ok(AcceptanceMatrix {
            space,
            a,
            unreachable,
        })
    }

    /// Accept everything.
    pub fn ones(space: Arc<StateSpace>) -> Self {
        let n = space.len();
        AcceptanceMatrix {
            space,
            a: vec![vec![rational::one(); n]; n],
            unreachable: vec![vec![false; n]; n],
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn get(&self, x: usize, x_prime: usize) -> &Rational {
        &self.a[x][x_prime]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.a
    }

    /// Entry was filled with 1 because the proposal never occurs.
    pub fn is_unreachable(&self, x: usize, x_prime: usize) -> bool {
        self.unreachable[x][x_prime]
    }

    /// Marks entries with `q(x, x') = 0` as unreachable.
    pub fn flag_unreachable(mut self, q: &FiniteKernel) -> Self {
        let n = self.space.len();
        for x in 0..n {
            for xp in 0..n {
                self.unreachable[x][xp] = x != xp && q.get(x, xp).is_zero();
            }
        }
        self
    }
}

fn check_target(pi: &Dist, q: &FiniteKernel) -> Result<()> {
    ensure_same(pi.space(), q.space())?;
    if let Some(x) = pi.weights().iter().position(Zero::is_zero) {
        return Err(CoreError::ZeroTargetMass(pi.space().label(x).to_string()));
    }
    Ok(())
}

fn rate_matrix(
    pi: &Dist,
    q: &FiniteKernel,
    rule: impl Fn(&Rational, &Rational) -> Rational,
) -> Result<AcceptanceMatrix> {
    check_target(pi, q)?;
    let n = q.n();
    let mut a = vec![vec![rational::one(); n]; n];
    let mut unreachable = vec![vec![false; n]; n];
    for x in 0..n {
        for xp in 0..n {
            if x == xp {
                continue;
            }
            let forward = pi.mass(x) * q.get(x, xp);
            if forward.is_zero() {
                unreachable[x][xp] = true;
                continue;
            }
            let backward = pi.mass(xp) * q.get(xp, x);
            a[x][xp] = rule(&forward, &backward);
        }
    }
    Ok(AcceptanceMatrix {
        space: q.space().clone(),
        a,
        unreachable,
    })
}

/// Metropolis-Hastings rate `1 ∧ π(x')q(x',x) / π(x)q(x,x')`.
pub fn mh_acceptance(pi: &Dist, q: &FiniteKernel) -> Result<AcceptanceMatrix> {
    rate_matrix(pi, q, |fwd, bwd| rational::min(&rational::one(), &(bwd / fwd)))
}

/// Barker rate `π(x')q(x',x) / (π(x')q(x',x) + π(x)q(x,x'))`, with the
/// diagonal set to 1 (self-proposals give the same state either way).
pub fn barker_acceptance(pi: &Dist, q: &FiniteKernel) -> Result<AcceptanceMatrix> {
    rate_matrix(pi, q, |fwd, bwd| bwd / (bwd + fwd))
}

/// `P(x,x') = q(x,x')a(x,x')` off the diagonal; rejected mass stays at `x`.
pub fn generate_p(q: &FiniteKernel, a: &AcceptanceMatrix) -> Result<FiniteKernel> {
    ensure_same(q.space(), a.space())?;
    let n = q.n();
    let rows = (0..n)
        .map(|x| {
            let mut row: Vec<Rational> = (0..n).map(|xp| q.get(x, xp) * a.get(x, xp)).collect();
            let accepted = rational::sum(&row);
            row[x] += rational::one() - accepted;
            row
        })
        .collect();
    FiniteKernel::new(q.space().clone(), rows)
}

/// Proposal kernel, acceptance rates and the kernel they generate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MhProblem {
    q: FiniteKernel,
    a: AcceptanceMatrix,
    p: FiniteKernel,
}

impl MhProblem {
    pub fn new(q: FiniteKernel, a: AcceptanceMatrix) -> Result<Self> {
        let a = a.flag_unreachable(&q);
        let p = generate_p(&q, &a)?;
        Ok(MhProblem { q, a, p })
    }

    pub fn with_mh(q: FiniteKernel, pi: &Dist) -> Result<Self> {
        let a = mh_acceptance(pi, &q)?;
        Self::new(q, a)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.q.space()
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }

    pub fn q(&self) -> &FiniteKernel {
        &self.q
    }

    pub fn a(&self) -> &AcceptanceMatrix {
        &self.a
    }

    pub fn p(&self) -> &FiniteKernel {
        &self.p
    }
}

/// First failing pair of a joint kernel check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelCouplingReport {
    pub pairs_checked: usize,
    pub violation: Option<((usize, usize), String)>,
}

impl KernelCouplingReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Whether every ordered pair must be present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCoverage {
    Full,
    Supplied,
}

/// Checks `P̄((x,y),·) ∈ Γ(P(x,·), P(y,·))` at every supplied pair.
pub fn check_joint_kernel_coupling(
    pbar: &PairMap<JointDist>,
    p: &FiniteKernel,
    coverage: PairCoverage,
) -> Result<KernelCouplingReport> {
    let n = p.n();
    if coverage == PairCoverage::Full {
        for x in 0..n {
            for y in 0..n {
                if !pbar.contains_key(&(x, y)) {
                    return Err(CoreError::MissingPair(
                        p.space().label(x).into(),
                        p.space().label(y).into(),
                    ));
                }
            }
        }
    }
    let mut pairs_checked = 0;
    for (&(x, y), gamma) in pbar {
        ensure_same(gamma.space(), p.space())?;
        pairs_checked += 1;
        let report = check_coupling(gamma, p.row(x), p.row(y));
        if !report.holds() {
            return Ok(KernelCouplingReport {
                pairs_checked,
                violation: Some(((x, y), report.describe(p.space()))),
            });
        }
    }
    Ok(KernelCouplingReport {
        pairs_checked,
        violation: None,
    })
}
