use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Cam;
use crate::kernel::FiniteKernel;
use crate::measure::JointDist;
use crate::rational::{self, format_rational, Rational};
use crate::space::StateSpace;

/// How rectangles `A_x × A_y` are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectangleMode {
    /// Exhaustive up to twelve states, 1,024 seeded samples above.
    Auto,
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

const EXHAUSTIVE_LIMIT: usize = 12;
const SAMPLED_RECTANGLES: usize = 1024;
const SAMPLE_SEED: u64 = 0x5eed_ca11;
const MAX_RECORDED: usize = 16;

/// The four rectangle identities, for `x ∉ A_x` and `y ∉ A_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectangleCase {
    /// `P̄(A_x×A_y) = Φ₁₁(A_x×A_y)`.
    Interior,
    /// `P̄(A_x×{y}) = Φ₁₁(A_x×{y}) + Φ₁₀(A_x×X)`.
    StayY,
    /// `P̄({x}×A_y) = Φ₁₁({x}×A_y) + Φ₀₁(X×A_y)`.
    StayX,
    /// `P̄({x}×{y}) = Φ₁₁({x}×{y}) + Φ₁₀({x}×X) + Φ₀₁(X×{y}) + Φ₀₀(X×X)`.
    StayBoth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleViolation {
    pub case: RectangleCase,
    pub a_x: Vec<usize>,
    pub a_y: Vec<usize>,
    /// `P̄` side minus `Φ` side.
    pub discrepancy: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition3Violation {
    /// `true` for the x-chain identity, `false` for the y-chain one.
    pub x_chain: bool,
    pub expected: Rational,
    pub actual: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CamReport {
    /// Entries where `ΣΦ ≠ Q̄`.
    pub condition1: Vec<(usize, usize)>,
    pub condition2: Vec<RectangleViolation>,
    pub condition2_count: u64,
    pub condition3: Vec<Condition3Violation>,
    /// Negative entries as `(component index, i, j)`.
    pub negative: Vec<(usize, usize, usize)>,
    pub rectangles_checked: u64,
    pub exhaustive: bool,
}

impl CamReport {
    pub fn holds(&self) -> bool {
        self.condition1.is_empty()
            && self.condition2_count == 0
            && self.condition3.is_empty()
            && self.negative.is_empty()
    }

    pub fn condition1_holds(&self) -> bool {
        self.condition1.is_empty()
    }

    pub fn condition2_holds(&self) -> bool {
        self.condition2_count == 0
    }

    pub fn condition3_holds(&self) -> bool {
        self.condition3.is_empty()
    }

    pub fn summary(&self, space: &StateSpace) -> String {
        if let Some(&(i, j)) = self.condition1.first() {
            return format!(
                "condition 1: sum of Phi differs from Qbar at ({},{})",
                space.label(i),
                space.label(j)
            );
        }
        if let Some(v) = self.condition2.first() {
            return format!(
                "condition 2 ({:?}): A_x={} A_y={} off by {}",
                v.case,
                space.format_subset(&v.a_x),
                space.format_subset(&v.a_y),
                format_rational(&v.discrepancy)
            );
        }
        if let Some(v) = self.condition3.first() {
            let chain = if v.x_chain { "x" } else { "y" };
            return format!(
                "condition 3 ({chain} chain): accepted self-proposal mass {} but proposal mass {}",
                format_rational(&v.actual),
                format_rational(&v.expected)
            );
        }
        if let Some(&(k, i, j)) = self.negative.first() {
            let name = ["Phi11", "Phi10", "Phi01", "Phi00"][k];
            return format!("{name} negative at ({},{})", space.label(i), space.label(j));
        }
        "all conditions hold".into()
    }
}

/// Checks conditions 1-3 of a coupled acceptance mechanism at `pair`, with
/// rectangles enumerated per [`RectangleMode::Auto`].
pub fn verify_cam(
    cam: &Cam,
    qbar: &JointDist,
    pbar: &JointDist,
    q: &FiniteKernel,
    pair: (usize, usize),
) -> CamReport {
    verify_cam_with(cam, qbar, pbar, q, pair, RectangleMode::Auto)
}

struct Recorder<'a> {
    report: &'a mut CamReport,
}

impl Recorder<'_> {
    fn record(&mut self, case: RectangleCase, a_x: Vec<usize>, a_y: Vec<usize>, d: &Rational) {
        self.report.condition2_count += 1;
        if self.report.condition2.len() < MAX_RECORDED {
            self.report.condition2.push(RectangleViolation {
                case,
                a_x,
                a_y,
                discrepancy: d.clone(),
            });
        }
    }
}

fn members(universe: &[usize], mask: u64) -> Vec<usize> {
    universe
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &s)| s)
        .collect()
}

/// Walks every subset of `universe` in Gray-code order, keeping a running sum
/// of `values` over the current subset, and calls `visit` on each.
fn gray_subsets(
    universe: &[usize],
    mut add: impl FnMut(&mut Vec<Rational>, usize, bool),
    state: &mut Vec<Rational>,
    mut visit: impl FnMut(u64, &[Rational]),
) {
    let k = universe.len();
    visit(0, state);
    let mut mask = 0u64;
    for step in 1..(1u64 << k) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        add(state, universe[bit], mask >> bit & 1 == 1);
        visit(mask, state);
    }
}

pub fn verify_cam_with(
    cam: &Cam,
    qbar: &JointDist,
    pbar: &JointDist,
    q: &FiniteKernel,
    pair: (usize, usize),
    mode: RectangleMode,
) -> CamReport {
    let (x, y) = pair;
    let n = qbar.n();
    let mut report = CamReport::default();

    for (k, phi) in cam.components().iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if !rational::is_nonnegative(phi.get(i, j)) {
                    report.negative.push((k, i, j));
                }
            }
        }
    }

    let total = cam.total();
    for i in 0..n {
        for j in 0..n {
            if total.get(i, j) != qbar.get(i, j) {
                report.condition1.push((i, j));
            }
        }
    }

    // Condition 3.
    let x_accepted = cam.phi11.x_marginal()[x].clone() + &cam.phi10.x_marginal()[x];
    if &x_accepted != q.get(x, x) {
        report.condition3.push(Condition3Violation {
            x_chain: true,
            expected: q.get(x, x).clone(),
            actual: x_accepted,
        });
    }
    let y_accepted = cam.phi11.y_marginal()[y].clone() + &cam.phi01.y_marginal()[y];
    if &y_accepted != q.get(y, y) {
        report.condition3.push(Condition3Violation {
            x_chain: false,
            expected: q.get(y, y).clone(),
            actual: y_accepted,
        });
    }

    // Condition 2 through the four rectangle cases. Each identity is linear in
    // the rectangle, so it is evaluated on difference matrices.
    let rows_x: Vec<usize> = (0..n).filter(|&i| i != x).collect();
    let cols_y: Vec<usize> = (0..n).filter(|&j| j != y).collect();
    let interior = |i: usize, j: usize| pbar.get(i, j) - cam.phi11.get(i, j);
    let phi10_rows = cam.phi10.x_marginal();
    let phi01_cols = cam.phi01.y_marginal();
    let stay_y: Vec<Rational> = (0..n)
        .map(|i| pbar.get(i, y) - cam.phi11.get(i, y) - &phi10_rows[i])
        .collect();
    let stay_x: Vec<Rational> = (0..n)
        .map(|j| pbar.get(x, j) - cam.phi11.get(x, j) - &phi01_cols[j])
        .collect();
    let stay_both = pbar.get(x, y)
        - cam.phi11.get(x, y)
        - &phi10_rows[x]
        - &phi01_cols[y]
        - cam.phi00.total();

    let exhaustive = match mode {
        RectangleMode::Auto => n <= EXHAUSTIVE_LIMIT,
        RectangleMode::Exhaustive => true,
        RectangleMode::Sampled { .. } => false,
    };
    report.exhaustive = exhaustive;
    let mut checked = 0u64;

    if !stay_both.is_zero() {
        Recorder { report: &mut report }.record(
            RectangleCase::StayBoth,
            vec![x],
            vec![y],
            &stay_both,
        );
    }
    checked += 1;

    if exhaustive {
        let mut rec = Recorder { report: &mut report };
        for (case, vector, universe) in [
            (RectangleCase::StayY, &stay_y, &rows_x),
            (RectangleCase::StayX, &stay_x, &cols_y),
        ] {
            let mut acc = vec![rational::zero()];
            gray_subsets(
                universe,
                |s, e, on| {
                    if on {
                        s[0] += &vector[e]
                    } else {
                        s[0] -= &vector[e]
                    }
                },
                &mut acc,
                |mask, s| {
                    checked += 1;
                    if !s[0].is_zero() {
                        let set = members(universe, mask);
                        match case {
                            RectangleCase::StayY => rec.record(case, set, vec![y], &s[0]),
                            _ => rec.record(case, vec![x], set, &s[0]),
                        }
                    }
                },
            );
        }
        // Interior: outer Gray walk over A_x keeps the column sums over A_x,
        // inner walk over A_y sums those.
        let mut col_sums = vec![rational::zero(); n];
        gray_subsets(
            &rows_x,
            |s, i, on| {
                for &j in &cols_y {
                    let d = interior(i, j);
                    if on {
                        s[j] += d
                    } else {
                        s[j] -= d
                    }
                }
            },
            &mut col_sums,
            |mask_x, sums| {
                let mut acc = vec![rational::zero()];
                gray_subsets(
                    &cols_y,
                    |s, j, on| {
                        if on {
                            s[0] += &sums[j]
                        } else {
                            s[0] -= &sums[j]
                        }
                    },
                    &mut acc,
                    |mask_y, s| {
                        checked += 1;
                        if !s[0].is_zero() {
                            rec.record(
                                RectangleCase::Interior,
                                members(&rows_x, mask_x),
                                members(&cols_y, mask_y),
                                &s[0],
                            );
                        }
                    },
                );
            },
        );
    } else {
        let (count, seed) = match mode {
            RectangleMode::Sampled { count, seed } => (count, seed),
            _ => (SAMPLED_RECTANGLES, SAMPLE_SEED),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rec = Recorder { report: &mut report };
        let random_subset = |universe: &[usize], rng: &mut ChaCha8Rng| -> Vec<usize> {
            if universe.is_empty() {
                return Vec::new();
            }
            let size = rng.random_range(0..=universe.len());
            let mut picked: Vec<usize> = sample(rng, universe.len(), size)
                .into_iter()
                .map(|k| universe[k])
                .collect();
            picked.sort_unstable();
            picked
        };
        for _ in 0..count {
            let a_x = random_subset(&rows_x, &mut rng);
            let a_y = random_subset(&cols_y, &mut rng);
            let mut d = rational::zero();
            for &i in &a_x {
                for &j in &a_y {
                    d += interior(i, j);
                }
            }
            if !d.is_zero() {
                rec.record(RectangleCase::Interior, a_x.clone(), a_y.clone(), &d);
            }
            let dy = a_x.iter().fold(rational::zero(), |acc, &i| acc + &stay_y[i]);
            if !dy.is_zero() {
                rec.record(RectangleCase::StayY, a_x, vec![y], &dy);
            }
            let dx = a_y.iter().fold(rational::zero(), |acc, &j| acc + &stay_x[j]);
            if !dx.is_zero() {
                rec.record(RectangleCase::StayX, vec![x], a_y, &dx);
            }
            checked += 3;
        }
    }
    report.rectangles_checked = checked;
    report
}
