//! Minorization split coupling.
//!
//! When `P(x,·) >= eps·nu` on a small set `C` and both chains are in `C`, a
//! coin with heads probability `eps` sends both chains to one `nu` draw;
//! otherwise each moves by its residual `(P(x,·) - eps·nu) / (1 - eps)`.
//! Outside `C x C` the chains move independently.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mhcoupling::decomposition::{
    build_cam, check_theorem1_conditions, compute_helpers, extract_acceptance_coupling,
    regenerate_pbar, verify_cam, AcceptanceCoupling, Cam, CamReport, Outcome,
};
use mhcoupling::rational::{format_rational, is_nonnegative, one, to_f64, zero};
use mhcoupling::{Dist, FiniteKernel, JointDist, MhProblem, Rational};

use crate::error::{Result, SamplerError};
use crate::finite::JointSampler;
use crate::proposal::{log_normal, mh_step, Proposal};
use crate::simulate::CoupledChain;
use crate::target::Target;

/// Split coupling on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSplitSpec {
    pub epsilon: Rational,
    pub nu: Dist,
    pub small_set: Vec<bool>,
}

impl FiniteSplitSpec {
    /// Whole-space small set.
    pub fn uniform(epsilon: Rational, nu: Dist) -> Self {
        let n = nu.len();
        FiniteSplitSpec {
            epsilon,
            nu,
            small_set: vec![true; n],
        }
    }

    /// Check `P(x, z) >= eps·nu(z)` for every `x` in the small set and every
    /// state `z`.
    pub fn validate(&self, p: &FiniteKernel) -> Result<()> {
        if !(self.epsilon > zero() && self.epsilon <= one()) {
            return Err(SamplerError::Config(format!(
                "epsilon must lie in (0, 1], got {}",
                format_rational(&self.epsilon)
            )));
        }
        let space = p.space();
        for x in (0..p.n()).filter(|&x| self.small_set[x]) {
            for z in 0..p.n() {
                let bound = &self.epsilon * self.nu.mass(z);
                if p.get(x, z) < &bound {
                    return Err(SamplerError::Minorization {
                        x: space.label(x).to_string(),
                        state: space.label(z).to_string(),
                        density: to_f64(p.get(x, z)),
                        bound: to_f64(&bound),
                    });
                }
            }
        }
        Ok(())
    }

    /// `(P(x,·) - eps·nu) / (1 - eps)`; `None` when `eps = 1`.
    pub fn residual(&self, p: &FiniteKernel, x: usize) -> Option<Vec<Rational>> {
        let rest = one() - &self.epsilon;
        if rest == zero() {
            return None;
        }
        Some(
            (0..p.n())
                .map(|z| (p.get(x, z) - &self.epsilon * self.nu.mass(z)) / &rest)
                .collect(),
        )
    }

    fn in_small_set(&self, x: usize, y: usize) -> bool {
        self.small_set[x] && self.small_set[y]
    }
}

/// Exact split transition coupling at `(x, y)`. Inside `C x C` the residuals
/// are combined by their full product, diagonal included; this is the
/// version that has the right marginals on a finite space. Equal states move
/// together.
pub fn split_kernel_coupling(spec: &FiniteSplitSpec, p: &FiniteKernel, pair: (usize, usize)) -> Result<JointDist> {
    spec.validate(p)?;
    let (x, y) = pair;
    let space = p.space().clone();
    if x == y {
        return Ok(JointDist::diagonal(p.row(x).weights(), space));
    }
    if !spec.in_small_set(x, y) {
        return Ok(JointDist::product(p.row(x).weights(), p.row(y).weights(), space));
    }
    let nu: Vec<Rational> = spec.nu.weights().iter().map(|v| v * &spec.epsilon).collect();
    let mut out = JointDist::diagonal(&nu, space.clone());
    if let (Some(rx), Some(ry)) = (spec.residual(p, x), spec.residual(p, y)) {
        let prod = JointDist::product(&rx, &ry, space).scaled(&(one() - &spec.epsilon));
        out = out.plus(&prod)?;
    }
    Ok(out)
}

/// One cell where the product identity `qbar·p11 = (P(x,x') - eps nu(x'))(P(y,y') - eps nu(y'))` is
/// checked.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCell {
    pub cell: (usize, usize),
    pub lhs: Rational,
    pub product: Rational,
}

/// Two-step representation of the split coupling at one pair.
#[derive(Debug, Clone)]
pub struct SplitRepresentation {
    pub pair: (usize, usize),
    pub pbar: JointDist,
    pub cam: Cam,
    pub qbar: JointDist,
    pub acceptance: AcceptanceCoupling,
    pub cam_report: CamReport,
    pub rates_hold: bool,
    pub regenerates: bool,
    /// Cells with `x' != x`, `y' != y`, `x' != y'`.
    pub identity: Vec<IdentityCell>,
    pub epsilon: Rational,
}

impl SplitRepresentation {
    /// `qbar·p11` equals the residual product as displayed, without the
    /// `1/(1 - eps)` factor.
    pub fn literal_identity_holds(&self) -> bool {
        self.identity.iter().all(|c| c.lhs == c.product)
    }

    /// `qbar·p11` equals the residual product divided by `1 - eps`, which is
    /// the split coupling's own mass at those cells.
    pub fn normalized_identity_holds(&self) -> bool {
        let rest = one() - &self.epsilon;
        rest != zero() && self.identity.iter().all(|c| &c.lhs * &rest == c.product)
    }

    pub fn holds(&self) -> bool {
        self.cam_report.holds() && self.rates_hold && self.regenerates
    }
}

/// Decompose the split coupling at `pair` into a proposal coupling and an
/// acceptance coupling, and run every check on the result.
pub fn split_two_step_representation(
    spec: &FiniteSplitSpec,
    problem: &MhProblem,
    pair: (usize, usize),
) -> Result<SplitRepresentation> {
    let (q, p) = (problem.q(), problem.p());
    let pbar = split_kernel_coupling(spec, p, pair)?;
    let helpers = compute_helpers(q, p)?;
    let (cam, qbar) = build_cam(&pbar, &helpers, q, p, pair)?;
    let cam_report = verify_cam(&cam, &qbar, &pbar, q, pair);
    let acceptance = extract_acceptance_coupling(&cam, &qbar);
    let rates_hold = check_theorem1_conditions(&qbar, &acceptance, q, problem.a(), pair)?.holds();
    let regenerates = regenerate_pbar(&qbar, &acceptance, pair)? == pbar;
    let (x, y) = pair;
    let n = problem.n();
    let mut identity = Vec::new();
    for i in (0..n).filter(|&i| i != x) {
        for j in (0..n).filter(|&j| j != y && j != i) {
            let lhs = qbar.get(i, j) * acceptance.prob(i, j, Outcome::Both);
            let product = (p.get(x, i) - &spec.epsilon * spec.nu.mass(i))
                * (p.get(y, j) - &spec.epsilon * spec.nu.mass(j));
            identity.push(IdentityCell { cell: (i, j), lhs, product });
        }
    }
    Ok(SplitRepresentation {
        pair,
        pbar,
        cam,
        qbar,
        acceptance,
        cam_report,
        rates_hold,
        regenerates,
        identity,
        epsilon: spec.epsilon.clone(),
    })
}

/// Finite split chain. Also reports whether the split coin came up heads.
pub struct FiniteSplitChain {
    spec: FiniteSplitSpec,
    epsilon: f64,
    nu: JointSampler,
    p_rows: Vec<JointSampler>,
    residuals: Vec<Option<JointSampler>>,
}

fn row_sampler(row: &[Rational]) -> Result<JointSampler> {
    // A 1 x n joint reuses the weighted sampler; the column is the state.
    let space = mhcoupling::StateSpace::numbered(row.len());
    let mut joint = JointDist::zeros(space);
    for (j, v) in row.iter().enumerate() {
        joint.set(0, j, v.clone());
    }
    Ok(JointSampler::new(&joint))
}

impl FiniteSplitChain {
    pub fn new(spec: FiniteSplitSpec, p: &FiniteKernel) -> Result<Self> {
        spec.validate(p)?;
        let residuals = (0..p.n())
            .map(|x| match spec.residual(p, x) {
                Some(r) if spec.small_set[x] && r.iter().any(|v| v > &zero()) => {
                    debug_assert!(r.iter().all(is_nonnegative));
                    row_sampler(&r).map(Some)
                }
                _ => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(FiniteSplitChain {
            epsilon: to_f64(&spec.epsilon),
            nu: row_sampler(spec.nu.weights())?,
            p_rows: p.rows().iter().map(|d| row_sampler(d.weights())).collect::<Result<_>>()?,
            residuals,
            spec,
        })
    }

    /// Next pair and whether the chains took the shared `nu` draw.
    pub fn step_with_flag<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R) -> (usize, usize, bool) {
        let draw = |s: &JointSampler, rng: &mut R| s.sample(rng).1;
        if x == y {
            let z = draw(&self.p_rows[x], rng);
            return (z, z, false);
        }
        if !self.spec.in_small_set(x, y) {
            return (draw(&self.p_rows[x], rng), draw(&self.p_rows[y], rng), false);
        }
        if rng.random::<f64>() < self.epsilon {
            let z = draw(&self.nu, rng);
            return (z, z, true);
        }
        let rx = self.residuals[x].as_ref().expect("eps < 1 leaves residual mass");
        let ry = self.residuals[y].as_ref().expect("eps < 1 leaves residual mass");
        (draw(rx, rng), draw(ry, rng), false)
    }
}

impl CoupledChain for FiniteSplitChain {
    type State = usize;

    fn step(&self, x: &usize, y: &usize, rng: &mut ChaCha8Rng) -> Result<(usize, usize)> {
        let (a, b, _) = self.step_with_flag(*x, *y, rng);
        Ok((a, b))
    }

    fn pair_key(&self, x: &usize, y: &usize) -> Option<(usize, usize)> {
        Some((*x, *y))
    }
}

pub type SmallSet = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Split coupling for an MH kernel on R^d with Gaussian `nu`.
#[derive(Clone)]
pub struct ContinuousSplitSpec {
    pub epsilon: f64,
    pub nu_mean: Vec<f64>,
    pub nu_sd: f64,
    pub small_set: SmallSet,
}

impl ContinuousSplitSpec {
    pub fn nu_density(&self, z: &[f64]) -> f64 {
        log_normal(z, &self.nu_mean, self.nu_sd).exp()
    }

    /// Smallest ratio `p(x,z) / (eps nu(z))` over grid points, where `p` is
    /// the density of accepted moves. Fails if any ratio is below 1.
    pub fn check_on_grid(
        &self,
        target: &dyn Target,
        proposal: &Proposal,
        xs: &[Vec<f64>],
        zs: &[Vec<f64>],
    ) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for x in xs.iter().filter(|x| (self.small_set)(x)) {
            for z in zs {
                let p = accepted_density(target, proposal, x, z);
                let bound = self.epsilon * self.nu_density(z);
                if p < bound {
                    return Err(minorization_error(x, z, p, bound));
                }
                if bound > 0.0 {
                    worst = worst.min(p / bound);
                }
            }
        }
        Ok(worst)
    }
}

fn minorization_error(x: &[f64], z: &[f64], density: f64, bound: f64) -> SamplerError {
    SamplerError::Minorization {
        x: format!("{x:?}"),
        state: format!("{z:?}"),
        density,
        bound,
    }
}

fn accepted_density(target: &dyn Target, proposal: &Proposal, x: &[f64], z: &[f64]) -> f64 {
    proposal.log_q(target, x, z).exp() * crate::proposal::acceptance_probability(target, proposal, x, z)
}

/// Continuous split chain. Residual draws use rejection from `P(x,·)`: a
/// rejected MH move (the atom at `x`) is always kept, an accepted move to `z`
/// is kept with probability `1 - eps nu(z) / p(x,z)`.
pub struct ContinuousSplitChain<'a> {
    pub target: &'a dyn Target,
    pub proposal: Proposal,
    pub spec: ContinuousSplitSpec,
    pub max_loop: usize,
}

impl<'a> ContinuousSplitChain<'a> {
    pub fn new(target: &'a dyn Target, proposal: Proposal, spec: ContinuousSplitSpec) -> Result<Self> {
        proposal.validate(target)?;
        if !(spec.epsilon > 0.0 && spec.epsilon <= 1.0) {
            return Err(SamplerError::Config(format!("epsilon must lie in (0, 1], got {}", spec.epsilon)));
        }
        Ok(ContinuousSplitChain {
            target,
            proposal,
            spec,
            max_loop: 1_000_000,
        })
    }

    fn residual_draw<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..self.max_loop {
            let s = mh_step(self.target, &self.proposal, x, rng);
            if !s.accepted {
                return Ok(s.state);
            }
            let p = accepted_density(self.target, &self.proposal, x, &s.state);
            let bound = self.spec.epsilon * self.spec.nu_density(&s.state);
            if bound > p {
                return Err(minorization_error(x, &s.state, p, bound));
            }
            if rng.random::<f64>() >= bound / p {
                return Ok(s.state);
            }
        }
        Err(SamplerError::LoopLimit {
            max_loop: self.max_loop,
            detail: format!("residual draw from {x:?}"),
        })
    }

    pub fn step_with_flag<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        y: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>, bool)> {
        if x == y {
            let s = mh_step(self.target, &self.proposal, x, rng);
            return Ok((s.state.clone(), s.state, false));
        }
        if !((self.spec.small_set)(x) && (self.spec.small_set)(y)) {
            let a = mh_step(self.target, &self.proposal, x, rng).state;
            let b = mh_step(self.target, &self.proposal, y, rng).state;
            return Ok((a, b, false));
        }
        if rng.random::<f64>() < self.spec.epsilon {
            let z = crate::proposal::innovation(x.len(), rng);
            let z: Vec<f64> = self.spec.nu_mean.iter().zip(&z).map(|(m, e)| m + self.spec.nu_sd * e).collect();
            return Ok((z.clone(), z, true));
        }
        Ok((self.residual_draw(x, rng)?, self.residual_draw(y, rng)?, false))
    }
}

impl CoupledChain for ContinuousSplitChain<'_> {
    type State = Vec<f64>;

    fn step(&self, x: &Vec<f64>, y: &Vec<f64>, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<f64>)> {
        let (a, b, _) = self.step_with_flag(x, y, rng)?;
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Role};
    use crate::stats::Frequency;
    use crate::target::StandardGaussian;
    use mhcoupling::fixtures;
    use mhcoupling::rational::ratio;
    use mhcoupling::StateSpace;

    fn half_uniform() -> FiniteSplitSpec {
        let nu = Dist::uniform(StateSpace::numbered(2));
        FiniteSplitSpec::uniform(ratio(1, 2), nu)
    }

    #[test]
    fn two_state_split_coupling() {
        let problem = fixtures::two_state();
        let spec = half_uniform();
        assert_eq!(spec.residual(problem.p(), 0).unwrap(), vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(spec.residual(problem.p(), 1).unwrap(), vec![ratio(0, 1), ratio(1, 1)]);
        let pbar = split_kernel_coupling(&spec, problem.p(), (0, 1)).unwrap();
        let expected = JointDist::from_entries(
            StateSpace::numbered(2),
            [((0, 0), ratio(1, 4)), ((1, 1), ratio(1, 2)), ((0, 1), ratio(1, 4))],
        )
        .unwrap();
        assert_eq!(pbar, expected);
    }

    #[test]
    fn two_state_representation_checks() {
        let problem = fixtures::two_state();
        let rep = split_two_step_representation(&half_uniform(), &problem, (0, 1)).unwrap();
        assert!(rep.holds(), "{}", rep.cam_report.summary(problem.space()));
        assert!(rep.literal_identity_holds());
        assert_eq!(rep.identity.len(), 1);
    }

    #[test]
    fn three_state_identity_needs_normalization() {
        let problem = fixtures::three_state_nonmax();
        let p = problem.p();
        // P(1,·) = (1/2,1/2,0) and P(2,·) = (1/2,0,1/2) share only state 1.
        let nu = Dist::point_mass(problem.space().clone(), 0);
        let mut spec = FiniteSplitSpec::uniform(ratio(1, 4), nu);
        spec.small_set = vec![true, true, false];
        spec.validate(p).unwrap_or_else(|e| panic!("{e}"));
        let rep = split_two_step_representation(&spec, &problem, (0, 1)).unwrap();
        assert!(rep.holds());
        assert!(rep.identity.iter().any(|c| c.product != mhcoupling::rational::zero()));
        assert!(!rep.literal_identity_holds());
        assert!(rep.normalized_identity_holds());
    }

    #[test]
    fn violated_minorization_names_the_state() {
        let problem = fixtures::two_state();
        let nu = Dist::point_mass(StateSpace::numbered(2), 0);
        let spec = FiniteSplitSpec::uniform(ratio(1, 2), nu);
        let err = spec.validate(problem.p()).unwrap_err().to_string();
        assert!(err.contains("state 1 from 2"), "{err}");
    }

    #[test]
    fn finite_split_marginals_and_coin() {
        let problem = fixtures::two_state();
        let chain = FiniteSplitChain::new(half_uniform(), problem.p()).unwrap();
        let mut rng = stream(1, 0, Role::Split);
        let n = 100_000u64;
        let (mut heads, mut x1, mut y1) = (0u64, 0u64, 0u64);
        for _ in 0..n {
            let (a, b, h) = chain.step_with_flag(0, 1, &mut rng);
            heads += h as u64;
            x1 += (a == 0) as u64;
            y1 += (b == 0) as u64;
        }
        assert!(Frequency { hits: heads, trials: n }.within(0.5, 4.0));
        assert!(Frequency { hits: x1, trials: n }.within(0.5, 4.0));
        assert!(Frequency { hits: y1, trials: n }.within(0.25, 4.0));
    }

    #[test]
    fn epsilon_one_meets_in_one_step() {
        let s = StateSpace::numbered(2);
        let q = FiniteKernel::new(s.clone(), vec![vec![ratio(1, 2); 2]; 2]).unwrap();
        let problem = MhProblem::new(q, mhcoupling::AcceptanceMatrix::ones(s.clone())).unwrap();
        let spec = FiniteSplitSpec::uniform(ratio(1, 1), Dist::uniform(s));
        let chain = FiniteSplitChain::new(spec, problem.p()).unwrap();
        let mut rng = stream(2, 0, Role::Split);
        for _ in 0..100 {
            let (a, b, _) = chain.step_with_flag(0, 1, &mut rng);
            assert_eq!(a, b);
        }
    }

    fn normal_split(epsilon: f64) -> ContinuousSplitSpec {
        ContinuousSplitSpec {
            epsilon,
            nu_mean: vec![0.0],
            nu_sd: 0.5,
            small_set: Arc::new(|x: &[f64]| x[0].abs() <= 1.0),
        }
    }

    #[test]
    fn continuous_split_meets_at_epsilon() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 1.0 };
        let spec = normal_split(0.2);
        let grid: Vec<Vec<f64>> = (0..=40).map(|k| vec![-1.0 + k as f64 * 0.05]).collect();
        let zs: Vec<Vec<f64>> = (0..=400).map(|k| vec![-8.0 + k as f64 * 0.04]).collect();
        spec.check_on_grid(&t, &p, &grid, &zs).unwrap();
        let chain = ContinuousSplitChain::new(&t, p, spec).unwrap();
        let mut rng = stream(3, 0, Role::Split);
        let n = 20_000u64;
        let met = (0..n)
            .filter(|_| {
                let (a, b, _) = chain.step_with_flag(&[-0.5], &[0.8], &mut rng).unwrap();
                a == b
            })
            .count() as u64;
        assert!(Frequency { hits: met, trials: n }.within(0.2, 4.0));
    }

    #[test]
    fn too_large_epsilon_fails_grid_check() {
        let t = StandardGaussian { d: 1 };
        let p = Proposal::Rwm { sigma: 1.0 };
        let grid: Vec<Vec<f64>> = vec![vec![1.0]];
        let zs: Vec<Vec<f64>> = (0..=100).map(|k| vec![-4.0 + k as f64 * 0.08]).collect();
        assert!(normal_split(0.9).check_on_grid(&t, &p, &grid, &zs).is_err());
    }
}
