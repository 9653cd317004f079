use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fixtures;
use crate::kernel::AcceptanceMatrix;
use crate::measure::is_maximal_coupling;
use crate::random::{random_problem, RandomProblemOptions};
use crate::rational::{int, ratio, zero};

fn joint(n: usize, entries: &[((usize, usize), (i64, i64))]) -> JointDist {
    JointDist::from_entries(
        StateSpace::numbered(n),
        entries.iter().map(|&(k, (a, b))| (k, ratio(a, b))),
    )
    .unwrap()
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |m| (0..n).filter(|k| m >> k & 1 == 1).collect())
}

#[test]
fn two_state_helpers() {
    let problem = fixtures::two_state();
    let h = compute_helpers(problem.q(), problem.p()).unwrap();
    assert_eq!(h.alpha0[1].weights(), &[ratio(1, 4), zero()]);
    assert_eq!(h.alpha1[1].weights(), &[ratio(1, 4), ratio(1, 2)]);
    assert_eq!(h.mu[1].weights(), &[int(1), zero()]);
    assert_eq!(h.beta, vec![int(1), ratio(2, 3)]);
    // Nothing is rejected from state 1.
    assert!(h.alpha0_total(0).is_zero());
    assert_eq!(h.mu[0].weights(), &[int(1), zero()]);
}

#[test]
fn helpers_without_rejection() {
    let problem = fixtures::three_state_nonmax();
    let a = AcceptanceMatrix::ones(problem.space().clone());
    let p = crate::kernel::generate_p(problem.q(), &a).unwrap();
    let h = compute_helpers(problem.q(), &p).unwrap();
    for x in 0..3 {
        assert!(h.alpha0_total(x).is_zero());
        assert_eq!(h.alpha1[x].weights(), problem.q().row(x).weights());
        assert_eq!(h.mu[x], Dist::point_mass(problem.space().clone(), x));
        assert_eq!(h.beta[x], int(1));
    }
}

#[test]
fn undominated_kernel_is_rejected() {
    let two = fixtures::two_state();
    // Swapping roles: Q = P(2,·) rows cannot generate P.
    let err = compute_helpers(two.p(), two.q()).unwrap_err();
    assert!(matches!(err, CoreError::NotDominated { .. }), "{err}");
}

#[test]
fn helper_identity_over_all_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let problem = random_problem(&mut rng, &RandomProblemOptions::new(4));
        let h = compute_helpers(problem.q(), problem.p()).unwrap();
        for x in 0..4 {
            let rejected = h.alpha0_total(x);
            for set in subsets(4) {
                let lhs = problem.q().row(x).mass_of(&set);
                let rhs = h.alpha1[x].mass_of(&set) + h.mu[x].mass_of(&set) * &rejected;
                assert_eq!(lhs, rhs);
                if set.contains(&x) {
                    assert_eq!(problem.q().get(x, x), &(problem.p().get(x, x) * &h.beta[x]));
                }
            }
        }
    }
}

#[test]
fn two_state_cam() {
    let problem = fixtures::two_state();
    let h = compute_helpers(problem.q(), problem.p()).unwrap();
    let (cam, qbar) =
        build_cam(&fixtures::two_state_pbar(), &h, problem.q(), problem.p(), (0, 1)).unwrap();
    assert_eq!(
        cam.phi11,
        joint(2, &[((1, 0), (1, 4)), ((0, 1), (1, 3)), ((1, 1), (1, 6))])
    );
    assert_eq!(cam.phi10, joint(2, &[((0, 0), (1, 6)), ((1, 0), (1, 12))]));
    assert!(cam.phi01.is_zero());
    assert!(cam.phi00.is_zero());
    assert_eq!(
        qbar,
        joint(2, &[((0, 0), (1, 6)), ((1, 0), (1, 3)), ((0, 1), (1, 3)), ((1, 1), (1, 6))])
    );
}

#[test]
fn all_accept_cam_is_identity() {
    let problem = fixtures::three_state_nonmax();
    let a = AcceptanceMatrix::ones(problem.space().clone());
    let problem = crate::kernel::MhProblem::new(problem.q().clone(), a).unwrap();
    let pbar = sample_frechet_coupling(problem.p(), (0, 1), 3);
    let h = compute_helpers(problem.q(), problem.p()).unwrap();
    let (cam, qbar) = build_cam(&pbar, &h, problem.q(), problem.p(), (0, 1)).unwrap();
    assert_eq!(cam.phi11, pbar);
    assert_eq!(qbar, pbar);
    let b = extract_acceptance_coupling(&cam, &qbar);
    for (i, j) in qbar.support() {
        assert_eq!(b.prob(i, j, Outcome::Both), &int(1));
    }
}

/// The family of mechanisms relating the uniform proposal coupling to the
/// non-maximal two-state coupling, parametrised as `(a, b, c, d, e)`.
fn two_state_family(a: Rational, b: Rational, c: Rational, d: Rational, e: Rational) -> Cam {
    let s = StateSpace::numbered(2);
    let q4 = ratio(1, 4);
    let mut cam = Cam::zeros(s, (0, 1));
    cam.phi11.set(1, 0, q4.clone());
    cam.phi11.set(0, 1, a.clone());
    cam.phi11.set(1, 1, b.clone());
    cam.phi10.set(0, 0, d.clone());
    cam.phi10.set(0, 1, c.clone());
    cam.phi10.set(1, 1, &q4 - &b);
    cam.phi01.set(0, 1, e.clone());
    cam.phi00.set(0, 0, &q4 - &d);
    cam.phi00.set(0, 1, q4 - a - c - e);
    cam
}

#[test]
fn two_state_family_condition3_is_independent() {
    let problem = fixtures::two_state();
    let qbar = fixtures::two_state_uniform_qbar();
    let pbar = fixtures::two_state_pbar();
    let q4 = ratio(1, 4);
    // a + c + d = 1/4, not 1/2.
    let cam = two_state_family(zero(), q4.clone(), zero(), q4.clone(), zero());
    let report = verify_cam(&cam, &qbar, &pbar, problem.q(), (0, 1));
    assert!(report.condition1_holds());
    assert!(report.condition2_holds());
    assert!(!report.condition3_holds());
    assert!(report.exhaustive);
}

#[test]
fn two_state_family_has_one_member_passing_all_conditions() {
    // Every member satisfies conditions 1-2; condition 3 together with
    // non-negativity pins a = b = d = 1/4 and c = e = 0.
    let problem = fixtures::two_state();
    let qbar = fixtures::two_state_uniform_qbar();
    let pbar = fixtures::two_state_pbar();
    let grid: Vec<Rational> = (0..=4).map(|k| ratio(k, 16)).collect();
    let mut passing = Vec::new();
    let mut conditions12 = 0;
    for a in &grid {
        for b in &grid {
            for c in &grid {
                for d in &grid {
                    for e in &grid {
                        let cam =
                            two_state_family(a.clone(), b.clone(), c.clone(), d.clone(), e.clone());
                        let r = verify_cam(&cam, &qbar, &pbar, problem.q(), (0, 1));
                        if !r.negative.is_empty() {
                            continue;
                        }
                        assert!(r.condition1_holds() && r.condition2_holds());
                        conditions12 += 1;
                        if r.holds() {
                            passing.push((a.clone(), b.clone(), c.clone(), d.clone(), e.clone()));
                        }
                    }
                }
            }
        }
    }
    assert!(conditions12 > 1);
    let q4 = ratio(1, 4);
    assert_eq!(passing, vec![(q4.clone(), q4.clone(), zero(), q4, zero())]);
}

#[test]
fn mechanisms_are_not_unique() {
    let problem = fixtures::four_state_resampling();
    let (q, p) = (problem.q(), problem.p());
    let pbar = JointDist::product(p.row(0).weights(), p.row(1).weights(), problem.space().clone());
    let h = compute_helpers(q, p).unwrap();
    let (cam, qbar) = build_cam(&pbar, &h, q, p, (0, 1)).unwrap();
    assert!(verify_cam(&cam, &qbar, &pbar, q, (0, 1)).holds());

    // Search for a second mechanism: shift t of Φ₁₀ mass from (i,j) to
    // (i,j2) and compensate Φ₀₀ so the proposal coupling is unchanged.
    let n = 4;
    let mut found = None;
    'outer: for i in 0..n {
        for j in 0..n {
            for j2 in 0..n {
                if j == j2 {
                    continue;
                }
                let t = crate::rational::min(cam.phi10.get(i, j), cam.phi00.get(i, j2));
                if t.is_zero() {
                    continue;
                }
                let mut other = cam.clone();
                other.phi10.add_at(i, j, &-t.clone());
                other.phi10.add_at(i, j2, &t);
                other.phi00.add_at(i, j, &t);
                other.phi00.add_at(i, j2, &-t.clone());
                if verify_cam(&other, &qbar, &pbar, q, (0, 1)).holds() {
                    found = Some(other);
                    break 'outer;
                }
            }
        }
    }
    let other = found.expect("a second mechanism exists");
    assert_ne!(other, cam);
}

#[test]
fn zero_mechanism_fails_condition1() {
    let problem = fixtures::two_state();
    let cam = Cam::zeros(problem.space().clone(), (0, 1));
    let report = verify_cam(
        &cam,
        &fixtures::two_state_uniform_qbar(),
        &fixtures::two_state_pbar(),
        problem.q(),
        (0, 1),
    );
    assert!(!report.condition1_holds());
    assert!(!report.holds());
}

#[test]
fn sampled_rectangles_agree_with_exhaustive() {
    let problem = fixtures::four_state_resampling();
    let (q, p) = (problem.q(), problem.p());
    let pbar = JointDist::product(p.row(0).weights(), p.row(1).weights(), problem.space().clone());
    let h = compute_helpers(q, p).unwrap();
    let (mut cam, qbar) = build_cam(&pbar, &h, q, p, (0, 1)).unwrap();
    let sampled = RectangleMode::Sampled { count: 64, seed: 1 };
    let ok = verify_cam_with(&cam, &qbar, &pbar, problem.q(), (0, 1), sampled);
    assert!(ok.holds() && !ok.exhaustive);
    // Moving Φ₁₁ mass into Φ₁₀ at an interior point breaks condition 2.
    let (i, j) = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .find(|&(i, j)| i != 0 && j != 1 && !cam.phi11.get(i, j).is_zero())
        .expect("interior mass");
    let t = cam.phi11.get(i, j).clone();
    cam.phi11.set(i, j, zero());
    cam.phi10.add_at(i, j, &t);
    let exhaustive = verify_cam_with(&cam, &qbar, &pbar, problem.q(), (0, 1), RectangleMode::Exhaustive);
    assert!(exhaustive.condition1_holds());
    assert!(!exhaustive.condition2_holds());
    let sampled = verify_cam_with(&cam, &qbar, &pbar, problem.q(), (0, 1), sampled);
    assert!(!sampled.condition2_holds());
}

#[test]
fn two_state_acceptance_tables() {
    let problem = fixtures::two_state();
    let h = compute_helpers(problem.q(), problem.p()).unwrap();
    let pbar = fixtures::two_state_pbar();
    let (cam, qbar) = build_cam(&pbar, &h, problem.q(), problem.p(), (0, 1)).unwrap();
    let b = extract_acceptance_coupling(&cam, &qbar);
    assert_eq!(
        b.table(Outcome::Both),
        joint(2, &[((1, 0), (3, 4)), ((0, 1), (1, 1)), ((1, 1), (1, 1))])
    );
    assert_eq!(b.table(Outcome::OnlyX), joint(2, &[((0, 0), (1, 1)), ((1, 0), (1, 4))]));
    assert!(b.table(Outcome::OnlyY).is_zero());
    assert!(b.table(Outcome::Neither).is_zero());
    assert_eq!(regenerate_pbar(&qbar, &b, (0, 1)).unwrap(), pbar);
    assert!(check_theorem1_conditions(&qbar, &b, problem.q(), problem.a(), (0, 1))
        .unwrap()
        .holds());
}

#[test]
fn all_reject_regenerates_to_current_pair() {
    let problem = fixtures::two_state();
    let s = problem.space().clone();
    let b = AcceptanceCoupling::from_fn(s, (0, 1), |_, _| [zero(), zero(), zero(), int(1)]).unwrap();
    let out = regenerate_pbar(&fixtures::two_state_uniform_qbar(), &b, (0, 1)).unwrap();
    assert_eq!(out, joint(2, &[((0, 1), (1, 1))]));
}

#[test]
fn off_support_entries_are_flagged() {
    let problem = fixtures::three_state_nonmax();
    let (q, p) = (problem.q(), problem.p());
    let pbar = crate::measure::build_maximal_coupling(
        p.row(0),
        p.row(1),
        &crate::measure::ResidualStrategy::Product,
    )
    .unwrap();
    let h = compute_helpers(q, p).unwrap();
    let (cam, qbar) = build_cam(&pbar, &h, q, p, (0, 1)).unwrap();
    let b = extract_acceptance_coupling(&cam, &qbar);
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(b.is_off_support(i, j), qbar.get(i, j).is_zero());
            if b.is_off_support(i, j) {
                assert_eq!(b.probs(i, j), &[int(1), zero(), zero(), zero()]);
            }
        }
    }
}

#[test]
fn corrupted_acceptance_is_named() {
    let problem = fixtures::two_state();
    let h = compute_helpers(problem.q(), problem.p()).unwrap();
    let (cam, qbar) =
        build_cam(&fixtures::two_state_pbar(), &h, problem.q(), problem.p(), (0, 1)).unwrap();
    let mut b = extract_acceptance_coupling(&cam, &qbar);
    b.set(1, 0, [ratio(1, 2), ratio(1, 2), zero(), zero()]);
    let report = check_theorem1_conditions(&qbar, &b, problem.q(), problem.a(), (0, 1)).unwrap();
    assert!(!report.holds());
    // Proposal (x'=2) from x: mass moved between outcomes 11/10 keeps b_x, so
    // the y chain is the one that breaks at y'=1.
    let v = &report.violations[0];
    assert!(!v.x_chain);
    assert_eq!(v.proposal, 0);
}

#[test]
fn independent_and_common_uniform_rates_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let problem = random_problem(&mut rng, &RandomProblemOptions::new(4));
        let (q, a) = (problem.q(), problem.a());
        let qbar = JointDist::product(q.row(0).weights(), q.row(2).weights(), problem.space().clone());
        for b in [AcceptanceCoupling::independent(a, (0, 2)), AcceptanceCoupling::common_uniform(a, (0, 2))] {
            assert!(check_theorem1_conditions(&qbar, &b, q, a, (0, 2)).unwrap().holds());
            let pbar = regenerate_pbar(&qbar, &b, (0, 2)).unwrap();
            assert!(crate::measure::check_coupling(&pbar, problem.p().row(0), problem.p().row(2)).holds());
        }
    }
}

#[test]
fn frechet_zero_perturbation_is_independent() {
    let problem = fixtures::two_state();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let opts = FrechetOptions {
        perturbations: 0,
        ..FrechetOptions::default()
    };
    let p = problem.p();
    let g = sample_frechet_coupling_with(p.row(0), p.row(1), &opts, &mut rng);
    assert_eq!(g, JointDist::product(p.row(0).weights(), p.row(1).weights(), problem.space().clone()));
}

#[test]
fn frechet_two_state_family_shape() {
    // Couplings of (1/2,1/2) and (1/4,3/4) are a one-parameter family:
    // (1,1) = 1/4 - λ, (2,1) = λ, (1,2) = 1/4 + λ, (2,2) = 1/2 - λ.
    let problem = fixtures::two_state();
    for seed in 0..200 {
        let g = sample_frechet_coupling(problem.p(), (0, 1), seed);
        let lambda = g.get(1, 0).clone();
        assert!(lambda >= zero() && lambda <= ratio(1, 4));
        assert_eq!(g.get(0, 0), &(ratio(1, 4) - &lambda));
        assert_eq!(g.get(0, 1), &(ratio(1, 4) + &lambda));
        assert_eq!(g.get(1, 1), &(ratio(1, 2) - &lambda));
    }
}

#[test]
fn specialization_matches_general_construction() {
    let problem = fixtures::three_state_nonmax();
    let (q, p) = (problem.q(), problem.p());
    for x in 0..3 {
        for y in 0..3 {
            for seed in 0..5 {
                let pbar = sample_frechet_coupling(p, (x, y), seed);
                let m = discrete_specialization(&pbar, q, p, (x, y)).unwrap();
                let qbar = m.qbar();
                assert_eq!(qbar.x_marginal(), q.row(x).weights());
                assert_eq!(qbar.y_marginal(), q.row(y).weights());
            }
        }
    }
}

#[test]
fn specialization_rejects_lazy_proposals() {
    let problem = fixtures::two_state();
    let err = discrete_specialization(&fixtures::two_state_pbar(), problem.q(), problem.p(), (0, 1))
        .unwrap_err();
    assert!(matches!(err, CoreError::LazyProposal(_)));
}

#[test]
fn resampling_fixture_loses_diagonal_mass() {
    let problem = fixtures::four_state_resampling();
    let (q, p) = (problem.q(), problem.p());
    let qm = fixtures::four_state_maximal_qbar();
    assert!(is_maximal_coupling(&qm, q.row(0), q.row(1)).unwrap().maximal);
    let bm = fixtures::four_state_maximal_acceptance();
    assert!(check_theorem1_conditions(&qm, &bm, q, problem.a(), (0, 1)).unwrap().holds());
    let pbar = regenerate_pbar(&qm, &bm, (0, 1)).unwrap();
    assert!(is_maximal_coupling(&pbar, p.row(0), p.row(1)).unwrap().maximal);

    let (qbar, b) = algorithm1_resampled_qbar(&qm, &bm, (0, 1)).unwrap();
    assert_eq!(qbar.diagonal_mass(), ratio(9, 16));
    assert!(!is_maximal_coupling(&qbar, q.row(0), q.row(1)).unwrap().maximal);
    assert_eq!(regenerate_pbar(&qbar, &b, (0, 1)).unwrap(), pbar);
}

#[test]
fn resampling_all_accept_is_identity() {
    let problem = fixtures::four_state_resampling();
    let qm = fixtures::four_state_maximal_qbar();
    let bm = AcceptanceCoupling::all_accept(problem.space().clone(), (0, 1));
    let (qbar, _) = algorithm1_resampled_qbar(&qm, &bm, (0, 1)).unwrap();
    assert_eq!(qbar, qm);
}

fn round_trip(problem: &crate::kernel::MhProblem, pbar: &JointDist, pair: (usize, usize)) {
    let h = compute_helpers(problem.q(), problem.p()).unwrap();
    let (cam, qbar) = build_cam(pbar, &h, problem.q(), problem.p(), pair).unwrap();
    let b = extract_acceptance_coupling(&cam, &qbar);
    assert!(check_theorem1_conditions(&qbar, &b, problem.q(), problem.a(), pair)
        .unwrap()
        .holds());
    assert_eq!(&regenerate_pbar(&qbar, &b, pair).unwrap(), pbar);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_on_random_problems(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, &RandomProblemOptions::new(n));
        let opts = FrechetOptions { start: FrechetStart::Mixed, ..FrechetOptions::default() };
        for x in 0..n {
            for y in 0..n {
                let p = problem.p();
                let pbar = sample_frechet_coupling_with(p.row(x), p.row(y), &opts, &mut rng);
                prop_assert!(crate::measure::check_coupling(&pbar, p.row(x), p.row(y)).holds());
                round_trip(&problem, &pbar, (x, y));
            }
        }
    }

    #[test]
    fn resampling_keeps_regeneration(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, &RandomProblemOptions::new(n));
        let (q, p) = (problem.q(), problem.p());
        let pbar = sample_frechet_coupling(p, (0, 1), seed);
        let h = compute_helpers(q, p).unwrap();
        let (cam, qm) = build_cam(&pbar, &h, q, p, (0, 1)).unwrap();
        let bm = extract_acceptance_coupling(&cam, &qm);
        let (qbar, b) = algorithm1_resampled_qbar(&qm, &bm, (0, 1)).unwrap();
        prop_assert!(crate::measure::check_coupling(&qbar, q.row(0), q.row(1)).holds());
        prop_assert_eq!(regenerate_pbar(&qbar, &b, (0, 1)).unwrap(), pbar);
    }
}
