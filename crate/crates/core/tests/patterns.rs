mod common;

use common::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use symverify::patterns::{log_likelihood, PatternMeta};
use symverify::{
    collapse, collapse_distinguishable, infer_sign, mixture_pattern, pattern_distance,
    pure_pattern, DetectionPattern, Error, PatternKind, PositionGrid, SignVerdict, Species,
    Statistics, TwoParticleState,
};

/// Normalized `|to_position(h)|^2` over the array.
fn survivor_density(st: &TwoParticleState, r: f64, arr: &PositionGrid) -> Vec<f64> {
    let out = collapse(st, r).unwrap();
    let d = out.h.to_position(arr).density();
    let z: f64 = d.iter().sum::<f64>() * arr.step();
    d.into_iter().map(|x| x / z).collect()
}

fn all_fixtures() -> Vec<(TwoParticleState, f64, PositionGrid)> {
    let mut v = vec![];
    for stats in [Statistics::Boson, Statistics::Fermion] {
        for r in [-1.0, 0.0, FIXTURE_R, 1.3] {
            v.push((fixture(stats), r, array()));
        }
        v.push((nodal_fixture(stats), 0.0, array()));
        v.push((nodal_fixture(stats), 0.7, array()));
        v.push((disjoint_fixture(stats), 0.0, disjoint_array()));
    }
    v
}

#[test]
fn pure_pattern_is_survivor_density() {
    for (st, r, arr) in all_fixtures() {
        let out = collapse(&st, r).unwrap();
        let pat = pure_pattern(&out, &arr).unwrap();
        let want = survivor_density(&st, r, &arr);
        for (a, b) in pat.density().iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{:?} R={r}: {a} vs {b}", st.stats());
        }
        assert!((pat.integral() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn pure_pattern_direct_evaluation() {
    // |alpha_f psi_g(r) + s alpha_g psi_f(r)|^2 from the oracle transform
    let arr = array();
    for stats in [Statistics::Boson, Statistics::Fermion] {
        let st = fixture(stats);
        let s = stats.sign().unwrap().value();
        let (af, ag) = (psi(st.f(), FIXTURE_R), psi(st.g(), FIXTURE_R));
        let w: Vec<f64> = arr
            .points()
            .map(|r| (af * psi(st.g(), r) + s * ag * psi(st.f(), r)).norm_sqr())
            .collect();
        let z: f64 = w.iter().sum::<f64>() * arr.step();
        let pat = pure_pattern(&collapse(&st, FIXTURE_R).unwrap(), &arr).unwrap();
        for (a, b) in pat.density().iter().zip(&w) {
            assert!((a - b / z).abs() < 1e-10);
        }
    }
}

#[test]
fn mixture_matches_monte_carlo() {
    // draw the branch with weight |psi_f(R)|^2 : |psi_g(R)|^2, then a position
    // from the surviving mode's density
    let st = fixture(Statistics::Distinguishable);
    let arr = array();
    let (wf, wg) = (psi(st.f(), FIXTURE_R).norm_sqr(), psi(st.g(), FIXTURE_R).norm_sqr());
    let rho = |m: &symverify::ModeDistribution| -> Vec<f64> {
        arr.points().map(|r| psi(m, r).norm_sqr()).collect()
    };
    let (rho_f, rho_g) = (rho(st.f()), rho(st.g()));
    let mut rng = rng(2024);
    let mut counts = vec![0u64; arr.len()];
    let n = 1_000_000;
    for _ in 0..n {
        let j = if draw(&[wf, wg], &mut rng) == 0 { draw(&rho_g, &mut rng) } else { draw(&rho_f, &mut rng) };
        counts[j] += 1;
    }
    let model = mixture_pattern(st.f(), st.g(), FIXTURE_R, &arr).unwrap();
    let emp = DetectionPattern::from_counts(arr, counts.clone(), PatternMeta::default()).unwrap();
    let tv = pattern_distance(&emp, &model).unwrap();
    assert!(tv < 0.01, "tv {tv}");
    assert!(chi2_p(&counts, &model.probabilities()) > 1e-4);
}

#[test]
fn mixture_of_identical_modes_is_that_density() {
    let st = fixture(Statistics::Distinguishable);
    let arr = array();
    let m = mixture_pattern(st.f(), st.f(), 0.3, &arr).unwrap();
    let d = st.f().to_position(&arr).density();
    let z: f64 = d.iter().sum::<f64>() * arr.step();
    for (a, b) in m.density().iter().zip(&d) {
        assert!((a - b / z).abs() < 1e-12);
    }
}

#[test]
fn distinguishable_collapse_pattern_is_one_mixture_branch() {
    let st = fixture(Statistics::Distinguishable);
    let arr = array();
    let a = pure_pattern(&collapse_distinguishable(&st, FIXTURE_R, Species::A).unwrap(), &arr).unwrap();
    let d = st.g().to_position(&arr).density();
    let z: f64 = d.iter().sum::<f64>() * arr.step();
    for (x, y) in a.density().iter().zip(&d) {
        assert!((x - y / z).abs() < 1e-12);
    }
}

#[test]
fn fixture_separation_regression() {
    let st = fixture(Statistics::Boson);
    let pure = pure_pattern(&collapse(&st, FIXTURE_R).unwrap(), &array()).unwrap();
    let mix = mixture_pattern(st.f(), st.g(), FIXTURE_R, &array()).unwrap();
    let tv = pattern_distance(&pure, &mix).unwrap();
    assert!((tv - FROZEN_TV).abs() < 1e-12, "{tv}");
}

const FROZEN_TV: f64 = 0.33546542749978386;

#[test]
fn pattern_kinds_and_metadata() {
    let st = fixture(Statistics::Fermion);
    let pure = pure_pattern(&collapse(&st, FIXTURE_R).unwrap(), &array()).unwrap();
    let mix = mixture_pattern(st.f(), st.g(), FIXTURE_R, &array()).unwrap();
    assert_eq!(pure.kind(), PatternKind::PureModel);
    assert_eq!(mix.kind(), PatternKind::MixtureModel);
    assert_eq!(pure.meta().r_detect, Some(FIXTURE_R));
    assert!(!pure.meta().truncated);
}

#[test]
fn distance_rejects_grid_mismatch() {
    let st = fixture(Statistics::Boson);
    let a = mixture_pattern(st.f(), st.g(), 0.0, &array()).unwrap();
    let b = mixture_pattern(st.f(), st.g(), 0.0, &region()).unwrap();
    assert!(matches!(pattern_distance(&a, &b), Err(Error::GridMismatch)));
}

fn sample(model: &DetectionPattern, n: usize, seed: u64) -> DetectionPattern {
    let mut rng = rng(seed);
    let probs = model.probabilities();
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        counts[draw(&probs, &mut rng)] += 1;
    }
    DetectionPattern::from_counts(*model.grid(), counts, PatternMeta::default()).unwrap()
}

#[test]
fn sign_inference_recovers_generating_sign() {
    for (stats, want) in [(Statistics::Boson, SignVerdict::Plus), (Statistics::Fermion, SignVerdict::Minus)] {
        let st = fixture(stats);
        let model = pure_pattern(&collapse(&st, FIXTURE_R).unwrap(), &array()).unwrap();
        for seed in 0..5 {
            let emp = sample(&model, 10_000, seed);
            let inf = infer_sign(&emp, st.f(), st.g(), FIXTURE_R, 3.0).unwrap();
            assert_eq!(inf.verdict, want, "seed {seed}: gap {}", inf.gap);
            assert!((inf.gap - (inf.ll_plus - inf.ll_minus)).abs() < 1e-9);
            assert!((log_likelihood(emp.counts().unwrap(), &model) - if want == SignVerdict::Plus { inf.ll_plus } else { inf.ll_minus }).abs() < 1e-9);
        }
    }
}

#[test]
fn sign_inference_guards() {
    let st = disjoint_fixture(Statistics::Boson);
    let model = pure_pattern(&collapse(&st, 0.0).unwrap(), &disjoint_array()).unwrap();
    let emp = sample(&model, 10_000, 1);
    assert!(matches!(infer_sign(&emp, st.f(), st.g(), 0.0, 3.0), Err(Error::ModelDegenerate { .. })));

    let st = fixture(Statistics::Boson);
    let model = pure_pattern(&collapse(&st, FIXTURE_R).unwrap(), &array()).unwrap();
    let few = sample(&model, 50, 1);
    assert!(matches!(infer_sign(&few, st.f(), st.g(), FIXTURE_R, 3.0), Err(Error::InvalidInput(_))));
}

fn random_pattern(ws: Vec<f64>) -> DetectionPattern {
    let grid = PositionGrid::new(-1.0, 1.0, ws.len()).unwrap();
    DetectionPattern::from_weights(grid, ws, PatternKind::PureModel, PatternMeta::default()).unwrap()
}

proptest! {
    #[test]
    fn tv_is_a_metric(
        a in prop::collection::vec(0.01..1.0f64, 12),
        b in prop::collection::vec(0.01..1.0f64, 12),
        c in prop::collection::vec(0.01..1.0f64, 12),
    ) {
        let (a, b, c) = (random_pattern(a), random_pattern(b), random_pattern(c));
        let ab = pattern_distance(&a, &b).unwrap();
        prop_assert!(pattern_distance(&a, &a).unwrap() == 0.0);
        prop_assert!((ab - pattern_distance(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!(ab <= pattern_distance(&a, &c).unwrap() + pattern_distance(&c, &b).unwrap() + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn emitted_patterns_integrate_to_one(r in -2.0..2.0f64, boson in any::<bool>()) {
        let stats = if boson { Statistics::Boson } else { Statistics::Fermion };
        let st = fixture(stats);
        let pure = pure_pattern(&collapse(&st, r).unwrap(), &array()).unwrap();
        let mix = mixture_pattern(st.f(), st.g(), r, &array()).unwrap();
        prop_assert!((pure.integral() - 1.0).abs() < 1e-9);
        prop_assert!((mix.integral() - 1.0).abs() < 1e-9);
        prop_assert!(pure.density().iter().chain(mix.density()).all(|d| *d >= 0.0));
    }

    #[test]
    fn global_phase_does_not_change_patterns(phase in 0.0..std::f64::consts::TAU, r in -2.0..2.0f64) {
        let st = fixture(Statistics::Boson);
        let rot = symverify::ModeDistribution::superpose(&[(C64::from_polar(1.0, phase), st.g())]).unwrap();
        let st2 = TwoParticleState::new(st.f().clone(), rot, Statistics::Boson).unwrap();
        let a = pure_pattern(&collapse(&st, r).unwrap(), &array()).unwrap();
        let b = pure_pattern(&collapse(&st2, r).unwrap(), &array()).unwrap();
        prop_assert!(pattern_distance(&a, &b).unwrap() < 1e-12);
    }
}

#[test]
fn disjoint_packets_make_hypotheses_coincide() {
    for stats in [Statistics::Boson, Statistics::Fermion] {
        let st = disjoint_fixture(stats);
        let arr = disjoint_array();
        let pure = pure_pattern(&collapse(&st, 0.0).unwrap(), &arr).unwrap();
        let mix = mixture_pattern(st.f(), st.g(), 0.0, &arr).unwrap();
        assert!(pattern_distance(&pure, &mix).unwrap() < 1e-8);
    }
}

#[test]
fn disjoint_supports_are_maximally_distant() {
    let grid = PositionGrid::new(0.0, 1.0, 10).unwrap();
    let mk = |ws: Vec<f64>| DetectionPattern::from_weights(grid, ws, PatternKind::PureModel, PatternMeta::default()).unwrap();
    let a = mk(vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let b = mk(vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0]);
    assert!((pattern_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn mixture_at_node_of_g_is_g_density() {
    let st = nodal_fixture(Statistics::Boson);
    let arr = array();
    let mix = mixture_pattern(st.f(), st.g(), 0.0, &arr).unwrap();
    let pure = pure_pattern(&collapse(&st, 0.0).unwrap(), &arr).unwrap();
    let d = st.g().to_position(&arr).density();
    let z: f64 = d.iter().sum::<f64>() * arr.step();
    for ((m, p), g) in mix.density().iter().zip(pure.density()).zip(&d) {
        assert!((m - g / z).abs() < 1e-12);
        assert!((p - g / z).abs() < 1e-9);
    }
}

#[test]
fn equal_weights_average_the_densities() {
    // |psi_f(0)| = |psi_g(0)| for mirror-image momenta
    let st = fixture(Statistics::Distinguishable);
    let arr = array();
    let mix = mixture_pattern(st.f(), st.g(), 0.0, &arr).unwrap();
    let norm = |v: Vec<f64>| {
        let z: f64 = v.iter().sum::<f64>() * arr.step();
        v.into_iter().map(|x| x / z).collect::<Vec<_>>()
    };
    let (rf, rg) = (norm(st.f().to_position(&arr).density()), norm(st.g().to_position(&arr).density()));
    for ((m, a), b) in mix.density().iter().zip(&rf).zip(&rg) {
        assert!((m - 0.5 * (a + b)).abs() < 1e-12);
    }
}
