//! End-to-end checks that chain scene, measurement, simulation and inference.

use std::f64::consts::PI;

use rand::SeedableRng;
use superres_core::inference::{
    calibrate_threshold, estimate_ln_beta, exact_error_rates, simulate_type_i, CountsPosterior, FourierPosterior,
};
use superres_core::measurement::{equal_brightness_probs, hypothesis_outcomes, Interferometer};
use superres_core::scene::{optimal_alpha, Baseline, Scene};
use superres_core::simulate::{simulate_events, stream_rng, Outcome};

const LAMBDA: f64 = 848.2e-9;

#[test]
fn streamed_and_batch_posteriors_agree_on_simulated_events() {
    let (phi, r) = (0.9, 0.97);
    let dist = equal_brightness_probs(phi, r).unwrap();
    let events = simulate_events(&dist, 1500, 11);
    let mut fourier = FourierPosterior::new();
    for &o in events.outcomes() {
        fourier.update(o, r).unwrap();
    }
    let batch = CountsPosterior::new(events.signal_counts(), r).unwrap();
    let (a, b) = (fourier.map_phase().unwrap(), batch.map_phase().unwrap());
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    assert!((b - phi).abs() < 0.1);
    let n_a = events.outcomes().iter().filter(|&&o| o == Outcome::A).count() as u64;
    assert_eq!(n_a, events.signal_counts().n_a);
}

#[test]
fn calibrated_test_holds_its_size_and_matches_exact_power() {
    let sc = Scene::new(0.0, 5.9e-5, 1.0, 0.1, LAMBDA).unwrap();
    let bl = Baseline::symmetric(5.3e-3).unwrap();
    let ifo = Interferometer::new(optimal_alpha(&sc, &bl), 1.0).unwrap();
    let (p0, p1) = hypothesis_outcomes(&sc, &bl, &ifo).unwrap();
    let n = 400;
    let tau = calibrate_threshold(&p0, &p1, n, 0.05).unwrap();
    let (alpha, ln_beta) = exact_error_rates(&p0, &p1, n, tau).unwrap();
    assert!(alpha <= 0.05);

    let mut rng = stream_rng(3, 0);
    let alpha_mc = simulate_type_i(&p0, &p1, n, tau, 40_000, &mut rng).unwrap();
    assert!((alpha_mc - alpha).abs() < 4.0 * (alpha * (1.0 - alpha) / 40_000.0).sqrt());

    let (ln_beta_is, rel_se) =
        estimate_ln_beta(&p0, &p1, n, tau, 40_000, &mut rand_chacha::ChaCha20Rng::seed_from_u64(5)).unwrap();
    assert!(((ln_beta_is - ln_beta) / ln_beta).abs() < 5.0 * rel_se.max(1e-3), "{ln_beta_is} vs {ln_beta}");
}

#[test]
fn posterior_is_mirror_symmetric() {
    let dist = equal_brightness_probs(PI / 3.0, 0.95).unwrap();
    let events = simulate_events(&dist, 300, 2);
    let post = CountsPosterior::new(events.signal_counts(), 0.95).unwrap();
    for phi in [0.1, 0.7, 2.0, 3.0] {
        assert!((post.log_likelihood(phi) - post.log_likelihood(-phi)).abs() < 1e-9);
    }
}
