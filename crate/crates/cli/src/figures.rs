use std::f64::consts::PI;

use superres_core::inference::{mse, phase_grid, CountsPosterior};
use superres_core::measurement::{
    classical_fisher_info, classical_relative_entropy, di_fisher_info, di_relative_entropy, equal_brightness_probs,
    hypothesis_outcomes, maximize_cre, outcome_probs, Interferometer, OutcomeDist,
};
use superres_core::quantum::{hypothesis_states, qfi_closed, relative_entropy};
use superres_core::scene::{optimal_alpha, phases, Scene};
use superres_core::simulate::{sample_counts, stream_rng, Counts};

use crate::config::AlphaSetting;
use crate::experiments::estimation_trials;
use crate::output::Table;
use crate::{substream, CliError, ExperimentConfig, FigureKind, Outcome};

const TAG_FIG4: u64 = 4;
const TAG_FIG5: u64 = 5;
const TAG_FIG6: u64 = 6;
const TAG_FIG7: u64 = 7;

const FIG4_POINTS: usize = 65;
const FIG5_POINTS: usize = 20;
const FIG5_EPS: (f64, f64) = (1e-3, 0.5);
/// Separations swept for the estimation figure, rad.
pub const FIG7_THETAS: [f64; 10] = [5e-6, 1e-5, 1.5e-5, 2e-5, 3e-5, 4e-5, 5e-5, 5.9e-5, 7e-5, 8e-5];

pub(crate) fn figure(kind: FigureKind, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match kind {
        FigureKind::Fig4 => fig4(cfg),
        FigureKind::Fig5 => fig5(cfg),
        FigureKind::Fig6 => fig6(cfg),
        FigureKind::Fig7 => fig7(cfg),
        FigureKind::All => {
            let mut out = Outcome::default();
            for f in [fig4, fig5, fig6, fig7] {
                out.merge(f(cfg)?);
            }
            Ok(out)
        }
    }
}

fn write(cfg: &ExperimentConfig, out: &mut Outcome, name: &str, table: &Table) -> Result<(), CliError> {
    let path = cfg.run.output_dir.join(name);
    table.write(&path)?;
    out.files.push(path);
    Ok(())
}

/// Detector-a probability against the applied phase, model and simulated.
fn fig4(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sc = &cfg.scene;
    let ph = phases(sc, &cfg.baseline)?;
    let eps = sc.epsilon();
    let sources = [(1.0 - eps, ph.psi2), (eps, ph.psi1)];
    let n = cfg.run.n_photons as u64;
    let mut table = Table::new(&["alpha", "p_a_model", "p_a_empirical", "n"]);
    for i in 0..FIG4_POINTS {
        let alpha = -PI + 2.0 * PI * i as f64 / (FIG4_POINTS - 1) as f64;
        let dist = outcome_probs(&sources, &Interferometer::new(alpha, cfg.nu)?)?;
        let c = sample_counts(&dist, n, &mut stream_rng(cfg.run.seed, substream(TAG_FIG4, i as u64)));
        table.push_nums(&[alpha, dist.p_a(), c.n_a as f64 / n as f64, n as f64]);
    }
    let mut out = Outcome::default();
    let amplitude = (eps * eps + (1.0 - eps).powi(2) + 2.0 * eps * (1.0 - eps) * (ph.psi1 - ph.psi2).cos()).sqrt();
    out.value("fig4_fringe_amplitude", cfg.nu * amplitude);
    out.line(format!("fig4: fringe amplitude {:.4} of a single source's", amplitude));
    write(cfg, &mut out, "fig4.csv", &table)?;
    Ok(out)
}

fn smoothed(c: Counts) -> OutcomeDist {
    let n = c.total() as f64 + 1.0;
    let p_a = (c.n_a as f64 + 0.5) / n;
    OutcomeDist::new(p_a, (c.n_b as f64 + 0.5) / n).expect("add-half estimate is a distribution")
}

/// Relative entropies against the brightness ratio at the configured separation.
fn fig5(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let bl = &cfg.baseline;
    let theta = cfg.scene.angular_separation();
    let psf = cfg.psf()?;
    let n = cfg.run.n_photons as u64;
    let mut table = Table::new(&["epsilon", "qre_exact", "cre_optimal", "di_cre", "cre_empirical"]);
    let ratio = (FIG5_EPS.1 / FIG5_EPS.0).ln();
    for i in 0..FIG5_POINTS {
        let eps = FIG5_EPS.0 * (ratio * i as f64 / (FIG5_POINTS - 1) as f64).exp();
        let sc = cfg.scene.with_epsilon(eps)?;
        let (r0, r1) = hypothesis_states(&sc, bl)?;
        let (alpha, cre) = maximize_cre(&sc, bl, cfg.nu)?;
        let (_, di) = di_relative_entropy(theta, &psf, eps)?;
        let (p0, p1) = hypothesis_outcomes(&sc, bl, &Interferometer::new(alpha, cfg.nu)?)?;
        let c0 = sample_counts(&p0, n, &mut stream_rng(cfg.run.seed, substream(TAG_FIG5, 2 * i as u64)));
        let c1 = sample_counts(&p1, n, &mut stream_rng(cfg.run.seed, substream(TAG_FIG5, 2 * i as u64 + 1)));
        let emp = classical_relative_entropy(&smoothed(c0), &smoothed(c1));
        table.push_nums(&[eps, relative_entropy(&r0, &r1), cre, di, emp]);
    }
    let mut out = Outcome::default();
    out.line(format!("fig5: {FIG5_POINTS} brightness ratios at theta = {theta:.3e} rad"));
    write(cfg, &mut out, "fig5.csv", &table)?;
    Ok(out)
}

/// Posterior density of the phase from observed or simulated counts.
fn fig6(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let r = cfg.interferometer().fringe_factor();
    let counts = match cfg.run.observed {
        Some((a, b)) => Counts::new(a, b),
        None => {
            let phi = cfg.scene.k() * cfg.baseline.d().abs() * cfg.scene.angular_separation() / 2.0;
            let dist = equal_brightness_probs(phi, r)?;
            sample_counts(
                &dist,
                cfg.run.n_photons as u64,
                &mut stream_rng(cfg.run.seed, substream(TAG_FIG6, 0)),
            )
        }
    };
    let post = CountsPosterior::new(counts, r)?;
    let mut table = Table::new(&["phi", "density"]);
    for (phi, p) in phase_grid().zip(post.density_grid()) {
        table.push_nums(&[phi, p]);
    }
    let map = post.map_phase()?;
    let mut out = Outcome::default();
    out.value("fig6_map", map);
    out.line(format!("fig6: counts ({}, {}), R = {r:.4}, MAP |phi| = {map:.4} rad", counts.n_a, counts.n_b));
    write(cfg, &mut out, "fig6.csv", &table)?;
    Ok(out)
}

/// Normalised estimation error across separations, with the fringe-factor band.
fn fig7(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let bl = &cfg.baseline;
    let (k, d) = (cfg.scene.k(), bl.d().abs());
    let qfi = qfi_closed(k, d);
    let psf = cfg.psf()?;
    let n = cfg.run.n_photons as f64;
    let (r_lo, r_hi) = cfg.run.r_band;
    let mut table = Table::new(&["theta", "n_I_mse", "fi_ratio", "di_norm_mse"]);
    let mut band = Table::new(&["theta", "r_low", "r_high", "bound_low", "bound_high"]);
    for (j, &theta) in FIG7_THETAS.iter().enumerate() {
        let sc = Scene::centred_pair(theta, cfg.scene.z0(), cfg.scene.lambda())?
            .with_paraxial_limit(cfg.scene.paraxial_limit())?;
        let alpha = match cfg.alpha {
            AlphaSetting::Optimal => optimal_alpha(&sc, bl),
            AlphaSetting::Fixed(a) => a,
        };
        let ifo = Interferometer::new(alpha, cfg.nu)?;
        let first = (j * cfg.run.n_trials) as u64;
        let recs = estimation_trials(cfg, &sc, &ifo, TAG_FIG7, first)?;
        let est: Vec<f64> = recs.iter().map(|r| r.theta_hat).collect();
        let (m, _, _) = mse(&est, theta)?;
        let fi_ratio = classical_fisher_info(theta, ifo.fringe_factor(), k, d) / qfi;
        let di_norm = qfi / di_fisher_info(theta, &psf)?;
        table.push_nums(&[theta, n * qfi * m, fi_ratio, di_norm]);
        let bound = |r: f64| qfi / classical_fisher_info(theta, r, k, d);
        band.push_nums(&[theta, r_lo, r_hi, bound(r_lo), bound(r_hi)]);
    }
    let mut out = Outcome::default();
    out.line(format!(
        "fig7: {} separations x {} trials x {} photons",
        FIG7_THETAS.len(),
        cfg.run.n_trials,
        cfg.run.n_photons
    ));
    write(cfg, &mut out, "fig7.csv", &table)?;
    write(cfg, &mut out, "fig7_band.csv", &band)?;
    Ok(out)
}
