use rayon::prelude::*;
use superres_core::inference::{
    calibrate_threshold, classical_relative_entropy_variance, estimate_ln_beta, exact_error_rates, mse,
    run_estimation_trial, simulate_type_i, stein_prediction, EstimateRecord, QuantileConvention,
};
use superres_core::measurement::{
    classical_fisher_info, classical_relative_entropy, cre_of_measurement, di_fisher_info, di_relative_entropy,
    hypothesis_outcomes, maximize_cre,
};
use superres_core::quantum::{
    hypothesis_states, nats_to_bits, qfi_closed, qfi_separation, qre_small_angle, relative_entropy,
    relative_entropy_variance,
};
use superres_core::simulate::{g2_zero, sample_coherent, sample_thermal, stream_rng};

use crate::output::{fmt_num, Table};
use crate::{pool, substream, CliError, ExperimentConfig, Outcome, RunOptions};

pub(crate) const TAG_ESTIMATE: u64 = 1;
const TAG_TYPE_I: u64 = 8;
const TAG_TYPE_II: u64 = 9;

/// Largest photon number for which the exact binomial error rates are tabulated.
const EXACT_RATES_MAX: u64 = 1_000_000;

pub(crate) fn entropy(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome, CliError> {
    let (sc, bl) = (&cfg.scene, &cfg.baseline);
    let ifo = cfg.interferometer();
    let theta = sc.angular_separation();
    let (k, d) = (sc.k(), bl.d().abs());
    let eps = sc.epsilon();

    let (rho0, rho1) = hypothesis_states(sc, bl)?;
    let qre = relative_entropy(&rho0, &rho1);
    let qre_var = relative_entropy_variance(&rho0, &rho1);
    let (alpha_star, cre_opt) = maximize_cre(sc, bl, cfg.nu)?;
    let cre_cfg = cre_of_measurement(sc, bl, &ifo)?;
    let psf = cfg.psf()?;
    let (di_approx, di_numeric) = di_relative_entropy(theta, &psf, eps)?;

    let (scale, unit) = if opts.bits { (nats_to_bits(1.0), "bits") } else { (1.0, "nats") };
    let mut out = Outcome::default();
    let mut table = Table::new(&["quantity", "value", "unit"]);
    let mut add = |out: &mut Outcome, name: &str, v: f64, unit: &str| {
        out.value(name, v);
        out.line(format!("{name:<22} {v:>14.6e} {unit}"));
        table.push(vec![name.to_string(), fmt_num(v), unit.to_string()]);
    };
    add(&mut out, "qre_exact", qre * scale, unit);
    add(&mut out, "qre_small_angle", qre_small_angle(theta, k, d, eps) * scale, unit);
    add(&mut out, "qre_variance", qre_var * scale * scale, &format!("{unit}^2"));
    add(&mut out, "cre_configured_alpha", cre_cfg * scale, unit);
    add(&mut out, "cre_optimal", cre_opt * scale, unit);
    add(&mut out, "alpha_optimal", alpha_star, "rad");
    add(&mut out, "di_approx", di_approx * scale, unit);
    add(&mut out, "di_numeric", di_numeric * scale, unit);
    add(&mut out, "qfi_closed", qfi_closed(k, d), "rad^-2");
    add(&mut out, "qfi_numeric", qfi_separation(sc, bl, None)?, "rad^-2");
    add(&mut out, "cfi", classical_fisher_info(theta, ifo.fringe_factor(), k, d), "rad^-2");
    add(&mut out, "di_fisher", di_fisher_info(theta, &psf)?, "rad^-2");

    let path = cfg.run.output_dir.join("entropy.csv");
    table.write(&path)?;
    out.files.push(path);
    Ok(out)
}

pub(crate) fn discriminate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (sc, bl) = (&cfg.scene, &cfg.baseline);
    let ifo = cfg.interferometer();
    let run = &cfg.run;
    let n = run.n_photons as u64;

    let (p0, p1) = hypothesis_outcomes(sc, bl, &ifo)?;
    let cre = classical_relative_entropy(&p0, &p1);
    let var = classical_relative_entropy_variance(&p0, &p1)?;
    let (rho0, rho1) = hypothesis_states(sc, bl)?;
    let qre = relative_entropy(&rho0, &rho1);

    let threshold = calibrate_threshold(&p0, &p1, n, run.delta)?;
    let alpha_exact = if n <= EXACT_RATES_MAX {
        exact_error_rates(&p0, &p1, n, threshold)?.0
    } else {
        f64::NAN
    };
    let alpha_n = simulate_type_i(
        &p0,
        &p1,
        n,
        threshold,
        run.mc_trials,
        &mut stream_rng(run.seed, substream(TAG_TYPE_I, 0)),
    )?;
    let (ln_beta, rel_se) = estimate_ln_beta(
        &p0,
        &p1,
        n,
        threshold,
        run.mc_trials,
        &mut stream_rng(run.seed, substream(TAG_TYPE_II, 0)),
    )?;
    let pred = stein_prediction(cre, var, run.delta, n, QuantileConvention::Normal)?;

    let mut table = Table::new(&[
        "n",
        "delta",
        "threshold",
        "alpha_exact",
        "alpha_n",
        "beta_n",
        "ln_beta_n",
        "ln_beta_rel_se",
        "ln_beta_first",
        "ln_beta_second",
        "cre",
        "cre_variance",
        "qre",
    ]);
    table.push_nums(&[
        n as f64,
        run.delta,
        threshold,
        alpha_exact,
        alpha_n,
        ln_beta.exp(),
        ln_beta,
        rel_se,
        pred.first,
        pred.second,
        cre,
        var,
        qre,
    ]);
    let path = run.output_dir.join("discriminate.csv");
    table.write(&path)?;

    let mut out = Outcome::default();
    for (k, v) in [
        ("threshold", threshold),
        ("alpha_exact", alpha_exact),
        ("alpha_n", alpha_n),
        ("beta_n", ln_beta.exp()),
        ("ln_beta_n", ln_beta),
        ("ln_beta_rel_se", rel_se),
        ("ln_beta_first", pred.first),
        ("ln_beta_second", pred.second),
        ("cre", cre),
        ("cre_variance", var),
        ("qre", qre),
    ] {
        out.value(k, v);
    }
    out.line(format!("n = {n}, delta = {}, LLR threshold = {threshold:.6}", run.delta));
    out.line(format!("type-I  alpha_n = {alpha_n:.5} (exact {alpha_exact:.5})"));
    out.line(format!("type-II ln beta_n = {ln_beta:.4} (rel. s.e. {rel_se:.2e}), beta_n = {:.4e}", ln_beta.exp()));
    out.line(format!("Stein   first order {:.4}, second order {:.4}", pred.first, pred.second));
    out.line(format!("CRE = {cre:.6e} nats, QRE = {qre:.6e} nats"));
    out.files.push(path);
    Ok(out)
}

/// Estimation trials at the configured scene, one substream per trial.
pub(crate) fn estimation_trials(
    cfg: &ExperimentConfig,
    scene: &superres_core::scene::Scene,
    ifo: &superres_core::measurement::Interferometer,
    tag: u64,
    first_index: u64,
) -> Result<Vec<EstimateRecord>, CliError> {
    let run = &cfg.run;
    let pool = pool(cfg)?;
    let recs = pool.install(|| {
        (0..run.n_trials as u64)
            .into_par_iter()
            .map(|t| {
                run_estimation_trial(scene, &cfg.baseline, ifo, run.n_photons, run.seed, substream(tag, first_index + t))
                    .map(|r| EstimateRecord { trial: t, ..r })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(recs)
}

pub(crate) fn estimate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (sc, bl) = (&cfg.scene, &cfg.baseline);
    let ifo = cfg.interferometer();
    let run = &cfg.run;
    let recs = estimation_trials(cfg, sc, &ifo, TAG_ESTIMATE, 0)?;

    let mut table = Table::new(&["trial", "phi_hat", "theta_hat", "n_events", "r_used", "seed"]);
    for r in &recs {
        table.push(vec![
            r.trial.to_string(),
            fmt_num(r.phi_hat),
            fmt_num(r.theta_hat),
            r.n_events.to_string(),
            fmt_num(r.r_used),
            r.seed.to_string(),
        ]);
    }
    let path = run.output_dir.join("estimates.csv");
    table.write(&path)?;

    let theta = sc.angular_separation();
    let (k, d) = (sc.k(), bl.d().abs());
    let est: Vec<f64> = recs.iter().map(|r| r.theta_hat).collect();
    let (m, var, bias2) = mse(&est, theta)?;
    let qfi = qfi_closed(k, d);
    let n = run.n_photons as f64;
    let cfi = classical_fisher_info(theta, ifo.fringe_factor(), k, d);

    let mut out = Outcome::default();
    let summary = [
        ("theta", theta),
        ("mse", m),
        ("variance", var),
        ("bias2", bias2),
        ("rmse_rel", m.sqrt() / theta),
        ("n_I_mse", n * qfi * m),
        ("qcrb_rel", 1.0 / (theta * (n * qfi).sqrt())),
        ("cfi_bound", qfi / cfi),
    ];
    for (k, v) in summary {
        out.value(k, v);
    }
    out.line(format!(
        "{} trials x {} photons at theta = {theta:.4e} rad, R = {:.4}",
        recs.len(),
        run.n_photons,
        ifo.fringe_factor()
    ));
    out.line(format!("MSE = {m:.4e} rad^2 (variance {var:.4e}, bias^2 {bias2:.4e})"));
    out.line(format!(
        "RMSE/theta = {:.2}%  (quantum Cramer-Rao floor {:.2}%)",
        100.0 * m.sqrt() / theta,
        100.0 / (theta * (n * qfi).sqrt())
    ));
    out.line(format!("n*I*MSE = {:.3}  (classical bound for this R: {:.3})", n * qfi * m, qfi / cfi));
    out.files.push(path);
    Ok(out)
}

pub(crate) fn thermal_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let run = &cfg.run;
    let m = run.thermal_samples;
    let thermal = sample_thermal(run.mean_photon, m, run.seed)?;
    let coherent = sample_coherent(run.mean_photon, m, run.seed)?;
    let g2_th = g2_zero(&thermal)?;
    let g2_coh = g2_zero(&coherent)?;

    let mut table = Table::new(&["mode", "samples", "mean_photon", "mean_intensity", "g2"]);
    let mut out = Outcome::default();
    for (mode, s, g2) in [("thermal", &thermal, g2_th), ("coherent", &coherent, g2_coh)] {
        let mean = s.intensities().iter().sum::<f64>() / s.len() as f64;
        table.push(vec![mode.into(), m.to_string(), fmt_num(run.mean_photon), fmt_num(mean), fmt_num(g2)]);
        out.value(&format!("g2_{mode}"), g2);
        out.line(format!("{mode:<9} g2(0) = {g2:.4}  (<I> = {mean:.4}, {m} samples)"));
    }
    let path = run.output_dir.join("thermal.csv");
    table.write(&path)?;
    out.files.push(path);
    Ok(out)
}
