//! CSV tables, run metadata and the column schema sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use superres_core::simulate::GENERATOR_ID;

use crate::CliError;

/// A header row plus pre-formatted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_num(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation; non-finite values spelled out.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Replay record for a run. Contains no timestamps so identical runs write
/// identical files.
pub fn write_metadata(
    dir: &Path,
    subcommand: &str,
    config_hash: &str,
    seed: u64,
    files: &[PathBuf],
) -> Result<PathBuf, CliError> {
    let mut text = format!(
        "tool=superres {}\nsubcommand={subcommand}\nconfig_hash={config_hash}\nseed={seed}\ngenerator={GENERATOR_ID}\nsubstreams=trial-indexed\n",
        env!("CARGO_PKG_VERSION")
    );
    for f in files {
        if let Some(name) = f.file_name() {
            text.push_str(&format!("output={}\n", name.to_string_lossy()));
        }
    }
    let path = dir.join("metadata.txt");
    fs::write(&path, text)?;
    Ok(path)
}

pub const SCHEMA: &str = "\
# Column units for every CSV written by superres.
# Entropies are in nats unless a `unit` column says otherwise.

fig4.csv
  alpha           rad        interferometer phase
  p_a_model       1          model probability of a click at detector a
  p_a_empirical   1          simulated click fraction at detector a
  n               count      simulated photons per phase setting

fig5.csv
  epsilon         1          relative brightness of the dim source
  qre_exact       nats       quantum relative entropy of the two hypotheses
  cre_optimal     nats       interferometer relative entropy maximised over alpha
  di_cre          nats       direct-imaging relative entropy (numerical)
  cre_empirical   nats       plug-in relative entropy from simulated counts, add-1/2 smoothed

fig6.csv
  phi             rad        phase grid on [-pi, pi)
  density         1/rad      normalised posterior density

fig7.csv
  theta           rad        true angular separation
  n_I_mse         1          n * QFI * MSE of the separation estimate
  fi_ratio        1          classical over quantum Fisher information at the run's fringe factor
  di_norm_mse     1          direct-imaging Cramer-Rao bound times n * QFI

fig7_band.csv
  theta           rad        true angular separation
  r_low, r_high   1          fringe factors bounding the band
  bound_low       1          QFI / CFI at r_low
  bound_high      1          QFI / CFI at r_high

estimates.csv
  trial           index      substream index of the trial
  phi_hat         rad        folded posterior maximum
  theta_hat       rad        separation estimate
  n_events        count      detected photons
  r_used          1          fringe factor used by the posterior
  seed            1          run seed

discriminate.csv
  n               count      photons per test
  delta           1          type-I budget
  threshold       nats       log-likelihood-ratio cut
  alpha_exact     1          type-I probability from the exact binomial law
  alpha_n         1          Monte Carlo type-I rate
  beta_n          1          type-II probability
  ln_beta_n       nats       Monte Carlo log type-II probability
  ln_beta_rel_se  1          relative standard error of beta_n
  ln_beta_first   nats       first-order prediction -nD
  ln_beta_second  nats       second-order prediction
  cre             nats       relative entropy of the outcome distributions
  cre_variance    nats^2     variance of the per-photon log-likelihood ratio
  qre             nats       quantum relative entropy

entropy.csv
  quantity, value, unit

thermal.csv
  mode            -          thermal or coherent
  samples         count      field samples
  mean_photon     1          requested mean photon number
  mean_intensity  1          sample mean of |amplitude|^2
  g2              1          zero-delay intensity correlation
";

pub fn write_schema(dir: &Path) -> Result<PathBuf, CliError> {
    let path = dir.join("schema.txt");
    fs::write(&path, SCHEMA)?;
    Ok(path)
}
