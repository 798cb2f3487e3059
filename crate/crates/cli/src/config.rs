//! Experiment configuration: TOML with `[scene]`, `[baseline]`,
//! `[interferometer]` and `[run]` tables. Unknown keys are rejected and
//! every physical block is validated against the core invariants at load.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use superres_core::measurement::{Interferometer, PsfModel};
use superres_core::scene::{optimal_alpha, phases, Baseline, Scene};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn bad(key: &'static str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NumOrName {
    Num(f64),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scene: Option<RawScene>,
    baseline: Option<RawBaseline>,
    interferometer: Option<RawIfo>,
    run: Option<RawRun>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    x0: Option<f64>,
    s: Option<f64>,
    z0: Option<f64>,
    epsilon: Option<f64>,
    lambda: Option<f64>,
    paraxial_limit: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    d1: Option<f64>,
    d2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIfo {
    alpha: Option<NumOrName>,
    nu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_photons: Option<i64>,
    n_trials: Option<i64>,
    seed: Option<i64>,
    delta: Option<f64>,
    psf_sigma: Option<NumOrName>,
    output_dir: Option<String>,
    workers: Option<i64>,
    mc_trials: Option<i64>,
    thermal_samples: Option<i64>,
    mean_photon: Option<f64>,
    observed_a: Option<i64>,
    observed_b: Option<i64>,
    r_band: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSetting {
    /// Phase that centres the fringe on the brightness-weighted source position.
    Optimal,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsfSetting {
    /// `0.42 λ / |d|`
    Auto,
    Sigma(f64),
}

/// Run-level knobs with their defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub n_photons: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub psf_sigma: PsfSetting,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub mc_trials: usize,
    pub thermal_samples: usize,
    pub mean_photon: f64,
    pub observed: Option<(u64, u64)>,
    pub r_band: (f64, f64),
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scene: Scene,
    pub baseline: Baseline,
    pub alpha: AlphaSetting,
    pub nu: f64,
    pub run: RunSettings,
}

pub const DEFAULT_R_BAND: (f64, f64) = (0.965, 0.985);
/// Reduced profile for quick checks: trials × photons.
pub const SMOKE_PROFILE: (usize, usize) = (5, 5_000);

fn count(key: &'static str, v: Option<i64>, default: i64, min: i64) -> Result<i64, ConfigError> {
    let v = v.unwrap_or(default);
    if v < min {
        return Err(bad(key, format!("must be >= {min}, got {v}")));
    }
    Ok(v)
}

fn req(v: Option<f64>, key: &'static str) -> Result<f64, ConfigError> {
    v.ok_or(ConfigError::Missing(key))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

        let sc = raw.scene.ok_or(ConfigError::Missing("scene"))?;
        let x0 = req(sc.x0, "scene.x0")?;
        let s = req(sc.s, "scene.s")?;
        let z0 = req(sc.z0, "scene.z0")?;
        let epsilon = req(sc.epsilon, "scene.epsilon")?;
        let lambda = req(sc.lambda, "scene.lambda")?;
        let mut scene = Scene::new(x0, s, z0, epsilon, lambda).map_err(|e| bad("scene", e))?;
        if let Some(limit) = sc.paraxial_limit {
            scene = scene.with_paraxial_limit(limit).map_err(|e| bad("scene.paraxial_limit", e))?;
        }

        let bl = raw.baseline.ok_or(ConfigError::Missing("baseline"))?;
        let baseline = Baseline::new(req(bl.d1, "baseline.d1")?, req(bl.d2, "baseline.d2")?)
            .map_err(|e| bad("baseline", e))?;
        phases(&scene, &baseline).map_err(|e| bad("scene", e))?;

        let ifo = raw.interferometer.unwrap_or_default();
        let alpha = match ifo.alpha {
            None => AlphaSetting::Optimal,
            Some(NumOrName::Name(n)) if n == "optimal" => AlphaSetting::Optimal,
            Some(NumOrName::Name(n)) => return Err(bad("interferometer.alpha", format!("expected a number or \"optimal\", got \"{n}\""))),
            Some(NumOrName::Num(a)) => AlphaSetting::Fixed(a),
        };
        let nu = ifo.nu.unwrap_or(1.0);
        let alpha_value = match alpha {
            AlphaSetting::Optimal => 0.0,
            AlphaSetting::Fixed(a) => a,
        };
        Interferometer::new(alpha_value, nu).map_err(|e| bad("interferometer", e))?;

        let r = raw.run.unwrap_or_default();
        let delta = r.delta.unwrap_or(0.05);
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(bad("run.delta", format!("must lie in (0, 0.5], got {delta}")));
        }
        let psf_sigma = match r.psf_sigma {
            None => PsfSetting::Auto,
            Some(NumOrName::Name(n)) if n == "auto" => PsfSetting::Auto,
            Some(NumOrName::Name(n)) => return Err(bad("run.psf_sigma", format!("expected a number or \"auto\", got \"{n}\""))),
            Some(NumOrName::Num(v)) => {
                PsfModel::new(v).map_err(|e| bad("run.psf_sigma", e))?;
                PsfSetting::Sigma(v)
            }
        };
        let observed = match (r.observed_a, r.observed_b) {
            (None, None) => None,
            (Some(a), Some(b)) => {
                if a < 0 || b < 0 || a + b == 0 {
                    return Err(bad("run.observed_a", "observed counts must be non-negative with a positive total"));
                }
                Some((a as u64, b as u64))
            }
            (None, Some(_)) => return Err(ConfigError::Missing("run.observed_a")),
            (Some(_), None) => return Err(ConfigError::Missing("run.observed_b")),
        };
        let r_band = match r.r_band.as_deref() {
            None => DEFAULT_R_BAND,
            Some(&[lo, hi]) if 0.0 < lo && lo <= hi && hi <= 1.0 => (lo, hi),
            Some(v) => return Err(bad("run.r_band", format!("expected [low, high] within (0, 1], got {v:?}"))),
        };
        let mean_photon = r.mean_photon.unwrap_or(1.0);
        if !(mean_photon > 0.0 && mean_photon.is_finite()) {
            return Err(bad("run.mean_photon", "must be > 0"));
        }
        let workers = match r.workers {
            None => None,
            Some(w) => Some(count("run.workers", Some(w), 1, 1)? as usize),
        };
        let seed = r.seed.unwrap_or(0);
        if seed < 0 {
            return Err(bad("run.seed", "must be non-negative"));
        }

        Ok(Self {
            scene,
            baseline,
            alpha,
            nu,
            run: RunSettings {
                n_photons: count("run.n_photons", r.n_photons, 60_000, 1)? as usize,
                n_trials: count("run.n_trials", r.n_trials, 25, 2)? as usize,
                seed: seed as u64,
                delta,
                psf_sigma,
                output_dir: PathBuf::from(r.output_dir.unwrap_or_else(|| "out".into())),
                workers,
                mc_trials: count("run.mc_trials", r.mc_trials, 100_000, 1)? as usize,
                thermal_samples: count("run.thermal_samples", r.thermal_samples, 1_000_000, 1)? as usize,
                mean_photon,
                observed,
                r_band,
            },
        })
    }

    /// Phase applied by the interferometer.
    pub fn alpha_value(&self) -> f64 {
        match self.alpha {
            AlphaSetting::Optimal => optimal_alpha(&self.scene, &self.baseline),
            AlphaSetting::Fixed(a) => a,
        }
    }

    pub fn interferometer(&self) -> Interferometer {
        Interferometer::new(self.alpha_value(), self.nu).expect("validated at load")
    }

    pub fn psf(&self) -> superres_core::Result<PsfModel> {
        match self.run.psf_sigma {
            PsfSetting::Auto => PsfModel::for_aperture(self.scene.lambda(), self.baseline.d()),
            PsfSetting::Sigma(s) => PsfModel::new(s),
        }
    }

    /// Switch to the reduced trial/photon profile.
    pub fn smoke(mut self) -> Self {
        let (trials, photons) = SMOKE_PROFILE;
        self.run.n_trials = self.run.n_trials.min(trials);
        self.run.n_photons = self.run.n_photons.min(photons);
        self.run.mc_trials = self.run.mc_trials.min(10_000);
        self.run.thermal_samples = self.run.thermal_samples.min(100_000);
        self
    }

    /// Canonical text form: one `key=value` per line with round-trip floats.
    /// Worker count and output directory are excluded since they never change results.
    pub fn normalized(&self) -> String {
        let mut s = String::new();
        let sc = &self.scene;
        let r = &self.run;
        let alpha = match self.alpha {
            AlphaSetting::Optimal => "optimal".to_string(),
            AlphaSetting::Fixed(a) => format!("{a:?}"),
        };
        let psf = match r.psf_sigma {
            PsfSetting::Auto => "auto".to_string(),
            PsfSetting::Sigma(v) => format!("{v:?}"),
        };
        let observed = match r.observed {
            Some((a, b)) => format!("{a},{b}"),
            None => "none".into(),
        };
        let lines: [(&str, String); 20] = [
            ("scene.x0", format!("{:?}", sc.x0())),
            ("scene.s", format!("{:?}", sc.s())),
            ("scene.z0", format!("{:?}", sc.z0())),
            ("scene.epsilon", format!("{:?}", sc.epsilon())),
            ("scene.lambda", format!("{:?}", sc.lambda())),
            ("scene.paraxial_limit", format!("{:?}", sc.paraxial_limit())),
            ("baseline.d1", format!("{:?}", self.baseline.d1())),
            ("baseline.d2", format!("{:?}", self.baseline.d2())),
            ("interferometer.alpha", alpha),
            ("interferometer.nu", format!("{:?}", self.nu)),
            ("run.n_photons", r.n_photons.to_string()),
            ("run.n_trials", r.n_trials.to_string()),
            ("run.seed", r.seed.to_string()),
            ("run.delta", format!("{:?}", r.delta)),
            ("run.psf_sigma", psf),
            ("run.mc_trials", r.mc_trials.to_string()),
            ("run.thermal_samples", r.thermal_samples.to_string()),
            ("run.mean_photon", format!("{:?}", r.mean_photon)),
            ("run.observed", observed),
            ("run.r_band", format!("{:?},{:?}", r.r_band.0, r.r_band.1)),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// SHA-256 of [`normalized`](Self::normalized), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.normalized().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAB: &str = r#"
[scene]
x0 = -7.5e-6
s = 1.5e-5
z0 = 1.0
epsilon = 0.5
lambda = 848.2e-9

[baseline]
d1 = 2.65e-3
d2 = -2.65e-3

[interferometer]
alpha = "optimal"
nu = 0.975
"#;

    #[test]
    fn lab_defaults() {
        let c = ExperimentConfig::from_toml(LAB).unwrap();
        let kd = c.scene.k() * c.baseline.d();
        assert!((kd - 3.92606e4).abs() < 1.0, "{kd}");
        assert_eq!(c.alpha, AlphaSetting::Optimal);
        assert_eq!(c.run.delta, 0.05);
        assert_eq!(c.run.n_trials, 25);
        assert_eq!(c.run.n_photons, 60_000);
        assert_eq!(c.run.psf_sigma, PsfSetting::Auto);
        assert_eq!(c.run.r_band, DEFAULT_R_BAND);
        assert!(c.alpha_value().abs() < 1e-15);
    }

    #[test]
    fn defaults_for_interferometer() {
        let text = LAB.replace("[interferometer]\nalpha = \"optimal\"\nnu = 0.975\n", "");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.nu, 1.0);
        assert_eq!(c.alpha, AlphaSetting::Optimal);
    }

    #[test]
    fn validation_errors_name_the_key() {
        let e = ExperimentConfig::from_toml(&LAB.replace("epsilon = 0.5", "epsilon = 1.5")).unwrap_err();
        assert!(e.to_string().contains("scene"), "{e}");
        assert!(e.to_string().contains("epsilon"), "{e}");

        let e = ExperimentConfig::from_toml(&LAB.replace("z0 = 1.0\n", "")).unwrap_err();
        assert!(e.to_string().contains("scene.z0"), "{e}");

        let e = ExperimentConfig::from_toml(&LAB.replace("nu = 0.975", "nu = 0.975\ngain = 2")).unwrap_err();
        assert!(e.to_string().contains("gain"), "{e}");

        let e = ExperimentConfig::from_toml(&LAB.replace("\"optimal\"", "\"best\"")).unwrap_err();
        assert!(e.to_string().contains("interferometer.alpha"), "{e}");

        let e = ExperimentConfig::from_toml(&format!("{LAB}\n[run]\ndelta = 0.7\n")).unwrap_err();
        assert!(e.to_string().contains("run.delta"), "{e}");

        let e = ExperimentConfig::from_toml(&format!("{LAB}\n[run]\nobserved_a = 5\n")).unwrap_err();
        assert!(e.to_string().contains("run.observed_b"), "{e}");

        let e = ExperimentConfig::from_toml("[scene\nx0=1").unwrap_err();
        assert!(matches!(e, ConfigError::Parse(_)));
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn hash_tracks_content_not_formatting() {
        let a = ExperimentConfig::from_toml(LAB).unwrap();
        let b = ExperimentConfig::from_toml(&LAB.replace("z0 = 1.0", "z0 = 1.000")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml(&LAB.replace("nu = 0.975", "nu = 0.976")).unwrap();
        assert_ne!(a.hash(), c.hash());
        let w = ExperimentConfig::from_toml(&format!("{LAB}\n[run]\nworkers = 3\n")).unwrap();
        assert_eq!(a.hash(), w.hash());
    }

    #[test]
    fn explicit_run_block() {
        let text = format!(
            "{LAB}\n[run]\nn_photons = 1000\nn_trials = 4\nseed = 9\npsf_sigma = 2e-5\nobserved_a = 11262\nobserved_b = 1478\nr_band = [0.96, 0.985]\nworkers = 2\n"
        );
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.run.n_photons, 1000);
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.run.psf_sigma, PsfSetting::Sigma(2e-5));
        assert_eq!(c.run.observed, Some((11262, 1478)));
        assert_eq!(c.run.r_band, (0.96, 0.985));
        assert_eq!(c.run.workers, Some(2));
        let s = c.smoke();
        assert_eq!((s.run.n_trials, s.run.n_photons), (4, 1000));
    }
}
