//! Bayesian phase estimation, separation estimates with MSE scoring, and
//! likelihood-ratio tests with Stein-exponent predictions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf_inv;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::measurement::{equal_brightness_probs, Interferometer, OutcomeDist};
use crate::scene::{Baseline, Scene};
use crate::simulate::{sample_counts, simulate_events_with, stream_rng, Counts, Outcome};

/// Highest Fourier order kept by [`FourierPosterior`].
pub const M_MAX: usize = 2048;
/// Points in every posterior grid.
pub const GRID_POINTS: usize = 4096;

fn check_fringe(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid("R", format!("fringe factor must lie in [0, 1], got {r}")));
    }
    Ok(())
}

/// Posterior over the phase `φ` as `P(φ) = (1/2π) Σ_k a_k e^{ikφ}` with `a_0 = 1`
/// and `a_{−k} = conj(a_k)`; only `k ≥ 0` is stored.
///
/// Relative to the unnormalised convention with `a_0 = π`, every coefficient
/// here is the other one divided by `π`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPosterior {
    coeffs: Vec<Complex64>,
}

impl Default for FourierPosterior {
    fn default() -> Self {
        Self::new()
    }
}

impl FourierPosterior {
    /// Uniform prior.
    pub fn new() -> Self {
        Self {
            coeffs: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn coeff(&self, k: isize) -> Complex64 {
        let idx = k.unsigned_abs();
        match self.coeffs.get(idx) {
            Some(c) if k < 0 => c.conj(),
            Some(c) => *c,
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Bayes update with likelihood `½(1 ± R cos φ)` (`+` for an `a` click).
    pub fn update(&mut self, outcome: Outcome, r: f64) -> Result<()> {
        check_fringe(r)?;
        let sign = match outcome {
            Outcome::A => 1.0,
            Outcome::B => -1.0,
        };
        let m = (self.order() + 1).min(M_MAX);
        let q = sign * r / 4.0;
        let mut next: Vec<Complex64> = (0..=m as isize)
            .map(|k| 0.5 * self.coeff(k) + q * (self.coeff(k - 1) + self.coeff(k + 1)))
            .collect();
        let norm = next[0].re;
        if !(norm > 0.0) {
            return Err(Error::SupportViolation);
        }
        for c in &mut next {
            *c /= norm;
        }
        next[0] = Complex64::new(1.0, 0.0);
        self.coeffs = next;
        Ok(())
    }

    pub fn density(&self, phi: f64) -> f64 {
        let tail: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| (a * Complex64::from_polar(1.0, k as f64 * phi)).re)
            .sum();
        (1.0 + 2.0 * tail) / (2.0 * PI)
    }

    /// Density on the periodic grid `−π + 2πj/N`.
    pub fn density_grid(&self) -> Vec<f64> {
        phase_grid().map(|phi| self.density(phi)).collect()
    }

    /// Folded maximum `|φ̂| ∈ [0, π]`.
    pub fn map_phase(&self) -> Result<f64> {
        fold_map(|phi| self.density(phi), 1e-12 / (2.0 * PI))
    }
}

/// Periodic phase grid `−π + 2πj/N`, `j = 0..N`.
pub fn phase_grid() -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(|j| -PI + 2.0 * PI * j as f64 / GRID_POINTS as f64)
}

/// Grid maximum of `f` over `[0, π]` refined by a parabola through the peak
/// triple. A maximum on either end point is returned unrefined.
fn fold_map(f: impl Fn(f64) -> f64, flat_tol: f64) -> Result<f64> {
    let h = PI / (GRID_POINTS - 1) as f64;
    let vals: Vec<f64> = (0..GRID_POINTS).map(|i| f(h * i as f64)).collect();
    let (mut best, mut lo) = (0, f64::INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[best] {
            best = i;
        }
        lo = lo.min(v);
    }
    let hi = vals[best];
    if !hi.is_finite() || hi - lo <= flat_tol {
        return Err(Error::FlatPosterior);
    }
    if best == 0 || best == GRID_POINTS - 1 {
        return Ok(h * best as f64);
    }
    let (fm, f0, fp) = (vals[best - 1], vals[best], vals[best + 1]);
    let curv = fm - 2.0 * f0 + fp;
    let shift = if curv < 0.0 && fm.is_finite() && fp.is_finite() {
        (0.5 * (fm - fp) / curv).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok(h * (best as f64 + shift))
}

/// Closed-form posterior from click counts at fixed fringe factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsPosterior {
    counts: Counts,
    r: f64,
}

impl CountsPosterior {
    pub fn new(counts: Counts, r: f64) -> Result<Self> {
        check_fringe(r)?;
        if counts.total() == 0 {
            return Err(Error::EmptyCounts);
        }
        Ok(Self { counts, r })
    }

    /// Unnormalised `n_a ln(1 + R cos φ) + n_b ln(1 − R cos φ)`.
    pub fn log_likelihood(&self, phi: f64) -> f64 {
        let c = self.r * phi.cos();
        let term = |n: u64, x: f64| if n == 0 { 0.0 } else { n as f64 * x.ln_1p() };
        term(self.counts.n_a, c) + term(self.counts.n_b, -c)
    }

    /// Normalised log-density on the periodic grid `−π + 2πj/N`.
    pub fn log_density_grid(&self) -> Vec<f64> {
        let ll: Vec<f64> = phase_grid().map(|phi| self.log_likelihood(phi)).collect();
        let peak = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = ll.iter().map(|v| (v - peak).exp()).sum();
        let log_z = peak + (sum * 2.0 * PI / GRID_POINTS as f64).ln();
        ll.into_iter().map(|v| v - log_z).collect()
    }

    pub fn density_grid(&self) -> Vec<f64> {
        self.log_density_grid().into_iter().map(f64::exp).collect()
    }

    pub fn map_phase(&self) -> Result<f64> {
        fold_map(|phi| self.log_likelihood(phi), 1e-12)
    }
}

/// `θ̂ = 2|φ̂|/(k d)`.
pub fn estimate_theta(phi_hat: f64, k: f64, d: f64) -> Result<f64> {
    let kd = k * d;
    if !(kd > 0.0 && kd.is_finite()) {
        return Err(invalid("k*d", format!("must be > 0, got {kd}")));
    }
    Ok(2.0 * phi_hat.abs() / kd)
}

/// Mean-square error about the truth split into population variance and squared bias.
pub fn mse(estimates: &[f64], truth: f64) -> Result<(f64, f64, f64)> {
    if estimates.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: estimates.len(),
            need: 2,
        });
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let bias2 = (mean - truth).powi(2);
    Ok((var + bias2, var, bias2))
}

/// Outcome of a single estimation trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub trial: u64,
    pub phi_hat: f64,
    pub theta_hat: f64,
    pub n_events: u64,
    pub r_used: f64,
    pub seed: u64,
}

/// One equal-brightness trial: simulate `n_photons` clicks at the true phase,
/// form the counts posterior and invert its folded maximum. Randomness comes
/// from substream `trial` of `seed`.
pub fn run_estimation_trial(
    scene: &Scene,
    baseline: &Baseline,
    ifo: &Interferometer,
    n_photons: usize,
    seed: u64,
    trial: u64,
) -> Result<EstimateRecord> {
    if (scene.epsilon() - 0.5).abs() > 1e-12 {
        return Err(invalid("epsilon", "separation estimation needs an equal-brightness pair (0.5)"));
    }
    let k = scene.k();
    let d = baseline.d().abs();
    let phi = k * d * scene.angular_separation() / 2.0;
    let r = ifo.fringe_factor();
    check_fringe(r)?;
    let dist = equal_brightness_probs(phi, r)?;
    let events = simulate_events_with(&dist, n_photons, seed, &mut stream_rng(seed, trial));
    let post = CountsPosterior::new(events.signal_counts(), r)?;
    let phi_hat = post.map_phase()?;
    Ok(EstimateRecord {
        trial,
        phi_hat,
        theta_hat: estimate_theta(phi_hat, k, d)?,
        n_events: n_photons as u64,
        r_used: r,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    H0,
    H1,
}

/// Per-click log-likelihood ratios `ln(p1/p0)` for outcomes `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrWeights {
    pub a: f64,
    pub b: f64,
}

impl LlrWeights {
    pub fn new(p0: &OutcomeDist, p1: &OutcomeDist) -> Result<Self> {
        let ratio = |x0: f64, x1: f64, diff: f64| -> Result<f64> {
            match (x0 == 0.0, x1 == 0.0) {
                (true, true) => Ok(0.0),
                (false, false) => Ok((diff / x0).ln_1p()),
                _ => Err(Error::SupportViolation),
            }
        };
        // p1_a − p0_a = p0_b − p1_b; take whichever side is exact
        let diff_a = if p0.p_b().min(p1.p_b()) < p0.p_a().min(p1.p_a()) {
            p0.p_b() - p1.p_b()
        } else {
            p1.p_a() - p0.p_a()
        };
        Ok(Self {
            a: ratio(p0.p_a(), p1.p_a(), diff_a)?,
            b: ratio(p0.p_b(), p1.p_b(), -diff_a)?,
        })
    }

    pub fn llr(&self, counts: Counts) -> f64 {
        counts.n_a as f64 * self.a + counts.n_b as f64 * self.b
    }
}

/// Decide H1 iff the log-likelihood ratio reaches `threshold`.
pub fn llr_test(counts: Counts, p0: &OutcomeDist, p1: &OutcomeDist, threshold: f64) -> Result<Decision> {
    let w = LlrWeights::new(p0, p1)?;
    Ok(if w.llr(counts) >= threshold {
        Decision::H1
    } else {
        Decision::H0
    })
}

const EXACT_LAW_MAX: u64 = 1_000_000;

fn ln_binom_pmf(n: u64, k: u64, ln_p: f64, ln_q: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let mut v = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
    if k > 0 {
        v += kf * ln_p;
    }
    if k < n {
        v += (nf - kf) * ln_q;
    }
    v
}

/// `ln Σ exp(v)`.
fn log_sum_exp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let peak = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + vals.map(|v| (v - peak).exp()).sum::<f64>().ln()
}

/// Log-probabilities of `n_b = 0..=n` under `dist`.
fn ln_binom_law(dist: &OutcomeDist, n: u64) -> Vec<f64> {
    let (ln_b, ln_a) = (dist.p_b().ln(), dist.p_a().ln());
    (0..=n)
        .map(|k| {
            if (dist.p_b() == 0.0 && k > 0) || (dist.p_a() == 0.0 && k < n) {
                f64::NEG_INFINITY
            } else {
                ln_binom_pmf(n, k, ln_b, ln_a)
            }
        })
        .collect()
}

/// Smallest threshold whose type-I probability under `p0` is at most `delta`.
///
/// Uses the exact binomial law of the LLR for `n ≤ 10⁶` and a normal
/// approximation above. If every attainable LLR value already carries more
/// than `delta` tail mass, the threshold sits just above the largest one.
pub fn calibrate_threshold(p0: &OutcomeDist, p1: &OutcomeDist, n: u64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(invalid("delta", format!("type-I budget must lie in (0, 0.5], got {delta}")));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one photon"));
    }
    let w = LlrWeights::new(p0, p1)?;
    if n > EXACT_LAW_MAX {
        let mean = p0.p_a() * w.a + p0.p_b() * w.b;
        let var = p0.p_a() * (w.a - mean).powi(2) + p0.p_b() * (w.b - mean).powi(2);
        let z = Normal::standard().inverse_cdf(1.0 - delta);
        return Ok(n as f64 * mean + (n as f64 * var).sqrt() * z);
    }
    let law = ln_binom_law(p0, n);
    let mut atoms: Vec<(f64, f64)> = law
        .iter()
        .enumerate()
        .filter(|(_, lp)| lp.is_finite())
        .map(|(k, &lp)| (w.llr(Counts::new(n - k as u64, k as u64)), lp.exp()))
        .collect();
    atoms.sort_by(|x, y| y.0.total_cmp(&x.0));
    let top = atoms[0].0;
    let mut tail = 0.0;
    let mut threshold = top.next_up().max(top + top.abs() * f64::EPSILON);
    let mut i = 0;
    while i < atoms.len() {
        let level = atoms[i].0;
        let mut mass = 0.0;
        while i < atoms.len() && atoms[i].0 == level {
            mass += atoms[i].1;
            i += 1;
        }
        tail += mass;
        if tail > delta * (1.0 + 1e-12) {
            break;
        }
        threshold = level;
    }
    Ok(threshold)
}

/// Exact `(α_n, ln β_n)` of the test at `threshold` from the binomial laws.
pub fn exact_error_rates(p0: &OutcomeDist, p1: &OutcomeDist, n: u64, threshold: f64) -> Result<(f64, f64)> {
    let w = LlrWeights::new(p0, p1)?;
    let rejects = |k: usize| w.llr(Counts::new(n - k as u64, k as u64)) >= threshold;
    let law0 = ln_binom_law(p0, n);
    let law1 = ln_binom_law(p1, n);
    let alpha = log_sum_exp(law0.iter().enumerate().filter(|(k, _)| rejects(*k)).map(|(_, v)| *v)).exp();
    let ln_beta = log_sum_exp(law1.iter().enumerate().filter(|(k, _)| !rejects(*k)).map(|(_, v)| *v));
    Ok((alpha, ln_beta))
}

/// Fraction of `trials` H0 runs of `n` clicks that the test rejects.
pub fn simulate_type_i<R: Rng + ?Sized>(
    p0: &OutcomeDist,
    p1: &OutcomeDist,
    n: u64,
    threshold: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let w = LlrWeights::new(p0, p1)?;
    let hits = (0..trials).filter(|_| w.llr(sample_counts(p0, n, rng)) >= threshold).count();
    Ok(hits as f64 / trials as f64)
}

/// Monte Carlo estimate of `ln β_n` with its relative standard error.
///
/// Counts are drawn from the exponentially tilted law `q_t ∝ p0^{1−t} p1^t`,
/// with `t` chosen so that the mean LLR sits on the threshold, and reweighted
/// to `p1`. The log-weight of a draw is `(1−t)·LLR + n ln Z_t`, so the
/// estimator stays finite even when `β_n` underflows.
pub fn estimate_ln_beta<R: Rng + ?Sized>(
    p0: &OutcomeDist,
    p1: &OutcomeDist,
    n: u64,
    threshold: f64,
    trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one Monte Carlo trial"));
    }
    let w = LlrWeights::new(p0, p1)?;
    let tilted = |t: f64| -> (f64, f64) {
        // unnormalised p0^{1−t} p1^t = p0·e^{t·l}
        let ua = p0.p_a() * (t * w.a).exp();
        let ub = p0.p_b() * (t * w.b).exp();
        let z = ua + ub;
        (ub / z, z)
    };
    let mean_llr = |t: f64| {
        let (qb, _) = tilted(t);
        (1.0 - qb) * w.a + qb * w.b
    };
    let target = threshold / n as f64;
    let t = if mean_llr(1.0) <= target {
        1.0
    } else if mean_llr(0.0) >= target {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_llr(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (qb, z) = tilted(t);
    let q = OutcomeDist::new(1.0 - qb, qb)?;
    let ln_z = z.ln();
    let log_w: Vec<f64> = (0..trials)
        .filter_map(|_| {
            let l = w.llr(sample_counts(&q, n, rng));
            (l < threshold).then(|| (1.0 - t) * l + n as f64 * ln_z)
        })
        .collect();
    if log_w.is_empty() {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let m = trials as f64;
    let ln_sum = log_sum_exp(log_w.iter().copied());
    let ln_mean = ln_sum - m.ln();
    // relative SE from the second moment of the normalised weights
    let second = log_w.iter().map(|v| (2.0 * (v - ln_mean)).exp()).sum::<f64>() / m;
    let rel_se = ((second - 1.0).max(0.0) / m).sqrt();
    Ok((ln_mean, rel_se))
}

/// Convention for `Φ⁻¹` in the second-order Stein term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantileConvention {
    /// Inverse standard normal CDF.
    #[default]
    Normal,
    /// `erf⁻¹(2δ − 1)`, i.e. the normal quantile without its `√2` factor.
    InverseErf,
}

impl QuantileConvention {
    pub fn quantile(self, delta: f64) -> f64 {
        match self {
            QuantileConvention::Normal => Normal::standard().inverse_cdf(delta),
            QuantileConvention::InverseErf => erf_inv(2.0 * delta - 1.0),
        }
    }
}

/// First- and second-order predictions of `ln β_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinPrediction {
    pub first: f64,
    pub second: f64,
}

/// `ln β_n ≈ −nD` and `ln β_n ≈ −nD − √(n b)·Φ⁻¹(δ)` for relative entropy `D`
/// and relative-entropy variance `b`.
pub fn stein_prediction(d: f64, b: f64, delta: f64, n: u64, conv: QuantileConvention) -> Result<SteinPrediction> {
    if !(d >= 0.0) {
        return Err(invalid("D", format!("must be >= 0, got {d}")));
    }
    if !(b >= 0.0) {
        return Err(invalid("b", format!("must be >= 0, got {b}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(invalid("n", "need at least one copy"));
    }
    let nf = n as f64;
    let first = -nf * d;
    let second = first - (nf * b).sqrt() * conv.quantile(delta);
    Ok(SteinPrediction {
        first: first + 0.0,
        second: second + 0.0,
    })
}

/// Variance of the per-click log-likelihood ratio `ln(p0/p1)` under `p0`.
pub fn classical_relative_entropy_variance(p0: &OutcomeDist, p1: &OutcomeDist) -> Result<f64> {
    let w = LlrWeights::new(p0, p1)?;
    let mean = -(p0.p_a() * w.a + p0.p_b() * w.b);
    Ok(p0.p_a() * (-w.a - mean).powi(2) + p0.p_b() * (-w.b - mean).powi(2))
}

/// Summary of a calibrated hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    pub n: u64,
    pub threshold: f64,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub ln_beta_n: f64,
    pub ln_beta_rel_se: f64,
    pub predicted: SteinPrediction,
}
