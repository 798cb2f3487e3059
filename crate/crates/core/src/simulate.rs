//! Seeded photon-event generation, interleaved reference pulses and
//! pseudo-thermal field sampling.
//!
//! All randomness comes from ChaCha20. A run is identified by a 64-bit seed;
//! independent trials use the stream selector of the same key, so trial `i`
//! draws from `stream_rng(seed, i)` regardless of how trials are scheduled.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::measurement::OutcomeDist;

pub const GENERATOR_ID: &str = "chacha20";

/// Generator for substream `stream` of run `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    A,
    B,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::A => "a",
            Outcome::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseTag {
    Signal,
    Reference,
}

impl PulseTag {
    pub fn label(self) -> &'static str {
        match self {
            PulseTag::Signal => "signal",
            PulseTag::Reference => "reference",
        }
    }
}

/// Detector click counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub n_a: u64,
    pub n_b: u64,
}

impl Counts {
    pub fn new(n_a: u64, n_b: u64) -> Self {
        Self { n_a, n_b }
    }

    pub fn total(&self) -> u64 {
        self.n_a + self.n_b
    }

    fn record(&mut self, o: Outcome) {
        match o {
            Outcome::A => self.n_a += 1,
            Outcome::B => self.n_b += 1,
        }
    }
}

/// Detected events in pulse order with their tags and per-tag tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    outcomes: Vec<Outcome>,
    tags: Vec<PulseTag>,
    signal: Counts,
    reference: Counts,
    seed: u64,
    raw_pulses: u64,
}

impl EventStream {
    fn with_capacity(seed: u64, n: usize) -> Self {
        Self {
            outcomes: Vec::with_capacity(n),
            tags: Vec::with_capacity(n),
            signal: Counts::default(),
            reference: Counts::default(),
            seed,
            raw_pulses: 0,
        }
    }

    fn push(&mut self, tag: PulseTag, o: Outcome) {
        self.outcomes.push(o);
        self.tags.push(tag);
        match tag {
            PulseTag::Signal => self.signal.record(o),
            PulseTag::Reference => self.reference.record(o),
        }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }
    pub fn tags(&self) -> &[PulseTag] {
        &self.tags
    }
    pub fn signal_counts(&self) -> Counts {
        self.signal
    }
    pub fn reference_counts(&self) -> Counts {
        self.reference
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn generator_id(&self) -> &'static str {
        GENERATOR_ID
    }
    /// Pulses fired, detected or not.
    pub fn raw_pulses(&self) -> u64 {
        self.raw_pulses
    }
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Line-oriented dump: two `#` header lines then `index,tag,outcome`.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# generator={}", GENERATOR_ID)?;
        for (i, (t, o)) in self.tags.iter().zip(&self.outcomes).enumerate() {
            writeln!(w, "{},{},{}", i, t.label(), o.label())?;
        }
        Ok(())
    }
}

impl fmt::Display for EventStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_text(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, dist: &OutcomeDist) -> Outcome {
    if rng.random::<f64>() < dist.p_a() {
        Outcome::A
    } else {
        Outcome::B
    }
}

/// `n` independent detections, all tagged as signal.
pub fn simulate_events(dist: &OutcomeDist, n: usize, seed: u64) -> EventStream {
    simulate_events_with(dist, n, seed, &mut stream_rng(seed, 0))
}

/// As [`simulate_events`] but drawing from a caller-supplied substream.
pub fn simulate_events_with<R: Rng + ?Sized>(dist: &OutcomeDist, n: usize, seed: u64, rng: &mut R) -> EventStream {
    let mut out = EventStream::with_capacity(seed, n);
    for _ in 0..n {
        let o = draw(rng, dist);
        out.push(PulseTag::Signal, o);
    }
    out.raw_pulses = n as u64;
    out
}

/// Click counts for `n` detections drawn in one binomial step.
pub fn sample_counts<R: Rng + ?Sized>(dist: &OutcomeDist, n: u64, rng: &mut R) -> Counts {
    let n_b = Binomial::new(n, dist.p_b()).map(|b| b.sample(rng)).unwrap_or(0);
    Counts::new(n - n_b, n_b)
}

/// Alternating signal/reference pulses. Each pulse is detected with
/// probability `eta_det`; undetected pulses leave no event.
pub fn interleaved_run(
    signal: &OutcomeDist,
    reference: &OutcomeDist,
    n_pairs: usize,
    eta_det: f64,
    seed: u64,
) -> Result<EventStream> {
    if n_pairs == 0 {
        return Err(invalid("n_pairs", "need at least one pulse pair"));
    }
    if !(eta_det > 0.0 && eta_det <= 1.0) {
        return Err(invalid("eta_det", format!("must lie in (0, 1], got {eta_det}")));
    }
    let mut rng = stream_rng(seed, 0);
    let expected = (2.0 * n_pairs as f64 * eta_det).ceil() as usize;
    let mut out = EventStream::with_capacity(seed, expected);
    for _ in 0..n_pairs {
        for (tag, dist) in [(PulseTag::Signal, signal), (PulseTag::Reference, reference)] {
            if eta_det < 1.0 && rng.random::<f64>() >= eta_det {
                continue;
            }
            let o = draw(&mut rng, dist);
            out.push(tag, o);
        }
    }
    out.raw_pulses = 2 * n_pairs as u64;
    Ok(out)
}

/// Fringe factor from reference-pulse counts with its binomial standard error.
pub fn estimate_calibration(reference: Counts) -> Result<(f64, f64)> {
    let n = reference.total();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let n = n as f64;
    let r = (reference.n_a as f64 - reference.n_b as f64) / n;
    Ok((r, ((1.0 - r * r).max(0.0) / n).sqrt()))
}

/// Complex field amplitudes and their intensities `|α|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSample {
    amplitudes: Vec<Complex64>,
    intensities: Vec<f64>,
    mean_photon: f64,
}

impl ThermalSample {
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }
    pub fn mean_photon(&self) -> f64 {
        self.mean_photon
    }
    pub fn len(&self) -> usize {
        self.intensities.len()
    }
    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }
}

fn check_sampling(mean_photon: f64, m: usize) -> Result<()> {
    if !(mean_photon.is_finite() && mean_photon > 0.0) {
        return Err(invalid("mean_photon", format!("must be > 0, got {mean_photon}")));
    }
    if m == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    Ok(())
}

/// Circular-Gaussian amplitudes with `⟨|α|²⟩ = n̄` (thermal P-function).
pub fn sample_thermal(mean_photon: f64, m: usize, seed: u64) -> Result<ThermalSample> {
    check_sampling(mean_photon, m)?;
    let mut rng = stream_rng(seed, 0);
    let scale = (mean_photon / 2.0).sqrt();
    let amplitudes: Vec<Complex64> = (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    let intensities = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    Ok(ThermalSample {
        amplitudes,
        intensities,
        mean_photon,
    })
}

/// Coherent control: fixed modulus `√n̄`, random phase only.
pub fn sample_coherent(mean_photon: f64, m: usize, seed: u64) -> Result<ThermalSample> {
    check_sampling(mean_photon, m)?;
    let mut rng = stream_rng(seed, 0);
    let r = mean_photon.sqrt();
    let amplitudes = (0..m)
        .map(|_| Complex64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU))
        .collect();
    Ok(ThermalSample {
        amplitudes,
        intensities: vec![mean_photon; m],
        mean_photon,
    })
}

pub const G2_MIN_SAMPLES: usize = 10_000;

/// Zero-delay intensity correlation `⟨I²⟩/⟨I⟩²`, evaluated as
/// `1 + Var(I)/⟨I⟩²` so that constant intensity yields exactly one.
pub fn g2_zero(sample: &ThermalSample) -> Result<f64> {
    let m = sample.len();
    if m < G2_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: m,
            need: G2_MIN_SAMPLES,
        });
    }
    let mean = sample.intensities.iter().sum::<f64>() / m as f64;
    if mean <= 0.0 {
        return Err(invalid("sample", "mean intensity is zero"));
    }
    let var = sample.intensities.iter().map(|i| (i - mean).powi(2)).sum::<f64>() / m as f64;
    Ok(1.0 + var / (mean * mean))
}
