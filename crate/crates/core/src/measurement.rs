//! Phase shift + 50:50 beam splitter measurement with finite visibility, and
//! the classical information it extracts. Direct imaging with a Gaussian PSF
//! is provided as the baseline.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::scene::{optimal_alpha, phases, Baseline, Scene};

const PROB_TOL: f64 = 1e-12;

/// Adjustable phase `alpha` (rad) and fringe visibility `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferometer {
    alpha: f64,
    nu: f64,
}

impl Interferometer {
    pub fn new(alpha: f64, nu: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(invalid("nu", format!("visibility must lie in [0, 1], got {nu}")));
        }
        Ok(Self { alpha, nu })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Fringe factor `ν cos α` seen by an equal-brightness pair.
    pub fn fringe_factor(&self) -> f64 {
        self.nu * self.alpha.cos()
    }
}

/// Binary detector distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDist {
    p_a: f64,
    p_b: f64,
}

impl OutcomeDist {
    pub fn new(p_a: f64, p_b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_a) || !(0.0..=1.0).contains(&p_b) || (p_a + p_b - 1.0).abs() > PROB_TOL {
            return Err(invalid("outcome distribution", format!("({p_a}, {p_b}) is not a probability vector")));
        }
        Ok(Self { p_a, p_b })
    }

    pub fn from_p_a(p_a: f64) -> Result<Self> {
        Self::new(p_a, 1.0 - p_a)
    }

    pub fn p_a(&self) -> f64 {
        self.p_a
    }
    pub fn p_b(&self) -> f64 {
        self.p_b
    }
}

/// Detector probabilities for incoherent sources given as `(weight, phase)`.
///
/// Each source contributes `w·½(1 ± ν cos(phase + α))`. The `b` branch is
/// evaluated as `½(1−ν) + ν sin²((phase+α)/2)` so that near-dark outputs keep
/// full relative precision.
pub fn outcome_probs(sources: &[(f64, f64)], ifo: &Interferometer) -> Result<OutcomeDist> {
    let total: f64 = sources.iter().map(|(w, _)| *w).sum();
    if sources.is_empty() || sources.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > PROB_TOL {
        return Err(Error::WeightNormalization(total));
    }
    let nu = ifo.nu;
    let mut p_a = 0.0;
    let mut p_b = 0.0;
    for &(w, phase) in sources {
        let s2 = ((phase + ifo.alpha) / 2.0).sin().powi(2);
        p_a += w * (0.5 * (1.0 + nu) - nu * s2);
        p_b += w * (0.5 * (1.0 - nu) + nu * s2);
    }
    Ok(OutcomeDist {
        p_a: p_a.clamp(0.0, 1.0),
        p_b: p_b.clamp(0.0, 1.0),
    })
}

/// Equal-brightness, centroid-referenced probabilities `½(1 ± R cos φ)`
/// with fringe factor `R = ν cos α`.
pub fn equal_brightness_probs(phi: f64, fringe: f64) -> Result<OutcomeDist> {
    if !(-1.0..=1.0).contains(&fringe) {
        return Err(invalid("fringe factor", format!("must lie in [-1, 1], got {fringe}")));
    }
    let c = fringe * phi.cos();
    Ok(OutcomeDist {
        p_a: 0.5 * (1.0 + c),
        p_b: 0.5 * (1.0 - c),
    })
}

/// KL divergence `Σ p ln(p/q)` in nats; `+∞` if `q` misses an outcome `p` can produce.
pub fn classical_relative_entropy(p: &OutcomeDist, q: &OutcomeDist) -> f64 {
    // p_a - q_a = q_b - p_b exactly; take the difference from whichever side keeps precision
    let term = |pp: f64, qq: f64, diff: f64| -> f64 {
        if pp == 0.0 {
            0.0
        } else if qq == 0.0 {
            f64::INFINITY
        } else {
            pp * (diff / qq).ln_1p()
        }
    };
    let diff_a = if p.p_b.min(q.p_b) < p.p_a.min(q.p_a) {
        q.p_b - p.p_b
    } else {
        p.p_a - q.p_a
    };
    (term(p.p_a, q.p_a, diff_a) + term(p.p_b, q.p_b, -diff_a)).max(0.0)
}

/// Outcome distributions under the one-source and two-source hypotheses.
pub fn hypothesis_outcomes(
    scene: &Scene,
    baseline: &Baseline,
    ifo: &Interferometer,
) -> Result<(OutcomeDist, OutcomeDist)> {
    let ph = phases(scene, baseline)?;
    let eps = scene.epsilon();
    let p0 = outcome_probs(&[(1.0, ph.psi2)], ifo)?;
    let p1 = outcome_probs(&[(1.0 - eps, ph.psi2), (eps, ph.psi1)], ifo)?;
    Ok((p0, p1))
}

/// `D(p_H0 ‖ p_H1)` for the interferometer at the given setting.
pub fn cre_of_measurement(scene: &Scene, baseline: &Baseline, ifo: &Interferometer) -> Result<f64> {
    if scene.epsilon() == 0.0 || scene.s() == 0.0 {
        phases(scene, baseline)?;
        return Ok(0.0);
    }
    let (p0, p1) = hypothesis_outcomes(scene, baseline, ifo)?;
    Ok(classical_relative_entropy(&p0, &p1))
}

const ALPHA_GRID: usize = 1024;
const ALPHA_TOL: f64 = 1e-6;

/// Maximise the measurement CRE over `α ∈ [−π, π)`: coarse grid, then
/// golden-section refinement around the best grid point. The analytic
/// weighted-centre phase is also evaluated and wins if it scores higher.
pub fn maximize_cre(scene: &Scene, baseline: &Baseline, nu: f64) -> Result<(f64, f64)> {
    let analytic = optimal_alpha(scene, baseline);
    let eval = |alpha: f64| -> Result<f64> { cre_of_measurement(scene, baseline, &Interferometer::new(alpha, nu)?) };
    let at_analytic = eval(analytic)?;
    if scene.epsilon() == 0.0 || scene.s() == 0.0 {
        return Ok((analytic, 0.0));
    }

    let step = 2.0 * PI / ALPHA_GRID as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..ALPHA_GRID {
        let a = -PI + step * i as f64;
        let v = eval(a)?;
        if v > best.0 {
            best = (v, a);
        }
    }
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > ALPHA_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut out = (mid, eval(mid)?);
    for cand in [(x1, f1), (x2, f2), (best.1, best.0)] {
        if cand.1 > out.1 {
            out = cand;
        }
    }
    if at_analytic > out.1 {
        out = (analytic, at_analytic);
    }
    Ok(out)
}

/// Classical Fisher information of the equal-brightness measurement with
/// fringe factor `V = ν cos α`, in rad⁻².
pub fn classical_fisher_info(theta: f64, fringe: f64, k: f64, d: f64) -> f64 {
    let g = k * d / 2.0;
    let phi = g * theta;
    let v2 = fringe * fringe;
    let s2 = phi.sin().powi(2);
    // 1 − V²cos²φ written without cancellation
    let denom = (1.0 - v2) + v2 * s2;
    if denom == 0.0 {
        return g * g * v2;
    }
    g * g * v2 * s2 / denom
}

/// Gaussian PSF (angular width `sigma`, rad) with the quadrature grid used
/// for direct-imaging integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfModel {
    sigma: f64,
    half_width: f64,
    points: usize,
}

/// Gaussian-to-Airy main-lobe matching factor: `σ = 0.42 λ / D`.
pub const AIRY_GAUSS_FACTOR: f64 = 0.42;

impl PsfModel {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_grid(sigma, 8.0, 4096)
    }

    /// Grid spans `half_width` PSF widths beyond the outermost source.
    pub fn with_grid(sigma: f64, half_width: f64, points: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("sigma", format!("must be > 0, got {sigma}")));
        }
        if !(half_width >= 8.0) {
            return Err(invalid("half_width", "grid must cover at least ±8σ"));
        }
        if points < 4096 {
            return Err(invalid("points", "grid needs at least 4096 points"));
        }
        Ok(Self {
            sigma,
            half_width,
            points,
        })
    }

    /// PSF of a circular lens of diameter `aperture`.
    pub fn for_aperture(lambda: f64, aperture: f64) -> Result<Self> {
        Self::new(AIRY_GAUSS_FACTOR * lambda / aperture.abs())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn grid(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let lo = lo - self.half_width * self.sigma;
        let hi = hi + self.half_width * self.sigma;
        let dx = (hi - lo) / (self.points - 1) as f64;
        let cells = self.sigma / dx;
        if cells < 16.0 {
            return Err(Error::GridUnderResolved(cells));
        }
        Ok((lo, dx))
    }

    fn gauss(&self, x: f64) -> f64 {
        let z = x / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    fn trapezoid(&self, lo: f64, dx: f64, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.points;
        let mut acc = 0.5 * (f(lo) + f(lo + dx * (n - 1) as f64));
        for i in 1..n - 1 {
            acc += f(lo + dx * i as f64);
        }
        acc * dx
    }
}

/// Direct-imaging relative entropy between a lone star at 0 and an
/// ε-weighted planet at `θ`: `(approx, numeric)` in nats.
///
/// `approx = (e^{θ²/σ²} − 1)ε²/2`; `numeric` integrates the 1-D image-plane
/// KL divergence by the trapezoid rule.
pub fn di_relative_entropy(theta: f64, psf: &PsfModel, epsilon: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    let sigma = psf.sigma;
    let approx = (theta * theta / (sigma * sigma)).exp_m1() * epsilon * epsilon / 2.0;
    let (lo, dx) = psf.grid(theta.min(0.0), theta.max(0.0))?;
    // p1/p0 = 1 + ε(e^{(2xθ−θ²)/2σ²} − 1); the first-order term integrates to zero
    let numeric = psf.trapezoid(lo, dx, |x| {
        let u = ((2.0 * x * theta - theta * theta) / (2.0 * sigma * sigma)).exp_m1();
        let eu = epsilon * u;
        psf.gauss(x) * (eu - eu.ln_1p())
    });
    Ok((approx, numeric.max(0.0)))
}

/// Direct-imaging Fisher information per photon for the separation of an
/// equal-brightness pair centred at 0, in rad⁻².
pub fn di_fisher_info(theta: f64, psf: &PsfModel) -> Result<f64> {
    let half = theta / 2.0;
    let s2 = psf.sigma * psf.sigma;
    let (lo, dx) = psf.grid(-half.abs(), half.abs())?;
    Ok(psf.trapezoid(lo, dx, |x| {
        let g1 = psf.gauss(x - half);
        let g2 = psf.gauss(x + half);
        let p = 0.5 * (g1 + g2);
        let dp = 0.25 * ((x - half) * g1 - (x + half) * g2) / s2;
        if p > 0.0 {
            dp * dp / p
        } else {
            0.0
        }
    }))
}
