//! Two-mode source states, hypothesis density matrices and the quantum
//! information quantities built on them.
//!
//! Entropies are in nats. Logarithms of density matrices go through the
//! closed-form 2×2 spectral decomposition; eigenvalues below
//! [`EIGEN_FLOOR`] are treated as zero.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::scene::{phases, Baseline, Scene};

/// Eigenvalues below this are treated as exact zeros.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Weight a state may place on the null space of the reference before the
/// relative entropy is declared infinite.
pub const SUPPORT_TOL: f64 = 1e-10;

const STATE_TOL: f64 = 1e-12;

/// Pure state `c1|d1⟩ + c2|d2⟩` on the two collector modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState2 {
    c1: C64,
    c2: C64,
}

impl PureState2 {
    pub fn new(c1: C64, c2: C64) -> Result<Self> {
        let norm = c1.norm_sqr() + c2.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(invalid("state", format!("norm² = {norm}, expected 1")));
        }
        Ok(Self { c1, c2 })
    }

    /// `(|d1⟩ + e^{iφ}|d2⟩)/√2`.
    pub fn with_relative_phase(phase: f64) -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            c1: C64::new(a, 0.0),
            c2: C64::from_polar(a, phase),
        }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.c1, self.c2]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState2) -> C64 {
        self.c1.conj() * other.c1 + self.c2.conj() * other.c2
    }

    pub fn projector(&self) -> DensityMatrix2 {
        let v = [self.c1, self.c2];
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = v[i] * v[j].conj();
            }
        }
        DensityMatrix2 { m }
    }
}

/// Hermitian, unit-trace, positive semidefinite 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    m: [[C64; 2]; 2],
}

impl DensityMatrix2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    pub fn diagonal(p1: f64, p2: f64) -> Result<Self> {
        Self::new([
            [C64::new(p1, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(p2, 0.0)],
        ])
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: [
                [C64::new(0.5, 0.0), C64::new(0.0, 0.0)],
                [C64::new(0.0, 0.0), C64::new(0.5, 0.0)],
            ],
        }
    }

    /// `½(I + r·σ)` for a Bloch vector with `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let [x, y, z] = r;
        Self::new([
            [C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y)],
            [C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0)],
        ])
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let off = self.m[1][0];
        [2.0 * off.re, 2.0 * off.im, self.m[0][0].re - self.m[1][1].re]
    }

    /// Convex combination `(1-w)·self + w·other`.
    pub fn mix(&self, other: &DensityMatrix2, w: f64) -> DensityMatrix2 {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = *x * (1.0 - w) + other.m[i][j] * w;
            }
        }
        DensityMatrix2 { m }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (self.m[0][1] - self.m[1][0].conj()).norm()
            + self.m[0][0].im.abs()
            + self.m[1][1].im.abs();
        if herm > STATE_TOL {
            return Err(invalid("density matrix", format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(invalid("density matrix", format!("trace {tr} != 1")));
        }
        let min = self.raw_eigenvalues()[1];
        if min < -STATE_TOL {
            return Err(invalid("density matrix", format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    fn raw_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let c = self.m[1][1].re;
        let mean = 0.5 * (a + c);
        let r = (0.5 * (a - c)).hypot(self.m[0][1].norm());
        [mean + r, mean - r]
    }

    /// Closed-form eigendecomposition. Eigenvalues are returned in
    /// descending order and clamped to `[0, 1]`.
    pub fn spectral(&self) -> SpectralDecomp {
        let a = self.m[0][0].re;
        let c = self.m[1][1].re;
        let b = self.m[0][1];
        let half = 0.5 * (a - c);
        let [hi, lo] = self.raw_eigenvalues();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);

        let top = if b.norm() == 0.0 {
            if a >= c {
                [one, zero]
            } else {
                [zero, one]
            }
        } else {
            let r = hi - 0.5 * (a + c);
            // pick the row of (H - λ)v = 0 that avoids cancellation
            let v = if half >= 0.0 {
                [C64::new(r + half, 0.0), b.conj()]
            } else {
                [b, C64::new(r - half, 0.0)]
            };
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        };
        let bottom = [-top[1].conj(), top[0].conj()];
        SpectralDecomp {
            values: [hi.clamp(0.0, 1.0), lo.clamp(0.0, 1.0)],
            vectors: [top, bottom],
        }
    }
}

/// Eigenvalues `p_i` with orthonormal eigenvectors `e_i` (`vectors[i]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDecomp {
    pub values: [f64; 2],
    pub vectors: [[C64; 2]; 2],
}

fn inner(u: &[C64; 2], v: &[C64; 2]) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// Star and planet states `(|ψ_star⟩, |ψ_planet⟩)` from the exact phases.
pub fn source_states(scene: &Scene, baseline: &Baseline) -> Result<(PureState2, PureState2)> {
    let p = phases(scene, baseline)?;
    Ok((
        PureState2::with_relative_phase(p.psi2),
        PureState2::with_relative_phase(p.psi1),
    ))
}

/// `(ρ0, ρ1)`: star alone versus the ε-weighted star/planet mixture.
pub fn hypothesis_states(scene: &Scene, baseline: &Baseline) -> Result<(DensityMatrix2, DensityMatrix2)> {
    let (star, planet) = source_states(scene, baseline)?;
    let rho0 = star.projector();
    let rho1 = rho0.mix(&planet.projector(), scene.epsilon());
    Ok((rho0, rho1))
}

/// Joint-eigenbasis pairs `(weight, ln p_i − ln q_j)` with weights
/// `p_i |⟨e_i|f_j⟩|²`. `None` when ρ has weight outside the support of σ.
fn joint_log_ratios(rho: &DensityMatrix2, sigma: &DensityMatrix2) -> Option<Vec<(f64, f64)>> {
    let sr = rho.spectral();
    let ss = sigma.spectral();
    let mut out = Vec::with_capacity(4);
    for i in 0..2 {
        let p = sr.values[i];
        if p < EIGEN_FLOOR {
            continue;
        }
        for j in 0..2 {
            let w = p * inner(&sr.vectors[i], &ss.vectors[j]).norm_sqr();
            if w == 0.0 {
                continue;
            }
            let q = ss.values[j];
            if q < EIGEN_FLOOR {
                if w > SUPPORT_TOL {
                    return None;
                }
                continue;
            }
            out.push((w, p.ln() - q.ln()));
        }
    }
    Some(out)
}

/// Quantum relative entropy `Tr[ρ(ln ρ − ln σ)]` in nats; `+∞` when the
/// support of ρ is not contained in that of σ.
pub fn relative_entropy(rho: &DensityMatrix2, sigma: &DensityMatrix2) -> f64 {
    match joint_log_ratios(rho, sigma) {
        Some(terms) => terms.iter().map(|(w, l)| w * l).sum::<f64>().max(0.0),
        None => f64::INFINITY,
    }
}

/// Relative-entropy variance `Tr[ρ(ln ρ − ln σ)²] − D²` in nats².
pub fn relative_entropy_variance(rho: &DensityMatrix2, sigma: &DensityMatrix2) -> f64 {
    match joint_log_ratios(rho, sigma) {
        Some(terms) => {
            let d: f64 = terms.iter().map(|(w, l)| w * l).sum();
            let m2: f64 = terms.iter().map(|(w, l)| w * l * l).sum();
            (m2 - d * d).max(0.0)
        }
        None => f64::INFINITY,
    }
}

/// Leading-order relative entropy `θ²k²εd²/4` for `k·d·θ ≪ 1`, `ε ≪ 1`.
pub fn qre_small_angle(theta: f64, k: f64, d: f64, epsilon: f64) -> f64 {
    let x = k * d * theta;
    x * x * epsilon / 4.0
}

/// Whether `(θ, k, d, ε)` lies where [`qre_small_angle`] is meant to apply.
pub fn small_angle_regime(theta: f64, k: f64, d: f64, epsilon: f64) -> bool {
    (k * d * theta).abs() <= 0.1 && epsilon <= 0.05
}

/// Closed-form separation QFI `k²(d1 − d2)²/4` in rad⁻².
pub fn qfi_closed(k: f64, d: f64) -> f64 {
    k * k * d * d / 4.0
}

/// Default finite-difference step `1e-3/(k·d)` for [`qfi_separation`].
pub fn default_qfi_step(k: f64, d: f64) -> f64 {
    1e-3 / (k * d).abs()
}

/// Centroid-referenced state `(1−ε)|ψ+⟩⟨ψ+| + ε|ψ−⟩⟨ψ−|` with phases `±k·d·θ/2`.
fn separation_state(theta: f64, kd: f64, epsilon: f64) -> DensityMatrix2 {
    let plus = PureState2::with_relative_phase(kd * theta / 2.0).projector();
    let minus = PureState2::with_relative_phase(-kd * theta / 2.0).projector();
    plus.mix(&minus, epsilon)
}

/// Numerical QFI for the separation, using central differences for ∂θρ and
/// the SLD form `2 Σ |⟨e_i|∂ρ|e_j⟩|²/(p_i + p_j)`.
pub fn qfi_separation(scene: &Scene, baseline: &Baseline, h: Option<f64>) -> Result<f64> {
    phases(scene, baseline)?;
    let kd = scene.k() * baseline.d();
    let h = h.unwrap_or_else(|| default_qfi_step(scene.k(), baseline.d()));
    if !(h > 0.0) {
        return Err(invalid("h", "finite-difference step must be positive"));
    }
    if h * kd.abs() > 0.1 {
        return Err(Error::StepTooLarge(h * kd.abs()));
    }
    let theta = scene.angular_separation();
    let eps = scene.epsilon();
    let rho = separation_state(theta, kd, eps);
    let up = separation_state(theta + h, kd, eps).entries();
    let down = separation_state(theta - h, kd, eps).entries();
    let mut drho = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            drho[i][j] = (up[i][j] - down[i][j]) / (2.0 * h);
        }
    }
    let sd = rho.spectral();
    let mut f = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let denom = sd.values[i] + sd.values[j];
            if denom < EIGEN_FLOOR {
                continue;
            }
            let ei = sd.vectors[i];
            let ej = sd.vectors[j];
            let d_ej = [
                drho[0][0] * ej[0] + drho[0][1] * ej[1],
                drho[1][0] * ej[0] + drho[1][1] * ej[1],
            ];
            f += 2.0 * inner(&ei, &d_ej).norm_sqr() / denom;
        }
    }
    Ok(f)
}

pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}
