//! Source geometry and the optical phases it imprints on a pair of collectors.
//!
//! Two conventions coexist:
//!
//! * **exact** (x0-referenced): the star sits at `x0`, the planet at `x0 + s`,
//!   and each collector pair phase carries the baseline offset `kappa`.
//! * **small-angle** (centroid-referenced): the sources sit at `±s/2` about the
//!   axis, giving the symmetric pair `±k·d·θ/2`.
//!
//! Hypothesis testing consumes the exact phases. Separation estimation and the
//! Fisher-information routines consume the small-angle pair.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Default bound on `(|x0| + s) / z0` for the paraxial expansion.
pub const DEFAULT_PARAXIAL_LIMIT: f64 = 0.01;

/// Source geometry and brightness. All lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    x0: f64,
    s: f64,
    z0: f64,
    epsilon: f64,
    lambda: f64,
    paraxial_limit: f64,
}

impl Scene {
    pub fn new(x0: f64, s: f64, z0: f64, epsilon: f64, lambda: f64) -> Result<Self> {
        if !x0.is_finite() {
            return Err(invalid("x0", "must be finite"));
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(invalid("s", format!("must be >= 0, got {s}")));
        }
        if !(z0.is_finite() && z0 > 0.0) {
            return Err(invalid("z0", format!("must be > 0, got {z0}")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
        }
        Ok(Self {
            x0,
            s,
            z0,
            epsilon,
            lambda,
            paraxial_limit: DEFAULT_PARAXIAL_LIMIT,
        })
    }

    /// Equal-brightness pair centred on the optical axis (`x0 = -s/2`, `epsilon = 1/2`).
    pub fn centred_pair(theta: f64, z0: f64, lambda: f64) -> Result<Self> {
        let s = theta * z0;
        Self::new(-s / 2.0, s, z0, 0.5, lambda)
    }

    pub fn with_paraxial_limit(mut self, limit: f64) -> Result<Self> {
        if !(limit.is_finite() && limit > 0.0) {
            return Err(invalid("paraxial_limit", format!("must be > 0, got {limit}")));
        }
        self.paraxial_limit = limit;
        Ok(self)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.x0, self.s, self.z0, epsilon, self.lambda)?.with_paraxial_limit(self.paraxial_limit)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn paraxial_limit(&self) -> f64 {
        self.paraxial_limit
    }

    /// Wavenumber `2π/λ` in rad/m.
    pub fn k(&self) -> f64 {
        2.0 * PI / self.lambda
    }

    /// Angular separation `s / z0` in radians.
    pub fn angular_separation(&self) -> f64 {
        self.s / self.z0
    }

    pub fn paraxial_ratio(&self) -> f64 {
        (self.x0.abs() + self.s) / self.z0
    }

    pub fn is_paraxial(&self) -> bool {
        self.paraxial_ratio() < self.paraxial_limit
    }

    fn check_paraxial(&self) -> Result<()> {
        if self.is_paraxial() {
            Ok(())
        } else {
            Err(Error::ParaxialViolation {
                ratio: self.paraxial_ratio(),
                limit: self.paraxial_limit,
            })
        }
    }
}

/// Transverse positions of the two collectors, in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline {
    d1: f64,
    d2: f64,
}

impl Baseline {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        if !(d1.is_finite() && d2.is_finite()) {
            return Err(invalid("d1/d2", "collector positions must be finite"));
        }
        if d1 == d2 {
            return Err(invalid("d1/d2", "collectors must be at distinct positions"));
        }
        Ok(Self { d1, d2 })
    }

    /// Collectors at `±d/2`, so that `kappa = 0`.
    pub fn symmetric(d: f64) -> Result<Self> {
        Self::new(d / 2.0, -d / 2.0)
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }
    pub fn d2(&self) -> f64 {
        self.d2
    }

    /// Signed baseline `d1 - d2`.
    pub fn d(&self) -> f64 {
        self.d1 - self.d2
    }

    /// Baseline phase offset `k (d2² - d1²) / (2 z0)` in radians.
    pub fn kappa(&self, scene: &Scene) -> f64 {
        scene.k() * (self.d2 * self.d2 - self.d1 * self.d1) / (2.0 * scene.z0)
    }
}

/// Collector-pair phases of the two sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    /// Planet phase difference (exact, x0-referenced).
    pub psi1: f64,
    /// Star phase difference (exact, x0-referenced).
    pub psi2: f64,
    /// Centroid-referenced star phase `k·d·θ/2`.
    pub phi_small: f64,
    /// Centroid-referenced planet phase `-k·d·θ/2`.
    pub psi_small: f64,
}

/// Phase of a point source at transverse position `x` (exact paraxial form).
fn source_phase(scene: &Scene, baseline: &Baseline, x: f64) -> f64 {
    baseline.kappa(scene) + scene.k() * baseline.d() * x / scene.z0
}

pub fn phases(scene: &Scene, baseline: &Baseline) -> Result<PhasePair> {
    scene.check_paraxial()?;
    let psi1 = source_phase(scene, baseline, scene.x0 + scene.s);
    let psi2 = source_phase(scene, baseline, scene.x0);
    let half = scene.k() * baseline.d() * scene.angular_separation() / 2.0;
    Ok(PhasePair {
        psi1,
        psi2,
        phi_small: half,
        psi_small: -half,
    })
}

/// Weighted-centre interferometer phase for discrimination.
pub fn optimal_alpha(scene: &Scene, baseline: &Baseline) -> f64 {
    let eps = scene.epsilon;
    let centre = eps * (scene.x0 + scene.s) / scene.z0 + (1.0 - eps) * scene.x0 / scene.z0;
    -baseline.kappa(scene) + scene.k() * baseline.d() * centre
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const LAMBDA: f64 = 848.2e-9;
    const D: f64 = 5.3e-3;

    #[test]
    fn angular_separation_examples() {
        let sc = Scene::new(0.0, 15e-6, 1.0, 0.5, LAMBDA).unwrap();
        assert_relative_eq!(sc.angular_separation(), 1.5e-5, max_relative = 1e-12);
        let sc = Scene::new(0.0, 0.0, 1.0, 0.5, LAMBDA).unwrap();
        assert_eq!(sc.angular_separation(), 0.0);
        let sc = Scene::new(0.0, 60e-6, 1.0, 0.5, LAMBDA).unwrap();
        assert_relative_eq!(sc.angular_separation(), 6.0e-5, max_relative = 1e-12);
    }

    #[test]
    fn lab_baseline_gain() {
        let sc = Scene::new(0.0, 0.0, 1.0, 0.0, LAMBDA).unwrap();
        let kd = sc.k() * D;
        assert_relative_eq!(kd, 3.92606e4, max_relative = 1e-5);
    }

    #[test]
    fn small_angle_phase_at_fifteen_microns() {
        let sc = Scene::centred_pair(1.5e-5, 1.0, LAMBDA).unwrap();
        let bl = Baseline::symmetric(D).unwrap();
        let p = phases(&sc, &bl).unwrap();
        assert!((p.phi_small - 0.2945).abs() < 5e-4);
        assert_eq!(p.phi_small, -p.psi_small);
        // centred pair on a symmetric baseline: exact phases coincide with the small-angle pair
        assert_relative_eq!(p.psi1, p.phi_small, max_relative = 1e-12);
        assert_relative_eq!(p.psi2, p.psi_small, max_relative = 1e-12);
    }

    #[test]
    fn coincident_sources_share_phase() {
        let sc = Scene::new(3e-6, 0.0, 1.0, 0.3, LAMBDA).unwrap();
        let bl = Baseline::new(1e-3, -4e-3).unwrap();
        let p = phases(&sc, &bl).unwrap();
        assert_eq!(p.psi1, p.psi2);
    }

    #[test]
    fn symmetric_baseline_has_no_offset() {
        let sc = Scene::new(2e-6, 10e-6, 1.0, 0.3, LAMBDA).unwrap();
        let bl = Baseline::new(2.65e-3, -2.65e-3).unwrap();
        assert_eq!(bl.kappa(&sc), 0.0);
        let p = phases(&sc, &bl).unwrap();
        assert_relative_eq!(p.psi2, sc.k() * bl.d() * sc.x0() / sc.z0(), max_relative = 1e-14);
    }

    #[test]
    fn paraxial_violation_is_reported() {
        let sc = Scene::new(0.0, 0.02, 1.0, 0.5, LAMBDA).unwrap();
        let bl = Baseline::symmetric(D).unwrap();
        assert!(matches!(phases(&sc, &bl), Err(Error::ParaxialViolation { .. })));
        let relaxed = sc.with_paraxial_limit(0.05).unwrap();
        assert!(phases(&relaxed, &bl).is_ok());
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert!(Scene::new(0.0, 1e-6, 0.0, 0.5, LAMBDA).is_err());
        assert!(Scene::new(0.0, 1e-6, 1.0, 1.5, LAMBDA).is_err());
        assert!(Scene::new(0.0, -1e-6, 1.0, 0.5, LAMBDA).is_err());
        assert!(Scene::new(0.0, 1e-6, 1.0, 0.5, 0.0).is_err());
        assert!(Baseline::new(1e-3, 1e-3).is_err());
    }

    #[test]
    fn optimal_alpha_examples() {
        let bl = Baseline::symmetric(D).unwrap();
        let on_axis = Scene::new(0.0, 60e-6, 1.0, 0.0, LAMBDA).unwrap();
        assert_eq!(optimal_alpha(&on_axis, &bl), 0.0);

        let half = on_axis.with_epsilon(0.5).unwrap();
        let kd = half.k() * D;
        assert_relative_eq!(optimal_alpha(&half, &bl), 0.5 * kd * 6e-5, max_relative = 1e-12);
        assert!((optimal_alpha(&half, &bl) - 1.1778).abs() < 1e-4);

        let planet_only = Scene::new(4e-6, 60e-6, 1.0, 1.0, LAMBDA).unwrap();
        assert_relative_eq!(
            optimal_alpha(&planet_only, &bl),
            kd * (4e-6 + 60e-6),
            max_relative = 1e-12
        );
    }

    #[test]
    fn optimal_alpha_includes_baseline_offset() {
        let sc = Scene::new(1e-6, 20e-6, 1.0, 0.2, LAMBDA).unwrap();
        let bl = Baseline::new(4e-3, -1.3e-3).unwrap();
        let sym = Baseline::new(2.65e-3, -2.65e-3).unwrap();
        // same d, different offset
        let shift = optimal_alpha(&sc, &bl) - optimal_alpha(&sc, &sym);
        assert_relative_eq!(shift, -bl.kappa(&sc), max_relative = 1e-9);
    }

    fn arb_geometry() -> impl Strategy<Value = (Scene, Baseline)> {
        (
            -2e-3..2e-3f64,
            0.0..3e-3f64,
            0.5..5.0f64,
            0.0..=1.0f64,
            400e-9..1600e-9f64,
            -1e-2..1e-2f64,
            1e-4..1e-2f64,
        )
            .prop_map(|(x0, s, z0, eps, lam, d1, gap)| {
                (
                    Scene::new(x0, s, z0, eps, lam).unwrap(),
                    Baseline::new(d1, d1 - gap).unwrap(),
                )
            })
    }

    proptest! {
        #[test]
        fn phase_difference_tracks_separation((sc, bl) in arb_geometry()) {
            let p = phases(&sc, &bl).unwrap();
            let expect = sc.k() * bl.d() * sc.s() / sc.z0();
            let scale = expect.abs().max(p.psi1.abs()).max(1.0);
            prop_assert!(((p.psi1 - p.psi2) - expect).abs() <= 1e-12 * scale);
        }

        #[test]
        fn optimal_alpha_is_linear_in_epsilon((sc, bl) in arb_geometry()) {
            let a0 = optimal_alpha(&sc.with_epsilon(0.0).unwrap(), &bl);
            let a1 = optimal_alpha(&sc.with_epsilon(1.0).unwrap(), &bl);
            let eps = sc.epsilon();
            let mix = (1.0 - eps) * a0 + eps * a1;
            let a = optimal_alpha(&sc, &bl);
            prop_assert!((a - mix).abs() <= 1e-9 * a0.abs().max(a1.abs()).max(1.0));
        }

        #[test]
        fn star_phase_follows_closed_form((sc, bl) in arb_geometry(), shift in -1e-3..1e-3f64) {
            let moved = Scene::new(sc.x0() + shift, sc.s(), sc.z0(), sc.epsilon(), sc.lambda()).unwrap();
            let p = phases(&sc, &bl).unwrap();
            let q = phases(&moved, &bl).unwrap();
            let expect = sc.k() * bl.d() * shift / sc.z0();
            let scale = p.psi2.abs().max(q.psi2.abs()).max(1.0);
            prop_assert!(((q.psi2 - p.psi2) - expect).abs() <= 1e-11 * scale);
            prop_assert!(((q.psi1 - p.psi1) - expect).abs() <= 1e-11 * scale);
        }
    }
}
