//! Averaging weights: a Bogovskii bump `η₁` on `R^d` or an angular density
//! on `S^{d−1}`, both normalized to unit mass.

use std::f64::consts::PI;

use crate::diffop::ScalarTestFunction;
use crate::error::{Error, Result};
use crate::multipoly::RealPoly;
use crate::quadrature;

/// Default profile exponent `p` in `(1 − t²)^p`.
pub const DEFAULT_POWER: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// `η₁(x) = N (1 − |x − c|²/R²)^p` on the ball `B_R(c)`.
    Bogovskii { center: Vec<f64>, radius: f64 },
    /// `η̸(ω) = N (1 − (∠(ω, ω₀)/θ)²)^p` on the cap of aperture `θ` around `ω₀`.
    /// An aperture of `π` or more gives the uniform density `1/|S^{d−1}|`.
    Conic { axis: Vec<f64>, aperture: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    pub kind: WeightKind,
    pub power: u32,
    /// Multiplier applied to the profile so that the total mass is one.
    pub norm: f64,
}

/// `|S^{n}|` for `n ≥ 0`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_area(n - 2),
    }
}

impl Weight {
    pub fn bogovskii(center: &[f64], radius: f64, power: u32) -> Result<Self> {
        if radius <= 0.0 || center.is_empty() {
            return Err(Error::Invalid("Bogovskii weight needs a positive radius".into()));
        }
        let d = center.len();
        let mass = sphere_area(d - 1)
            * radius.powi(d as i32)
            * quadrature::adaptive(&|t: f64| (1.0 - t * t).powi(power as i32) * t.powi(d as i32 - 1), 0.0, 1.0, 1e-14)?;
        Ok(Self { kind: WeightKind::Bogovskii { center: center.to_vec(), radius }, power, norm: 1.0 / mass })
    }

    pub fn conic(axis: &[f64], aperture: f64, power: u32) -> Result<Self> {
        let n = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 || aperture <= 0.0 {
            return Err(Error::Invalid("conic weight needs a nonzero axis and positive aperture".into()));
        }
        let d = axis.len();
        let axis: Vec<f64> = axis.iter().map(|v| v / n).collect();
        let mass = if aperture >= PI {
            sphere_area(d - 1)
        } else {
            let prof = |a: f64| (1.0 - (a / aperture).powi(2)).powi(power as i32) * a.sin().powi(d as i32 - 2);
            sphere_area(d - 2) * quadrature::adaptive(&prof, 0.0, aperture, 1e-14)?
        };
        Ok(Self { kind: WeightKind::Conic { axis, aperture: aperture.min(PI) }, power, norm: 1.0 / mass })
    }

    /// Uniform angular density on `S^{d−1}`.
    pub fn uniform_conic(d: usize) -> Self {
        let mut axis = vec![0.0; d];
        axis[0] = 1.0;
        Self::conic(&axis, PI, DEFAULT_POWER).expect("valid uniform weight")
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            WeightKind::Bogovskii { center, .. } => center.len(),
            WeightKind::Conic { axis, .. } => axis.len(),
        }
    }

    pub fn is_conic(&self) -> bool {
        matches!(self.kind, WeightKind::Conic { .. })
    }

    /// The Bogovskii weight as an exactly differentiable test function.
    pub fn as_test_function(&self) -> Option<ScalarTestFunction> {
        match &self.kind {
            WeightKind::Bogovskii { center, radius } => Some(ScalarTestFunction::bump(
                center,
                *radius,
                self.power,
                RealPoly::constant(center.len(), self.norm),
            )),
            WeightKind::Conic { .. } => None,
        }
    }

    /// `η₁(x)`; zero for conic weights.
    pub fn eta(&self, x: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::Bogovskii { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                let t = 1.0 - r2 / (radius * radius);
                if t <= 0.0 {
                    0.0
                } else {
                    self.norm * t.powi(self.power as i32)
                }
            }
            WeightKind::Conic { .. } => 0.0,
        }
    }

    /// `η̸(ω)` for a unit vector `ω`; zero for Bogovskii weights.
    pub fn eta_sphere(&self, omega: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::Conic { axis, aperture } => {
                if *aperture >= PI {
                    return self.norm;
                }
                let c: f64 = omega.iter().zip(axis).map(|(a, b)| a * b).sum();
                let a = c.clamp(-1.0, 1.0).acos();
                if a >= *aperture {
                    0.0
                } else {
                    self.norm * (1.0 - (a / aperture).powi(2)).powi(self.power as i32)
                }
            }
            WeightKind::Bogovskii { .. } => 0.0,
        }
    }

    /// Parameter interval `[u0, u1]` where `y + u v` lies in the Bogovskii ball.
    pub fn chord(&self, y: &[f64], v: &[f64]) -> Option<(f64, f64)> {
        let WeightKind::Bogovskii { center, radius } = &self.kind else {
            return None;
        };
        let a: f64 = v.iter().map(|t| t * t).sum();
        if a == 0.0 {
            return None;
        }
        let b: f64 = v.iter().zip(y.iter().zip(center)).map(|(t, (p, c))| t * (p - c)).sum();
        let cc: f64 = y.iter().zip(center).map(|(p, c)| (p - c) * (p - c)).sum::<f64>() - radius * radius;
        let disc = b * b - a * cc;
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        Some(((-b - s) / a, (-b + s) / a))
    }

    /// `R(z; y) = ∫_{|z|}^∞ η₁(y + r ẑ) r^{d−1} dr`, exact by Gauss–Legendre
    /// since the integrand is a polynomial on the chord.
    pub fn radial_integral(&self, y: &[f64], z: &[f64]) -> f64 {
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let zh: Vec<f64> = z.iter().map(|v| v / r).collect();
        let Some((lo, hi)) = self.chord(y, &zh) else { return 0.0 };
        let lo = lo.max(r);
        if hi <= lo {
            return 0.0;
        }
        let d = y.len();
        let n = self.power as usize + d;
        quadrature::gl(
            &|t: f64| {
                let x: Vec<f64> = y.iter().zip(&zh).map(|(a, b)| a + t * b).collect();
                self.eta(&x) * t.powi(d as i32 - 1)
            },
            lo,
            hi,
            n,
        )
    }

    /// Closed-form scalar factor shared by the flat formulas: `R(z; y)` for
    /// Bogovskii weights, `η̸(ẑ)` for conic ones.
    pub fn radial_factor(&self, y: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            WeightKind::Bogovskii { .. } => self.radial_integral(y, z),
            WeightKind::Conic { .. } => {
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let zh: Vec<f64> = z.iter().map(|v| v / r).collect();
                self.eta_sphere(&zh)
            }
        }
    }

    /// True when `y + z` can be reached from `y` inside the weight's support:
    /// the ray through `z` meets the ball beyond `|z|` (Bogovskii) or
    /// points into the cap (conic).
    pub fn in_support_cone(&self, y: &[f64], z: &[f64]) -> bool {
        self.radial_factor(y, z) != 0.0
    }
}
