//! Radial transport for the double divergence on a space of constant
//! curvature `κ`. Along a unit-speed geodesic from `y` the restriction
//! `f(t) = φ(x(t))` obeys `f'' + κ f = ψ_rr`, so
//! `f(0) = c_κ(ρ) f(ρ) − s_κ(ρ) f'(ρ) + ∫₀^ρ s_κ(t) ψ_rr(t) dt`.

use nalgebra::Matrix2;

use crate::error::Result;
use crate::quadrature;

/// Generalized sine and cosine: `s'' = −κ s`, `s(0) = 0`, `s'(0) = 1`, `c = s'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenTrig {
    pub kappa: f64,
}

impl GenTrig {
    pub fn new(kappa: f64) -> Self {
        Self { kappa }
    }

    pub fn s(&self, t: f64) -> f64 {
        let k = self.kappa;
        let q = k * t * t;
        if q.abs() < 1e-4 {
            return t * (1.0 - q / 6.0 + q * q / 120.0 - q * q * q / 5040.0);
        }
        if k > 0.0 {
            (k.sqrt() * t).sin() / k.sqrt()
        } else {
            ((-k).sqrt() * t).sinh() / (-k).sqrt()
        }
    }

    pub fn c(&self, t: f64) -> f64 {
        let k = self.kappa;
        let q = k * t * t;
        if q.abs() < 1e-4 {
            return 1.0 - q / 2.0 + q * q / 24.0 - q * q * q / 720.0;
        }
        if k > 0.0 {
            (k.sqrt() * t).cos()
        } else {
            ((-k).sqrt() * t).cosh()
        }
    }

    /// `exp(−t M)` for the radial generator `M = [[0, 1], [−κ, 0]]` acting on `(f, f')`.
    pub fn backward_transport(&self, t: f64) -> Matrix2<f64> {
        let (c, s) = (self.c(t), self.s(t));
        Matrix2::new(c, -s, self.kappa * s, c)
    }
}

/// Closed-form radial data at geodesic distance `ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialOracle {
    pub trig: GenTrig,
    pub rho: f64,
    /// Coefficients of `(f(ρ), f'(ρ))` in the endpoint pairing: `(c_κ(ρ), −s_κ(ρ))`.
    pub b: [f64; 2],
}

impl RadialOracle {
    /// Kernel weight `s_κ(t)` multiplying `ψ_rr` at distance `t` from `y`.
    pub fn weight(&self, t: f64) -> f64 {
        self.trig.s(t)
    }

    /// `f(0)` from `ψ_rr` on `[0, ρ]` and the endpoint values, by adaptive quadrature.
    pub fn recover<F: Fn(f64) -> f64>(&self, psi_rr: &F, f_rho: f64, fp_rho: f64, tol: f64) -> Result<f64> {
        let k = if self.rho > 0.0 {
            quadrature::adaptive(&|t| self.weight(t) * psi_rr(t), 0.0, self.rho, tol)?
        } else {
            0.0
        };
        Ok(self.b[0] * f_rho + self.b[1] * fp_rho + k)
    }
}

pub fn curvature_oracle_radial(kappa: f64, rho: f64) -> RadialOracle {
    let trig = GenTrig::new(kappa);
    RadialOracle { trig, rho, b: [trig.c(rho), -trig.s(rho)] }
}

/// Integrates `f'' = −κ f + ψ_rr` backwards from `t = ρ` to `0` with
/// fixed-step RK4 and returns `(f(0), f'(0))`.
pub fn radial_transport_rk4<F: Fn(f64) -> f64>(kappa: f64, rho: f64, psi_rr: &F, f_rho: f64, fp_rho: f64, steps: usize) -> [f64; 2] {
    let rhs = |t: f64, u: [f64; 2]| [u[1], -kappa * u[0] + psi_rr(t)];
    let h = -rho / steps as f64;
    let mut u = [f_rho, fp_rho];
    let mut t = rho;
    for _ in 0..steps {
        let k1 = rhs(t, u);
        let k2 = rhs(t + h / 2.0, [u[0] + h / 2.0 * k1[0], u[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(t + h / 2.0, [u[0] + h / 2.0 * k2[0], u[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(t + h, [u[0] + h * k3[0], u[1] + h * k3[1]]);
        for i in 0..2 {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn trig_values() {
        let one = GenTrig::new(1.0);
        assert!(one.c(FRAC_PI_2).abs() < 1e-15);
        assert!((one.s(FRAC_PI_2) - 1.0).abs() < 1e-15);
        let m = GenTrig::new(-1.0);
        assert!((m.c(1.0) - 1f64.cosh()).abs() < 1e-15);
        assert!((m.s(1.0) - 1f64.sinh()).abs() < 1e-15);
        assert_eq!(GenTrig::new(0.0).s(0.7), 0.7);
        assert_eq!(GenTrig::new(0.0).c(0.7), 1.0);
    }

    #[test]
    fn series_branch_is_continuous() {
        for k in [-3.0, 2.0] {
            let g = GenTrig::new(k);
            let t = (1e-4f64 / k.abs()).sqrt();
            let below = GenTrig::new(k * (1.0 - 1e-9));
            assert!((g.s(t) - below.s(t)).abs() < 1e-12);
            assert!((g.c(t) - below.c(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_oracle_coefficients() {
        let o = curvature_oracle_radial(0.0, 1.3);
        assert_eq!(o.b, [1.0, -1.3]);
        assert_eq!(o.weight(0.4), 0.4);
    }

    #[test]
    fn closed_form_matches_rk4() {
        let f = |t: f64| (0.7 * t).sin() + t * t * t;
        let fp = |t: f64| 0.7 * (0.7 * t).cos() + 3.0 * t * t;
        let fpp = |t: f64| -0.49 * (0.7 * t).sin() + 6.0 * t;
        for kappa in [-1.0, 0.0, 1.0] {
            let rho = 1.2;
            let psi = |t: f64| fpp(t) + kappa * f(t);
            let o = curvature_oracle_radial(kappa, rho);
            let closed = o.recover(&psi, f(rho), fp(rho), 1e-14).unwrap();
            let [numeric, _] = radial_transport_rk4(kappa, rho, &psi, f(rho), fp(rho), 2000);
            assert!((closed - f(0.0)).abs() < 1e-12, "{kappa}");
            assert!((numeric - closed).abs() < 1e-10, "{kappa}");
        }
    }

    #[test]
    fn transport_matrix_inverts_generator_flow() {
        let g = GenTrig::new(-0.6);
        let a = g.backward_transport(0.3) * g.backward_transport(0.5);
        assert!((a - g.backward_transport(0.8)).amax() < 1e-14);
    }
}
