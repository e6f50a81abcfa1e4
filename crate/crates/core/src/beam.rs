//! Rotating Euler–Bernoulli beam clamped to a hub: cantilever modes and the
//! resulting oscillator parameters `ω_n = cδ_n²/l²`,
//! `b_n = 2 l k_n δ_n⁻¹ (l δ_n⁻¹ - d γ_n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::OscillatorSystem;
use crate::quadrature;

/// `c = sqrt(EI/ρ)`, beam length `l`, hub radius `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub c: f64,
    pub l: f64,
    pub d: f64,
}

impl Default for BeamParams {
    fn default() -> Self {
        Self { c: 1.0, l: 1.0, d: 1.0 }
    }
}

impl BeamParams {
    pub fn new(c: f64, l: f64, d: f64) -> Result<Self> {
        let p = Self { c, l, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("l", self.l), ("d", self.d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Argument(format!("beam parameter {name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamMode {
    pub n: usize,
    pub delta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub b: f64,
    /// `k_n`, positive so that `b_n > 0`.
    pub norm_const: f64,
}

/// `cos δ + sech δ`, i.e. `1 + cos δ cosh δ` divided by `cosh δ`.
pub fn frequency_residual(delta: f64) -> f64 {
    delta.cos() + 1.0 / delta.cosh()
}

fn frequency_residual_deriv(delta: f64) -> f64 {
    -delta.sin() - delta.tanh() / delta.cosh()
}

/// `π(2n-1)/2`.
pub fn delta_asymptote(n: usize) -> f64 {
    PI * (2 * n - 1) as f64 / 2.0
}

/// n-th positive root of `1 + cos δ cosh δ = 0`.
pub fn solve_delta(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("mode index starts at 1".into()));
    }
    let guess = delta_asymptote(n);
    if n > 30 && frequency_residual(guess).abs() < 1e-14 {
        return Ok(guess);
    }
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    let (mut flo, fhi) = (frequency_residual(lo), frequency_residual(hi));
    if flo * fhi > 0.0 {
        return Err(Error::Numeric(format!("no sign change bracketing delta_{n}")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = frequency_residual(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..20 {
        let step = frequency_residual(x) / frequency_residual_deriv(x);
        let next = x - step;
        if !(next > lo - 1e-6 && next < hi + 1e-6) {
            break;
        }
        x = next;
        if step.abs() <= 1e-15 * x {
            break;
        }
    }
    if frequency_residual(x).abs() > 1e-12 {
        return Err(Error::Numeric(format!(
            "delta_{n} residual {:e} too large",
            frequency_residual(x)
        )));
    }
    Ok(x)
}

/// `γ = -(e^δ - sin δ + cos δ)/(e^δ + sin δ + cos δ)`, evaluated with `e^{-δ}`.
pub fn gamma(delta: f64) -> f64 {
    let e = (-delta).exp();
    let (s, c) = delta.sin_cos();
    -(1.0 - e * (s - c)) / (1.0 + e * (s + c))
}

/// Unnormalized cantilever shape `φ(x)` on `[0, 1]`; the growing exponential
/// only enters through `e^{δ(x-1)}`.
pub fn phi(delta: f64, gamma: f64, x: f64) -> f64 {
    let (s, c) = delta.sin_cos();
    let grow = s * (delta * (x - 1.0)).exp() / (1.0 + (-delta).exp() * (s + c));
    let decay = 0.5 * (1.0 - gamma) * (-delta * x).exp();
    let (sx, cx) = (delta * x).sin_cos();
    -grow - decay + gamma * sx + cx
}

fn panels_for(delta: f64) -> usize {
    (delta / PI).ceil().max(1.0) as usize
}

/// `‖φ‖_{L²(0,1)}` by composite Gauss–Legendre, checked against a rule with
/// twice the panels.
pub fn phi_norm(delta: f64, gamma: f64) -> Result<f64> {
    let p = panels_for(delta);
    let coarse = quadrature::composite(0.0, 1.0, p, |x| phi(delta, gamma, x).powi(2));
    let fine = quadrature::composite(0.0, 1.0, 2 * p, |x| phi(delta, gamma, x).powi(2));
    if (coarse - fine).abs() > 1e-12 * fine {
        return Err(Error::Numeric(format!(
            "mode norm quadrature not converged: {coarse} vs {fine}"
        )));
    }
    Ok(fine.sqrt())
}

pub fn mode_data(n: usize, params: &BeamParams) -> Result<BeamMode> {
    params.validate()?;
    let delta = solve_delta(n)?;
    let gamma = gamma(delta);
    let BeamParams { c, l, d } = *params;
    let norm_const = 1.0 / (l.sqrt() * phi_norm(delta, gamma)?);
    let omega = c * delta * delta / (l * l);
    let b = 2.0 * l * norm_const / delta * (l / delta - d * gamma);
    Ok(BeamMode {
        n,
        delta,
        gamma,
        omega,
        b,
        norm_const,
    })
}

/// `φ_n(x)` for `x ∈ [0, 1]`.
pub fn mode_shape(n: usize, x: f64, _params: &BeamParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Argument(format!("x = {x} outside [0, 1]")));
    }
    let delta = solve_delta(n)?;
    Ok(phi(delta, gamma(delta), x))
}

impl BeamMode {
    /// Normalized eigenfunction `W_n(x) = k_n φ_n(x/l)` on `[0, l]`.
    pub fn eigenfunction(&self, x: f64, params: &BeamParams) -> f64 {
        self.norm_const * phi(self.delta, self.gamma, x / params.l)
    }
}

pub fn modes(n_max: usize, params: &BeamParams) -> Result<Vec<BeamMode>> {
    (1..=n_max).into_par_iter().map(|n| mode_data(n, params)).collect()
}

/// Oscillator chain of the first `n_max` beam modes.
/// Mode table with columns `n,delta,gamma,omega,b,norm_const`.
pub fn mode_table_csv(modes: &[BeamMode]) -> String {
    let mut s = String::from("n,delta,gamma,omega,b,norm_const\n");
    for m in modes {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            m.n, m.delta, m.gamma, m.omega, m.b, m.norm_const
        );
    }
    s
}

pub fn build_system(n_max: usize, params: &BeamParams) -> Result<OscillatorSystem> {
    if n_max == 0 {
        return Err(Error::Argument("n_max must be at least 1".into()));
    }
    let modes = modes(n_max, params)?;
    OscillatorSystem::new(
        modes.iter().map(|m| m.omega).collect(),
        modes.iter().map(|m| m.b).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// plain bisection on the unscaled equation
    fn bisect_oracle(mut lo: f64, mut hi: f64) -> f64 {
        let f = |d: f64| 1.0 + d.cos() * d.cosh();
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(lo) * f(m) <= 0.0 {
                hi = m
            } else {
                lo = m
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn first_root() {
        let oracle = bisect_oracle(1.0, 3.0);
        let d1 = solve_delta(1).unwrap();
        assert!((d1 - oracle).abs() < 1e-12);
        assert!((d1 - 1.87510407).abs() < 1e-7);
    }

    #[test]
    fn roots_approach_asymptote() {
        for n in 1..=60 {
            let d = solve_delta(n).unwrap();
            assert!(frequency_residual(d).abs() < 1e-12);
            if n >= 10 {
                assert!((d - delta_asymptote(n)).abs() < 1e-6, "n={n}");
            }
        }
        assert!(solve_delta(0).is_err());
    }

    #[test]
    fn first_mode_constants() {
        let m = mode_data(1, &BeamParams::default()).unwrap();
        assert!((m.omega - 3.51602).abs() < 1e-5);
        assert!((m.gamma + 0.73410).abs() < 1e-5);
        assert!(m.b > 0.0 && m.norm_const > 0.0);
    }

    #[test]
    fn omega_asymptotics() {
        let m = mode_data(20, &BeamParams::default()).unwrap();
        let a = PI * PI * 39.0_f64.powi(2) / 4.0;
        assert!((m.omega / a - 1.0).abs() < 1e-4);
    }

    #[test]
    fn shape_boundary_values() {
        let p = BeamParams::default();
        for n in [1, 2, 5, 40, 120] {
            assert!(mode_shape(n, 0.0, &p).unwrap().abs() < 1e-12);
            let d = solve_delta(n).unwrap();
            let h = 1e-4 / d;
            let slope = (phi(d, gamma(d), h) - phi(d, gamma(d), -h)) / (2.0 * h);
            assert!(slope.abs() < 1e-6 * d, "n={n} slope={slope}");
        }
        assert!(mode_shape(1, 1.0, &p).unwrap().abs() > 1.0);
        let tip = mode_shape(40, 1.0, &p).unwrap();
        assert!(tip.is_finite() && tip.abs() < 10.0);
        assert!(mode_shape(1, 1.5, &p).is_err());
    }

    #[test]
    fn gamma_tends_to_minus_one() {
        let g: Vec<f64> = (1..=30).map(|n| gamma(solve_delta(n).unwrap())).collect();
        assert!(g.iter().all(|&v| v < 0.0));
        let dist: Vec<f64> = g.iter().map(|v| (v + 1.0).abs()).collect();
        assert!(dist.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn norms_are_order_one() {
        for n in [1, 2, 3, 10, 50, 200] {
            let d = solve_delta(n).unwrap();
            let nv = phi_norm(d, gamma(d)).unwrap();
            assert!((0.5..=2.0).contains(&nv), "n={n} norm={nv}");
        }
    }

    #[test]
    fn gains_decay_like_inverse_n() {
        let sys = build_system(200, &BeamParams::default()).unwrap();
        for (i, b) in sys.b().iter().enumerate().skip(9) {
            let nb = b * (i + 1) as f64;
            assert!((0.1..=10.0).contains(&nb), "n={} b_n n={nb}", i + 1);
        }
    }

    #[test]
    fn eigenrelation_by_finite_differences() {
        let p = BeamParams { c: 1.0, l: 2.0, d: 0.5 };
        for n in 1..=3 {
            let m = mode_data(n, &p).unwrap();
            let lam = (m.delta / p.l).powi(4);
            let h = 2e-2;
            // 4th derivative, O(h^4) 7-point stencil
            let c = [-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0];
            for &x in &[0.4, 1.0, 1.6] {
                let d4: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(i, ci)| ci * m.eigenfunction(x + (i as f64 - 3.0) * h, &p))
                    .sum::<f64>()
                    / h.powi(4);
                let w = m.eigenfunction(x, &p);
                assert!(
                    (d4 - lam * w).abs() <= 1e-4 * (lam * w).abs().max(lam * 0.1),
                    "n={n} x={x}"
                );
            }
        }
    }
}
