//! First-order optimality test: for a direction `d` with `‖d‖_{L²} = 1`,
//! `J(u + εd) - J(u) = εL + ε²Q` exactly, with
//! `L = 2∫(x - x̄)·δx + (u - ū)d` and `Q = ∫‖δx‖² + d²`, where
//! `δẋ = Aδx + Bd`, `δx(0) = 0`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::ode::{dopri5, OdeOptions};
use super::DichotomySolution;
use crate::error::Result;
use crate::model::OscillatorSystem;
use crate::static_opt::TargetSpec;

const COSINE_MODES: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// `L` per direction.
    pub linear: Vec<f64>,
    /// `Q` per direction.
    pub quadratic: Vec<f64>,
    pub max_abs_linear: f64,
    pub min_quadratic: f64,
}

impl StationarityReport {
    /// `J(u + εd) - J(u)` for direction `i`.
    pub fn cost_increase(&self, i: usize, eps: f64) -> f64 {
        eps * self.linear[i] + eps * eps * self.quadratic[i]
    }
}

/// Random unit-norm combinations of `cos(mπt/T)`, `m < 7`.
fn direction(rng: &mut StdRng, horizon: f64) -> Vec<f64> {
    let mut a: Vec<f64> = (0..COSINE_MODES).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (m, v) in a.iter_mut().enumerate() {
        let basis = if m == 0 {
            1.0 / horizon.sqrt()
        } else {
            (2.0 / horizon).sqrt()
        };
        *v *= basis / norm;
    }
    a
}

pub fn stationarity_check(
    sys: &OscillatorSystem,
    target: &TargetSpec,
    sol: &DichotomySolution,
    directions: usize,
    seed: u64,
) -> Result<StationarityReport> {
    let n = sys.len();
    let (om, b) = (sys.omega(), sys.b());
    let horizon = sol.horizon();
    let xbar = target.xbar.to_flat();
    let mut rng = StdRng::seed_from_u64(seed);
    let opts = OdeOptions {
        rtol: 1e-11,
        atol: 1e-14,
        ..Default::default()
    };
    let mut linear = Vec::with_capacity(directions);
    let mut quadratic = Vec::with_capacity(directions);
    for _ in 0..directions {
        let a = direction(&mut rng, horizon);
        let d = |t: f64| -> f64 {
            a.iter()
                .enumerate()
                .map(|(m, c)| c * (m as f64 * PI * t / horizon).cos())
                .sum()
        };
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let dt = d(t);
            let (x, _, u) = sol.eval(t);
            let mut lin = (u - target.ubar) * dt;
            let mut quad = dt * dt;
            for k in 0..n {
                dy[k] = om[k] * y[n + k];
                dy[n + k] = -om[k] * y[k] + b[k] * dt;
            }
            for i in 0..2 * n {
                lin += (x[i] - xbar[i]) * y[i];
                quad += y[i] * y[i];
            }
            dy[2 * n] = 2.0 * lin;
            dy[2 * n + 1] = quad;
        };
        let out = dopri5(rhs, 0.0, horizon, &vec![0.0; 2 * n + 2], &opts, false)?;
        linear.push(out.y_end[2 * n]);
        quadratic.push(out.y_end[2 * n + 1]);
    }
    Ok(StationarityReport {
        max_abs_linear: linear.iter().map(|v| v.abs()).fold(0.0, f64::max),
        min_quadratic: quadratic.iter().cloned().fold(f64::INFINITY, f64::min),
        linear,
        quadratic,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{dichotomy_solve, dynamic_cost, simulate_open_loop, HorizonSpec};
    use super::*;
    use crate::model::StateVector;
    use crate::static_opt::solve_static;

    #[test]
    fn optimal_control_is_stationary() {
        let sys = OscillatorSystem::new(vec![1.0, 2.0], vec![1.0, 0.5]).unwrap();
        let target = TargetSpec::new(StateVector::zeros(2), 1.0).unwrap();
        let st = solve_static(&target, &sys).unwrap();
        let x0 = StateVector::new(vec![0.5, 0.0], vec![0.0, -0.2]).unwrap();
        let hs = HorizonSpec::uniform(5.0, x0, 5001).unwrap();
        let sol = dichotomy_solve(&sys, &target, &hs, &st).unwrap();
        let rep = stationarity_check(&sys, &target, &sol, 5, 7).unwrap();
        assert!(rep.max_abs_linear < 1e-7, "{rep:?}");
        assert!(rep.min_quadratic > 1.0 - 1e-9);

        let base = sol.trajectory(&hs.grid).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let a = direction(&mut rng, 5.0);
        let d: Vec<f64> = hs
            .grid
            .iter()
            .map(|t| {
                a.iter()
                    .enumerate()
                    .map(|(m, c)| c * (m as f64 * PI * t / 5.0).cos())
                    .sum()
            })
            .collect();
        let j0 = dynamic_cost(&simulate_open_loop(&sys, &hs.x0, &hs.grid, &base.u).unwrap(), &target).unwrap();
        for eps in [1e-2, 1e-3] {
            let u: Vec<f64> = base.u.iter().zip(&d).map(|(u, d)| u + eps * d).collect();
            let j = dynamic_cost(&simulate_open_loop(&sys, &hs.x0, &hs.grid, &u).unwrap(), &target).unwrap();
            let predicted = rep.cost_increase(0, eps);
            assert!(j - j0 >= 0.0);
            assert!(
                (j - j0 - predicted).abs() < 1e-3 * predicted,
                "eps={eps} {} vs {predicted}",
                j - j0
            );
        }
    }
}
