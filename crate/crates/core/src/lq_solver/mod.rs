//! Finite-horizon tracking problem: minimize `∫₀ᵀ ‖x - x̄‖²_H + |u - ū|²` for
//! `ẋ = Ax + Bu`, `x(0) = x⁰`. Optimal pairs satisfy `u = ū + B*Λ`,
//! `Λ̇ = AΛ + x - x̄`, `Λ(T) = 0`.
//!
//! Two independent solvers: a Riccati sweep ([`solve_riccati_oracle`]) and
//! the stable/unstable eigen-representation ([`solve_bvp_spectral`]).

mod dichotomy;
pub mod ode;
mod riccati;
mod stationarity;

pub use dichotomy::{dense_eigen, dichotomy_solve, solve_bvp_spectral, DenseEigen, DichotomySolution};
pub use riccati::solve_riccati_oracle;
pub use stationarity::{stationarity_check, StationarityReport};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::model::{OscillatorSystem, StateVector};
use crate::static_opt::TargetSpec;

pub const DEFAULT_SAMPLES: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub x0: StateVector,
    pub grid: Vec<f64>,
}

impl HorizonSpec {
    pub fn new(horizon: f64, x0: StateVector, grid: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Argument(format!("horizon T = {horizon} must be positive")));
        }
        if grid.len() < 2 {
            return Err(Error::Argument("time grid needs at least two samples".into()));
        }
        if grid[0] != 0.0 || (grid[grid.len() - 1] - horizon).abs() > 1e-12 * horizon {
            return Err(Error::Argument("time grid must start at 0 and end at T".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("time grid must be strictly increasing".into()));
        }
        Ok(Self { horizon, x0, grid })
    }

    /// `samples` equally spaced points on `[0, T]`.
    pub fn uniform(horizon: f64, x0: StateVector, samples: usize) -> Result<Self> {
        let m = samples.max(2) - 1;
        let mut grid: Vec<f64> = (0..=m).map(|i| horizon * i as f64 / m as f64).collect();
        grid[m] = horizon;
        Self::new(horizon, x0, grid)
    }
}

/// Sampled state, costate `Λ = (λ, μ)` and control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<StateVector>,
    pub lam: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub u: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn costate(&self, i: usize) -> StateVector {
        StateVector {
            xi: self.lam[i].clone(),
            eta: self.mu[i].clone(),
        }
    }

    /// Max over samples of `‖x_a - x_b‖_H`, `‖Λ_a - Λ_b‖_H` and `|u_a - u_b|`.
    pub fn max_difference(&self, other: &Trajectory) -> Result<(f64, f64, f64)> {
        check_len("trajectory samples", other.len(), self.len())?;
        let mut d = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..self.len() {
            d.0 = d.0.max(self.x[i].sub(&other.x[i]).h_norm());
            d.1 = d.1.max(self.costate(i).sub(&other.costate(i)).h_norm());
            d.2 = d.2.max((self.u[i] - other.u[i]).abs());
        }
        Ok(d)
    }

    /// Max over samples of `‖x‖_H`, `‖Λ‖_H` and `|u|`.
    pub fn magnitudes(&self) -> (f64, f64, f64) {
        let mut m = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..self.len() {
            m.0 = m.0.max(self.x[i].h_norm());
            m.1 = m.1.max(self.costate(i).h_norm());
            m.2 = m.2.max(self.u[i].abs());
        }
        m
    }

    /// Largest of the three sup-norm differences, each relative to this
    /// trajectory's magnitude of the same quantity (absolute when it is zero).
    pub fn relative_difference(&self, other: &Trajectory) -> Result<f64> {
        let d = self.max_difference(other)?;
        let m = self.magnitudes();
        let rel = |d: f64, m: f64| if m > 0.0 { d / m } else { d };
        Ok(rel(d.0, m.0).max(rel(d.1, m.1)).max(rel(d.2, m.2)))
    }

    /// Columns `t, xi_1..xi_N, eta_1..eta_N, lam_1..lam_N, mu_1..mu_N, u`.
    pub fn to_csv(&self) -> String {
        let n = self.x.first().map_or(0, |x| x.len());
        let mut s = String::from("t");
        for name in ["xi", "eta", "lam", "mu"] {
            for k in 1..=n {
                let _ = write!(s, ",{name}_{k}");
            }
        }
        s.push_str(",u\n");
        for i in 0..self.len() {
            let _ = write!(s, "{:.16e}", self.times[i]);
            for v in self.x[i]
                .xi
                .iter()
                .chain(&self.x[i].eta)
                .chain(&self.lam[i])
                .chain(&self.mu[i])
            {
                let _ = write!(s, ",{v:.16e}");
            }
            let _ = writeln!(s, ",{:.16e}", self.u[i]);
        }
        s
    }
}

/// Dense `4N × 4N` matrix of the linearized optimality system acting on
/// `(δξ, δη, δλ, δμ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalGenerator {
    pub matrix: DMatrix<f64>,
}

pub fn assemble_generator(sys: &OscillatorSystem) -> VariationalGenerator {
    let n = sys.len();
    let (om, b) = (sys.omega(), sys.b());
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    for k in 0..n {
        m[(k, n + k)] = om[k];
        m[(n + k, k)] = -om[k];
        for j in 0..n {
            m[(n + k, 3 * n + j)] = b[k] * b[j];
        }
        m[(2 * n + k, k)] = 1.0;
        m[(2 * n + k, 3 * n + k)] = om[k];
        m[(3 * n + k, n + k)] = 1.0;
        m[(3 * n + k, 2 * n + k)] = -om[k];
    }
    VariationalGenerator { matrix: m }
}

/// Grid spacing times the top frequency that [`pmp_residual`] resolves.
pub const RESOLVED_PHASE_STEP: f64 = 0.25;

/// Smallest uniform sample count, at least `min_samples`, whose spacing
/// keeps `ω_max · h ≤` [`RESOLVED_PHASE_STEP`].
pub fn resolved_samples(sys: &OscillatorSystem, horizon: f64, min_samples: usize) -> usize {
    let wmax = sys.omega().iter().cloned().fold(0.0, f64::max);
    min_samples.max((horizon * wmax / RESOLVED_PHASE_STEP).ceil() as usize + 1)
}

/// Components of the optimality-system defect, each divided by `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmpResidual {
    pub value: f64,
    pub state: f64,
    pub adjoint: f64,
    pub control: f64,
    pub terminal: f64,
    /// `1 + max‖x‖ + max‖Λ‖ + max|u|`.
    pub scale: f64,
    /// `max_k ω_k · max grid spacing`; the interpolation behind the state
    /// and adjoint checks is only meaningful when this is well below 1.
    pub resolution: f64,
}

const STENCIL: usize = 6;
const NODES: usize = 8;

fn lagrange_weights(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (t - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

fn rotate(a: f64, b: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c * a + s * b, -s * a + c * b)
}

/// Checks `x(t+h) = e^{hA}x(t) + ∫ e^{(h-s)A}Bu`,
/// `Λ(t+h) = e^{hA}Λ(t) + ∫ e^{(h-s)A}(x - x̄)` on every grid interval, with
/// the integrands interpolated by 6-point Lagrange stencils, plus the
/// control law at every sample and `Λ(T) = 0`.
pub fn pmp_residual(traj: &Trajectory, sys: &OscillatorSystem, target: &TargetSpec) -> Result<PmpResidual> {
    let n = sys.len();
    let m = traj.len();
    if m < 2 {
        return Err(Error::Argument("trajectory needs at least two samples".into()));
    }
    check_len("x", traj.x[0].len(), n)?;
    check_len("xbar", target.xbar.len(), n)?;
    let (om, b) = (sys.omega(), sys.b());
    let (mx, ml, mu) = traj.magnitudes();
    let scale = 1.0 + mx + ml + mu;

    let mut control: f64 = 0.0;
    for i in 0..m {
        let law = target.ubar + b.iter().zip(&traj.mu[i]).map(|(bk, mk)| bk * mk).sum::<f64>();
        control = control.max((traj.u[i] - law).abs());
    }
    let terminal = traj.costate(m - 1).h_norm();

    let gl = gauss_quad::legendre::GaussLegendre::new(std::num::NonZeroUsize::new(NODES).unwrap());
    let gl_nodes: Vec<(f64, f64)> = gl.iter().map(|(x, w)| (*x, *w)).collect();
    let width = STENCIL.min(m);
    let mut state: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    let mut hmax: f64 = 0.0;
    for i in 0..m - 1 {
        let (t0, t1) = (traj.times[i], traj.times[i + 1]);
        let h = t1 - t0;
        hmax = hmax.max(h);
        let start = (i + 1).saturating_sub(width / 2).min(m - width);
        let idx: Vec<usize> = (start..start + width).collect();
        let nodes: Vec<f64> = idx.iter().map(|&j| traj.times[j]).collect();
        let mut int_x = StateVector::zeros(n);
        let mut int_l = StateVector::zeros(n);
        for &(xg, wg) in &gl_nodes {
            let s = 0.5 * h * (xg + 1.0);
            let w = lagrange_weights(&nodes, t0 + s);
            let u_s: f64 = idx.iter().zip(&w).map(|(&j, wj)| wj * traj.u[j]).sum();
            for k in 0..n {
                let xi: f64 = idx.iter().zip(&w).map(|(&j, wj)| wj * traj.x[j].xi[k]).sum();
                let eta: f64 = idx.iter().zip(&w).map(|(&j, wj)| wj * traj.x[j].eta[k]).sum();
                let (a, c) = rotate(0.0, b[k] * u_s, om[k] * (h - s));
                int_x.xi[k] += 0.5 * h * wg * a;
                int_x.eta[k] += 0.5 * h * wg * c;
                let (a, c) = rotate(xi - target.xbar.xi[k], eta - target.xbar.eta[k], om[k] * (h - s));
                int_l.xi[k] += 0.5 * h * wg * a;
                int_l.eta[k] += 0.5 * h * wg * c;
            }
        }
        let mut dx: f64 = 0.0;
        let mut dl: f64 = 0.0;
        for k in 0..n {
            let (a, c) = rotate(traj.x[i].xi[k], traj.x[i].eta[k], om[k] * h);
            dx += (traj.x[i + 1].xi[k] - a - int_x.xi[k]).powi(2) + (traj.x[i + 1].eta[k] - c - int_x.eta[k]).powi(2);
            let (a, c) = rotate(traj.lam[i][k], traj.mu[i][k], om[k] * h);
            dl += (traj.lam[i + 1][k] - a - int_l.xi[k]).powi(2) + (traj.mu[i + 1][k] - c - int_l.eta[k]).powi(2);
        }
        state = state.max(dx.sqrt() / h);
        adjoint = adjoint.max(dl.sqrt() / h);
    }
    let resolution = om.iter().cloned().fold(0.0, f64::max) * hmax;
    let (state, adjoint, control, terminal) = (state / scale, adjoint / scale, control / scale, terminal / scale);
    Ok(PmpResidual {
        value: state.max(adjoint).max(control).max(terminal),
        state,
        adjoint,
        control,
        terminal,
        scale,
        resolution,
    })
}

/// Trapezoidal `∫ ‖x - x̄‖²_H + |u - ū|²` over the trajectory grid.
pub fn dynamic_cost(traj: &Trajectory, target: &TargetSpec) -> Result<f64> {
    if traj.is_empty() {
        return Ok(0.0);
    }
    check_len("xbar", target.xbar.len(), traj.x[0].len())?;
    let f: Vec<f64> = (0..traj.len())
        .map(|i| traj.x[i].sub(&target.xbar).h_norm().powi(2) + (traj.u[i] - target.ubar).powi(2))
        .collect();
    Ok((1..traj.len())
        .map(|i| 0.5 * (traj.times[i] - traj.times[i - 1]) * (f[i] + f[i - 1]))
        .sum())
}

/// Open-loop simulation of `ẋ = Ax + Bu` with the given control samples,
/// linearly interpolated; costates are left at zero.
pub fn simulate_open_loop(sys: &OscillatorSystem, x0: &StateVector, times: &[f64], u: &[f64]) -> Result<Trajectory> {
    check_len("u", u.len(), times.len())?;
    check_len("x0", x0.len(), sys.len())?;
    let n = sys.len();
    let (om, b) = (sys.omega().to_vec(), sys.b().to_vec());
    let control = |t: f64| -> f64 {
        let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
        let (ta, tb) = (times[i - 1], times[i]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        (1.0 - w) * u[i - 1] + w * u[i]
    };
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let uc = control(t);
        for k in 0..n {
            dy[k] = om[k] * y[n + k];
            dy[n + k] = -om[k] * y[k] + b[k] * uc;
        }
    };
    let opts = ode::OdeOptions {
        hmax: min_spacing(times),
        ..Default::default()
    };
    let t_end = *times.last().unwrap();
    let sol = ode::dopri5(rhs, times[0], t_end, &x0.to_flat(), &opts, true)?;
    let dense = sol.dense.unwrap();
    Ok(Trajectory {
        times: times.to_vec(),
        x: times.iter().map(|&t| StateVector::from_flat(&dense.eval(t))).collect(),
        lam: vec![vec![0.0; n]; times.len()],
        mu: vec![vec![0.0; n]; times.len()],
        u: u.to_vec(),
    })
}

pub(crate) fn min_spacing(times: &[f64]) -> f64 {
    times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> OscillatorSystem {
        OscillatorSystem::new(vec![1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn generator_single_mode() {
        let g = assemble_generator(&unit()).matrix;
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[0., 1., 0., 0., -1., 0., 0., 1., 1., 0., 0., 1., 0., 1., -1., 0.],
        );
        assert_eq!(g, expect);
    }

    #[test]
    fn generator_is_traceless_with_symmetric_coupling() {
        let sys = OscillatorSystem::new(vec![1.0, 2.5, 4.0], vec![0.5, -1.0, 0.25]).unwrap();
        let g = assemble_generator(&sys).matrix;
        assert_eq!(g.trace(), 0.0);
        let c = g.view((3, 9), (3, 3)).into_owned();
        assert_eq!(c, c.transpose());
        assert_eq!(c.rank(1e-12), 1);
    }

    #[test]
    fn horizon_validation() {
        let x0 = StateVector::zeros(1);
        assert!(HorizonSpec::uniform(0.0, x0.clone(), 10).is_err());
        assert!(HorizonSpec::new(1.0, x0.clone(), vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(HorizonSpec::new(1.0, x0.clone(), vec![0.1, 1.0]).is_err());
        let hs = HorizonSpec::uniform(2.0, x0, 5).unwrap();
        assert_eq!(hs.grid, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn zero_trajectory_defect_scales_with_target() {
        let sys = unit();
        let hs = HorizonSpec::uniform(1.0, StateVector::zeros(1), 11).unwrap();
        let traj = Trajectory {
            times: hs.grid.clone(),
            x: vec![StateVector::zeros(1); 11],
            lam: vec![vec![0.0]; 11],
            mu: vec![vec![0.0]; 11],
            u: vec![0.0; 11],
        };
        let target = TargetSpec::new(StateVector::new(vec![0.3], vec![0.4]).unwrap(), 0.0).unwrap();
        let r = pmp_residual(&traj, &sys, &target).unwrap();
        assert!((r.adjoint - 0.5).abs() < 1e-3);
        assert_eq!(dynamic_cost(&traj, &TargetSpec::zero(1)).unwrap(), 0.0);
        assert!((dynamic_cost(&traj, &target).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn csv_header() {
        let traj = Trajectory {
            times: vec![0.0],
            x: vec![StateVector::zeros(2)],
            lam: vec![vec![0.0; 2]],
            mu: vec![vec![0.0; 2]],
            u: vec![1.0],
        };
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,xi_1,xi_2,eta_1,eta_2,lam_1,lam_2,mu_1,mu_2,u\n"));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 10);
    }
}
