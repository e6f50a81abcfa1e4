//! Closed-form steady optimum: minimize `‖x - x̄‖²_H + |u - ū|²` subject to
//! `Ax + Bu = 0`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::model::{weighted_norm, OscillatorSystem, StateVector, WeightIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub xbar: StateVector,
    pub ubar: f64,
}

impl TargetSpec {
    pub fn new(xbar: StateVector, ubar: f64) -> Result<Self> {
        if !ubar.is_finite() || xbar.xi.iter().chain(&xbar.eta).any(|v| !v.is_finite()) {
            return Err(Error::Argument("target must be finite".into()));
        }
        Ok(Self { xbar, ubar })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            xbar: StateVector::zeros(n),
            ubar: 0.0,
        }
    }

    /// Rejects targets whose `V_{0,1}` norm overflows on this truncation.
    pub fn check(&self, sys: &OscillatorSystem) -> Result<()> {
        let v = weighted_norm(&self.xbar, WeightIndex::new(0.0, 1.0), sys)?;
        if !v.is_finite() {
            return Err(Error::Argument("target has unbounded V_{0,1} norm".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSolution {
    pub xhat: StateVector,
    pub uhat: f64,
    pub lambdahat: Vec<f64>,
    pub muhat: Vec<f64>,
}

pub fn solve_static(target: &TargetSpec, sys: &OscillatorSystem) -> Result<StaticSolution> {
    let n = sys.len();
    check_len("xbar.xi", target.xbar.xi.len(), n)?;
    check_len("xbar.eta", target.xbar.eta.len(), n)?;
    let (om, b) = (sys.omega(), sys.b());
    let mut denom = 1.0;
    let mut num = target.ubar;
    for k in 0..n {
        denom += (b[k] / om[k]).powi(2);
        num += b[k] * target.xbar.xi[k] / om[k];
    }
    let uhat = num / denom;
    let xi: Vec<f64> = (0..n).map(|k| b[k] * uhat / om[k]).collect();
    let muhat = (0..n).map(|k| (target.xbar.xi[k] - xi[k]) / om[k]).collect();
    let lambdahat = (0..n).map(|k| -target.xbar.eta[k] / om[k] + 0.0).collect();
    Ok(StaticSolution {
        xhat: StateVector { xi, eta: vec![0.0; n] },
        uhat,
        lambdahat,
        muhat,
    })
}

/// `J_s(x, u) = ‖x - x̄‖²_H + |u - ū|²`.
pub fn steady_cost(x: &StateVector, u: f64, target: &TargetSpec) -> Result<f64> {
    check_len("x", x.len(), target.xbar.len())?;
    Ok(x.sub(&target.xbar).h_norm().powi(2) + (u - target.ubar).powi(2))
}

pub fn static_cost(sol: &StaticSolution, target: &TargetSpec) -> Result<f64> {
    steady_cost(&sol.xhat, sol.uhat, target)
}

impl StaticSolution {
    pub fn len(&self) -> usize {
        self.xhat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xhat.is_empty()
    }

    /// Costate `Λ̂ = (λ̂, μ̂)` as a state-shaped vector.
    pub fn costate(&self) -> StateVector {
        StateVector {
            xi: self.lambdahat.clone(),
            eta: self.muhat.clone(),
        }
    }

    /// Max-norm of `Ax̂ + Bû`.
    pub fn constraint_residual(&self, sys: &OscillatorSystem) -> f64 {
        let (om, b) = (sys.omega(), sys.b());
        (0..self.len())
            .map(|k| {
                let r1 = om[k] * self.xhat.eta[k];
                let r2 = -om[k] * self.xhat.xi[k] + b[k] * self.uhat;
                r1.abs().max(r2.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Max-norm residual of `x̂ - x̄ = A*Λ̂` and `û - ū = B*Λ̂`.
    pub fn stationarity_residual(&self, target: &TargetSpec, sys: &OscillatorSystem) -> f64 {
        let (om, b) = (sys.omega(), sys.b());
        let mut r: f64 = 0.0;
        let mut bmu = 0.0;
        for k in 0..self.len() {
            r = r.max((self.xhat.xi[k] - target.xbar.xi[k] + om[k] * self.muhat[k]).abs());
            r = r.max((self.xhat.eta[k] - target.xbar.eta[k] - om[k] * self.lambdahat[k]).abs());
            bmu += b[k] * self.muhat[k];
        }
        r.max((self.uhat - target.ubar - bmu).abs())
    }

    /// Rows `k, xi_hat, eta_hat, lambda_hat, mu_hat` after a `# u_hat=` record.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# u_hat={:.16e}", self.uhat);
        s.push_str("k,xi_hat,eta_hat,lambda_hat,mu_hat\n");
        for k in 0..self.len() {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                k + 1,
                self.xhat.xi[k],
                self.xhat.eta[k],
                self.lambdahat[k],
                self.muhat[k]
            );
        }
        s
    }
}
