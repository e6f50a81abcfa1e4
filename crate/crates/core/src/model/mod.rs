//! Truncated oscillator chain `ẋ = Ax + Bu` with `A = [[0, Ω], [-Ω, 0]]`,
//! `B = (0, b)`, and the weighted sequence norms `V_{p,q}`.

mod assumptions;

pub use assumptions::{
    check_assumptions, doubling_truncations, AssumptionReport, AssumptionVerdict, AsymptoticCriterion, SumCheck,
    Verdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Frequencies `ω_k` and input gains `b_k` of the first `N` modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSystem {
    omega: Vec<f64>,
    b: Vec<f64>,
    gap_floor: f64,
}

impl OscillatorSystem {
    /// Builds a validated system: every `b_k ≠ 0`, `ω_1 > 0` and strictly
    /// increasing frequencies.
    pub fn new(omega: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let sys = Self::raw(omega, b)?;
        if let Some(k) = sys.b.iter().position(|&bk| bk == 0.0) {
            return Err(Error::Model {
                assumption: "A1",
                detail: format!("b_{} = 0", k + 1),
            });
        }
        if sys.omega[0] <= 0.0 {
            return Err(Error::Model {
                assumption: "A2",
                detail: format!("omega_1 = {} is not positive", sys.omega[0]),
            });
        }
        if let Some(k) = sys.omega.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Model {
                assumption: "A2",
                detail: format!(
                    "omega_{} = {} does not exceed omega_{} = {}",
                    k + 2,
                    sys.omega[k + 1],
                    k + 1,
                    sys.omega[k]
                ),
            });
        }
        Ok(sys)
    }

    /// Builds a system without enforcing (A1)/(A2). Only lengths and
    /// finiteness are checked; used for diagnostics on bad data.
    pub fn raw(omega: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::Argument("system needs at least one mode".into()));
        }
        check_len("b", b.len(), omega.len())?;
        if omega.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite system parameter".into()));
        }
        let gap_floor = omega.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        Ok(Self { omega, b, gap_floor })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `ω_* = min_k (ω_{k+1} - ω_k)`; infinite for a single mode.
    pub fn gap_floor(&self) -> f64 {
        self.gap_floor
    }

    /// `‖b‖_{ℓ²}` over the truncation.
    pub fn b_norm(&self) -> f64 {
        self.b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The first `m` modes as a system of their own.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::Argument(format!("truncation {m} outside 1..={}", self.len())));
        }
        Self::raw(self.omega[..m].to_vec(), self.b[..m].to_vec())
    }
}

/// Exponents `(p, q)` of the weight `ω_k^{2p} / |b_k|^{2q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightIndex {
    pub p: f64,
    pub q: f64,
}

impl WeightIndex {
    pub const H: WeightIndex = WeightIndex { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    /// Per-mode squared weight `ω^{2p} / |b|^{2q}`.
    pub fn weight(&self, omega: f64, b: f64) -> Result<f64> {
        let wp = if self.p == 0.0 { 1.0 } else { omega.powf(2.0 * self.p) };
        let wq = if self.q == 0.0 {
            1.0
        } else if b == 0.0 {
            return Err(Error::Domain(format!(
                "weight with q = {} undefined for b_k = 0",
                self.q
            )));
        } else {
            b.abs().powf(-2.0 * self.q)
        };
        Ok(wp * wq)
    }
}

/// Generalized coordinates `ξ` and momenta `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl StateVector {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        check_len("eta", eta.len(), xi.len())?;
        Ok(Self { xi, eta })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            xi: vec![0.0; n],
            eta: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector {
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a - b).collect(),
            eta: self.eta.iter().zip(&other.eta).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        StateVector {
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
            eta: self.eta.iter().zip(&other.eta).map(|(a, b)| a + b).collect(),
        }
    }

    /// Euclidean norm in `H = ℓ² × ℓ²`.
    pub fn h_norm(&self) -> f64 {
        self.xi.iter().chain(&self.eta).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Stacked `(ξ, η)`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.xi.iter().chain(&self.eta).copied().collect()
    }

    pub fn from_flat(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self {
            xi: v[..n].to_vec(),
            eta: v[n..2 * n].to_vec(),
        }
    }
}

/// `‖x‖_{V_{p,q}} = sqrt( Σ_k ω_k^{2p} (ξ_k² + η_k²) / |b_k|^{2q} )`.
pub fn weighted_norm(x: &StateVector, w: WeightIndex, sys: &OscillatorSystem) -> Result<f64> {
    check_len("xi", x.xi.len(), sys.len())?;
    check_len("eta", x.eta.len(), sys.len())?;
    let mut acc = 0.0;
    for k in 0..sys.len() {
        let e = x.xi[k] * x.xi[k] + x.eta[k] * x.eta[k];
        acc += w.weight(sys.omega[k], sys.b[k])? * e;
    }
    Ok(acc.sqrt())
}

/// Same weighted norm applied to a pair of coordinate sequences, e.g. the
/// costate `Λ = (λ, μ)`.
pub fn weighted_norm_pair(first: &[f64], second: &[f64], w: WeightIndex, sys: &OscillatorSystem) -> Result<f64> {
    check_len("first", first.len(), sys.len())?;
    check_len("second", second.len(), sys.len())?;
    let mut acc = 0.0;
    for k in 0..sys.len() {
        acc += w.weight(sys.omega[k], sys.b[k])? * (first[k] * first[k] + second[k] * second[k]);
    }
    Ok(acc.sqrt())
}

/// Rotates each `(ξ_k, η_k)` pair by the angle `ω_k t`, i.e. applies `e^{tA}`.
pub fn free_flow(x0: &StateVector, t: f64, sys: &OscillatorSystem) -> StateVector {
    let mut out = x0.clone();
    rotate_in_place(&mut out.xi, &mut out.eta, t, sys.omega());
    out
}

/// Applies `e^{tA}` to the pair `(first, second)` mode by mode.
pub(crate) fn rotate_in_place(first: &mut [f64], second: &mut [f64], t: f64, omega: &[f64]) {
    for ((a, b), &w) in first.iter_mut().zip(second.iter_mut()).zip(omega) {
        let (s, c) = (w * t).sin_cos();
        let (x, y) = (*a, *b);
        *a = c * x + s * y;
        *b = -s * x + c * y;
    }
}

/// Minimal controllability time `T_0 = 2π / ω_*`.
pub fn min_control_time(sys: &OscillatorSystem) -> Result<f64> {
    let gap = sys.gap_floor();
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::Domain(format!(
            "gap floor {gap} must be finite and positive (needs at least two increasing frequencies)"
        )));
    }
    Ok(2.0 * std::f64::consts::PI / gap)
}
