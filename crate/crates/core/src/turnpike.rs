//! Quantitative turnpike diagnostics: weighted deviation profiles, envelope
//! constants `C` in `dev(t) ≤ C·denom·((t+1)^{-β} + (T-t+1)^{-β})`, decay
//! fits, modal decay constants, hyperbolic-function bounds and the modal
//! `g_k^±` projectors.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::lq_solver::{dichotomy_solve, HorizonSpec, Trajectory};
use crate::model::{weighted_norm, weighted_norm_pair, OscillatorSystem, StateVector, WeightIndex};
use crate::spectral::EigenQuad;
use crate::static_opt::{solve_static, StaticSolution, TargetSpec};

pub const DEFAULT_BETA: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub times: Vec<f64>,
    /// `‖x(t) - x̂‖ + ‖Λ(t) - Λ̂‖` in `V_{0,-β-1}`.
    pub dev: Vec<f64>,
    pub beta: f64,
    /// `‖x(0) - x̂‖_{V_{0,1}} + ‖Λ̂‖_H`.
    pub denom: f64,
}

pub fn deviation_profile(
    traj: &Trajectory,
    static_sol: &StaticSolution,
    beta: f64,
    sys: &OscillatorSystem,
) -> Result<DeviationProfile> {
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("beta = {beta} must be positive")));
    }
    if traj.is_empty() {
        return Err(Error::Argument("empty trajectory".into()));
    }
    let w = WeightIndex::new(0.0, -beta - 1.0);
    let lh = static_sol.costate();
    let dev = (0..traj.len())
        .map(|i| {
            let dx = weighted_norm(&traj.x[i].sub(&static_sol.xhat), w, sys)?;
            let dl = weighted_norm(&traj.costate(i).sub(&lh), w, sys)?;
            Ok(dx + dl)
        })
        .collect::<Result<Vec<_>>>()?;
    let denom = weighted_norm(&traj.x[0].sub(&static_sol.xhat), WeightIndex::new(0.0, 1.0), sys)? + lh.h_norm();
    Ok(DeviationProfile {
        times: traj.times.clone(),
        dev,
        beta,
        denom,
    })
}

impl DeviationProfile {
    /// Two-column `t,dev` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,dev\n");
        for (t, d) in self.times.iter().zip(&self.dev) {
            let _ = writeln!(s, "{t:.16e},{d:.16e}");
        }
        s
    }

    /// `log(t+1),log(dev)` CSV, skipping nonpositive deviations.
    pub fn to_log_csv(&self) -> String {
        let mut s = String::from("log_t1,log_dev\n");
        for (t, d) in self.times.iter().zip(&self.dev).filter(|(_, d)| **d > 0.0) {
            let _ = writeln!(s, "{:.16e},{:.16e}", (t + 1.0).ln(), d.ln());
        }
        s
    }
}

/// Smallest `C` with `dev(t) ≤ C·denom·((t+1)^{-β} + (T-t+1)^{-β})` on the
/// profile grid.
pub fn envelope_constant(prof: &DeviationProfile, horizon: f64) -> Result<f64> {
    if prof.dev.is_empty() {
        return Err(Error::Argument("empty profile".into()));
    }
    let worst = prof.dev.iter().cloned().fold(0.0, f64::max);
    if worst == 0.0 {
        return Ok(0.0);
    }
    if prof.denom <= 0.0 {
        return Err(Error::Inconsistent(format!(
            "deviation {worst:e} with zero boundary data"
        )));
    }
    let b = prof.beta;
    Ok(prof
        .times
        .iter()
        .zip(&prof.dev)
        .map(|(&t, &d)| d / (prof.denom * ((t + 1.0).powf(-b) + (horizon - t + 1.0).powf(-b))))
        .fold(0.0, f64::max))
}

/// Minus the least-squares slope of `log dev` against `log(t+1)` over
/// samples with `t ∈ [lo, hi]`.
pub fn fit_decay_exponent(prof: &DeviationProfile, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = prof
        .times
        .iter()
        .zip(&prof.dev)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, d)| (*t, *d))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Argument(format!(
            "fit window [{lo}, {hi}] holds {} samples, need at least 10",
            pts.len()
        )));
    }
    if let Some((t, d)) = pts.iter().find(|(_, d)| !(*d > 0.0)) {
        return Err(Error::Numeric(format!("nonpositive deviation {d} at t = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| (t + 1.0).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, d)| d.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalDecayEntry {
    pub k: usize,
    /// `max_t e^{-Re ν t}|b|^β(t+1)^β` on the scan grid.
    pub empirical: f64,
    /// `e^{-β+Re ν} β^β (Re ν)^{-β} |b|^β`.
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalDecay {
    pub beta: f64,
    pub t_max: f64,
    pub constant: f64,
    pub analytic_max: f64,
    pub modes: Vec<ModalDecayEntry>,
}

/// `{0} ∪ {10⁻³·1.01^i} ∪ {t_max}`, capped at `t_max`.
fn geometric_grid(t_max: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut t = 1e-3;
    while t < t_max {
        g.push(t);
        t *= 1.01;
    }
    g.push(t_max);
    g
}

pub fn modal_decay_constant(quads: &[EigenQuad], beta: f64, t_max: f64) -> Result<ModalDecay> {
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("beta = {beta} must be positive")));
    }
    if !(t_max > 0.0) {
        return Err(Error::Argument(format!("t_max = {t_max} must be positive")));
    }
    let grid = geometric_grid(t_max);
    let modes: Vec<ModalDecayEntry> = quads
        .par_iter()
        .map(|q| {
            let r = q.nu.re;
            let bb = q.b.abs().powf(beta);
            let empirical = grid
                .iter()
                .map(|&t| (-r * t + beta * (t + 1.0).ln()).exp() * bb)
                .fold(0.0, f64::max);
            let analytic = (-beta + r).exp() * beta.powf(beta) * r.powf(-beta) * bb;
            ModalDecayEntry {
                k: q.k,
                empirical,
                analytic,
            }
        })
        .collect();
    Ok(ModalDecay {
        beta,
        t_max,
        constant: modes.iter().map(|m| m.empirical).fold(0.0, f64::max),
        analytic_max: modes.iter().map(|m| m.analytic).fold(0.0, f64::max),
        modes,
    })
}

/// `tanh z` and `1/cosh z` for `Re z > 0` through `e^{-2z}`.
pub fn tanh_sech(z: C64) -> (C64, C64) {
    let e = (-2.0 * z).exp();
    let tanh = (1.0 - e) / (1.0 + e);
    let sech = 2.0 * (-z).exp() / (1.0 + e);
    (tanh, sech)
}

/// `(1+q)/(1-q)`, `q = e^{-2R cos(π/4)}`: bound on `|tanh z|` for `|z| ≥ R`
/// in the sector `|arg z| ≤ π/4`.
pub fn sector_tanh_bound(radius: f64) -> f64 {
    let q = (-2.0 * radius * std::f64::consts::FRAC_PI_4.cos()).exp();
    (1.0 + q) / (1.0 - q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicScan {
    pub tanh_max: f64,
    pub inv_cosh_max: f64,
    pub s_max: f64,
}

const SCAN_POINTS: usize = 4000;

/// Max of `|tanh(ν_k s)|` and `1/|cosh(ν_k s)|` over all modes and a
/// log-spaced grid in `[10⁻⁹ s_max, s_max]`.
pub fn hyperbolic_bound_scan(quads: &[EigenQuad], s_max: f64) -> Result<HyperbolicScan> {
    if !(s_max > 0.0) {
        return Err(Error::Argument(format!("s_max = {s_max} must be positive")));
    }
    if let Some(q) = quads.iter().find(|q| !(q.nu.re > 0.0)) {
        return Err(Error::Precondition(format!(
            "mode {}: Re ν = {} not positive",
            q.k, q.nu.re
        )));
    }
    let s_min = 1e-9 * s_max;
    let ratio = (s_max / s_min).ln() / (SCAN_POINTS - 1) as f64;
    let (tanh_max, inv_cosh_max) = quads
        .par_iter()
        .map(|q| {
            let mut m = (0.0f64, 0.0f64);
            for i in 0..SCAN_POINTS {
                let s = s_min * (ratio * i as f64).exp();
                let (t, c) = tanh_sech(q.nu * s);
                m.0 = m.0.max(t.norm());
                m.1 = m.1.max(c.norm());
            }
            m
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(HyperbolicScan {
        tanh_max,
        inv_cosh_max,
        s_max,
    })
}

type Mat2 = [[C64; 2]; 2];

/// Projectors of the modal `(ζ, q)` dynamics onto the unstable and stable
/// directions, and the matrices `M_k`, `N_k` that diagonalize the `(z, p)`
/// and `(ζ, q)` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GMatrices {
    pub g_plus: Mat2,
    pub g_minus: Mat2,
    pub m: Mat2,
    pub n: Mat2,
    /// `(1 + (Re ν)²)/(2 Re ν)`.
    pub norm: f64,
}

/// Largest singular value of a complex 2×2 matrix.
pub fn spectral_norm2(a: &Mat2) -> f64 {
    let fro = a.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>();
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]).norm();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (fro + disc)).sqrt()
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn inverse(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() == 0.0 {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

pub fn g_matrices(quad: &EigenQuad) -> Result<GMatrices> {
    let r = quad.nu.re;
    if !(r > 1e-300) || quad.b == 0.0 {
        return Err(Error::Numeric(format!(
            "mode {}: degenerate Re ν = {r} or b = {}",
            quad.k, quad.b
        )));
    }
    let (n2, nb2) = (quad.nu * quad.nu, quad.nu.conj() * quad.nu.conj());
    let c = 1.0 / (2.0 * quad.b);
    let m = [[nb2 / r * c, -n2 / r * c], [nb2 * c, n2 * c]];
    let n = [[-n2 / r * c, nb2 / r * c], [-n2 * c, -nb2 * c]];
    let nt = transpose(&n);
    let nti = inverse(&nt).ok_or_else(|| Error::Numeric(format!("mode {}: singular N_k", quad.k)))?;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let g_plus = mul(&nti, &mul(&[[one, zero], [zero, zero]], &nt));
    let g_minus = mul(&nti, &mul(&[[zero, zero], [zero, one]], &nt));
    let norm = (1.0 + r * r) / (2.0 * r);
    for g in [&g_plus, &g_minus] {
        let got = spectral_norm2(g);
        if (got - norm).abs() > 1e-10 * norm.max(1.0) {
            return Err(Error::Inconsistent(format!(
                "mode {}: ‖g‖ = {got} differs from (1+r²)/(2r) = {norm}",
                quad.k
            )));
        }
    }
    Ok(GMatrices {
        g_plus,
        g_minus,
        m,
        n,
        norm,
    })
}

/// `(‖Δ(0)‖ + ‖Δ(T)‖) / (‖x(0) - x̂‖_{V_{0,1}} + ‖λ̂‖ + ‖μ̂‖)`, Euclidean norms
/// on the real deviation `Δ = (x - x̂, Λ - Λ̂)`.
pub fn shooting_ratio(traj: &Trajectory, static_sol: &StaticSolution, sys: &OscillatorSystem) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Argument("empty trajectory".into()));
    }
    check_len("x", traj.x[0].len(), sys.len())?;
    let lh = static_sol.costate();
    let delta = |i: usize| -> f64 {
        let dx = traj.x[i].sub(&static_sol.xhat).h_norm();
        let dl = traj.costate(i).sub(&lh).h_norm();
        (dx * dx + dl * dl).sqrt()
    };
    let lhs = delta(0) + delta(traj.len() - 1);
    let h = WeightIndex::H;
    let rhs = weighted_norm(&traj.x[0].sub(&static_sol.xhat), WeightIndex::new(0.0, 1.0), sys)?
        + weighted_norm_pair(&static_sol.lambdahat, &vec![0.0; sys.len()], h, sys)?
        + weighted_norm_pair(&vec![0.0; sys.len()], &static_sol.muhat, h, sys)?;
    if rhs == 0.0 {
        if lhs == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Inconsistent(format!(
            "boundary deviation {lhs:e} with zero data"
        )));
    }
    Ok(lhs / rhs)
}

/// One solved `(N, T)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub beta: f64,
    pub envelope_constant: f64,
    pub fitted_exponent: Option<f64>,
    pub shooting_ratio: f64,
    pub condition: f64,
    pub off_block_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    /// Deviation profile of each run, in the same order.
    #[serde(skip)]
    pub profiles: Vec<DeviationProfile>,
}

impl SweepReport {
    /// `max/min` of the envelope constants for one `β`.
    pub fn envelope_spread(&self, beta: f64) -> f64 {
        let v: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.beta == beta)
            .map(|r| r.envelope_constant)
            .collect();
        spread(&v)
    }

    /// Largest relative variation `(max - min)/min` of the shooting ratio
    /// across horizons at fixed `N`.
    pub fn shooting_variation(&self) -> f64 {
        let mut ns: Vec<usize> = self.runs.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.iter()
            .map(|&n| {
                let v: Vec<f64> = self
                    .runs
                    .iter()
                    .filter(|r| r.n == n)
                    .map(|r| r.shooting_ratio)
                    .collect();
                spread(&v) - 1.0
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("N,T,beta,envelope_constant,fitted_exponent,shooting_ratio,condition,off_block_mass\n");
        for r in &self.runs {
            let fit = r.fitted_exponent.map_or("nan".to_string(), |f| format!("{f:.16e}"));
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
                r.n, r.horizon, r.beta, r.envelope_constant, fit, r.shooting_ratio, r.condition, r.off_block_mass
            );
        }
        s
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// How the initial state of each truncation is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// `x̂ + |b_1| e_{ξ_1}`, a unit `V_{0,1}` bump on the first mode.
    SteadyPlusBump,
    /// Fixed initial state, truncated to each `N`.
    Explicit(StateVector),
}

/// Time window for the decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitWindow {
    Absolute(f64, f64),
    /// `[lo, frac·T]`.
    Relative(f64, f64),
}

impl FitWindow {
    pub fn bounds(&self, horizon: f64) -> (f64, f64) {
        match *self {
            FitWindow::Absolute(lo, hi) => (lo, hi),
            FitWindow::Relative(lo, frac) => (lo, frac * horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_list: Vec<usize>,
    pub t_list: Vec<f64>,
    pub betas: Vec<f64>,
    pub samples: usize,
    /// `None` skips the fit.
    pub fit_window: Option<FitWindow>,
    pub initial: InitialState,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n_list: vec![10, 20, 40],
            t_list: vec![20.0, 40.0, 80.0],
            betas: vec![DEFAULT_BETA],
            samples: crate::lq_solver::DEFAULT_SAMPLES,
            fit_window: Some(FitWindow::Relative(1.0, 0.5)),
            initial: InitialState::SteadyPlusBump,
        }
    }
}

fn truncate_state(x: &StateVector, n: usize) -> Result<StateVector> {
    if x.len() < n {
        return Err(Error::Dimension {
            what: "x0",
            got: x.len(),
            expected: n,
        });
    }
    StateVector::new(x.xi[..n].to_vec(), x.eta[..n].to_vec())
}

/// Solves one truncation and horizon with the dichotomy solver and reports
/// the diagnostics and profile for every `β`.
pub fn run_case(
    sys: &OscillatorSystem,
    target: &TargetSpec,
    x0: &StateVector,
    horizon: f64,
    spec: &SweepSpec,
) -> Result<Vec<(SweepRun, DeviationProfile)>> {
    let st = solve_static(target, sys)?;
    let hs = HorizonSpec::uniform(horizon, x0.clone(), spec.samples)?;
    let sol = dichotomy_solve(sys, target, &hs, &st)?;
    let traj = sol.trajectory(&hs.grid)?;
    let shoot = shooting_ratio(&traj, &st, sys)?;
    spec.betas
        .iter()
        .map(|&beta| {
            let prof = deviation_profile(&traj, &st, beta, sys)?;
            let fitted_exponent = spec
                .fit_window
                .and_then(|w| fit_decay_exponent(&prof, w.bounds(horizon)).ok());
            let run = SweepRun {
                n: sys.len(),
                horizon,
                beta,
                envelope_constant: envelope_constant(&prof, horizon)?,
                fitted_exponent,
                shooting_ratio: shoot,
                condition: sol.condition,
                off_block_mass: sol.off_block_mass,
            };
            Ok((run, prof))
        })
        .collect()
}

/// Uniformity sweep over truncations of `base` and horizons, run in parallel.
pub fn sweep(base: &OscillatorSystem, target: &TargetSpec, spec: &SweepSpec) -> Result<SweepReport> {
    let configs: Vec<(usize, f64)> = spec
        .n_list
        .iter()
        .flat_map(|&n| spec.t_list.iter().map(move |&t| (n, t)))
        .collect();
    let runs = configs
        .par_iter()
        .map(|&(n, t)| {
            let sys = base.truncate(n)?;
            let tgt = TargetSpec::new(truncate_state(&target.xbar, n)?, target.ubar)?;
            let x0 = match &spec.initial {
                InitialState::SteadyPlusBump => {
                    let mut x = solve_static(&tgt, &sys)?.xhat;
                    x.xi[0] += sys.b()[0].abs();
                    x
                }
                InitialState::Explicit(x) => truncate_state(x, n)?,
            };
            run_case(&sys, &tgt, &x0, t, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let (runs, profiles) = runs.into_iter().flatten().unzip();
    Ok(SweepReport { runs, profiles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(dev: Vec<f64>, times: Vec<f64>, beta: f64) -> DeviationProfile {
        DeviationProfile {
            times,
            dev,
            beta,
            denom: 1.0,
        }
    }

    fn quad(nu: C64, b: f64) -> EigenQuad {
        EigenQuad {
            k: 1,
            omega: 1.0,
            b,
            sigma_plus: C64::new(0.0, 1.0) + nu,
            sigma_minus: C64::new(0.0, 1.0) - nu.conj(),
            sigma_neg_plus: C64::new(0.0, -1.0) + nu.conj(),
            sigma_neg_minus: C64::new(0.0, -1.0) - nu,
            nu,
            lambda0: nu.re,
            eps: C64::new(0.0, 0.0),
            eps_within_half: true,
            residual: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn synthetic_power_laws() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        for (c, p) in [(1.0, 0.5), (3.0, 1.2)] {
            let dev = times.iter().map(|t| c * (t + 1.0f64).powf(-p)).collect();
            let fit = fit_decay_exponent(&profile(dev, times.clone(), 0.4), (1.0, 10.0)).unwrap();
            assert!((fit - p).abs() < 1e-6);
        }
        let short = profile(vec![1.0; 5], vec![0.0, 1.0, 2.0, 3.0, 4.0], 0.4);
        assert!(fit_decay_exponent(&short, (0.0, 4.0)).is_err());
        let zero = profile(vec![0.0; 20], (0..20).map(|i| i as f64).collect(), 0.4);
        assert!(fit_decay_exponent(&zero, (0.0, 19.0)).is_err());
    }

    #[test]
    fn envelope_arithmetic() {
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        assert_eq!(
            envelope_constant(&profile(vec![0.0; 41], times.clone(), 0.4), 20.0).unwrap(),
            0.0
        );
        let c = envelope_constant(&profile(vec![2.0; 41], times.clone(), 0.4), 20.0).unwrap();
        assert!(c >= 2.0 / (2.0 * 11f64.powf(-0.4)) - 1e-12);
        let mut p = profile(vec![2.0; 41], times, 0.4);
        p.denom = 0.0;
        assert!(matches!(envelope_constant(&p, 20.0), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn modal_scan_hits_calculus_maximum() {
        let (b, beta) = (0.1f64, 0.4f64);
        let q = quad(C64::new(b, 0.0), b);
        let m = modal_decay_constant(&[q], beta, 100.0).unwrap();
        let exact = beta.powf(beta) * (-beta + b).exp();
        assert!((m.constant / exact - 1.0).abs() < 1e-4, "{} vs {exact}", m.constant);
        assert!((m.modes[0].analytic - exact).abs() < 1e-12);
        assert!(m.constant <= m.modes[0].analytic);
        let longer = modal_decay_constant(&[q], beta, 1000.0).unwrap();
        assert!((longer.constant - m.constant).abs() < 1e-12 * m.constant);
    }

    #[test]
    fn hyperbolic_limits() {
        let (t, c) = tanh_sech(C64::new(800.0, 0.0));
        assert!((t - 1.0).norm() < 1e-15 && c.norm() < 1e-300);
        let q = quad(C64::new(0.3, -0.05), 0.4);
        let s = hyperbolic_bound_scan(&[q], 1e3).unwrap();
        assert!(s.tanh_max.is_finite() && s.tanh_max <= 1.0 + 1e-12 + 0.2);
        assert!((s.inv_cosh_max - 1.0).abs() < 1e-6);
        let bad = quad(C64::new(-0.1, 0.0), 0.4);
        assert!(matches!(
            hyperbolic_bound_scan(&[bad], 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sector_bound_dominates() {
        for r in [0.5, 1.0, 3.0] {
            let bound = sector_tanh_bound(r);
            for i in 0..=40 {
                let arg = -std::f64::consts::FRAC_PI_4 + i as f64 * std::f64::consts::FRAC_PI_2 / 40.0;
                for scale in [1.0, 1.5, 4.0] {
                    let z = C64::from_polar(r * scale, arg);
                    assert!(tanh_sech(z).0.norm() <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn g_matrix_norms() {
        for (r, expect) in [(1.0, 1.0), (0.1, 5.05)] {
            let g = g_matrices(&quad(C64::new(r, -0.02), 0.7)).unwrap();
            assert!((g.norm - expect).abs() < 1e-12);
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((g.g_plus[i][j] + g.g_minus[i][j] - id).norm() < 1e-12);
                }
            }
            assert!((g.g_plus[0][1] - 0.5 * r).norm() < 1e-12);
            assert!((g.g_minus[1][0] + 0.5 / r).norm() < 1e-12);
        }
    }

    #[test]
    fn steady_run_has_zero_deviation() {
        let sys = OscillatorSystem::new(vec![1.0, 2.0], vec![1.0, 0.5]).unwrap();
        let target = TargetSpec::new(StateVector::zeros(2), 0.0).unwrap();
        let st = solve_static(&target, &sys).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            x: vec![st.xhat.clone(); 2],
            lam: vec![st.lambdahat.clone(); 2],
            mu: vec![st.muhat.clone(); 2],
            u: vec![st.uhat; 2],
        };
        let p = deviation_profile(&traj, &st, 0.4, &sys).unwrap();
        assert!(p.dev.iter().all(|d| *d == 0.0));
        assert_eq!(shooting_ratio(&traj, &st, &sys).unwrap(), 0.0);
    }

    #[test]
    fn weight_monotonicity() {
        let sys = OscillatorSystem::new(vec![1.0, 2.0, 3.5], vec![0.9, 0.4, 0.2]).unwrap();
        let target = TargetSpec::new(StateVector::zeros(3), 1.0).unwrap();
        let st = solve_static(&target, &sys).unwrap();
        let mut x0 = st.xhat.clone();
        x0.xi[0] += 0.9;
        let hs = HorizonSpec::uniform(10.0, x0, 201).unwrap();
        let traj = dichotomy_solve(&sys, &target, &hs, &st)
            .unwrap()
            .trajectory(&hs.grid)
            .unwrap();
        let p1 = deviation_profile(&traj, &st, 0.2, &sys).unwrap();
        let p2 = deviation_profile(&traj, &st, 0.4, &sys).unwrap();
        let bmax: f64 = 0.9;
        for (a, b) in p1.dev.iter().zip(&p2.dev) {
            assert!(*b <= bmax.powf(0.2) * a * (1.0 + 1e-12));
        }
    }
}
