//! Feedback form `Λ = -(Px + s)` of the optimality system. In reversed time
//! `τ = T - t`:
//! `P' = PA + AᵀP - PBBᵀP + I`, `s' = (A - BBᵀP)ᵀs + PBū - x̄`,
//! with `P = 0`, `s = 0` at `τ = 0`.

use super::ode::{dopri5, OdeOptions};
use super::{HorizonSpec, Trajectory};
use crate::error::{check_len, Result};
use crate::model::{OscillatorSystem, StateVector};
use crate::static_opt::{StaticSolution, TargetSpec};

struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn p(&self, y: &[f64], i: usize, j: usize) -> f64 {
        y[i * self.m + j]
    }

    fn s_offset(&self) -> usize {
        self.m * self.m
    }
}

/// `P(T - t)`, `s(T - t)` and `x(t)`, sampled on the horizon grid.
pub fn solve_riccati_oracle(
    sys: &OscillatorSystem,
    target: &TargetSpec,
    hs: &HorizonSpec,
    _static_sol: &StaticSolution,
) -> Result<Trajectory> {
    let n = sys.len();
    check_len("x0", hs.x0.len(), n)?;
    check_len("xbar", target.xbar.len(), n)?;
    let lay = Layout { n, m: 2 * n };
    let m = lay.m;
    let om = sys.omega().to_vec();
    let b = sys.b().to_vec();
    let xbar = target.xbar.to_flat();
    let ubar = target.ubar;

    // column j of PA: ξ-columns pick -ω_j P[:, N+j], η-columns ω_j P[:, j]
    let pa = |y: &[f64], i: usize, j: usize| -> f64 {
        if j < lay.n {
            -om[j] * lay.p(y, i, lay.n + j)
        } else {
            om[j - lay.n] * lay.p(y, i, j - lay.n)
        }
    };
    let pb = |y: &[f64], out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..lay.n).map(|k| lay.p(y, i, lay.n + k) * b[k]).sum();
        }
    };
    let backward = |_: f64, y: &[f64], dy: &mut [f64]| {
        let mut pbv = vec![0.0; m];
        pb(y, &mut pbv);
        for i in 0..m {
            for j in 0..m {
                let mut v = pa(y, i, j) + pa(y, j, i) - pbv[i] * pbv[j];
                if i == j {
                    v += 1.0;
                }
                dy[i * m + j] = v;
            }
        }
        let so = lay.s_offset();
        let s = &y[so..];
        let bts: f64 = (0..n).map(|k| b[k] * s[n + k]).sum();
        for k in 0..n {
            dy[so + k] = -om[k] * s[n + k] + pbv[k] * (ubar - bts) - xbar[k];
            dy[so + n + k] = om[k] * s[k] + pbv[n + k] * (ubar - bts) - xbar[n + k];
        }
    };
    let t_end = hs.horizon;
    let opts = OdeOptions::default();
    let back = dopri5(backward, 0.0, t_end, &vec![0.0; m * m + m], &opts, true)?;
    let ps = back.dense.expect("dense output requested");

    let feedback = |t: f64, x: &[f64], buf: &mut [f64]| -> f64 {
        ps.eval_into(t_end - t, buf);
        let so = lay.s_offset();
        let mut bt_lam = 0.0;
        for k in 0..n {
            let row = n + k;
            let px: f64 = (0..m).map(|j| buf[row * m + j] * x[j]).sum();
            bt_lam -= b[k] * (px + buf[so + row]);
        }
        ubar + bt_lam
    };
    let forward = |t: f64, x: &[f64], dx: &mut [f64]| {
        let mut buf = vec![0.0; m * m + m];
        let u = feedback(t, x, &mut buf);
        for k in 0..n {
            dx[k] = om[k] * x[n + k];
            dx[n + k] = -om[k] * x[k] + b[k] * u;
        }
    };
    let fwd = dopri5(forward, 0.0, t_end, &hs.x0.to_flat(), &opts, true)?;
    let xs = fwd.dense.expect("dense output requested");

    let mut traj = Trajectory {
        times: hs.grid.clone(),
        x: Vec::with_capacity(hs.grid.len()),
        lam: Vec::with_capacity(hs.grid.len()),
        mu: Vec::with_capacity(hs.grid.len()),
        u: Vec::with_capacity(hs.grid.len()),
    };
    let mut buf = vec![0.0; m * m + m];
    for &t in &hs.grid {
        let x = xs.eval(t);
        ps.eval_into(t_end - t, &mut buf);
        let so = lay.s_offset();
        let costate: Vec<f64> = (0..m)
            .map(|i| -((0..m).map(|j| buf[i * m + j] * x[j]).sum::<f64>() + buf[so + i]))
            .collect();
        let (lam, mu) = costate.split_at(n);
        traj.u.push(ubar + (0..n).map(|k| b[k] * mu[k]).sum::<f64>());
        traj.lam.push(lam.to_vec());
        traj.mu.push(mu.to_vec());
        traj.x.push(StateVector::from_flat(&x));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::super::{dynamic_cost, pmp_residual, simulate_open_loop};
    use super::*;
    use crate::static_opt::{solve_static, static_cost};

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let sys = OscillatorSystem::new(vec![1.0, 2.0], vec![1.0, 0.5]).unwrap();
        let t = TargetSpec::zero(2);
        let hs = HorizonSpec::uniform(3.0, StateVector::zeros(2), 31).unwrap();
        let tr = solve_riccati_oracle(&sys, &t, &hs, &solve_static(&t, &sys).unwrap()).unwrap();
        assert!(tr.u.iter().all(|u| *u == 0.0));
        assert_eq!(dynamic_cost(&tr, &t).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_beats_steady_control() {
        let sys = OscillatorSystem::new(vec![1.0], vec![1.0]).unwrap();
        let t = TargetSpec::new(StateVector::zeros(1), 1.0).unwrap();
        let st = solve_static(&t, &sys).unwrap();
        let hs = HorizonSpec::uniform(5.0, StateVector::zeros(1), 2001).unwrap();
        let tr = solve_riccati_oracle(&sys, &t, &hs, &st).unwrap();
        let cost = dynamic_cost(&tr, &t).unwrap();
        for u in [0.0, st.uhat, t.ubar] {
            let naive = simulate_open_loop(&sys, &hs.x0, &hs.grid, &vec![u; hs.grid.len()]).unwrap();
            assert!(cost <= dynamic_cost(&naive, &t).unwrap());
        }
        // the start x0 = 0 ≠ x̂ costs a bounded surplus over T·J_s
        let surplus = cost - 5.0 * static_cost(&st, &t).unwrap();
        assert!(surplus > 0.0 && surplus < 0.5, "surplus {surplus}");
        assert!(tr.costate(tr.len() - 1).h_norm() < 1e-8);
        let r = pmp_residual(&tr, &sys, &t).unwrap();
        assert!(r.value < 1e-6, "{r:?}");
    }
}
