//! Boundary-value solve of `Δ' = ÃΔ`, `Δ = (x - x̂, Λ - Λ̂)`, written as
//! `Δ(t) = Φ_s e^{Λ_s t} c_s + Φ_u e^{Λ_u (t - T)} c_u` so that no growing
//! exponential is ever formed.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64 as C64;

use super::{assemble_generator, HorizonSpec, Trajectory};
use crate::error::{check_len, Error, Result};
use crate::model::{OscillatorSystem, StateVector};
use crate::static_opt::{StaticSolution, TargetSpec};

const ILL_CONDITIONED: f64 = 1e12;
const IMAG_TOL: f64 = 1e-8;

/// Eigenvalues and unit-norm eigenvectors (columns) of the real generator.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
}

pub fn dense_eigen(matrix: &DMatrix<f64>) -> Result<DenseEigen> {
    let dim = matrix.nrows();
    let schur = Schur::try_new(matrix.clone(), f64::EPSILON, 100 * dim.max(10))
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let values: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    let mc: DMatrix<C64> = matrix.map(|v| C64::new(v, 0.0));
    let scale = matrix.norm().max(1.0);
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &sigma) in values.iter().enumerate() {
        let shift = sigma + C64::new(1e-14 * scale, 1e-14 * scale);
        let mut a = mc.clone();
        for i in 0..dim {
            a[(i, i)] -= shift;
        }
        let lu = a.lu();
        let mut v = DVector::from_fn(dim, |i, _| {
            C64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())
        });
        for _ in 0..3 {
            v = lu
                .solve(&v)
                .ok_or_else(|| Error::Numeric(format!("inverse iteration failed at σ = {sigma}")))?;
            let nv = v.norm();
            if !(nv.is_finite() && nv > 0.0) {
                return Err(Error::Numeric(format!("inverse iteration diverged at σ = {sigma}")));
            }
            v.unscale_mut(nv);
        }
        vectors.set_column(col, &v);
    }
    Ok(DenseEigen { values, vectors })
}

#[derive(Debug, Clone)]
pub struct DichotomySolution {
    n: usize,
    horizon: f64,
    stable_values: Vec<C64>,
    unstable_values: Vec<C64>,
    stable_vectors: DMatrix<C64>,
    unstable_vectors: DMatrix<C64>,
    c_stable: DVector<C64>,
    c_unstable: DVector<C64>,
    xhat: Vec<f64>,
    costate_hat: Vec<f64>,
    b: Vec<f64>,
    ubar: f64,
    rhs_norm: f64,
    /// 2-norm condition number of the boundary matrix.
    pub condition: f64,
    pub ill_conditioned: bool,
    /// Frobenius share of boundary-matrix entries that couple distinct modes.
    pub off_block_mass: f64,
}

fn mode_of(sigma: C64, omega: &[f64]) -> usize {
    let w = sigma.im.abs();
    (0..omega.len())
        .min_by(|&a, &b| (omega[a] - w).abs().partial_cmp(&(omega[b] - w).abs()).unwrap())
        .unwrap_or(0)
}

pub fn dichotomy_solve(
    sys: &OscillatorSystem,
    target: &TargetSpec,
    hs: &HorizonSpec,
    static_sol: &StaticSolution,
) -> Result<DichotomySolution> {
    let n = sys.len();
    check_len("x0", hs.x0.len(), n)?;
    check_len("xhat", static_sol.len(), n)?;
    let g = assemble_generator(sys);
    let eig = dense_eigen(&g.matrix)?;
    let dim = 4 * n;
    let (mut s_idx, mut u_idx) = (Vec::new(), Vec::new());
    for (i, v) in eig.values.iter().enumerate() {
        if v.re < 0.0 {
            s_idx.push(i);
        } else if v.re > 0.0 {
            u_idx.push(i);
        }
    }
    if s_idx.len() != 2 * n || u_idx.len() != 2 * n {
        return Err(Error::Hyperbolicity {
            stable: s_idx.len(),
            unstable: u_idx.len(),
            n,
        });
    }
    let pick = |idx: &[usize]| -> (Vec<C64>, DMatrix<C64>) {
        let vals = idx.iter().map(|&i| eig.values[i]).collect();
        let mut m = DMatrix::zeros(dim, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            m.set_column(c, &eig.vectors.column(i));
        }
        (vals, m)
    };
    let (sv, sm) = pick(&s_idx);
    let (uv, um) = pick(&u_idx);
    let t_end = hs.horizon;
    let half = 2 * n;

    let mut bm = DMatrix::<C64>::zeros(dim, dim);
    for c in 0..half {
        let decay_s = (sv[c] * t_end).exp();
        let decay_u = (-uv[c] * t_end).exp();
        for r in 0..half {
            bm[(r, c)] = sm[(r, c)];
            bm[(r, half + c)] = um[(r, c)] * decay_u;
            bm[(half + r, c)] = sm[(half + r, c)] * decay_s;
            bm[(half + r, half + c)] = um[(half + r, c)];
        }
    }
    let xhat = static_sol.xhat.to_flat();
    let costate_hat = static_sol.costate().to_flat();
    let x0 = hs.x0.to_flat();
    let rhs = DVector::from_fn(dim, |r, _| {
        if r < half {
            C64::new(x0[r] - xhat[r], 0.0)
        } else {
            C64::new(-costate_hat[r - half], 0.0)
        }
    });
    let rhs_norm = rhs.norm();

    let sing = bm.clone().singular_values();
    let smax = sing.iter().cloned().fold(0.0, f64::max);
    let smin = sing.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let modes: Vec<usize> = sv.iter().chain(&uv).map(|s| mode_of(*s, sys.omega())).collect();
    let (mut off, mut total) = (0.0, 0.0);
    for c in 0..dim {
        for r in 0..dim {
            let e = bm[(r, c)].norm_sqr();
            total += e;
            if r % n != modes[c] {
                off += e;
            }
        }
    }

    let coeffs = bm
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular boundary matrix".into()))?;
    Ok(DichotomySolution {
        n,
        horizon: t_end,
        stable_values: sv,
        unstable_values: uv,
        stable_vectors: sm,
        unstable_vectors: um,
        c_stable: coeffs.rows(0, half).into_owned(),
        c_unstable: coeffs.rows(half, half).into_owned(),
        xhat,
        costate_hat,
        b: sys.b().to_vec(),
        ubar: target.ubar,
        rhs_norm,
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
        off_block_mass: if total > 0.0 { (off / total).sqrt() } else { 0.0 },
    })
}

impl DichotomySolution {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn stable_values(&self) -> &[C64] {
        &self.stable_values
    }

    pub fn unstable_values(&self) -> &[C64] {
        &self.unstable_values
    }

    pub fn delta_complex(&self, t: f64) -> DVector<C64> {
        let ws = DVector::from_fn(self.c_stable.len(), |i, _| {
            (self.stable_values[i] * t).exp() * self.c_stable[i]
        });
        let wu = DVector::from_fn(self.c_unstable.len(), |i, _| {
            (self.unstable_values[i] * (t - self.horizon)).exp() * self.c_unstable[i]
        });
        &self.stable_vectors * ws + &self.unstable_vectors * wu
    }

    /// Real `Δ(t) = (δξ, δη, δλ, δμ)` and the largest discarded imaginary
    /// part relative to the boundary data.
    pub fn delta_checked(&self, t: f64) -> (Vec<f64>, f64) {
        let d = self.delta_complex(t);
        let im = d.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        (
            d.iter().map(|c| c.re).collect(),
            im / self.rhs_norm.max(f64::MIN_POSITIVE),
        )
    }

    pub fn delta(&self, t: f64) -> Vec<f64> {
        self.delta_checked(t).0
    }

    /// `(x(t), Λ(t), u(t))` with `Λ` flattened as `(λ, μ)`.
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let d = self.delta(t);
        let m = 2 * self.n;
        let x: Vec<f64> = (0..m).map(|i| self.xhat[i] + d[i]).collect();
        let l: Vec<f64> = (0..m).map(|i| self.costate_hat[i] + d[m + i]).collect();
        let u = self.ubar + (0..self.n).map(|k| self.b[k] * l[self.n + k]).sum::<f64>();
        (x, l, u)
    }

    pub fn trajectory(&self, grid: &[f64]) -> Result<Trajectory> {
        let n = self.n;
        let mut tr = Trajectory {
            times: grid.to_vec(),
            x: Vec::with_capacity(grid.len()),
            lam: Vec::with_capacity(grid.len()),
            mu: Vec::with_capacity(grid.len()),
            u: Vec::with_capacity(grid.len()),
        };
        for &t in grid {
            let (_, im) = self.delta_checked(t);
            if im > IMAG_TOL {
                return Err(Error::Numeric(format!(
                    "dichotomy solution has relative imaginary part {im:e} at t = {t}"
                )));
            }
            let (x, l, u) = self.eval(t);
            tr.x.push(StateVector::from_flat(&x));
            tr.lam.push(l[..n].to_vec());
            tr.mu.push(l[n..].to_vec());
            tr.u.push(u);
        }
        Ok(tr)
    }
}

pub fn solve_bvp_spectral(
    sys: &OscillatorSystem,
    target: &TargetSpec,
    hs: &HorizonSpec,
    static_sol: &StaticSolution,
) -> Result<Trajectory> {
    dichotomy_solve(sys, target, hs, static_sol)?.trajectory(&hs.grid)
}
