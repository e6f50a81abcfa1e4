//! Dormand–Prince 5(4) with step-size control and continuous output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen from the problem scale when `None`.
    pub h0: Option<f64>,
    /// Largest allowed step.
    pub hmax: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 5_000_000,
            h0: None,
            hmax: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
struct DenseStep {
    t: f64,
    h: f64,
    /// `y0, y1-y0, bspl, y1-y0-h f1-bspl, h Σ d_i k_i` stacked.
    coef: Vec<f64>,
}

/// Continuous extension over all accepted steps.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    dim: usize,
    steps: Vec<DenseStep>,
}

impl DenseOutput {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.t)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t + s.h)
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `y(t)` into `out`, clamping `t` to the integrated interval.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let i = match self.steps.binary_search_by(|s| s.t.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let s = &self.steps[i.min(self.steps.len() - 1)];
        let th = ((t - s.t) / s.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let d = self.dim;
        let c = &s.coef;
        for (j, o) in out.iter_mut().enumerate().take(d) {
            *o = c[j] + th * (c[d + j] + th1 * (c[2 * d + j] + th * (c[3 * d + j] + th1 * c[4 * d + j])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.eval_into(t, &mut v);
        v
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub y_end: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub dense: Option<DenseOutput>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions, dense: bool) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(t1 > t0) {
        return Err(Error::Argument(format!("integration interval [{t0}, {t1}] is empty")));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut steps = Vec::new();
    f(t0, &y, &mut k[0]);

    let scale = |a: f64, b: f64| opts.atol + opts.rtol * a.abs().max(b.abs());
    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            let d0 = rms(y.iter().map(|v| v / scale(*v, *v)));
            let d1 = rms(k[0].iter().zip(&y).map(|(d, v)| d / scale(*v, *v)));
            let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            h.min(t1 - t0)
        }
    }
    .min(opts.hmax);
    let (mut t, mut accepted, mut rejected) = (t0, 0usize, 0usize);
    let mut last_rejected = false;

    while t < t1 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Numeric(format!("ODE step budget exhausted at t = {t}")));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Numeric(format!("ODE step size underflow at t = {t}")));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let stage = |tmp: &mut [f64], y: &[f64], k: &[Vec<f64>], coeffs: &[(usize, f64)]| {
            for i in 0..n {
                let mut acc = y[i];
                for &(j, a) in coeffs {
                    acc += h * a * k[j][i];
                }
                tmp[i] = acc;
            }
        };
        stage(&mut tmp, &y, &k, &[(0, A21)]);
        f(t + C2 * h, &tmp, &mut k[1]);
        stage(&mut tmp, &y, &k, &[(0, A31), (1, A32)]);
        f(t + C3 * h, &tmp, &mut k[2]);
        stage(&mut tmp, &y, &k, &[(0, A41), (1, A42), (2, A43)]);
        f(t + C4 * h, &tmp, &mut k[3]);
        stage(&mut tmp, &y, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        f(t + C5 * h, &tmp, &mut k[4]);
        stage(&mut tmp, &y, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        f(t + h, &tmp, &mut k[5]);
        stage(&mut ynew, &y, &k, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
        f(t + h, &ynew, &mut k[6]);

        let err = rms((0..n).map(|i| {
            let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            e / scale(y[i], ynew[i])
        }));
        if !err.is_finite() {
            h *= 0.1;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        let mut fac = 0.9 * err.powf(-0.2);
        if err <= 1.0 {
            if dense {
                let mut coef = vec![0.0; 5 * n];
                for i in 0..n {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    coef[i] = y[i];
                    coef[n + i] = ydiff;
                    coef[2 * n + i] = bspl;
                    coef[3 * n + i] = ydiff - h * k[6][i] - bspl;
                    coef[4 * n + i] =
                        h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                }
                steps.push(DenseStep { t, h, coef });
            }
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            accepted += 1;
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac.clamp(0.2, 10.0)).min(opts.hmax);
        } else {
            rejected += 1;
            last_rejected = true;
            h *= fac.clamp(0.2, 1.0);
        }
    }
    Ok(OdeSolution {
        y_end: y,
        accepted,
        rejected,
        dense: dense.then_some(DenseOutput { dim: n, steps }),
    })
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for v in it {
        s += v * v;
        c += 1;
    }
    if c == 0 {
        0.0
    } else {
        (s / c as f64).sqrt()
    }
}
