//! Spectrum of the complexified variational generator `𝒜`: the
//! characteristic equation `Σ b_k²((σ+iω_k)⁻² + (σ-iω_k)⁻²) = 2`, its roots
//! near `±iω_k`, eigenvectors and Rouché certificates.
//!
//! Near a pole `iω_k` every quantity is evaluated in shifted form
//! `σ = i·center + offset`, so that the small offset is never lost to
//! cancellation against a large frequency.

mod riesz;

pub use riesz::{
    closeness_sums, diagonal_block_closed_form, off_diagonal_constant, reconstruct_eigvecs, riesz_family,
    riesz_vectors, RieszEntry, RieszFamily,
};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::OscillatorSystem;

const I: C64 = C64::new(0.0, 1.0);
const POLE_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 50;

/// Element `(z, ζ, p, q)` of the complexified space, one entry per mode in
/// each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexQuadVector {
    pub z: Vec<C64>,
    pub zeta: Vec<C64>,
    pub p: Vec<C64>,
    pub q: Vec<C64>,
}

impl ComplexQuadVector {
    pub fn zeros(n: usize) -> Self {
        let v = vec![C64::new(0.0, 0.0); n];
        Self {
            z: v.clone(),
            zeta: v.clone(),
            p: v.clone(),
            q: v,
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    fn blocks(&self) -> [&Vec<C64>; 4] {
        [&self.z, &self.zeta, &self.p, &self.q]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        let m = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Self {
            z: m(&self.z, &other.z),
            zeta: m(&self.zeta, &other.zeta),
            p: m(&self.p, &other.p),
            q: m(&self.q, &other.q),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.zip_with(self, |a, _| a * s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks().iter().flat_map(|b| b.iter()).map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `Π_j θ = (z_j, ζ_j, p_j, q_j)`, 0-based `j`.
    pub fn block(&self, j: usize) -> [C64; 4] {
        [self.z[j], self.zeta[j], self.p[j], self.q[j]]
    }

    /// Unit vector with a one in entry `s` (0..4) of block `k`.
    pub fn unit(n: usize, k: usize, s: usize) -> Self {
        let mut v = Self::zeros(n);
        let one = C64::new(1.0, 0.0);
        match s {
            0 => v.z[k] = one,
            1 => v.zeta[k] = one,
            2 => v.p[k] = one,
            _ => v.q[k] = one,
        }
        v
    }
}

/// `π₁`: real `(δξ, δη, δλ, δμ)` of length `4N` to
/// `(δξ+iδη, δξ-iδη, δλ+iδμ, δλ-iδμ)`.
pub fn complexify(delta: &[f64]) -> Result<ComplexQuadVector> {
    if !delta.len().is_multiple_of(4) {
        return Err(Error::Dimension {
            what: "delta",
            got: delta.len(),
            expected: 4 * (delta.len() / 4 + 1),
        });
    }
    let n = delta.len() / 4;
    let (xi, rest) = delta.split_at(n);
    let (eta, rest) = rest.split_at(n);
    let (lam, mu) = rest.split_at(n);
    let c = |a: &[f64], b: &[f64], s: f64| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| C64::new(*x, s * y)).collect() };
    Ok(ComplexQuadVector {
        z: c(xi, eta, 1.0),
        zeta: c(xi, eta, -1.0),
        p: c(lam, mu, 1.0),
        q: c(lam, mu, -1.0),
    })
}

/// `π₁⁻¹ = ½(z+ζ, i(ζ-z), p+q, i(q-p))`, as a complex-linear map.
pub fn decomplexify(v: &ComplexQuadVector) -> Vec<C64> {
    let half = 0.5;
    let mut out = Vec::with_capacity(4 * v.len());
    out.extend(v.z.iter().zip(&v.zeta).map(|(z, w)| (z + w) * half));
    out.extend(v.z.iter().zip(&v.zeta).map(|(z, w)| I * (w - z) * half));
    out.extend(v.p.iter().zip(&v.q).map(|(p, q)| (p + q) * half));
    out.extend(v.p.iter().zip(&v.q).map(|(p, q)| I * (q - p) * half));
    out
}

fn check_quad(v: &ComplexQuadVector, sys: &OscillatorSystem) -> Result<()> {
    for (name, b) in [("z", &v.z), ("zeta", &v.zeta), ("p", &v.p), ("q", &v.q)] {
        crate::error::check_len(name, b.len(), sys.len())?;
    }
    Ok(())
}

/// `𝒜θ`: `(-iΩz + ½bbᵀ(p-q), iΩζ - ½bbᵀ(p-q), z - iΩp, ζ + iΩq)`.
pub fn apply_generator(v: &ComplexQuadVector, sys: &OscillatorSystem) -> Result<ComplexQuadVector> {
    check_quad(v, sys)?;
    let (om, b) = (sys.omega(), sys.b());
    let phi: C64 = (0..v.len()).map(|j| b[j] * (v.p[j] - v.q[j])).sum::<C64>() * 0.5;
    let n = v.len();
    Ok(ComplexQuadVector {
        z: (0..n).map(|j| -I * om[j] * v.z[j] + b[j] * phi).collect(),
        zeta: (0..n).map(|j| I * om[j] * v.zeta[j] - b[j] * phi).collect(),
        p: (0..n).map(|j| v.z[j] - I * om[j] * v.p[j]).collect(),
        q: (0..n).map(|j| v.zeta[j] + I * om[j] * v.q[j]).collect(),
    })
}

/// A complex point written as `i·center + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shifted {
    pub center: f64,
    pub offset: C64,
}

impl Shifted {
    pub fn new(center: f64, offset: C64) -> Self {
        Self { center, offset }
    }

    /// Splits `σ` around the nearest pole `±iω_j`.
    pub fn around_nearest_pole(sigma: C64, sys: &OscillatorSystem) -> Self {
        let mut best = (f64::INFINITY, 0.0);
        for &w in sys.omega() {
            for c in [w, -w] {
                let d = (sigma.im - c).abs();
                if d < best.0 {
                    best = (d, c);
                }
            }
        }
        let center = if best.0.is_finite() { best.1 } else { 0.0 };
        Self {
            center,
            offset: C64::new(sigma.re, sigma.im - center),
        }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.offset.re, self.center + self.offset.im)
    }

    /// `σ + iω` with the frequency sum formed in real arithmetic.
    fn plus_i(&self, w: f64) -> C64 {
        C64::new(self.offset.re, (self.center + w) + self.offset.im)
    }

    fn minus_i(&self, w: f64) -> C64 {
        C64::new(self.offset.re, (self.center - w) + self.offset.im)
    }

    fn check_poles(&self, sys: &OscillatorSystem) -> Result<()> {
        for &w in sys.omega() {
            for (d, pole) in [(self.plus_i(w), -w), (self.minus_i(w), w)] {
                if d.norm() < POLE_TOL {
                    return Err(Error::Pole {
                        sigma: format!("{}", self.value()),
                        pole: format!("{}i", pole),
                        dist: d.norm(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Characteristic residual and its derivative at a shifted point.
fn char_eval(s: &Shifted, sys: &OscillatorSystem) -> (C64, C64) {
    let mut f = C64::new(-2.0, 0.0);
    let mut df = C64::new(0.0, 0.0);
    for (&w, &b) in sys.omega().iter().zip(sys.b()) {
        let b2 = b * b;
        let a = s.plus_i(w).inv();
        let c = s.minus_i(w).inv();
        let (a2, c2) = (a * a, c * c);
        f += b2 * (a2 + c2);
        df -= 2.0 * b2 * (a2 * a + c2 * c);
    }
    (f, df)
}

pub fn char_residual_shifted(s: &Shifted, sys: &OscillatorSystem) -> Result<C64> {
    s.check_poles(sys)?;
    Ok(char_eval(s, sys).0)
}

/// `Σ_k b_k²((σ+iω_k)⁻² + (σ-iω_k)⁻²) - 2`.
pub fn char_residual(sigma: C64, sys: &OscillatorSystem) -> Result<C64> {
    char_residual_shifted(&Shifted::around_nearest_pole(sigma, sys), sys)
}

/// Derivative `-2Σ_k b_k²((σ+iω_k)⁻³ + (σ-iω_k)⁻³)`.
pub fn char_derivative(sigma: C64, sys: &OscillatorSystem) -> Result<C64> {
    let s = Shifted::around_nearest_pole(sigma, sys);
    s.check_poles(sys)?;
    Ok(char_eval(&s, sys).1)
}

fn check_index(k: usize, sys: &OscillatorSystem) -> Result<()> {
    if k == 0 || k > sys.len() {
        return Err(Error::Argument(format!("mode index {k} outside 1..={}", sys.len())));
    }
    Ok(())
}

/// Predicted offset `λ_k⁰` of the root near `iω_k` (1-based `k`).
pub fn lambda0(k: usize, sys: &OscillatorSystem) -> Result<f64> {
    check_index(k, sys)?;
    let (om, b) = (sys.omega(), sys.b());
    let (wk, bk) = (om[k - 1], b[k - 1]);
    let coupling: f64 = (0..sys.len())
        .filter(|&j| j != k - 1)
        .map(|j| {
            let (wj, bj) = (om[j], b[j]);
            bj * bj * (wk * wk + wj * wj) / ((wk - wj) * (wk + wj)).powi(2)
        })
        .sum();
    Ok(bk.abs() / (2.0 + bk * bk / (4.0 * wk * wk) + 2.0 * coupling).sqrt())
}

/// The four eigenvalues generated by the root `iω_k + ν_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenQuad {
    /// 1-based mode index.
    pub k: usize,
    pub omega: f64,
    pub b: f64,
    pub sigma_plus: C64,
    pub sigma_minus: C64,
    pub sigma_neg_plus: C64,
    pub sigma_neg_minus: C64,
    pub nu: C64,
    pub lambda0: f64,
    /// `ν_k - λ_k⁰`.
    pub eps: C64,
    /// `|ε_k| < λ_k⁰/2`.
    pub eps_within_half: bool,
    /// `|char_residual(σ_k^+)|`.
    pub residual: f64,
    pub iterations: usize,
}

impl EigenQuad {
    pub fn shifted_plus(&self) -> Shifted {
        Shifted::new(self.omega, self.nu)
    }

    pub fn shifted_minus(&self) -> Shifted {
        Shifted::new(self.omega, -self.nu.conj())
    }

    pub fn shifted_neg_plus(&self) -> Shifted {
        Shifted::new(-self.omega, self.nu.conj())
    }

    pub fn shifted_neg_minus(&self) -> Shifted {
        Shifted::new(-self.omega, -self.nu)
    }

    /// `[σ_k^+, σ_k^-, σ_{-k}^+, σ_{-k}^-]`.
    pub fn sigmas(&self) -> [C64; 4] {
        [
            self.sigma_plus,
            self.sigma_minus,
            self.sigma_neg_plus,
            self.sigma_neg_minus,
        ]
    }
}

/// Locates `ν_k` by damped Newton on `λ²F(iω_k + λ)` from `λ_k⁰`, then
/// polishes on `F` itself.
pub fn find_nu(k: usize, sys: &OscillatorSystem) -> Result<EigenQuad> {
    let l0 = lambda0(k, sys)?;
    let wk = sys.omega()[k - 1];
    let at = |lam: C64| Shifted::new(wk, lam);
    let scaled = |lam: C64| -> (C64, C64) {
        let (f, df) = char_eval(&at(lam), sys);
        (lam * lam * f, 2.0 * lam * f + lam * lam * df)
    };

    let mut lam = C64::new(l0, 0.0);
    let (mut g, mut dg) = scaled(lam);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_NEWTON {
        iterations += 1;
        if dg.norm() < 1e-300 {
            return Err(Error::Numeric(format!("mode {k}: vanishing derivative at λ = {lam}")));
        }
        let step = g / dg;
        let mut t = 1.0;
        let mut next = lam - step;
        let mut gn = scaled(next);
        while gn.0.norm() > g.norm() && t > 1e-6 {
            t *= 0.5;
            next = lam - step * t;
            gn = scaled(next);
        }
        let moved = (next - lam).norm();
        lam = next;
        (g, dg) = gn;
        if moved <= 4.0 * f64::EPSILON * lam.norm() || g.norm() == 0.0 {
            converged = true;
            break;
        }
    }
    for _ in 0..3 {
        let (f, df) = char_eval(&at(lam), sys);
        if f.norm() == 0.0 || df.norm() == 0.0 {
            break;
        }
        let next = lam - f / df;
        if char_eval(&at(next), sys).0.norm() >= f.norm() {
            break;
        }
        lam = next;
    }
    let residual = char_eval(&at(lam), sys).0.norm();
    if !(converged || residual < 1e-13) || !(residual < 1e-11) {
        return Err(Error::Numeric(format!(
            "mode {k}: Newton did not converge after {iterations} iterations (λ = {lam}, |F| = {residual:e}, λ⁰ = {l0})"
        )));
    }
    let ball = sys.b_norm();
    if lam.norm() > ball {
        return Err(Error::Localization {
            k,
            nu_abs: lam.norm(),
            radius: ball,
        });
    }
    if lam.re <= 0.0 {
        return Err(Error::Numeric(format!(
            "mode {k}: root {lam} has nonpositive real part"
        )));
    }
    let eps = lam - l0;
    Ok(EigenQuad {
        k,
        omega: wk,
        b: sys.b()[k - 1],
        sigma_plus: at(lam).value(),
        sigma_minus: at(-lam.conj()).value(),
        sigma_neg_plus: Shifted::new(-wk, lam.conj()).value(),
        sigma_neg_minus: Shifted::new(-wk, -lam).value(),
        nu: lam,
        lambda0: l0,
        eps,
        eps_within_half: eps.norm() < 0.5 * l0,
        residual,
        iterations,
    })
}

/// All quads `k = 1..=N`, computed in parallel.
pub fn spectrum(sys: &OscillatorSystem) -> Result<Vec<EigenQuad>> {
    (1..=sys.len()).into_par_iter().map(|k| find_nu(k, sys)).collect()
}

/// Closed-form terms of the sufficient condition for a unique root within
/// `κλ_k⁰` of `λ_k⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoucheCertificate {
    pub k: usize,
    pub kappa: f64,
    pub x: f64,
    pub r_sum: f64,
    pub r_gap: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// `2κ(2-κ)/(1+κ)²`.
pub fn rouche_threshold(kappa: f64) -> f64 {
    2.0 * kappa * (2.0 - kappa) / (1.0 + kappa).powi(2)
}

fn geometric_term(norm2: f64, x: f64, r: f64) -> f64 {
    if r.is_infinite() {
        0.0
    } else {
        norm2 * x * (2.0 * r - x) / (r * r * (r - x).powi(2))
    }
}

pub fn rouche_certificate(k: usize, kappa: f64, sys: &OscillatorSystem) -> Result<RoucheCertificate> {
    check_index(k, sys)?;
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Argument(format!("kappa = {kappa} must lie in (0, 1)")));
    }
    let (om, b) = (sys.omega(), sys.b());
    let (wk, bk) = (om[k - 1], b[k - 1]);
    let others = (0..sys.len()).filter(|&j| j != k - 1);
    let r_sum = others.clone().map(|j| wk + om[j]).fold(f64::INFINITY, f64::min);
    let r_gap = others.map(|j| (wk - om[j]).abs()).fold(f64::INFINITY, f64::min);
    let x = bk * bk * (1.0 + kappa) / 2.0;
    let limit = 1f64.min(r_sum).min(r_gap).min(2.0 * wk);
    if x >= limit {
        return Err(Error::Precondition(format!(
            "mode {k}: x = {x} not below min(1, R, 2ω_k) = {limit}"
        )));
    }
    let s1 = bk * bk * x * (4.0 * wk - x) / (4.0 * wk * wk * (2.0 * wk - x).powi(2));
    let nb2 = sys.b_norm().powi(2);
    let s2 = geometric_term(nb2, x, r_sum);
    let s3 = geometric_term(nb2, x, r_gap);
    let threshold = rouche_threshold(kappa);
    Ok(RoucheCertificate {
        k,
        kappa,
        x,
        r_sum,
        r_gap,
        s1,
        s2,
        s3,
        threshold,
        holds: s1 + s2 + s3 <= threshold,
    })
}

/// `θ(σ) = ((σ+iΩ)⁻¹b, -(σ-iΩ)⁻¹b, (σ+iΩ)⁻²b, -(σ-iΩ)⁻²b)`.
pub fn eigvec_shifted(s: &Shifted, sys: &OscillatorSystem) -> Result<ComplexQuadVector> {
    s.check_poles(sys)?;
    let (om, b) = (sys.omega(), sys.b());
    let n = sys.len();
    let mut v = ComplexQuadVector::zeros(n);
    for j in 0..n {
        let a = s.plus_i(om[j]).inv();
        let c = s.minus_i(om[j]).inv();
        v.z[j] = a * b[j];
        v.zeta[j] = -c * b[j];
        v.p[j] = a * a * b[j];
        v.q[j] = -c * c * b[j];
    }
    Ok(v)
}

pub fn eigvec(sigma: C64, sys: &OscillatorSystem) -> Result<ComplexQuadVector> {
    eigvec_shifted(&Shifted::around_nearest_pole(sigma, sys), sys)
}

/// `‖(𝒜 - σ)θ‖ / ‖θ‖`, with `σ` entering each mode through the shifted
/// differences `σ ± iω_j`.
pub fn eigen_residual(theta: &ComplexQuadVector, s: &Shifted, sys: &OscillatorSystem) -> Result<f64> {
    check_quad(theta, sys)?;
    let (om, b) = (sys.omega(), sys.b());
    let phi: C64 = (0..theta.len()).map(|j| b[j] * (theta.p[j] - theta.q[j])).sum::<C64>() * 0.5;
    let mut acc = 0.0;
    for j in 0..theta.len() {
        let (sp, sm) = (s.plus_i(om[j]), s.minus_i(om[j]));
        acc += (b[j] * phi - sp * theta.z[j]).norm_sqr();
        acc += (-b[j] * phi - sm * theta.zeta[j]).norm_sqr();
        acc += (theta.z[j] - sp * theta.p[j]).norm_sqr();
        acc += (theta.zeta[j] - sm * theta.q[j]).norm_sqr();
    }
    Ok(acc.sqrt() / theta.norm())
}

pub fn spectrum_csv(quads: &[EigenQuad], certificates: &[Option<RoucheCertificate>]) -> String {
    let mut s = String::from(
        "k,re_sigma_plus,im_sigma_plus,re_sigma_minus,im_sigma_minus,lambda0,abs_eps,certificate,residual\n",
    );
    for (i, q) in quads.iter().enumerate() {
        let cert = match certificates.get(i).copied().flatten() {
            Some(c) if c.holds => "pass",
            Some(_) => "fail",
            None => "n/a",
        };
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            q.k,
            q.sigma_plus.re,
            q.sigma_plus.im,
            q.sigma_minus.re,
            q.sigma_minus.im,
            q.lambda0,
            q.eps.norm(),
            cert,
            q.residual
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> OscillatorSystem {
        OscillatorSystem::new(vec![1.0], vec![1.0]).unwrap()
    }

    fn chain(n: usize) -> OscillatorSystem {
        OscillatorSystem::new(
            (1..=n).map(|k| (k * k) as f64).collect(),
            (1..=n).map(|k| 1.0 / k as f64).collect(),
        )
        .unwrap()
    }

    /// root of s² + s + 2 = 0 in the first quadrant of σ = √s
    fn quartic_root() -> C64 {
        let s = C64::new(-0.5, 7f64.sqrt() / 2.0);
        let r = s.sqrt();
        if r.re > 0.0 {
            r
        } else {
            -r
        }
    }

    #[test]
    fn complexify_examples() {
        let v = complexify(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v.z[0], C64::new(1.0, 0.0));
        assert_eq!(v.zeta[0], C64::new(1.0, 0.0));
        assert_eq!(v.p[0], I);
        assert_eq!(v.q[0], -I);
        assert!(complexify(&[0.0; 8]).unwrap().norm() == 0.0);
        assert!(complexify(&[0.0; 7]).is_err());
    }

    #[test]
    fn single_mode_root() {
        let sys = unit();
        let sigma = quartic_root();
        assert!((sigma - C64::new(0.6761, 0.9783)).norm() < 2e-4);
        assert!(char_residual(sigma, &sys).unwrap().norm() < 1e-10);
        let q = find_nu(1, &sys).unwrap();
        assert!((q.sigma_plus - sigma).norm() < 1e-12);
        assert!((q.nu - C64::new(0.6761, -0.0217)).norm() < 2e-4);
        assert!((q.lambda0 - 2.0 / 3.0).abs() < 1e-15);
        assert!(q.eps_within_half);
        let th = eigvec_shifted(&q.shifted_plus(), &sys).unwrap();
        assert!((th.p[0] - th.q[0] - C64::new(2.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn pole_rejected() {
        let sys = unit();
        assert!(matches!(char_residual(I, &sys), Err(Error::Pole { .. })));
        assert!(matches!(eigvec(-I, &sys), Err(Error::Pole { .. })));
    }

    #[test]
    fn no_imaginary_roots() {
        let sys = chain(6);
        for i in 0..2000 {
            let w = i as f64 * 0.0213 + 0.001;
            if let Ok(r) = char_residual(C64::new(0.0, w), &sys) {
                assert!((r + 2.0).re < 0.0);
            }
        }
    }

    #[test]
    fn threshold_at_half() {
        assert!((rouche_threshold(0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn certificate_small_gain_limit() {
        let sys = OscillatorSystem::new(vec![1.0, 2.0, 3.0], vec![1e-9, 1e-9, 1e-9]).unwrap();
        let c = rouche_certificate(2, 0.5, &sys).unwrap();
        assert!(c.holds && c.s1 + c.s2 + c.s3 < 1e-15);
        let big = OscillatorSystem::new(vec![1.0, 1.5], vec![3.0, 1.0]).unwrap();
        assert!(matches!(rouche_certificate(1, 0.5, &big), Err(Error::Precondition(_))));
        assert!(rouche_certificate(1, 1.5, &big).is_err());
    }

    #[test]
    fn chain_quads() {
        let sys = chain(12);
        let quads = spectrum(&sys).unwrap();
        for q in &quads {
            assert!(q.residual < 1e-11);
            assert!(q.sigma_plus.re > 0.0 && q.sigma_minus.re < 0.0);
            assert!(q.nu.norm() < 2f64.sqrt() * q.b.abs());
            assert!((q.sigma_neg_minus + q.sigma_plus).norm() < 1e-12 * q.omega);
            assert!((q.sigma_neg_plus - q.sigma_plus.conj()).norm() < 1e-12 * q.omega);
            assert!((q.sigma_minus + q.sigma_plus.conj()).norm() < 1e-12 * q.omega);
            for s in q.sigmas() {
                for t in [s, -s, s.conj()] {
                    assert!(char_residual(t, &sys).unwrap().norm() < 1e-10);
                }
            }
            let th = eigvec_shifted(&q.shifted_plus(), &sys).unwrap();
            assert!(eigen_residual(&th, &q.shifted_plus(), &sys).unwrap() < 1e-9);
            let direct = apply_generator(&th, &sys).unwrap().sub(&th.scale(q.sigma_plus));
            assert!(direct.norm() / th.norm() < 1e-8);
            let phi: C64 = (0..12).map(|j| sys.b()[j] * (th.p[j] - th.q[j])).sum::<C64>() * 0.5;
            assert!((phi - 1.0).norm() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn complexify_round_trip_and_norms(v in prop::collection::vec(-10.0f64..10.0, 4..40)) {
            let n = v.len() / 4;
            let d = &v[..4 * n];
            let c = complexify(d).unwrap();
            let back = decomplexify(&c);
            for (a, b) in d.iter().zip(&back) {
                prop_assert!((b - a).norm() <= 1e-14 * (1.0 + a.abs()));
            }
            let nd = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(c.norm() <= 2.0 * nd + 1e-12);
            let nb = back.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(nb <= c.norm() + 1e-12);
        }

        #[test]
        fn residual_symmetry(re in 0.05f64..3.0, im in -20.0f64..20.0) {
            let sys = chain(5);
            let s = C64::new(re, im);
            let r = char_residual(s, &sys).unwrap();
            prop_assert!((char_residual(-s, &sys).unwrap() - r).norm() < 1e-10);
            prop_assert!((char_residual(s.conj(), &sys).unwrap() - r.conj()).norm() < 1e-10);
        }

        #[test]
        fn lambda0_below_bound(gaps in prop::collection::vec(0.2f64..4.0, 1..10), scale in 0.01f64..2.0) {
            let omega: Vec<f64> = gaps.iter().scan(0.0, |s, g| { *s += g; Some(*s) }).collect();
            let b: Vec<f64> = (0..omega.len()).map(|k| scale / (k + 1) as f64).collect();
            let sys = OscillatorSystem::new(omega, b).unwrap();
            for k in 1..=sys.len() {
                let l = lambda0(k, &sys).unwrap();
                prop_assert!(l > 0.0 && l < sys.b()[k - 1].abs() / 2f64.sqrt());
            }
        }
    }
}
