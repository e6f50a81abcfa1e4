//! Pairwise combinations of eigenvectors that are quadratically close to the
//! standard basis of the complexified space.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eigvec_shifted, ComplexQuadVector, EigenQuad};
use crate::error::{Error, Result};
use crate::model::OscillatorSystem;

const I: C64 = C64::new(0.0, 1.0);

/// `θ_k^z, θ_k^ζ, θ_k^p, θ_k^q` for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszEntry {
    pub k: usize,
    pub z: ComplexQuadVector,
    pub zeta: ComplexQuadVector,
    pub p: ComplexQuadVector,
    pub q: ComplexQuadVector,
    /// Max abs deviation of `Π_k θ_k^s` from the closed-form blocks.
    pub diagonal_error: f64,
    /// Max relative error of the eigenvectors rebuilt from this entry.
    pub inverse_error: f64,
}

impl RieszEntry {
    pub fn vectors(&self) -> [&ComplexQuadVector; 4] {
        [&self.z, &self.zeta, &self.p, &self.q]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszFamily {
    pub entries: Vec<RieszEntry>,
    pub rho: f64,
    /// `quad_partials[m] = Σ_{k≤m} Σ_s ‖θ_k^s - θ̂_k^s‖²`.
    pub quad_partials: Vec<f64>,
    /// Same partial sums for the `|b_j|^ρ/|b_k|^ρ` renormalized family.
    pub weighted_partials: Vec<f64>,
    /// `max_{j≠k,s} ‖Π_j θ_k^s‖ |ω_j - ω_k| / |b_j|`.
    pub off_diagonal_constant: f64,
}

/// Closed-form `Π_k θ_k^s` in the order `z, ζ, p, q`.
pub fn diagonal_block_closed_form(nu: C64, omega: f64) -> [[C64; 4]; 4] {
    let (r, s, w) = (nu.re, nu.im, omega);
    let a2 = nu.norm_sqr();
    let d = r * r + (2.0 * w + s).powi(2);
    let c = |x: f64| C64::new(x, 0.0);
    let one = c(1.0);
    let zero = c(0.0);
    let zz = -(r * r + (4.0 * w + s) * s) / d;
    let zq = -4.0 * I * w * (2.0 * w * s + a2) / (d * d);
    let pz = -I * s;
    let pzeta = -I * (2.0 * w * (r * r - s * s) - a2 * s) / d;
    let pq = c((2.0 * w * (r + s) + a2) * (2.0 * w * (r - s) - a2) / (d * d));
    [
        [one, c(zz), zero, zq],
        [c(zz), one, -zq, zero],
        [pz, pzeta, one, pq],
        [-pzeta, -pz, pq, one],
    ]
}

pub fn riesz_vectors(quad: &EigenQuad, sys: &OscillatorSystem) -> Result<RieszEntry> {
    let nu = quad.nu;
    let r = nu.re;
    if r < 1e-300 {
        return Err(Error::Numeric(format!("mode {}: Re ν = {r} too small", quad.k)));
    }
    let bk = quad.b;
    let th_p = eigvec_shifted(&quad.shifted_plus(), sys)?;
    let th_m = eigvec_shifted(&quad.shifted_minus(), sys)?;
    let th_np = eigvec_shifted(&quad.shifted_neg_plus(), sys)?;
    let th_nm = eigvec_shifted(&quad.shifted_neg_minus(), sys)?;
    let (n2, nb2) = (nu * nu, nu.conj() * nu.conj());
    let zr = C64::new(1.0 / (2.0 * bk * r), 0.0);
    let pr = C64::new(1.0 / (2.0 * bk), 0.0);
    let z = th_np.scale(nb2).sub(&th_nm.scale(n2)).scale(zr);
    let zeta = th_p.scale(n2).sub(&th_m.scale(nb2)).scale(-zr);
    let p = th_np.scale(nb2).add(&th_nm.scale(n2)).scale(pr);
    let q = th_p.scale(n2).add(&th_m.scale(nb2)).scale(-pr);

    let idx = quad.k - 1;
    let closed = diagonal_block_closed_form(nu, quad.omega);
    let diagonal_error = [&z, &zeta, &p, &q]
        .iter()
        .zip(&closed)
        .flat_map(|(v, c)| v.block(idx).into_iter().zip(*c).map(|(a, b)| (a - b).norm()))
        .fold(0.0, f64::max);

    let mut entry = RieszEntry {
        k: quad.k,
        z,
        zeta,
        p,
        q,
        diagonal_error,
        inverse_error: 0.0,
    };
    let rebuilt = reconstruct_eigvecs(&entry, quad);
    entry.inverse_error = rebuilt
        .iter()
        .zip([&th_p, &th_m, &th_np, &th_nm])
        .map(|(a, b)| a.sub(b).norm() / b.norm())
        .fold(0.0, f64::max);
    Ok(entry)
}

/// Eigenvectors `[θ_k^+, θ_k^-, θ_{-k}^+, θ_{-k}^-]` recovered from the
/// Riesz vectors of mode `k`.
pub fn reconstruct_eigvecs(entry: &RieszEntry, quad: &EigenQuad) -> [ComplexQuadVector; 4] {
    let nu = quad.nu;
    let r = C64::new(nu.re, 0.0);
    let b = quad.b;
    let (n2, nb2) = (nu * nu, nu.conj() * nu.conj());
    let plus = -b / n2;
    let minus = -b / nb2;
    [
        entry.q.add(&entry.zeta.scale(r)).scale(plus),
        entry.q.sub(&entry.zeta.scale(r)).scale(minus),
        entry.p.add(&entry.z.scale(r)).scale(b / nb2),
        entry.p.sub(&entry.z.scale(r)).scale(b / n2),
    ]
}

fn mode_distance(entry: &RieszEntry, weights: Option<&[f64]>) -> f64 {
    let k = entry.k - 1;
    let mut acc = 0.0;
    for (s, v) in entry.vectors().into_iter().enumerate() {
        for j in 0..v.len() {
            let scale = weights.map_or(1.0, |w| w[j] / w[k]);
            for (t, c) in v.block(j).into_iter().enumerate() {
                let target = if j == k && t == s { 1.0 } else { 0.0 };
                acc += (c * scale - target).norm_sqr();
            }
        }
    }
    acc
}

/// Partial sums (index `m` holds modes `1..=m`) of the plain and the
/// `|b_j|^ρ/|b_k|^ρ` weighted distances to the standard basis.
pub fn closeness_sums(entries: &[RieszEntry], sys: &OscillatorSystem, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let weights: Vec<f64> = sys.b().iter().map(|b| b.abs().powf(rho)).collect();
    let per_mode: Vec<(f64, f64)> = entries
        .par_iter()
        .map(|e| (mode_distance(e, None), mode_distance(e, Some(&weights))))
        .collect();
    let mut quad = vec![0.0];
    let mut weighted = vec![0.0];
    for (a, b) in per_mode {
        quad.push(quad.last().unwrap() + a);
        weighted.push(weighted.last().unwrap() + b);
    }
    (quad, weighted)
}

pub fn off_diagonal_constant(entries: &[RieszEntry], sys: &OscillatorSystem) -> f64 {
    let (om, b) = (sys.omega(), sys.b());
    entries
        .par_iter()
        .map(|e| {
            let k = e.k - 1;
            let mut worst: f64 = 0.0;
            for v in e.vectors() {
                for j in (0..v.len()).filter(|&j| j != k) {
                    let n = v.block(j).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    worst = worst.max(n * (om[j] - om[k]).abs() / b[j].abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

pub fn riesz_family(quads: &[EigenQuad], sys: &OscillatorSystem, rho: f64) -> Result<RieszFamily> {
    let entries = quads
        .par_iter()
        .map(|q| riesz_vectors(q, sys))
        .collect::<Result<Vec<_>>>()?;
    let (quad_partials, weighted_partials) = closeness_sums(&entries, sys, rho);
    let off_diagonal_constant = off_diagonal_constant(&entries, sys);
    Ok(RieszFamily {
        entries,
        rho,
        quad_partials,
        weighted_partials,
        off_diagonal_constant,
    })
}
