use num_complex::Complex64 as C64;

use turnpike_core::beam::{build_system, mode_table_csv, modes, BeamParams};
use turnpike_core::model::{min_control_time, weighted_norm, StateVector, WeightIndex};
use turnpike_core::spectral::{apply_generator, eigvec_shifted, find_nu, rouche_certificate, spectrum, spectrum_csv};
use turnpike_core::turnpike::{g_matrices, sector_tanh_bound, tanh_sech};

#[test]
fn beam_system_feeds_spectrum() {
    let sys = build_system(30, &BeamParams::default()).unwrap();
    assert!(sys.omega().windows(2).all(|w| w[1] > w[0]));
    let quads = spectrum(&sys).unwrap();
    for q in &quads {
        let [sp, sm, snp, snm] = q.sigmas();
        assert_eq!(snp, sp.conj());
        assert_eq!(sm, -sp.conj());
        assert_eq!(snm, -sp);
        assert!(sp.re > 0.0 && sm.re < 0.0);
    }
    let certs: Vec<_> = (1..=30).map(|k| rouche_certificate(k, 0.5, &sys).ok()).collect();
    assert!(certs.iter().skip(1).all(|c| c.is_some_and(|c| c.holds)));
    let csv = spectrum_csv(&quads, &certs);
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn eigenvectors_satisfy_generator() {
    let sys = build_system(12, &BeamParams::default()).unwrap();
    for k in [1, 6, 12] {
        let q = find_nu(k, &sys).unwrap();
        for s in [
            q.shifted_plus(),
            q.shifted_minus(),
            q.shifted_neg_plus(),
            q.shifted_neg_minus(),
        ] {
            let v = eigvec_shifted(&s, &sys).unwrap();
            let av = apply_generator(&v, &sys).unwrap();
            let r = av.sub(&v.scale(s.value())).norm() / (v.norm() * s.value().norm());
            assert!(r < 1e-9, "mode {k}: relative residual {r:e}");
        }
    }
}

#[test]
fn g_projectors_on_beam_modes() {
    let sys = build_system(40, &BeamParams::default()).unwrap();
    for q in spectrum(&sys).unwrap() {
        let g = g_matrices(&q).unwrap();
        let r = q.nu.re;
        assert!((g.norm - (1.0 + r * r) / (2.0 * r)).abs() < 1e-9 * g.norm);
        // idempotent: g·g = g
        for m in [g.g_plus, g.g_minus] {
            for i in 0..2 {
                for j in 0..2 {
                    let sq = m[i][0] * m[0][j] + m[i][1] * m[1][j];
                    assert!((sq - m[i][j]).norm() < 1e-9 * g.norm);
                }
            }
        }
    }
}

#[test]
fn tanh_bound_on_sector_edge() {
    let r = 2.0;
    let z = C64::from_polar(r, std::f64::consts::FRAC_PI_4);
    assert!(tanh_sech(z).0.norm() <= sector_tanh_bound(r));
    assert!(sector_tanh_bound(50.0) - 1.0 < 1e-15);
}

#[test]
fn beam_controllability_and_norms() {
    let sys = build_system(20, &BeamParams::default()).unwrap();
    let gap = sys.omega()[1] - sys.omega()[0];
    let t = min_control_time(&sys).unwrap();
    assert!((t - 2.0 * std::f64::consts::PI / gap).abs() < 1e-12);
    let mut x = StateVector::zeros(20);
    x.xi[4] = sys.b()[4];
    let v = weighted_norm(&x, WeightIndex::new(0.0, 1.0), &sys).unwrap();
    assert!((v - 1.0).abs() < 1e-14);
}

#[test]
fn mode_table_round_trip() {
    let table = modes(15, &BeamParams::new(2.0, 0.5, 0.2).unwrap()).unwrap();
    let csv = mode_table_csv(&table);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 15);
    for (row, m) in rows.iter().zip(&table) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0] as usize, m.n);
        assert_eq!(cols[3], m.omega);
        assert_eq!(cols[4], m.b);
    }
}
