//! Numerical evidence for the standing assumptions (A1)–(A6) on a truncation.
//!
//! Infinite sums are evaluated at each requested truncation level and the
//! tail is extrapolated from the ratio of successive increments.

use serde::{Deserialize, Serialize};

use super::OscillatorSystem;
use crate::error::{Error, Result};

/// Successive increment ratios closer than this (relatively) count as stable.
const RATIO_STABILITY: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Values of a monotone quantity at increasing truncations with a tail estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumCheck {
    pub truncations: Vec<usize>,
    pub partial_sum_values: Vec<f64>,
    pub increment_ratios: Vec<f64>,
    pub extrapolated_tail: f64,
    pub extrapolated_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionVerdict {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
    pub check: Option<SumCheck>,
}

/// Fitted growth exponents `ω_k ≍ k^p`, `|b_k| ≍ ω_k^{-a}` and the sufficient
/// condition `2aρ < 2 - 1/p` for (A5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCriterion {
    pub p_fit: f64,
    pub alpha_fit: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub n: usize,
    pub rho: f64,
    pub alpha: f64,
    pub gap_floor: f64,
    pub a1: AssumptionVerdict,
    pub a2: AssumptionVerdict,
    pub a3: AssumptionVerdict,
    pub a4: AssumptionVerdict,
    pub a5: AssumptionVerdict,
    pub a6: AssumptionVerdict,
    pub asymptotic: Option<AsymptoticCriterion>,
}

impl AssumptionReport {
    pub fn verdicts(&self) -> [&AssumptionVerdict; 6] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a5, &self.a6]
    }
}

/// Geometric extrapolation of the tail of an increasing sequence.
fn extrapolate(truncations: &[usize], values: Vec<f64>) -> (SumCheck, Verdict) {
    let incr: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = values.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let ratios: Vec<f64> = incr
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY })
        .collect();
    let last_incr = incr.last().copied().unwrap_or(f64::NAN);
    let mut tail = f64::NAN;
    let verdict = if last_incr.is_finite() && last_incr <= 1e-13 * scale {
        tail = 0.0;
        Verdict::Pass
    } else if ratios.len() < 2 {
        Verdict::Inconclusive
    } else {
        let r1 = ratios[ratios.len() - 2];
        let r2 = ratios[ratios.len() - 1];
        let spread = (r2 - r1).abs() / r1.max(r2);
        if !(spread <= RATIO_STABILITY) {
            Verdict::Inconclusive
        } else if r2 >= 1.0 {
            tail = f64::INFINITY;
            Verdict::Fail
        } else {
            tail = last_incr * r2 / (1.0 - r2);
            Verdict::Pass
        }
    };
    let total = values.last().copied().unwrap_or(0.0) + tail;
    (
        SumCheck {
            truncations: truncations.to_vec(),
            partial_sum_values: values,
            increment_ratios: ratios,
            extrapolated_tail: tail,
            extrapolated_total: total,
        },
        verdict,
    )
}

fn sum_verdict(name: &str, what: &str, truncations: &[usize], values: Vec<f64>) -> AssumptionVerdict {
    let (check, verdict) = extrapolate(truncations, values);
    let detail = format!(
        "{what} = {:.6e} at N = {}, extrapolated {:.6e}",
        check.partial_sum_values.last().copied().unwrap_or(0.0),
        truncations.last().copied().unwrap_or(0),
        check.extrapolated_total
    );
    AssumptionVerdict {
        name: name.into(),
        verdict,
        detail,
        check: Some(check),
    }
}

fn undefined(name: &str, why: &str) -> AssumptionVerdict {
    AssumptionVerdict {
        name: name.into(),
        verdict: Verdict::Fail,
        detail: format!("undefined: {why}"),
        check: None,
    }
}

/// `max_{k ≤ m} Σ_{j ≤ m, j ≠ k} 1/(ω_k - ω_j)²`.
fn a3_value(omega: &[f64]) -> f64 {
    (0..omega.len())
        .map(|k| {
            (0..omega.len())
                .filter(|&j| j != k)
                .map(|j| (omega[k] - omega[j]).powi(-2))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn a4_value(omega: &[f64], b: &[f64]) -> f64 {
    let m = omega.len();
    let mut acc = 0.0;
    for k in 0..m {
        for j in (0..m).filter(|&j| j != k) {
            acc += b[j] * b[j] / (omega[j] - omega[k]).powi(2);
        }
    }
    acc
}

fn a5_value(omega: &[f64], b: &[f64], rho: f64) -> f64 {
    let m = omega.len();
    let mut acc = 0.0;
    for k in 0..m {
        let inner: f64 = (0..m)
            .filter(|&j| j != k)
            .map(|j| b[j].abs().powf(2.0 * (1.0 + rho)) / (omega[j] - omega[k]).powi(2))
            .sum();
        acc += inner / b[k].abs().powf(2.0 * rho);
    }
    acc
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Doubling ladder `N/2^{levels-1}, …, N/2, N`, dropping levels below 2.
pub fn doubling_truncations(n: usize, levels: usize) -> Vec<usize> {
    let mut t: Vec<usize> = (0..levels).rev().map(|i| n >> i).filter(|&m| m >= 2).collect();
    t.dedup();
    t
}

/// Checks (A1)–(A6) on `sys`, with (A5) at exponent `rho` and (A6) at `alpha`.
pub fn check_assumptions(
    sys: &OscillatorSystem,
    rho: f64,
    alpha: f64,
    truncations: &[usize],
) -> Result<AssumptionReport> {
    if truncations.is_empty() {
        return Err(Error::Argument("no truncations given".into()));
    }
    if truncations.windows(2).any(|w| w[1] <= w[0]) || truncations[0] == 0 {
        return Err(Error::Argument("truncations must be positive and increasing".into()));
    }
    if *truncations.last().unwrap() > sys.len() {
        return Err(Error::Argument(format!(
            "truncation {} exceeds N = {}",
            truncations.last().unwrap(),
            sys.len()
        )));
    }
    let omega = sys.omega();
    let b = sys.b();

    let zero_b: Vec<usize> = (0..b.len()).filter(|&k| b[k] == 0.0).map(|k| k + 1).collect();
    let a1 = AssumptionVerdict {
        name: "A1".into(),
        verdict: if zero_b.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        detail: if zero_b.is_empty() {
            format!("all b_k nonzero, ||b|| = {:.6e}", sys.b_norm())
        } else {
            format!("b_k = 0 for k = {zero_b:?}")
        },
        check: None,
    };

    let a2_ok = omega[0] > 0.0 && omega.windows(2).all(|w| w[1] > w[0]);
    let a2 = AssumptionVerdict {
        name: "A2".into(),
        verdict: if a2_ok { Verdict::Pass } else { Verdict::Fail },
        detail: format!("omega_1 = {:.6e}, gap floor = {:.6e}", omega[0], sys.gap_floor()),
        check: None,
    };

    let (a3, a4) = if a2_ok {
        let v3 = truncations.iter().map(|&m| a3_value(&omega[..m])).collect();
        let v4 = truncations.iter().map(|&m| a4_value(&omega[..m], &b[..m])).collect();
        (
            sum_verdict("A3", "max_k S_k", truncations, v3),
            sum_verdict("A4", "double sum", truncations, v4),
        )
    } else {
        (
            undefined("A3", "frequencies not separated"),
            undefined("A4", "frequencies not separated"),
        )
    };

    let a5 = if !a2_ok {
        undefined("A5", "frequencies not separated")
    } else if !zero_b.is_empty() {
        undefined("A5", "some b_k vanish")
    } else if rho <= 1.0 {
        AssumptionVerdict {
            name: "A5".into(),
            verdict: Verdict::Fail,
            detail: format!("rho = {rho} must exceed 1"),
            check: None,
        }
    } else {
        let v5 = truncations
            .iter()
            .map(|&m| a5_value(&omega[..m], &b[..m], rho))
            .collect();
        sum_verdict("A5", "weighted double sum", truncations, v5)
    };

    let a6 = {
        let vals: Vec<f64> = truncations
            .iter()
            .map(|&m| {
                (m / 2..m)
                    .map(|k| b[k].abs() * omega[k].max(0.0).powf(alpha))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let ratios: Vec<f64> = vals.windows(2).map(|w| w[1] / w[0]).collect();
        let floor = 1.0 - RATIO_STABILITY;
        let last = *vals.last().unwrap();
        let verdict = if alpha <= 0.0 || !(last > 0.0) {
            Verdict::Fail
        } else if ratios.is_empty() {
            Verdict::Inconclusive
        } else if *ratios.last().unwrap() >= floor {
            Verdict::Pass
        } else if ratios.len() >= 2 && ratios[ratios.len() - 2] < floor {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        AssumptionVerdict {
            name: "A6".into(),
            verdict,
            detail: format!("min over top half of |b_k| omega_k^{alpha} = {last:.6e}"),
            check: Some(SumCheck {
                truncations: truncations.to_vec(),
                partial_sum_values: vals,
                increment_ratios: ratios,
                extrapolated_tail: last,
                extrapolated_total: last,
            }),
        }
    };

    let asymptotic = if sys.len() >= 8 && a2_ok && zero_b.is_empty() {
        let lo = sys.len() / 2;
        let lk: Vec<f64> = (lo..sys.len()).map(|k| ((k + 1) as f64).ln()).collect();
        let lw: Vec<f64> = omega[lo..].iter().map(|w| w.ln()).collect();
        let lb: Vec<f64> = b[lo..].iter().map(|v| v.abs().ln()).collect();
        let p_fit = slope(&lk, &lw);
        let alpha_fit = -slope(&lw, &lb);
        let lhs = 2.0 * alpha_fit * rho;
        let rhs = 2.0 - 1.0 / p_fit;
        Some(AsymptoticCriterion {
            p_fit,
            alpha_fit,
            lhs,
            rhs,
            holds: p_fit >= 1.0 - 1e-6 && lhs < rhs,
        })
    } else {
        None
    };

    Ok(AssumptionReport {
        n: sys.len(),
        rho,
        alpha,
        gap_floor: sys.gap_floor(),
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
        asymptotic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> OscillatorSystem {
        OscillatorSystem::new(
            (1..=n).map(|k| k as f64).collect(),
            (1..=n).map(|k| 1.0 / k as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_gain_fails_a1() {
        let mut b = vec![1.0, 0.5, 0.0, 0.25];
        let sys = OscillatorSystem::raw(vec![1.0, 2.0, 3.0, 4.0], b.clone()).unwrap();
        let rep = check_assumptions(&sys, 1.2, 1.0, &[2, 4]).unwrap();
        assert_eq!(rep.a1.verdict, Verdict::Fail);
        assert_eq!(rep.a5.verdict, Verdict::Fail);
        b[2] = 0.3;
        let sys = OscillatorSystem::raw(vec![1.0, 2.0, 3.0, 4.0], b).unwrap();
        let rep = check_assumptions(&sys, 1.2, 1.0, &[2, 4]).unwrap();
        assert_eq!(rep.a1.verdict, Verdict::Pass);
    }

    #[test]
    fn constant_a6_sequence_passes() {
        let sys = chain(64);
        let rep = check_assumptions(&sys, 1.2, 1.0, &doubling_truncations(64, 4)).unwrap();
        assert_eq!(rep.a6.verdict, Verdict::Pass);
        let vals = &rep.a6.check.as_ref().unwrap().partial_sum_values;
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn decaying_a6_sequence_fails() {
        let sys = chain(256);
        let rep = check_assumptions(&sys, 1.2, 0.5, &doubling_truncations(256, 4)).unwrap();
        assert_eq!(rep.a6.verdict, Verdict::Fail);
    }

    #[test]
    fn partial_sums_nondecreasing() {
        let sys = chain(128);
        let rep = check_assumptions(&sys, 1.3, 1.0, &doubling_truncations(128, 5)).unwrap();
        for v in [&rep.a3, &rep.a4, &rep.a5] {
            let vals = &v.check.as_ref().unwrap().partial_sum_values;
            assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{}: {vals:?}", v.name);
        }
        assert_eq!(rep.a3.verdict, Verdict::Pass);
        // S_k <= 2 ζ(2)
        let s = rep.a3.check.as_ref().unwrap();
        assert!(s.extrapolated_total < std::f64::consts::PI.powi(2) / 3.0 + 1e-6);
    }

    #[test]
    fn unstable_ratios_are_inconclusive() {
        let (c, v) = extrapolate(&[1, 2, 3, 4], vec![1.0, 2.0, 2.1, 2.6]);
        assert_eq!(v, Verdict::Inconclusive);
        assert_eq!(c.increment_ratios.len(), 2);
        let (_, v) = extrapolate(&[1, 2, 3, 4], vec![1.0, 3.0, 7.0, 15.0]);
        assert_eq!(v, Verdict::Fail);
        let (c, v) = extrapolate(&[1, 2, 3, 4], vec![1.0, 1.5, 1.75, 1.875]);
        assert_eq!(v, Verdict::Pass);
        assert!((c.extrapolated_total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_truncations() {
        let sys = chain(8);
        assert!(check_assumptions(&sys, 1.2, 1.0, &[4, 2]).is_err());
        assert!(check_assumptions(&sys, 1.2, 1.0, &[4, 16]).is_err());
        assert!(check_assumptions(&sys, 1.2, 1.0, &[]).is_err());
    }

    #[test]
    fn ladder() {
        assert_eq!(doubling_truncations(200, 4), vec![25, 50, 100, 200]);
        assert_eq!(doubling_truncations(3, 4), vec![3]);
    }
}
