//! Closed forms of the truncated path sum and the asymptotic front.
//!
//! With X ~ Bin(m, z_1), the 1-step OTOC in light-cone coordinates is
//! C⁺₍₁₎(n, m) = P[X ≥ n] − P[X = n−1]/(q²−1). P[X ≥ n] = I_{z_1}(n, m−n+1)
//! is the front profile F. The 2-step form resums the same paths with some
//! unit steps replaced by double steps of weight z_2/q², while single steps
//! are renormalized to z̃_1 = z_1 − z_2/q².

use serde::Serialize;

use crate::special::{
    binomial_tail, log_binomial, log_binomial_pmf, log_p_poly, log_sum_exp, regularized_incomplete_beta,
};
use crate::{Error, Result};

fn q2m1(q: usize) -> f64 {
    (q * q) as f64 - 1.0
}

fn check_z1(z1: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z1) {
        return Err(Error::OutOfRange { what: "z1", value: z1 });
    }
    Ok(())
}

/// F_{z1}(n, m) = P[Bin(m, z1) ≥ n]; F(0, m) = 1.
pub fn front_profile_f(z1: f64, n: u64, m: u64) -> Result<f64> {
    check_z1(z1)?;
    binomial_tail(n, m, z1)
}

pub fn otoc_lightcone(z1: f64, q: usize, m: u64) -> f64 {
    let q2 = (q * q) as f64;
    1.0 - q2 * (1.0 - z1).powf(m as f64) / (q2 - 1.0)
}

/// C⁺₍₁₎(n, m); n = 1 reproduces the light-cone value.
pub fn otoc_1step(z1: f64, q: usize, n: u64, m: u64) -> Result<f64> {
    check_z1(z1)?;
    if n < 1 {
        return Err(Error::InvalidCoordinates("n must be at least 1".into()));
    }
    let tail = binomial_tail(n, m, z1)?;
    let pmf = log_binomial_pmf(n - 1, m, z1).exp();
    Ok(tail - pmf / q2m1(q))
}

/// (q²F(n,m) − F(n−1,m))/(q²−1): identical to [`otoc_1step`] term by term,
/// since F(n−1) − F(n) = P[X = n−1].
pub fn otoc_1step_main_text(z1: f64, q: usize, n: u64, m: u64) -> Result<f64> {
    let q2 = (q * q) as f64;
    Ok((q2 * front_profile_f(z1, n, m)? - front_profile_f(z1, n - 1, m)?) / (q2 - 1.0))
}

/// Same quantity through the stars-and-bars polynomial:
/// z1ⁿ(1−z1)^{m−n}P_{m,n}(1/(1−z1)) − z1^{n−1}(1−z1)^{m−n+1}P_{m,n−1}(1)/(q²−1).
pub fn otoc_1step_poly(z1: f64, q: usize, n: u64, m: u64) -> Result<f64> {
    check_z1(z1)?;
    if !(z1 > 0.0 && z1 < 1.0) {
        return otoc_1step(z1, q, n, m);
    }
    if n < 2 || m < n {
        return otoc_1step(z1, q, n, m);
    }
    let (lz, la) = (z1.ln(), (-z1).ln_1p());
    let first = n as f64 * lz + (m - n) as f64 * la + log_p_poly(m, n, 1.0 / (1.0 - z1))?;
    let second = (n - 1) as f64 * lz + (m - n + 1) as f64 * la + log_p_poly(m, n - 1, 1.0)?;
    Ok(first.exp() - second.exp() / q2m1(q))
}

/// Signed log-space accumulator.
#[derive(Default)]
struct SignedSum {
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl SignedSum {
    fn push(&mut self, log_abs: f64, negative: bool) {
        if log_abs == f64::NEG_INFINITY {
            return;
        }
        if negative {
            self.neg.push(log_abs)
        } else {
            self.pos.push(log_abs)
        }
    }

    fn value(&self) -> f64 {
        log_sum_exp(&self.pos).exp() - log_sum_exp(&self.neg).exp()
    }
}

/// ln|x^p| and the sign of x^p, with 0⁰ = 1.
fn signed_pow(x: f64, p: u64) -> (f64, bool) {
    if p == 0 {
        (0.0, false)
    } else {
        (p as f64 * x.abs().ln(), x < 0.0 && p % 2 == 1)
    }
}

/// C⁺₍₂₎(n, m): exact path sum with steps of length one and two.
pub fn otoc_2step(z1: f64, z2: f64, q: usize, n: u64, m: u64) -> Result<f64> {
    check_z1(z1)?;
    if n < 1 {
        return Err(Error::InvalidCoordinates("n must be at least 1".into()));
    }
    if z2 < 0.0 {
        return Err(Error::OutOfRange { what: "z2", value: z2 });
    }
    if z2 == 0.0 || z1 == 0.0 {
        if z1 == 0.0 && z2 > 0.0 {
            return Err(Error::Infeasible("z1 = 0 forces z2 = 0".into()));
        }
        return otoc_1step(z1, q, n, m);
    }
    let qq = (q * q) as f64;
    let rho = z2 / qq;
    let zt = z1 - rho;
    let (lrho, lz1) = (rho.ln(), z1.ln());
    // z1^{-r} P[X ≥ r]
    let scaled_tail = |r: u64| -> Result<f64> { Ok(binomial_tail(r, m, z1)?.ln() - r as f64 * lz1) };
    let mut acc = SignedSum::default();
    // paths reaching row 0 through row 1
    for h in 0..=(n - 1) / 2 {
        let (lp, neg) = signed_pow(zt, n - 1 - 2 * h);
        let l = log_binomial(n - 1 - h, h) + lp + h as f64 * lrho + lz1 + scaled_tail(n - h)?;
        acc.push(l, neg);
    }
    // paths reaching row 0 through a double step from row 2
    if n >= 2 {
        for h in 0..=(n - 2) / 2 {
            let (lp, neg) = signed_pow(zt, n - 2 - 2 * h);
            let l = log_binomial(n - 2 - h, h) + lp + (h + 1) as f64 * lrho + scaled_tail(n - 1 - h)?;
            acc.push(l, neg);
        }
    }
    // paths ending on row 1, weighted by the negative left overlap
    for h in 0..=(n - 1) / 2 {
        let r = n - 1 - h;
        if r > m {
            continue;
        }
        let (lp, neg) = signed_pow(zt, n - 1 - 2 * h);
        let l = log_binomial(n - 1 - h, h) + lp + h as f64 * lrho + log_binomial(m, r)
            + (m - r) as f64 * (-z1).ln_1p()
            - q2m1(q).ln();
        acc.push(l, !neg);
    }
    Ok(acc.value())
}

/// Continuous-argument 1-step profile (q²F(n,m) − F(n−1,m))/(q²−1), with F
/// extended to real n, m through the incomplete beta function.
pub fn otoc_1step_continuous(z1: f64, q: usize, n: f64, m: f64) -> Result<f64> {
    let f = |n: f64| -> Result<f64> {
        if n <= 0.0 {
            Ok(1.0)
        } else if n > m {
            Ok(0.0)
        } else {
            regularized_incomplete_beta(z1, n, m - n + 1.0)
        }
    };
    let q2 = (q * q) as f64;
    Ok((q2 * f(n)? - f(n - 1.0)?) / (q2 - 1.0))
}

/// Coordinate-shift approximation C⁺₍₂₎(x,t) ≈ C⁺₍₁₎(x + (t−x)ξ/2, t − (t−x)ξ/2).
/// Diagnostic only.
pub fn otoc_2step_shifted(z1: f64, z2: f64, q: usize, x: f64, t: f64) -> Result<f64> {
    let xi = z2 / ((q * q) as f64 * z1);
    let s = (t - x) * xi / 2.0;
    let (x, t) = (x + s, t - s);
    otoc_1step_continuous(z1, q, (t - x + 2.0) / 2.0, (t + x) / 2.0)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FrontParams {
    pub z1: f64,
    pub z2: f64,
    pub q: usize,
    pub v_b1: f64,
    pub d1: f64,
    pub xi: f64,
    pub h_max: f64,
    pub v_b2: f64,
    pub d2: f64,
}

pub fn front_params(z1: f64, z2: f64, q: usize) -> Result<FrontParams> {
    if z1 == 0.0 && z2 > 0.0 {
        return Err(Error::Infeasible("z1 = 0 with z2 > 0 violates z_k <= (1-z1)^(k-1) z1-scaling".into()));
    }
    if !(z1 > 0.0 && z1 < 1.0) {
        return Err(Error::OutOfRange { what: "z1", value: z1 });
    }
    if z2 < 0.0 {
        return Err(Error::OutOfRange { what: "z2", value: z2 });
    }
    let v = (1.0 - z1) / (1.0 + z1);
    let d1 = v * (1.0 - v * v);
    let xi = z2 / ((q * q) as f64 * z1);
    if xi >= 1.0 {
        return Err(Error::Infeasible(format!("xi = {xi} >= 1")));
    }
    let h = h_max(xi);
    let den = 1.0 - (1.0 + v) * h / 2.0;
    let v_b2 = (v - (1.0 + v) * h / 2.0) / den;
    let d2 = d1 * (1.0 - (1.0 - v_b2) * h / 2.0) / (den * den);
    Ok(FrontParams { z1, z2, q, v_b1: v, d1, xi, h_max: h, v_b2, d2 })
}

pub fn h_max(xi: f64) -> f64 {
    0.5 * (1.0 - 1.0 / (1.0 + 4.0 * xi / ((1.0 - xi) * (1.0 - xi))).sqrt())
}

impl FrontParams {
    /// First-order expansions in h_max of v_B2 and D2.
    pub fn expanded(&self) -> (f64, f64) {
        let v = self.v_b1;
        let h = self.h_max;
        (v - (1.0 - v * v) * h / 2.0, self.d1 * (1.0 + (1.0 + 3.0 * v) * h / 2.0))
    }

    /// v_B2 and D2 with ξ in place of h_max (the small-ξ form).
    pub fn with_xi(&self) -> (f64, f64) {
        let v = self.v_b1;
        let den = 1.0 - (1.0 + v) * self.xi / 2.0;
        let v2 = (v - (1.0 + v) * self.xi / 2.0) / den;
        (v2, self.d1 * (1.0 - (1.0 - v2) * self.xi / 2.0) / (den * den))
    }
}

pub fn erf_front(x: f64, t: f64, v_b: f64, d: f64) -> f64 {
    0.5 * (1.0 + statrs::function::erf::erf((x - v_b * t) / (2.0 * d * t).sqrt()))
}

/// ln ζ(v) = ((1+v)/2)ln((1+v)/2) − ((1−v)/2)ln((1−v)/2) − v ln v
pub fn log_zeta(v: f64) -> f64 {
    let a = (1.0 + v) / 2.0;
    let b = (1.0 - v) / 2.0;
    a * a.ln() - b * b.ln() - v * v.ln()
}

/// γ(v, z1) = ζ(v)(1−z1)^v z1^{(1−v)/2}
pub fn gamma_decay(v: f64, z1: f64) -> f64 {
    (log_zeta(v) + v * (-z1).ln_1p() + (1.0 - v) / 2.0 * z1.ln()).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DecayRegime {
    /// Exponential decay γᵗ with scrambling time t* = −1/ln γ.
    Scrambled { gamma: f64, scrambling_time: f64 },
    Front,
    OutsideCone,
}

pub fn decay_regime(v: f64, z1: f64) -> Result<DecayRegime> {
    if !(z1 > 0.0 && z1 < 1.0) {
        return Err(Error::OutOfRange { what: "z1", value: z1 });
    }
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::OutOfRange { what: "v", value: v });
    }
    let vb = (1.0 - z1) / (1.0 + z1);
    if (v - vb).abs() < 1e-12 {
        return Ok(DecayRegime::Front);
    }
    if v > vb {
        return Ok(DecayRegime::OutsideCone);
    }
    let gamma = gamma_decay(v, z1);
    Ok(DecayRegime::Scrambled { gamma, scrambling_time: -1.0 / gamma.ln() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_cases() {
        assert_eq!(front_profile_f(0.0, 3, 10).unwrap(), 0.0);
        assert_eq!(front_profile_f(1.0, 3, 10).unwrap(), 1.0);
        for n in 2..6 {
            assert_eq!(otoc_1step(0.0, 2, n, 20).unwrap(), 0.0);
        }
        for m in 0..10 {
            assert!((otoc_lightcone(0.0, 2, m) + 1.0 / 3.0).abs() < 1e-15);
            assert!((otoc_1step(0.0, 2, 1, m).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((otoc_lightcone(0.3, 3, 7) - otoc_1step(0.3, 3, 1, 7).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn three_one_step_forms_agree() {
        for &z1 in &[0.03, 0.2, 0.6] {
            for n in 2..25u64 {
                for m in (n..120).step_by(7) {
                    let a = otoc_1step(z1, 2, n, m).unwrap();
                    let b = otoc_1step_main_text(z1, 2, n, m).unwrap();
                    let c = otoc_1step_poly(z1, 2, n, m).unwrap();
                    assert!((a - b).abs() < 1e-13 && (a - c).abs() < 1e-12, "{z1} {n} {m}: {a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn two_step_reduces_to_one_step() {
        for n in 1..20 {
            for m in [n, n + 3, 80] {
                assert_eq!(otoc_2step(0.1, 0.0, 2, n, m).unwrap(), otoc_1step(0.1, 2, n, m).unwrap());
            }
        }
        assert!(otoc_2step(0.0, 0.1, 2, 3, 5).is_err());
    }

    #[test]
    fn front_parameters() {
        let p = front_params(0.1, 0.0, 2).unwrap();
        assert!((p.v_b1 - 9.0 / 11.0).abs() < 1e-15);
        assert!((p.d1 - 360.0 / 1331.0).abs() < 1e-15);
        assert_eq!((p.xi, p.h_max, p.v_b2, p.d2), (0.0, 0.0, p.v_b1, p.d1));
        let p = front_params(0.1, 0.09, 2).unwrap();
        assert!(p.v_b2 < p.v_b1 && p.d2 > p.d1);
        assert!(p.h_max > 0.0 && p.h_max < 0.5);
        assert!(matches!(front_params(0.0, 0.1, 2), Err(Error::Infeasible(_))));
    }

    #[test]
    fn erf_and_gamma() {
        assert!((erf_front(80.0, 100.0, 0.8, 0.3) - 0.5).abs() < 1e-15);
        for &z1 in &[0.05, 0.1, 0.3] {
            let vb = (1.0 - z1) / (1.0 + z1);
            assert!((gamma_decay(vb, z1) - 1.0).abs() < 1e-12);
            assert!(gamma_decay(0.9 * vb, z1) < 1.0);
            assert_eq!(decay_regime(vb, z1).unwrap(), DecayRegime::Front);
            assert_eq!(decay_regime((1.0 + vb) / 2.0, z1).unwrap(), DecayRegime::OutsideCone);
            assert!(matches!(decay_regime(vb / 2.0, z1).unwrap(), DecayRegime::Scrambled { .. }));
        }
    }

    #[test]
    fn one_step_is_monotone_in_x() {
        let t = 300i64;
        let mut prev = f64::NEG_INFINITY;
        // x = t (n = 1) carries the light-cone dip and is excluded
        for x in (-t + 2..t).step_by(2) {
            let (n, m) = (((t - x + 2) / 2) as u64, ((t + x) / 2) as u64);
            let c = otoc_1step(0.1, 2, n, m).unwrap();
            assert!(c >= prev - 1e-10, "x={x}");
            prev = c;
        }
    }
}
