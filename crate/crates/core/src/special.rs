//! Log-space combinatorics, the regularized incomplete beta function, and
//! binomial tails.

use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// ln C(m, n). Exact product for moderate n, log-gamma beyond.
pub fn log_binomial(m: u64, n: u64) -> f64 {
    if n > m {
        return f64::NEG_INFINITY;
    }
    let k = n.min(m - n);
    if k <= 2000 {
        let mut acc = 0.0;
        for i in 1..=k {
            acc += ((m - k + i) as f64 / i as f64).ln();
        }
        acc
    } else {
        ln_gamma(m as f64 + 1.0) - ln_gamma(n as f64 + 1.0) - ln_gamma((m - n) as f64 + 1.0)
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// ln P_{m,ν}(x) with P_{m,ν}(x) = Σ_{k=0}^{m−ν} C(m−k−1, ν−1) x^k.
pub fn log_p_poly(m: u64, nu: u64, x: f64) -> Result<f64> {
    if nu < 1 || m < nu {
        return Err(Error::OutOfRange { what: "P_{m,nu} needs m >= nu >= 1, nu", value: nu as f64 });
    }
    if !(x >= 0.0) {
        return Err(Error::OutOfRange { what: "P_{m,nu} argument", value: x });
    }
    if x == 0.0 {
        return Ok(log_binomial(m - 1, nu - 1));
    }
    let lx = x.ln();
    let terms: Vec<f64> = (0..=(m - nu)).map(|k| log_binomial(m - k - 1, nu - 1) + k as f64 * lx).collect();
    Ok(log_sum_exp(&terms))
}

/// ln B(a, b), exact through binomials when both arguments are integers.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    if a.fract() == 0.0 && b.fract() == 0.0 && a >= 1.0 && b >= 1.0 && a + b < 1e15 {
        // 1/B(a,b) = a·C(a+b−1, a)
        -(a.ln() + log_binomial((a + b - 1.0) as u64, a as u64))
    } else {
        ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Undefined(format!("incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")))
}

/// I_x(a, b), using I_x(a,b) = 1 − I_{1−x}(b,a) on the slowly converging side.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::OutOfRange { what: "beta shape parameter", value: a.min(b) });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange { what: "incomplete beta argument", value: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let log_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(log_front.exp() * beta_continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - log_front.exp() * beta_continued_fraction(b, a, 1.0 - x)? / b)
    }
}

/// ln of the binomial pmf P[Bin(m, p) = k].
pub fn log_binomial_pmf(k: u64, m: u64, p: f64) -> f64 {
    if k > m {
        return f64::NEG_INFINITY;
    }
    let lp = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let lq = if k == m { 0.0 } else { (m - k) as f64 * (-p).ln_1p() };
    log_binomial(m, k) + lp + lq
}

/// P[Bin(m, p) ≥ n] = I_p(n, m − n + 1).
pub fn binomial_tail(n: u64, m: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    if n > m {
        return Ok(0.0);
    }
    regularized_incomplete_beta(p, n as f64, (m - n + 1) as f64)
}
