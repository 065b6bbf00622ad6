use serde::Serialize;

use super::grid::OtocGrid;
use crate::path_integral::{erf_front, FrontParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub window_c: f64,
    pub max_iter: usize,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { window_c: 3.0, max_iter: 500, min_points: 8 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrontFit {
    pub t: f64,
    pub v_b_hat: f64,
    pub d_hat: f64,
    pub cov_vv: f64,
    pub cov_vd: f64,
    pub cov_dd: f64,
    pub x_half: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_points: usize,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Var(x)/t of the discrete front derivative, an estimator independent
    /// of the fit window
    pub d_variance: Option<f64>,
    pub reference: Option<FrontParams>,
}

/// First crossing of 0.5 scanning inward from the largest x, linearly interpolated.
fn half_height(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut i = xs.len();
    while i >= 2 {
        i -= 1;
        let (xa, ya, xb, yb) = (xs[i - 1], ys[i - 1], xs[i], ys[i]);
        if ya < 0.5 && yb >= 0.5 {
            return Some(xa + (0.5 - ya) * (xb - xa) / (yb - ya));
        }
    }
    None
}

struct Model<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    t: f64,
}

impl Model<'_> {
    /// residuals and Jacobian in (v, ln D)
    fn eval(&self, v: f64, s: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let d = s.exp();
        let w = (2.0 * d * self.t).sqrt();
        let mut r = Vec::with_capacity(self.xs.len());
        let mut j = Vec::with_capacity(self.xs.len());
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            let u = (x - v * self.t) / w;
            r.push(erf_front(x, self.t, v, d) - y);
            // d/du ½(1+erf u) = e^{-u²}/√π, ∂u/∂v = −t/w, ∂u/∂lnD = −u/2
            let g = (-u * u).exp() / std::f64::consts::PI.sqrt();
            j.push([-g * self.t / w, -g * u / 2.0]);
        }
        (r, j)
    }

    fn cost(&self, v: f64, s: f64) -> f64 {
        self.eval(v, s).0.iter().map(|x| x * x).sum()
    }
}

/// Levenberg–Marquardt fit of ½(1 + erf((x − v t)/√(2 D t))) to (xs, ys) at time t.
pub fn fit_front_points(xs: &[f64], ys: &[f64], t: f64, opts: &FitOptions) -> Result<FrontFit> {
    let x_half = half_height(xs, ys).ok_or(Error::InsufficientPoints { found: 0, needed: opts.min_points })?;
    let half_width = opts.window_c * t.sqrt();
    let sel: Vec<usize> = (0..xs.len()).filter(|&i| (xs[i] - x_half).abs() <= half_width).collect();
    if sel.len() < opts.min_points {
        return Err(Error::InsufficientPoints { found: sel.len(), needed: opts.min_points });
    }
    let wx: Vec<f64> = sel.iter().map(|&i| xs[i]).collect();
    let wy: Vec<f64> = sel.iter().map(|&i| ys[i]).collect();
    let model = Model { xs: &wx, ys: &wy, t };

    // initial guess from the half-height point and the central slope
    let k = wx.iter().position(|&x| x >= x_half).unwrap_or(wx.len() - 1).max(1);
    let slope = (wy[k] - wy[k - 1]) / (wx[k] - wx[k - 1]);
    let d0 = if slope > 0.0 { 1.0 / (2.0 * std::f64::consts::PI * t * slope * slope) } else { 0.25 };
    let (mut v, mut s) = (x_half / t, d0.ln());
    let mut cost = model.cost(v, s);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (r, j) = model.eval(v, s);
        let mut a = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for (ri, ji) in r.iter().zip(&j) {
            for p in 0..2 {
                g[p] += ji[p] * ri;
                for q in 0..2 {
                    a[p][q] += ji[p] * ji[q];
                }
            }
        }
        if g[0].abs().max(g[1].abs()) < 1e-15 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let m00 = a[0][0] * (1.0 + lambda);
            let m11 = a[1][1] * (1.0 + lambda);
            let det = m00 * m11 - a[0][1] * a[1][0];
            let dv = -(m11 * g[0] - a[0][1] * g[1]) / det;
            let ds = -(m00 * g[1] - a[1][0] * g[0]) / det;
            let trial = model.cost(v + dv, s + ds);
            if trial.is_finite() && trial <= cost {
                let small = dv.abs() <= 1e-14 * v.abs().max(1e-300) && ds.abs() <= 1e-12;
                v += dv;
                s += ds;
                let drop = cost - trial;
                cost = trial;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if small || drop <= 1e-15 * trial {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted || converged {
            // no downhill step left: the iterate is a local minimum to working precision
            converged = converged || !accepted;
            break;
        }
    }
    let d = s.exp();
    let n = wx.len();
    let (_, j) = model.eval(v, s);
    let mut a = [[0.0; 2]; 2];
    for ji in &j {
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] += ji[p] * ji[q];
            }
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let sigma2 = cost / (n as f64 - 2.0);
    let (cvv, cvs, css) = (sigma2 * a[1][1] / det, -sigma2 * a[0][1] / det, sigma2 * a[0][0] / det);
    Ok(FrontFit {
        t,
        v_b_hat: v,
        d_hat: d,
        cov_vv: cvv,
        cov_vd: cvs * d,
        cov_dd: css * d * d,
        x_half,
        x_lo: wx[0],
        x_hi: wx[n - 1],
        n_points: n,
        residual_rms: (cost / n as f64).sqrt(),
        converged,
        iterations,
        d_variance: variance_estimate(xs, ys, x_half, 2.0 * half_width, t),
        reference: None,
    })
}

fn variance_estimate(xs: &[f64], ys: &[f64], center: f64, half_width: f64, t: f64) -> Option<f64> {
    let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
    for i in 1..xs.len() {
        let x = 0.5 * (xs[i] + xs[i - 1]);
        if (x - center).abs() > half_width {
            continue;
        }
        let p = ys[i] - ys[i - 1];
        w0 += p;
        w1 += p * x;
        w2 += p * x * x;
    }
    if w0 <= 0.0 {
        return None;
    }
    let mean = w1 / w0;
    Some((w2 / w0 - mean * mean) / t)
}

pub fn fit_front(grid: &OtocGrid, t: i64, window_c: f64) -> Result<FrontFit> {
    let slice = grid.slice(t);
    let xs: Vec<f64> = slice.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = slice.iter().map(|p| p.1).collect();
    fit_front_points(&xs, &ys, t as f64, &FitOptions { window_c, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(v: f64, d: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (-(t as i64)..=(t as i64)).step_by(2).map(|x| x as f64).collect();
        let ys = xs.iter().map(|&x| erf_front(x, t, v, d)).collect();
        (xs, ys)
    }

    #[test]
    fn round_trip() {
        let (xs, ys) = synthetic(0.8, 0.25, 400.0);
        let f = fit_front_points(&xs, &ys, 400.0, &FitOptions::default()).unwrap();
        assert!(f.converged);
        assert!((f.v_b_hat - 0.8).abs() < 1e-6 && (f.d_hat - 0.25).abs() < 1e-6, "{f:?}");
        assert!(f.residual_rms < 1e-10);
        assert!((f.d_variance.unwrap() / 0.25 - 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_points() {
        let (xs, ys) = synthetic(0.8, 0.25, 400.0);
        let opts = FitOptions { window_c: 0.2, ..Default::default() };
        assert!(matches!(fit_front_points(&xs, &ys, 400.0, &opts), Err(Error::InsufficientPoints { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn fit_inverts_erf(v in 0.3f64..0.95, d in 0.05f64..0.4) {
            let (xs, ys) = synthetic(v, d, 400.0);
            let f = fit_front_points(&xs, &ys, 400.0, &FitOptions::default()).unwrap();
            prop_assert!((f.v_b_hat - v).abs() < 1e-6);
            prop_assert!((f.d_hat - d).abs() < 1e-6 * d.max(1.0));
        }
    }
}
