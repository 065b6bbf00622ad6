use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::fit_front;
use super::grid::{GridWindow, OtocGrid};
use crate::amplitudes::{compute_amplitudes, relaxation_timescale};
use crate::brute_force::{lightcone_floquet, Parity};
use crate::gate::{du_gate_q2, perturb, Gate};
use crate::linalg::{haar_unitary_with, random_hermitian, rng_from_seed};
use crate::path_integral::front_params;
use crate::Result;

/// q = 2 dual-unitary base gate: XY-point core with coupling `j`, dressed
/// by Haar one-site unitaries drawn from `seed`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BaseGate {
    pub j: f64,
    pub seed: u64,
}

impl BaseGate {
    pub fn build(&self) -> Gate {
        let mut rng = rng_from_seed(self.seed);
        let us: Vec<_> = (0..4).map(|_| haar_unitary_with(2, &mut rng)).collect();
        du_gate_q2(self.j, &us[0], &us[1], &us[2], &us[3])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ScanConfig {
    pub base: BaseGate,
    pub w_seed: u64,
    pub eps: Vec<f64>,
    pub t_fit: i64,
    pub k_max: usize,
    pub window_c: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            base: BaseGate { j: 0.3, seed: 1 },
            w_seed: 2,
            eps: vec![0.0, 0.2, 0.3, 0.4, 0.5, 0.6],
            t_fit: 512,
            k_max: 12,
            window_c: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub eps: f64,
    pub z1: f64,
    pub z2: f64,
    pub v_b_hat: f64,
    pub d_hat: f64,
    pub v_b1: f64,
    pub v_b2: f64,
    pub d1: f64,
    pub d2: f64,
    pub status: String,
}

impl ScanRow {
    pub const HEADER: [&'static str; 10] = ["eps", "z1", "z2", "v_B_hat", "D_hat", "v_B1", "v_B2", "D1", "D2", "status"];

    pub fn csv(&self) -> Vec<String> {
        let f = super::fmt_f64;
        vec![
            f(self.eps),
            f(self.z1),
            f(self.z2),
            f(self.v_b_hat),
            f(self.d_hat),
            f(self.v_b1),
            f(self.v_b2),
            f(self.d1),
            f(self.d2),
            self.status.clone(),
        ]
    }

    pub fn ok(&self) -> bool {
        self.status == "ok" || self.status.starts_with("dual-unitary")
    }
}

fn scan_row(cfg: &ScanConfig, v: &Gate, w: &crate::CMat, eps: f64) -> ScanRow {
    let mut row = ScanRow {
        eps,
        z1: f64::NAN,
        z2: f64::NAN,
        v_b_hat: f64::NAN,
        d_hat: f64::NAN,
        v_b1: f64::NAN,
        v_b2: f64::NAN,
        d1: f64::NAN,
        d2: f64::NAN,
        status: String::new(),
    };
    let result: Result<()> = (|| {
        let u = perturb(v, w, eps)?;
        let amps = compute_amplitudes(&u, cfg.k_max.max(2));
        row.z1 = amps.z1();
        row.z2 = amps.z(2);
        amps.check_bounds(1e-9)?;
        if row.z1 < 1e-12 {
            row.status = "dual-unitary: no front fit (v_B = 1)".into();
            return Ok(());
        }
        let p = front_params(row.z1, row.z2, u.q())?;
        (row.v_b1, row.v_b2, row.d1, row.d2) = (p.v_b1, p.v_b2, p.d1, p.d2);
        let grid = OtocGrid::mcs(&amps.z, u.q(), &GridWindow::slice(cfg.t_fit), Parity::Plus, None)?;
        grid.validate(1e-9)?;
        let fit = fit_front(&grid, cfg.t_fit, cfg.window_c)?;
        (row.v_b_hat, row.d_hat) = (fit.v_b_hat, fit.d_hat);
        row.status = if fit.converged { "ok".into() } else { "fit did not converge".into() };
        Ok(())
    })();
    if let Err(e) = result {
        row.status = format!("error: {e}");
    }
    row
}

/// One row per ε; a failing row is flagged in `status`, not fatal.
pub fn scan_epsilon(cfg: &ScanConfig) -> Vec<ScanRow> {
    let v = cfg.base.build();
    let w = random_hermitian(4, cfg.w_seed);
    cfg.eps.par_iter().map(|&eps| scan_row(cfg, &v, &w, eps)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EarlyTimeRow {
    pub t: usize,
    pub c_plus: f64,
    pub deviation: f64,
    pub t_over_tau: f64,
    pub tau: f64,
}

impl EarlyTimeRow {
    pub const HEADER: [&'static str; 5] = ["t", "C_plus", "deviation", "t_over_tau", "tau"];

    pub fn csv(&self) -> Vec<String> {
        let f = super::fmt_f64;
        vec![self.t.to_string(), f(self.c_plus), f(self.deviation), f(self.t_over_tau), f(self.tau)]
    }
}

/// Exact operator-averaged C⁺(t, t) on the light cone with τ from z_1.
/// τ (and t/τ) are NaN for a dual-unitary gate.
pub fn early_time_report(g: &Gate, m_max: usize) -> Result<Vec<EarlyTimeRow>> {
    let q2 = (g.q() * g.q()) as f64;
    let z1 = compute_amplitudes(g, 1).z1();
    // same dual-unitarity cutoff as the scan; roundoff would give τ ~ 1e15
    let tau = if z1 < 1e-12 { f64::NAN } else { relaxation_timescale(z1).unwrap_or(f64::NAN) };
    Ok(lightcone_floquet(g, m_max)?
        .into_iter()
        .enumerate()
        .map(|(i, c)| EarlyTimeRow {
            t: i + 1,
            c_plus: c,
            deviation: (c + 1.0 / (q2 - 1.0)).abs(),
            t_over_tau: (i + 1) as f64 / tau,
            tau,
        })
        .collect())
}

/// First time the series (t, y) reaches `level`, linearly interpolated.
pub fn crossing_time(series: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(first) = series.first() {
        if first.1 >= level {
            return Some(first.0);
        }
    }
    series.windows(2).find(|w| w[0].1 < level && w[1].1 >= level).map(|w| {
        let (t0, y0, t1, y1) = (w[0].0, w[0].1, w[1].0, w[1].1);
        t0 + (level - y0) * (t1 - t0) / (y1 - y0)
    })
}

fn interpolate(curve: &[(f64, f64)], s: f64) -> Option<f64> {
    curve.windows(2).find(|w| w[0].0 <= s && s <= w[1].0).map(|w| {
        let (a, b) = (w[0], w[1]);
        if b.0 == a.0 {
            a.1
        } else {
            a.1 + (s - a.0) * (b.1 - a.1) / (b.0 - a.0)
        }
    })
}

/// Largest pairwise gap between curves (s, y) sampled on [lo, hi].
/// Returns NaN if some curve does not cover the range.
pub fn collapse_gap(curves: &[Vec<(f64, f64)>], lo: f64, hi: f64) -> f64 {
    let samples = 400;
    let mut worst: f64 = 0.0;
    for k in 0..=samples {
        let s = lo + (hi - lo) * k as f64 / samples as f64;
        let vals: Option<Vec<f64>> = curves.iter().map(|c| interpolate(c, s)).collect();
        let Some(vals) = vals else { return f64::NAN };
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max(max - min);
    }
    worst
}
