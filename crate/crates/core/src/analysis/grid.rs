use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brute_force::{otoc_exact, CircuitColumnSpec, Observable, Parity};
use crate::coords::{to_light_cone, Location};
use crate::mcs::{averaged_purities, McsEngine};
use crate::path_integral::{otoc_1step, otoc_2step};
use crate::gate::Gate;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Brute,
    Mcs,
    Closed1,
    Closed2,
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Engine> {
        match s {
            "brute" => Ok(Engine::Brute),
            "mcs" => Ok(Engine::Mcs),
            "closed1" => Ok(Engine::Closed1),
            "closed2" => Ok(Engine::Closed2),
            _ => Err(Error::Undefined(format!("unknown engine {s}"))),
        }
    }
}

/// Inclusive space-time window; only points of the grid's parity are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridWindow {
    pub x0: i64,
    pub x1: i64,
    pub t0: i64,
    pub t1: i64,
}

impl std::str::FromStr for GridWindow {
    type Err = Error;
    /// `x0:x1,t0:t1`
    fn from_str(s: &str) -> Result<GridWindow> {
        let bad = || Error::InvalidCoordinates(format!("grid '{s}' is not of the form x0:x1,t0:t1"));
        let (xs, ts) = s.split_once(',').ok_or_else(bad)?;
        let pair = |p: &str| -> Result<(i64, i64)> {
            let (a, b) = p.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        };
        let ((x0, x1), (t0, t1)) = (pair(xs)?, pair(ts)?);
        if x0 > x1 || t0 > t1 || t0 < 1 {
            return Err(bad());
        }
        Ok(GridWindow { x0, x1, t0, t1 })
    }
}

impl GridWindow {
    pub fn slice(t: i64) -> GridWindow {
        GridWindow { x0: -t, x1: t, t0: t, t1: t }
    }

    pub fn points(&self, parity: Parity) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for t in self.t0..=self.t1 {
            for x in self.x0..=self.x1 {
                if crate::coords::parity_of(x, t) == parity {
                    out.push((x, t));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OtocGrid {
    pub parity: Parity,
    pub provenance: Engine,
    pub q: usize,
    /// amplitudes used (MCS and closed forms)
    pub z: Vec<f64>,
    /// (x, t, value), sorted by (t, x)
    pub points: Vec<(i64, i64, f64)>,
    pub explicit_operators: bool,
}

impl OtocGrid {
    /// Parity tags agree and values lie in the admissible range.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let lo = if self.explicit_operators && self.provenance == Engine::Brute {
            -1.0
        } else {
            -1.0 / ((self.q * self.q) as f64 - 1.0)
        };
        for &(x, t, v) in &self.points {
            if crate::coords::parity_of(x, t) != self.parity {
                return Err(Error::Invariant(format!("point ({x},{t}) has the wrong parity")));
            }
            if !(v >= lo - tol && v <= 1.0 + tol) {
                return Err(Error::Invariant(format!("C({x},{t}) = {v} outside [{lo}, 1]")));
            }
        }
        Ok(())
    }

    pub fn slice(&self, t: i64) -> Vec<(i64, f64)> {
        let mut s: Vec<(i64, f64)> = self.points.iter().filter(|p| p.1 == t).map(|p| (p.0, p.2)).collect();
        s.sort_by_key(|p| p.0);
        s
    }

    pub fn to_csv_rows(&self) -> Vec<Vec<String>> {
        self.points.iter().map(|&(x, t, v)| vec![x.to_string(), t.to_string(), super::fmt_f64(v)]).collect()
    }

    fn assemble(
        window: &GridWindow,
        parity: Parity,
        provenance: Engine,
        q: usize,
        z: Vec<f64>,
        explicit_operators: bool,
        eval: impl Fn(&[(usize, usize)]) -> Result<Vec<f64>>,
    ) -> Result<OtocGrid> {
        let pts = window.points(parity);
        let mut inside = Vec::new();
        let mut values = vec![1.0; pts.len()];
        let mut slots = Vec::new();
        for (i, &(x, t)) in pts.iter().enumerate() {
            if let Location::Inside { n, m, .. } = to_light_cone(x, t)? {
                inside.push((n, m));
                slots.push(i);
            }
        }
        for (slot, v) in slots.into_iter().zip(eval(&inside)?) {
            values[slot] = v;
        }
        let points = pts.iter().zip(values).map(|(&(x, t), v)| (x, t, v)).collect();
        Ok(OtocGrid { parity, provenance, q, z, points, explicit_operators })
    }

    /// MCS transfer-matrix values. Parity − needs the gate for the light-cone
    /// purities of σ_β.
    pub fn mcs(
        z: &[f64],
        q: usize,
        window: &GridWindow,
        parity: Parity,
        minus_data: Option<(&Gate, &Observable)>,
    ) -> Result<OtocGrid> {
        let explicit = matches!(minus_data, Some((_, Observable::Explicit(_))));
        Self::assemble(window, parity, Engine::Mcs, q, z.to_vec(), explicit, |pts| {
            let n_max = pts.iter().map(|p| p.0).max().unwrap_or(1);
            let engine = McsEngine::new(z, q, n_max);
            match parity {
                Parity::Plus => engine.evaluate(pts, parity, None),
                Parity::Minus => {
                    let (g, beta) = minus_data.ok_or_else(|| {
                        Error::Undefined("parity − on the MCS engine needs a gate and σ_β".into())
                    })?;
                    let p = averaged_purities(g, beta, n_max);
                    engine.evaluate(pts, parity, Some(&p))
                }
            }
        })
    }

    pub fn closed(z1: f64, z2: Option<f64>, q: usize, window: &GridWindow) -> Result<OtocGrid> {
        let engine = if z2.is_some() { Engine::Closed2 } else { Engine::Closed1 };
        let z = match z2 {
            Some(z2) => vec![z1, z2],
            None => vec![z1],
        };
        Self::assemble(window, Parity::Plus, engine, q, z, false, |pts| {
            pts.par_iter()
                .map(|&(n, m)| match z2 {
                    Some(z2) => otoc_2step(z1, z2, q, n as u64, m as u64),
                    None => otoc_1step(z1, q, n as u64, m as u64),
                })
                .collect()
        })
    }

    /// Brute-force contraction; each point contracts its own column stack.
    pub fn brute(
        g: &Gate,
        window: &GridWindow,
        parity: Parity,
        alpha: &Observable,
        beta: &Observable,
        budget: usize,
    ) -> Result<OtocGrid> {
        let explicit = matches!(alpha, Observable::Explicit(_)) || matches!(beta, Observable::Explicit(_));
        Self::assemble(window, parity, Engine::Brute, g.q(), vec![], explicit, |pts| {
            pts.par_iter()
                .map(|&(n, m)| {
                    let mut spec = CircuitColumnSpec::floquet(g.clone(), n);
                    spec.budget = budget;
                    otoc_exact(&spec, alpha, beta, m, parity)
                })
                .collect()
        })
    }
}
