use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use otoc_core::analysis::{BaseGate, ScanConfig};
use otoc_core::gate::{make_gate, perturb, Gate, GateJson, TOL_UNITARY};
use otoc_core::linalg::{haar_unitary, random_hermitian};
use serde::Deserialize;

/// Every field is optional; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub gate: Option<GateSpec>,
    pub amplitudes: AmplitudesSection,
    pub otoc: OtocSection,
    pub fit: FitSection,
    pub scan: Option<ScanConfig>,
    pub early_time: EarlyTimeSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudesSection {
    pub k_max: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtocSection {
    pub engine: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub parity: Option<String>,
    pub grid: Option<String>,
    pub z: Option<Vec<f64>>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub t: Option<i64>,
    pub window_c: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyTimeSection {
    pub m_max: Option<usize>,
}

/// How to obtain a gate. Seeds left out fall back to the run's `--seed`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GateSpec {
    /// q = 2 dual-unitary gate: XY-point core dressed by seeded Haar one-site unitaries
    Du { j: f64, seed: Option<u64> },
    /// exp(iεW)·V with V as in `du` and W a seeded random Hermitian matrix
    Perturbed { j: f64, eps: f64, seed: Option<u64>, w_seed: Option<u64> },
    Haar { q: usize, seed: Option<u64> },
    Swap { q: usize },
    Identity { q: usize },
    File { path: PathBuf },
}

pub const DEFAULT_SEED: u64 = 1;

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

impl GateSpec {
    pub fn build(&self, seed: u64) -> Result<Gate> {
        Ok(match self {
            GateSpec::Du { j, seed: s } => BaseGate { j: *j, seed: s.unwrap_or(seed) }.build(),
            GateSpec::Perturbed { j, eps, seed: s, w_seed } => {
                let s = s.unwrap_or(seed);
                let v = BaseGate { j: *j, seed: s }.build();
                perturb(&v, &random_hermitian(4, w_seed.unwrap_or(s + 1)), *eps)?
            }
            GateSpec::Haar { q, seed: s } => {
                if *q < 2 {
                    bail!("q must be at least 2");
                }
                make_gate(haar_unitary(q * q, s.unwrap_or(seed)), *q, TOL_UNITARY)?
            }
            GateSpec::Swap { q } => Gate::swap(*q),
            GateSpec::Identity { q } => Gate::identity(*q),
            GateSpec::File { path } => read_gate(path)?,
        })
    }
}

pub fn read_gate(path: &Path) -> Result<Gate> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading gate {}", path.display()))?;
    let json: GateJson = serde_json::from_str(&text).with_context(|| format!("parsing gate {}", path.display()))?;
    Ok(Gate::from_json(&json, TOL_UNITARY)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let c: Config = serde_json::from_str(
            r#"{"seed": 5, "gate": {"kind": "perturbed", "j": 0.3, "eps": 0.1},
                "otoc": {"engine": "mcs", "grid": "-4:4,1:4"},
                "scan": {"eps": [0.1, 0.2]}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(5));
        assert_eq!(c.gate, Some(GateSpec::Perturbed { j: 0.3, eps: 0.1, seed: None, w_seed: None }));
        let scan = c.scan.unwrap();
        assert_eq!(scan.eps, vec![0.1, 0.2]);
        assert_eq!(scan.t_fit, 512);
        assert!(serde_json::from_str::<Config>(r#"{"sede": 5}"#).is_err());
    }

    #[test]
    fn seeds_fall_back_to_run_seed() {
        let spec = GateSpec::Haar { q: 2, seed: None };
        let a = spec.build(3).unwrap().to_json();
        let b = GateSpec::Haar { q: 2, seed: Some(3) }.build(99).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, spec.build(4).unwrap().to_json());
    }
}
