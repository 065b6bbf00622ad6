//! Two-site gates: construction, the dual (space-time rotated) gate, the
//! q = 2 dual-unitary family, perturbations, and operator entanglement.
//!
//! Index convention: `U[(a*q + b, c*q + d)] = U_{ab,cd}` with (a, b) the
//! output (left, right) sites and (c, d) the input sites.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, expm_hermitian, hermiticity_defect, kron, unitarity_defect};
use crate::{CMat, Error, Result, C64};

pub const TOL_UNITARY: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Gate {
    q: usize,
    u: CMat,
}

impl Gate {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    /// U_{ab,cd}
    #[inline]
    pub fn elem(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        self.u[(a * self.q + b, c * self.q + d)]
    }

    pub fn identity(q: usize) -> Gate {
        Gate { q, u: CMat::identity(q * q, q * q) }
    }

    pub fn swap(q: usize) -> Gate {
        let d = q * q;
        let mut u = CMat::zeros(d, d);
        for a in 0..q {
            for b in 0..q {
                u[(a * q + b, b * q + a)] = c(1., 0.);
            }
        }
        Gate { q, u }
    }

    /// Dress with one-site unitaries: (a⊗b)·U·(c⊗d).
    pub fn dressed(&self, a: &CMat, b: &CMat, c_: &CMat, d: &CMat) -> Gate {
        Gate { q: self.q, u: kron(a, b) * &self.u * kron(c_, d) }
    }

    pub fn to_json(&self) -> GateJson {
        let d = self.q * self.q;
        GateJson {
            q: self.q,
            re: (0..d).map(|i| (0..d).map(|j| self.u[(i, j)].re).collect()).collect(),
            im: (0..d).map(|i| (0..d).map(|j| self.u[(i, j)].im).collect()).collect(),
        }
    }

    pub fn from_json(g: &GateJson, tol: f64) -> Result<Gate> {
        let d = g.q * g.q;
        if g.re.len() != d || g.im.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.re.len().max(g.im.len()) });
        }
        for row in g.re.iter().chain(g.im.iter()) {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
        }
        let u = CMat::from_fn(d, d, |i, j| c(g.re[i][j], g.im[i][j]));
        make_gate(u, g.q, tol)
    }
}

/// Serialized form `{ "q": int, "re": [[...]], "im": [[...]] }`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GateJson {
    pub q: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn make_gate(elements: CMat, q: usize, tol: f64) -> Result<Gate> {
    let d = q * q;
    if q < 2 {
        return Err(Error::OutOfRange { what: "q", value: q as f64 });
    }
    if elements.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: elements.nrows() });
    }
    if elements.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: elements.ncols() });
    }
    let max_dev = unitarity_defect(&elements);
    if max_dev > tol {
        return Err(Error::NonUnitary { max_dev });
    }
    Ok(Gate { q, u: elements })
}

/// Ũ_{ab,cd} = U_{db,ca}. Generally not unitary.
pub fn dual_gate(g: &Gate) -> CMat {
    dual_matrix(g.matrix(), g.q)
}

pub fn dual_matrix(u: &CMat, q: usize) -> CMat {
    let d = q * q;
    CMat::from_fn(d, d, |i, j| {
        let (a, b) = (i / q, i % q);
        let (cc, dd) = (j / q, j % q);
        u[(dd * q + b, cc * q + a)]
    })
}

pub fn dual_unitarity_defect(g: &Gate) -> f64 {
    unitarity_defect(&dual_gate(g))
}

pub fn is_dual_unitary(g: &Gate, tol: f64) -> bool {
    dual_unitarity_defect(g) <= tol
}

/// (u1⊗u2)·exp[-i(π/4 XX + π/4 YY + J ZZ)]·(v1⊗v2)
pub fn du_gate_q2(j: f64, u1: &CMat, u2: &CMat, v1: &CMat, v2: &CMat) -> Gate {
    let (x, y, z) = (linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z());
    let quarter = std::f64::consts::FRAC_PI_4;
    let h = kron(&x, &x).scale(quarter) + kron(&y, &y).scale(quarter) + kron(&z, &z).scale(j);
    let core = expm_hermitian(&h, -1.0);
    Gate { q: 2, u: kron(u1, u2) * core * kron(v1, v2) }
}

/// Dual-unitary q = 2 gate with Haar one-site unitaries and J uniform in [0, π/2).
pub fn random_du_gate_q2<R: Rng>(rng: &mut R) -> Gate {
    let j = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
    let us: Vec<CMat> = (0..4).map(|_| linalg::haar_unitary_with(2, rng)).collect();
    du_gate_q2(j, &us[0], &us[1], &us[2], &us[3])
}

/// U = V·exp(iεW)
pub fn perturb(v: &Gate, w: &CMat, eps: f64) -> Result<Gate> {
    let d = v.q * v.q;
    if w.nrows() != d || w.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: w.nrows() });
    }
    let max_dev = hermiticity_defect(w);
    if max_dev > TOL_UNITARY {
        return Err(Error::NonHermitian { max_dev });
    }
    if eps == 0.0 {
        return Ok(v.clone());
    }
    Ok(Gate { q: v.q, u: &v.u * expm_hermitian(w, eps) })
}

#[derive(Clone, Debug, Serialize)]
pub struct SchmidtSpectrum {
    pub sigma: Vec<f64>,
    pub e_lin: f64,
}

impl SchmidtSpectrum {
    /// Σσ²/q², the first scattering amplitude B_1.
    pub fn purity_b1(&self, q: usize) -> f64 {
        self.sigma.iter().map(|s| s * s).sum::<f64>() / (q * q) as f64
    }
}

/// Reshuffle R[(a,c),(b,d)] = U_{ab,cd}; σ_j are its squared singular values.
pub fn schmidt_spectrum(g: &Gate) -> SchmidtSpectrum {
    let q = g.q;
    let d = q * q;
    let r = CMat::from_fn(d, d, |i, j| {
        let (a, cc) = (i / q, i % q);
        let (b, dd) = (j / q, j % q);
        g.elem(a, b, cc, dd)
    });
    let mut sigma: Vec<f64> = r.singular_values().iter().map(|s| s * s).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    let q4 = (d * d) as f64;
    let e_lin = 1.0 - sigma.iter().map(|s| s * s).sum::<f64>() / q4;
    SchmidtSpectrum { sigma, e_lin }
}
