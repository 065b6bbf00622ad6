//! The maximally chaotic subspace (MCS): its basis, the projected transfer
//! matrix, boundary overlaps, and OTOC evaluation inside it.
//!
//! |n,k⟩ has the swap pairing on legs 1..=n−k and the identity pairing on the
//! remaining k legs; ⟨n,j|n,j'⟩ = q^{−|j−j'|}. The orthonormal basis is
//! |n,0̄⟩ = |n,0⟩ and |n,k̄⟩ = (q|n,k⟩ − |n,k−1⟩)/√(q²−1).

use nalgebra::DMatrix;

use crate::brute_force::{folded_dim, Observable, Parity};
use crate::folded::{identity_pairing, product_state, swap_pairing};
use crate::gate::Gate;
use crate::linalg::{check_operator, traceless_basis};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Debug)]
pub struct McsTransferMatrix {
    pub n: usize,
    pub q: usize,
    pub z: Vec<f64>,
    pub m: DMatrix<f64>,
}

fn sq(q: usize) -> f64 {
    ((q * q) as f64 - 1.0).sqrt()
}

/// Entry (ℓ|T|k) of the projected transfer matrix, z[j−1] = z_j, zero past the end.
fn entry(z: &[f64], q: usize, l: usize, k: usize) -> f64 {
    let zk = |j: usize| if j == 0 { 0.0 } else { z.get(j - 1).copied().unwrap_or(0.0) };
    let qf = q as f64;
    match (l, k) {
        _ if k < l => 0.0,
        (0, 0) => 1.0,
        (0, k) => sq(q) * zk(k) / qf.powi(k as i32 - 1),
        (l, k) if l == k => 1.0 - zk(1),
        (l, k) => {
            let d = k - l;
            (qf * qf * zk(d) - zk(d + 1)) / qf.powi(d as i32)
        }
    }
}

pub fn projected_transfer(z: &[f64], n: usize, q: usize) -> Result<McsTransferMatrix> {
    if z.len() < n {
        return Err(Error::InsufficientAmplitudes { needed: n, have: z.len() });
    }
    let m = DMatrix::from_fn(n + 1, n + 1, |l, k| entry(z, q, l, k));
    let t = McsTransferMatrix { n, q, z: z[..n].to_vec(), m };
    t.check_structure(1e-8)?;
    Ok(t)
}

impl McsTransferMatrix {
    /// Triangularity, diagonal, constant superdiagonals, and the eigenvalue
    /// multiplicities {1: 1, 1−z_1: n}, counted from a Schur form.
    pub fn check_structure(&self, tol: f64) -> Result<()> {
        let n = self.n;
        let m = &self.m;
        for l in 0..=n {
            for k in 0..l {
                if m[(l, k)] != 0.0 {
                    return Err(Error::Invariant(format!("entry ({l},{k}) below the diagonal is nonzero")));
                }
            }
        }
        if m[(0, 0)] != 1.0 {
            return Err(Error::Invariant("(0|T|0) != 1".into()));
        }
        let z1 = self.z.first().copied().unwrap_or(0.0);
        for d in 0..n {
            let first = m[(1, 1 + d)];
            for l in 1..=(n - d) {
                if m[(l, l + d)] != first {
                    return Err(Error::Invariant(format!("superdiagonal {d} not constant at row {l}")));
                }
            }
        }
        if n <= 64 {
            let eig = m.clone().schur().complex_eigenvalues();
            let count = |target: f64| eig.iter().filter(|e| (*e - C64::new(target, 0.0)).norm() < tol).count();
            let (ones, lows) = (count(1.0), count(1.0 - z1));
            let ok = if z1.abs() < tol { ones == n + 1 } else { ones == 1 && lows == n };
            if !ok {
                return Err(Error::Invariant(format!(
                    "eigenvalue multiplicities: {ones} at 1, {lows} at 1-z1 (n = {n})"
                )));
            }
        }
        let radius = (0..=n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
        if radius > 1.0 + tol {
            return Err(Error::Invariant(format!("spectral radius {radius} > 1")));
        }
        Ok(())
    }
}

/// Orthonormal |n,k̄⟩ in the q^{4n}-dimensional folded space.
pub fn mcs_basis_vector(n: usize, k: usize, q: usize, budget: usize) -> Result<Vec<C64>> {
    if k > n {
        return Err(Error::OutOfRange { what: "MCS index k", value: k as f64 });
    }
    folded_dim(q, n, budget)?;
    let raw = |k: usize| {
        let mut legs = vec![swap_pairing(q); n - k];
        legs.extend(std::iter::repeat_n(identity_pairing(q), k));
        product_state(&legs)
    };
    if k == 0 {
        return Ok(raw(0));
    }
    let s = sq(q);
    let (a, b) = (raw(k), raw(k - 1));
    Ok(a.iter().zip(&b).map(|(x, y)| (x * q as f64 - y) / s).collect())
}

/// ℳ₊(A) = (1/q) tr_left[U (A⊗1) U†]: left input to right output.
pub fn light_cone_channel(g: &Gate, a: &CMat) -> CMat {
    let q = g.q();
    let u = g.matrix();
    let big = u * a.kronecker(&CMat::identity(q, q)) * u.adjoint();
    let mut out = CMat::zeros(q, q);
    for r in 0..q {
        for rp in 0..q {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..q {
                acc += big[(l * q + r, l * q + rp)];
            }
            out[(r, rp)] = acc / q as f64;
        }
    }
    out
}

/// ℳ_j(σ) = tr[(ℳ₊ʲσ)†(ℳ₊ʲσ)]/q for j = 0..=n.
pub fn light_cone_purities(g: &Gate, sigma: &CMat, n: usize) -> Vec<f64> {
    let q = g.q() as f64;
    let mut a = sigma.clone();
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if j > 0 {
            a = light_cone_channel(g, &a);
        }
        out.push((a.adjoint() * &a).trace().re / q);
    }
    out
}

pub fn averaged_purities(g: &Gate, beta: &Observable, n: usize) -> Vec<f64> {
    match beta {
        Observable::Explicit(s) => light_cone_purities(g, s, n),
        Observable::Averaged => {
            let basis = traceless_basis(g.q());
            let mut acc = vec![0.0; n + 1];
            for s in &basis {
                for (a, x) in acc.iter_mut().zip(light_cone_purities(g, s, n)) {
                    *a += x / basis.len() as f64;
                }
            }
            acc
        }
    }
}

#[derive(Clone, Debug)]
pub struct McsBoundary {
    pub left: Vec<f64>,
    pub right_plus: Vec<f64>,
    pub right_minus: Vec<f64>,
    pub sigma_beta: String,
}

pub fn left_overlaps(n: usize, q: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    let f = (q as f64).powf(-(n as f64) / 2.0);
    v[0] = f;
    if n >= 1 {
        v[1] = -f / sq(q);
    }
    v
}

pub fn right_plus_overlaps(n: usize, q: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[n] = (q as f64).powf(1.0 - n as f64 / 2.0) / sq(q);
    v
}

/// (k̄|R⁻) from the light-cone purities ℳ_0..=ℳ_n.
pub fn right_minus_overlaps(purities: &[f64], n: usize, q: usize) -> Vec<f64> {
    let qf = q as f64;
    let h = n as f64 / 2.0;
    (0..=n)
        .map(|k| {
            if k == 0 {
                qf.powf(h) * purities[n]
            } else {
                qf.powf(h + 1.0 - k as f64) * (purities[n - k] - purities[n - k + 1]) / sq(q)
            }
        })
        .collect()
}

fn validate(obs: &Observable, q: usize) -> Result<()> {
    if let Observable::Explicit(s) = obs {
        check_operator(s, q, 1e-10).map_err(Error::InvalidOperator)?;
    }
    Ok(())
}

pub fn boundaries(n: usize, q: usize, alpha: &Observable, beta: &Observable, g: &Gate) -> Result<McsBoundary> {
    validate(alpha, q)?;
    validate(beta, q)?;
    if g.q() != q {
        return Err(Error::DimensionMismatch { expected: q, found: g.q() });
    }
    let purities = averaged_purities(g, beta, n);
    Ok(McsBoundary {
        left: left_overlaps(n, q),
        right_plus: right_plus_overlaps(n, q),
        right_minus: right_minus_overlaps(&purities, n, q),
        sigma_beta: match beta {
            Observable::Explicit(_) => "explicit".into(),
            Observable::Averaged => "averaged".into(),
        },
    })
}

/// (L|Tᵐ|R⁺) for parity +, (L|Tᵐ⁻¹|R⁻) for parity −; Tᵐ is never formed.
pub fn otoc_mcs(t: &McsTransferMatrix, b: &McsBoundary, m: usize, parity: Parity) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidCoordinates("m must be at least 1".into()));
    }
    let (mut v, steps) = match parity {
        Parity::Plus => (nalgebra::DVector::from_vec(b.right_plus.clone()), m),
        Parity::Minus => (nalgebra::DVector::from_vec(b.right_minus.clone()), m - 1),
    };
    for _ in 0..steps {
        v = &t.m * v;
    }
    Ok(nalgebra::DVector::from_vec(b.left.clone()).dot(&v))
}

/// Grid evaluator for C(n, m) at many points with a single row-vector
/// recursion. Rescaling the k-th component by q^{−k} keeps all entries O(1)
/// for any n. Because the matrix elements do not depend on n, one recursion
/// serves every n ≤ n_max at once.
#[derive(Clone, Debug)]
pub struct McsEngine {
    q: usize,
    n_max: usize,
    /// band[d] = scaled entry on superdiagonal d for rows ≥ 1
    band: Vec<f64>,
    row0: Vec<f64>,
    one_minus_z1: f64,
}

impl McsEngine {
    pub fn new(z: &[f64], q: usize, n_max: usize) -> McsEngine {
        let qf = q as f64;
        let zk = |j: usize| if j == 0 { 0.0 } else { z.get(j - 1).copied().unwrap_or(0.0) };
        let last = z.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
        let width = (last + 1).min(n_max);
        let band = (0..=width)
            .map(|d| if d == 0 { 1.0 - zk(1) } else { (qf * qf * zk(d) - zk(d + 1)) / qf.powi(2 * d as i32) })
            .collect();
        let row0 = (0..=n_max.min(last))
            .map(|k| if k == 0 { 1.0 } else { sq(q) * zk(k) * qf.powi(1 - 2 * k as i32) })
            .collect();
        McsEngine { q, n_max, band, row0, one_minus_z1: 1.0 - zk(1) }
    }

    fn start(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n_max + 1];
        r[0] = 1.0;
        if self.n_max >= 1 {
            r[1] = -1.0 / (self.q as f64 * sq(self.q));
        }
        r
    }

    fn step(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = if k < self.row0.len() { r[0] * self.row0[k] } else { 0.0 };
            if k >= 1 {
                let lo = k.saturating_sub(self.band.len() - 1).max(1);
                for l in lo..=k {
                    acc += r[l] * self.band[k - l];
                }
            }
            *o = acc;
        }
        debug_assert!(self.one_minus_z1 == self.band[0]);
        out
    }

    fn plus_value(&self, r: &[f64], n: usize) -> f64 {
        self.q as f64 * r[n] / sq(self.q)
    }

    fn minus_value(&self, r: &[f64], purities: &[f64], n: usize) -> f64 {
        let qf = self.q as f64;
        let mut acc = r[0] * purities[n];
        for k in 1..=n {
            acc += r[k] * qf * (purities[n - k] - purities[n - k + 1]) / sq(self.q);
        }
        acc
    }

    /// Evaluate at the requested (n, m) points, returned in input order.
    /// For parity − the light-cone purities ℳ_0..=ℳ_{n_max} are required.
    pub fn evaluate(&self, points: &[(usize, usize)], parity: Parity, purities: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut by_steps: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, &(n, m)) in points.iter().enumerate() {
            if n > self.n_max {
                return Err(Error::OutOfRange { what: "n beyond engine size", value: n as f64 });
            }
            if m < 1 || n < 1 {
                return Err(Error::InvalidCoordinates(format!("(n, m) = ({n}, {m})")));
            }
            let steps = match parity {
                Parity::Plus => m,
                Parity::Minus => m - 1,
            };
            by_steps.entry(steps).or_default().push(i);
        }
        let purities = match parity {
            Parity::Minus => {
                let p = purities.ok_or_else(|| Error::Undefined("parity − needs light-cone purities".into()))?;
                if p.len() < self.n_max + 1 {
                    return Err(Error::InsufficientAmplitudes { needed: self.n_max + 1, have: p.len() });
                }
                Some(p)
            }
            Parity::Plus => None,
        };
        let mut out = vec![0.0; points.len()];
        let mut r = self.start();
        let mut done = 0;
        for (steps, idx) in by_steps {
            while done < steps {
                r = self.step(&r);
                done += 1;
            }
            for i in idx {
                let n = points[i].0;
                out[i] = match purities {
                    None => self.plus_value(&r, n),
                    Some(p) => self.minus_value(&r, p, n),
                };
            }
        }
        Ok(out)
    }
}
