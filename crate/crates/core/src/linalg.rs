//! Small dense helpers shared by the gate and channel code.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{CMat, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// max |A†A - 1|
pub fn unitarity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    max_abs_diff(&(a.adjoint() * a), &CMat::identity(n, n))
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// exp(i·s·H) for Hermitian H, through its eigendecomposition.
pub fn expm_hermitian(h: &CMat, s: f64) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, s * l)));
    v * phases * v.adjoint()
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Ginibre matrix with E|a_ij|² = 1.
pub fn ginibre<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

/// Haar unitary by QR of a Ginibre matrix, with the phases of diag(R) moved
/// into Q so that the distribution is exactly invariant.
pub fn haar_unitary_with<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let qr = ginibre(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1., 0.) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn haar_unitary(dim: usize, seed: u64) -> CMat {
    haar_unitary_with(dim, &mut rng_from_seed(seed))
}

/// GUE sample rescaled to unit spectral norm.
pub fn random_hermitian_with<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let a = ginibre(dim, rng);
    let h = (&a + a.adjoint()).scale(0.5);
    let norm = h
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, l| m.max(l.abs()));
    h.unscale(norm)
}

pub fn random_hermitian(dim: usize, seed: u64) -> CMat {
    random_hermitian_with(dim, &mut rng_from_seed(seed))
}

/// Hermitian, traceless operator basis on C^q normalized to tr(σ†σ) = q
/// (generalized Gell-Mann matrices scaled by √(q/2)). For q = 2 these are
/// the Pauli matrices X, Y, Z in that order.
pub fn traceless_basis(q: usize) -> Vec<CMat> {
    let s = (q as f64 / 2.0).sqrt();
    let mut out = Vec::with_capacity(q * q - 1);
    for j in 0..q {
        for k in (j + 1)..q {
            let mut x = CMat::zeros(q, q);
            x[(j, k)] = c(s, 0.);
            x[(k, j)] = c(s, 0.);
            let mut y = CMat::zeros(q, q);
            y[(j, k)] = c(0., -s);
            y[(k, j)] = c(0., s);
            out.push(x);
            out.push(y);
        }
    }
    for l in 1..q {
        let norm = (q as f64 / (l * (l + 1)) as f64).sqrt();
        let mut d = CMat::zeros(q, q);
        for j in 0..l {
            d[(j, j)] = c(norm, 0.);
        }
        d[(l, l)] = c(-(l as f64) * norm, 0.);
        out.push(d);
    }
    out
}

/// Check that σ is Hermitian, traceless, and normalized to tr(σ²) = q.
pub fn check_operator(sigma: &CMat, q: usize, tol: f64) -> Result<(), String> {
    if sigma.nrows() != q || sigma.ncols() != q {
        return Err(format!("shape {}x{} for q = {}", sigma.nrows(), sigma.ncols(), q));
    }
    let h = hermiticity_defect(sigma);
    if h > tol {
        return Err(format!("not Hermitian (defect {h:.2e})"));
    }
    let tr = sigma.trace();
    if tr.norm() > tol {
        return Err(format!("trace {tr}"));
    }
    let n2 = (sigma.adjoint() * sigma).trace().re;
    if (n2 - q as f64).abs() > tol * q as f64 {
        return Err(format!("tr(σ†σ) = {n2}"));
    }
    Ok(())
}

pub fn real_matrix(a: &DMatrix<f64>) -> CMat {
    a.map(|x| c(x, 0.))
}
