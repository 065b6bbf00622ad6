//! Exact contraction of the folded OTOC network, one column at a time.
//!
//! A column of n gates maps the n incoming folded legs to n outgoing ones.
//! Gates are contracted bottom to top while carrying one extra "bond" leg
//! that starts in the swap pairing and is closed with the identity pairing
//! at the top. With this normalization the column operator fixes both the
//! all-loop and the all-swap product states.

use crate::folded::{dot, identity_pairing, identity_pairing_with, leg_dim, product_state, swap_pairing, swap_pairing_with};
use crate::gate::Gate;
use crate::linalg::traceless_basis;
use crate::{CMat, Error, Result, C64};

/// Largest folded dimension q^{4n} allowed by default (n = 5 at q = 2).
pub const DEFAULT_BUDGET: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Operator inserted at one end of the OTOC.
#[derive(Clone, Debug)]
pub enum Observable {
    Explicit(CMat),
    /// Uniform average over a Hermitian traceless operator basis.
    Averaged,
}

#[derive(Clone, Debug)]
pub enum ColumnPattern {
    Floquet(Gate),
    /// Columns i = 1, 2, ... use `defect` when i is a multiple of w + 1 and
    /// `background` otherwise.
    DiluteDefect { background: Gate, defect: Gate, w: usize },
}

#[derive(Clone, Debug)]
pub struct CircuitColumnSpec {
    pub n: usize,
    pub q: usize,
    pub pattern: ColumnPattern,
    pub budget: usize,
}

impl CircuitColumnSpec {
    pub fn floquet(g: Gate, n: usize) -> CircuitColumnSpec {
        CircuitColumnSpec { n, q: g.q(), pattern: ColumnPattern::Floquet(g), budget: DEFAULT_BUDGET }
    }

    pub fn dilute_defect(background: Gate, defect: Gate, w: usize, n: usize) -> Result<CircuitColumnSpec> {
        if background.q() != defect.q() {
            return Err(Error::DimensionMismatch { expected: background.q(), found: defect.q() });
        }
        Ok(CircuitColumnSpec {
            n,
            q: background.q(),
            pattern: ColumnPattern::DiluteDefect { background, defect, w },
            budget: DEFAULT_BUDGET,
        })
    }

    /// Gate used in column i (1-based, counted from the right boundary).
    pub fn gate(&self, i: usize) -> &Gate {
        match &self.pattern {
            ColumnPattern::Floquet(g) => g,
            ColumnPattern::DiluteDefect { background, defect, w } => {
                if i.is_multiple_of(w + 1) {
                    defect
                } else {
                    background
                }
            }
        }
    }

    fn check_budget(&self) -> Result<usize> {
        folded_dim(self.q, self.n, self.budget)
    }
}

pub fn folded_dim(q: usize, n: usize, budget: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = dim.checked_mul(leg_dim(q)).filter(|&d| d <= budget).ok_or(Error::OutOfBudget {
            dim: (leg_dim(q) as f64).powi(n as i32) as usize,
            limit: budget,
        })?;
    }
    Ok(dim)
}

/// Matrix-free T_n for one column.
#[derive(Clone, Debug)]
pub struct FoldedColumnOperator {
    n: usize,
    q: usize,
    /// SWAP·U, acting on (bond, leg) for one forward copy
    fwd: CMat,
    bottom: Vec<C64>,
    top: Vec<C64>,
}

impl FoldedColumnOperator {
    pub fn new(g: &Gate, n: usize, budget: usize) -> Result<FoldedColumnOperator> {
        let q = g.q();
        folded_dim(q, n, budget)?;
        let swap = Gate::swap(q);
        Ok(FoldedColumnOperator {
            n,
            q,
            fwd: swap.matrix() * g.matrix(),
            bottom: swap_pairing(q),
            top: identity_pairing(q),
        })
    }

    /// Replace the swap pairing entering the bottom gate.
    pub fn with_bottom(mut self, leg: Vec<C64>) -> FoldedColumnOperator {
        self.bottom = leg;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        leg_dim(self.q).pow(self.n as u32)
    }
}

/// new[x_a, x_b] = Σ g[(x_a, x_b), (y_a, y_b)] old[y_a, y_b] on two base-q digits.
fn apply_two_digits(v: &mut [C64], q: usize, stride_a: usize, stride_b: usize, g: &CMat) {
    let d = q * q;
    let mut buf = vec![C64::new(0.0, 0.0); d];
    let mut out = vec![C64::new(0.0, 0.0); d];
    for base in 0..v.len() {
        if !(base / stride_a).is_multiple_of(q) || !(base / stride_b).is_multiple_of(q) {
            continue;
        }
        for ya in 0..q {
            for yb in 0..q {
                buf[ya * q + yb] = v[base + ya * stride_a + yb * stride_b];
            }
        }
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (cc, b) in buf.iter().enumerate() {
                acc += g[(r, cc)] * b;
            }
            *o = acc;
        }
        for xa in 0..q {
            for xb in 0..q {
                v[base + xa * stride_a + xb * stride_b] = out[xa * q + xb];
            }
        }
    }
}

pub fn apply_column(op: &FoldedColumnOperator, v: &[C64]) -> Result<Vec<C64>> {
    let dim = op.dim();
    if v.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
    }
    let q = op.q;
    let l = leg_dim(q);
    let mut state = Vec::with_capacity(l * dim);
    for b in &op.bottom {
        state.extend(v.iter().map(|x| b * x));
    }
    let digits = 4 * (op.n + 1);
    let stride = |p: usize| q.pow((digits - 1 - p) as u32);
    let conj = op.fwd.map(|x| x.conj());
    for j in 1..=op.n {
        for copy in 0..4 {
            let g = if copy % 2 == 0 { &op.fwd } else { &conj };
            apply_two_digits(&mut state, q, stride(copy), stride(4 * j + copy), g);
        }
    }
    let scale = q as f64;
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (b, t) in op.top.iter().enumerate() {
        if *t == C64::new(0.0, 0.0) {
            continue;
        }
        let w = t * scale;
        for (o, s) in out.iter_mut().zip(&state[b * dim..(b + 1) * dim]) {
            *o += w * s;
        }
    }
    Ok(out)
}

/// Dense T_n assembled column by column; only for small folded dimension.
pub fn column_matrix(op: &FoldedColumnOperator) -> Result<CMat> {
    let dim = op.dim();
    let mut m = CMat::zeros(dim, dim);
    let mut e = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        e[k] = C64::new(1.0, 0.0);
        let col = apply_column(op, &e)?;
        for (i, x) in col.into_iter().enumerate() {
            m[(i, k)] = x;
        }
        e[k] = C64::new(0.0, 0.0);
    }
    Ok(m)
}

fn averaged_leg(q: usize, f: impl Fn(&CMat) -> Vec<C64>) -> Vec<C64> {
    let basis = traceless_basis(q);
    let mut acc = vec![C64::new(0.0, 0.0); leg_dim(q)];
    for s in &basis {
        for (a, x) in acc.iter_mut().zip(f(s)) {
            *a += x;
        }
    }
    let w = 1.0 / basis.len() as f64;
    acc.iter().map(|x| x * w).collect()
}

/// Top leg carrying σ_α.
pub fn top_leg(obs: &Observable, q: usize) -> Vec<C64> {
    match obs {
        Observable::Explicit(s) => identity_pairing_with(s),
        Observable::Averaged => averaged_leg(q, identity_pairing_with),
    }
}

/// Bottom leg carrying σ_β.
pub fn bottom_leg(obs: &Observable, q: usize) -> Vec<C64> {
    match obs {
        Observable::Explicit(s) => swap_pairing_with(s),
        Observable::Averaged => averaged_leg(q, swap_pairing_with),
    }
}

fn check_observable(obs: &Observable, q: usize) -> Result<()> {
    if let Observable::Explicit(s) = obs {
        if s.nrows() != q || s.ncols() != q {
            return Err(Error::DimensionMismatch { expected: q, found: s.nrows() });
        }
    }
    Ok(())
}

/// L = q^{n/2} · loop^{⊗(n−1)} ⊗ loop_α
pub fn left_boundary(n: usize, q: usize, alpha: &Observable) -> Vec<C64> {
    let mut legs = vec![identity_pairing(q); n - 1];
    legs.push(top_leg(alpha, q));
    scaled(product_state(&legs), (q as f64).powf(n as f64 / 2.0))
}

/// R⁺ = q^{n/2} · swap_β ⊗ swap^{⊗(n−1)}
pub fn right_boundary_plus(n: usize, q: usize, beta: &Observable) -> Vec<C64> {
    let mut legs = vec![bottom_leg(beta, q)];
    legs.extend(std::iter::repeat_n(swap_pairing(q), n - 1));
    scaled(product_state(&legs), (q as f64).powf(n as f64 / 2.0))
}

/// R⁻ = q^{n/2} · T'_β |swap^{⊗n}⟩, with σ_β entering the bottom gate of the
/// first column from the left.
pub fn right_boundary_minus(g: &Gate, n: usize, beta: &Observable, budget: usize) -> Result<Vec<C64>> {
    let q = g.q();
    let op = FoldedColumnOperator::new(g, n, budget)?.with_bottom(bottom_leg(beta, q));
    let all_swap = product_state(&vec![swap_pairing(q); n]);
    Ok(scaled(apply_column(&op, &all_swap)?, (q as f64).powf(n as f64 / 2.0)))
}

fn scaled(v: Vec<C64>, s: f64) -> Vec<C64> {
    v.into_iter().map(|x| x * s).collect()
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-10 {
        return Err(Error::Invariant(format!("OTOC has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

pub fn otoc_exact(
    spec: &CircuitColumnSpec,
    alpha: &Observable,
    beta: &Observable,
    m: usize,
    parity: Parity,
) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidCoordinates("m must be at least 1".into()));
    }
    spec.check_budget()?;
    check_observable(alpha, spec.q)?;
    check_observable(beta, spec.q)?;
    let (n, q) = (spec.n, spec.q);
    let (mut v, first) = match parity {
        Parity::Plus => (right_boundary_plus(n, q, beta), 1),
        Parity::Minus => (right_boundary_minus(spec.gate(1), n, beta, spec.budget)?, 2),
    };
    for i in first..=m {
        let op = FoldedColumnOperator::new(spec.gate(i), n, spec.budget)?;
        v = apply_column(&op, &v)?;
    }
    real_part(dot(&left_boundary(n, q, alpha), &v))
}

/// Operator-averaged C⁺(1, m) for m = 1..=m_max from the dense q⁴×q⁴ column.
pub fn lightcone_floquet(g: &Gate, m_max: usize) -> Result<Vec<f64>> {
    let q = g.q();
    let op = FoldedColumnOperator::new(g, 1, DEFAULT_BUDGET)?;
    let t = column_matrix(&op)?;
    let left = nalgebra::DVector::from_vec(left_boundary(1, q, &Observable::Averaged));
    let mut v = nalgebra::DVector::from_vec(right_boundary_plus(1, q, &Observable::Averaged));
    let mut out = Vec::with_capacity(m_max);
    for _ in 0..m_max {
        v = &t * v;
        out.push(real_part(left.dot(&v))?);
    }
    Ok(out)
}
