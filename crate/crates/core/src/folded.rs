//! Four-copy folded representation U⊗U*⊗U⊗U* and its pairing states.
//!
//! A folded leg carries four copies ordered (fwd, conj, fwd, conj), flattened
//! as `((c1*q + c2)*q + c3)*q + c4`. The two pairings used throughout:
//!
//! * identity pairing ("loop", drawn as a circle): δ_{c1c2} δ_{c3c4} / q
//! * swap pairing (drawn as a square): δ_{c1c4} δ_{c2c3} / q
//!
//! Both are normalized to unit norm, and their overlap is 1/q. Inserting a
//! one-site operator σ gives the boundary legs of the OTOC:
//! σ[c2,c1]·σ[c4,c3]/q on the identity pairing and σ[c1,c4]·σ[c3,c2]/q on the
//! swap pairing.

use crate::gate::Gate;
use crate::{CMat, C64};

pub fn leg_dim(q: usize) -> usize {
    q * q * q * q
}

#[inline]
pub fn split_leg(q: usize, idx: usize) -> [usize; 4] {
    [idx / (q * q * q), (idx / (q * q)) % q, (idx / q) % q, idx % q]
}

#[inline]
pub fn join_leg(q: usize, c: [usize; 4]) -> usize {
    ((c[0] * q + c[1]) * q + c[2]) * q + c[3]
}

fn leg_from_fn(q: usize, f: impl Fn([usize; 4]) -> C64) -> Vec<C64> {
    (0..leg_dim(q)).map(|i| f(split_leg(q, i))).collect()
}

pub fn identity_pairing(q: usize) -> Vec<C64> {
    let w = 1.0 / q as f64;
    leg_from_fn(q, |c| if c[0] == c[1] && c[2] == c[3] { C64::new(w, 0.) } else { C64::new(0., 0.) })
}

pub fn swap_pairing(q: usize) -> Vec<C64> {
    let w = 1.0 / q as f64;
    leg_from_fn(q, |c| if c[0] == c[3] && c[1] == c[2] { C64::new(w, 0.) } else { C64::new(0., 0.) })
}

/// Identity pairing with σ inserted on both forward copies (top boundary).
pub fn identity_pairing_with(sigma: &CMat) -> Vec<C64> {
    let q = sigma.nrows();
    let w = 1.0 / q as f64;
    leg_from_fn(q, |c| sigma[(c[1], c[0])] * sigma[(c[3], c[2])] * w)
}

/// Swap pairing with σ inserted on both forward copies (bottom boundary).
pub fn swap_pairing_with(sigma: &CMat) -> Vec<C64> {
    let q = sigma.nrows();
    let w = 1.0 / q as f64;
    leg_from_fn(q, |c| sigma[(c[0], c[3])] * sigma[(c[2], c[1])] * w)
}

/// Kronecker product of leg vectors, first leg most significant.
pub fn product_state(legs: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for leg in legs {
        let mut next = Vec::with_capacity(out.len() * leg.len());
        for a in &out {
            for b in leg {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

/// Bilinear (unconjugated) contraction.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The folded gate as a q⁸×q⁸ matrix, rows (out-left, out-right), columns
/// (in-left, in-right), each pair flattened as `left * q⁴ + right`.
#[derive(Clone, Debug)]
pub struct FoldedGate {
    q: usize,
    w: CMat,
}

impl FoldedGate {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn matrix(&self) -> &CMat {
        &self.w
    }

    /// Column action on a product input state.
    pub fn apply(&self, in_left: &[C64], in_right: &[C64]) -> Vec<C64> {
        let v = nalgebra::DVector::from_vec(product_state(&[in_left.to_vec(), in_right.to_vec()]));
        (&self.w * v).iter().copied().collect()
    }

    /// Row action: contract the outputs with a product state.
    pub fn apply_transposed(&self, out_left: &[C64], out_right: &[C64]) -> Vec<C64> {
        let v = nalgebra::DVector::from_vec(product_state(&[out_left.to_vec(), out_right.to_vec()]));
        (self.w.transpose() * v).iter().copied().collect()
    }

    /// Full contraction of all four legs.
    pub fn contract(&self, out_left: &[C64], out_right: &[C64], in_left: &[C64], in_right: &[C64]) -> C64 {
        dot(&self.apply_transposed(out_left, out_right), &product_state(&[in_left.to_vec(), in_right.to_vec()]))
    }
}

pub fn fold(g: &Gate) -> FoldedGate {
    let q = g.q();
    let l = leg_dim(q);
    let u = g.matrix();
    let mut w = CMat::zeros(l * l, l * l);
    for ol in 0..l {
        let a = split_leg(q, ol);
        for or in 0..l {
            let b = split_leg(q, or);
            for il in 0..l {
                let cc = split_leg(q, il);
                for ir in 0..l {
                    let d = split_leg(q, ir);
                    let mut x = C64::new(1.0, 0.0);
                    for k in 0..4 {
                        let e = u[(a[k] * q + b[k], cc[k] * q + d[k])];
                        x *= if k % 2 == 0 { e } else { e.conj() };
                        if x == C64::new(0.0, 0.0) {
                            break;
                        }
                    }
                    w[(ol * l + or, il * l + ir)] = x;
                }
            }
        }
    }
    FoldedGate { q, w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{make_gate, random_du_gate_q2};
    use crate::linalg::{haar_unitary, pauli_x, pauli_z, rng_from_seed};

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn pairing_overlaps() {
        for q in [2, 3] {
            let o = identity_pairing(q);
            let s = swap_pairing(q);
            assert!((dot(&o, &o).re - 1.0).abs() < 1e-14);
            assert!((dot(&s, &s).re - 1.0).abs() < 1e-14);
            assert!((dot(&o, &s).re - 1.0 / q as f64).abs() < 1e-14);
        }
        let id = CMat::identity(2, 2);
        assert!(close(&identity_pairing_with(&id), &identity_pairing(2), 0.0));
        assert!(close(&swap_pairing_with(&id), &swap_pairing(2), 0.0));
        // ⟨σ-loop | swap⟩ = tr(σσ)/q² ... with σ traceless the plain loop overlap vanishes
        let x = pauli_x();
        assert!(dot(&identity_pairing_with(&x), &identity_pairing(2)).norm() < 1e-14);
        // OTOC of X and Z at t = 0: tr(XZXZ)/q = -1
        let v = dot(&identity_pairing_with(&x), &swap_pairing_with(&pauli_z()));
        assert!((v.re * 2.0 + 1.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn folded_identity_gate() {
        let f = fold(&Gate::identity(2));
        assert_eq!(f.matrix(), &CMat::identity(256, 256));
    }

    #[test]
    fn unitality_in_time() {
        let g = make_gate(haar_unitary(4, 13), 2, 1e-10).unwrap();
        let f = fold(&g);
        let (o, s) = (identity_pairing(2), swap_pairing(2));
        let oo = product_state(&[o.clone(), o.clone()]);
        let ss = product_state(&[s.clone(), s.clone()]);
        assert!(close(&f.apply_transposed(&o, &o), &oo, 1e-12));
        assert!(close(&f.apply(&s, &s), &ss, 1e-12));
        assert!(close(&f.apply(&o, &o), &oo, 1e-12));
        assert!(close(&f.apply_transposed(&s, &s), &ss, 1e-12));
    }

    #[test]
    fn unitality_in_space_iff_dual_unitary() {
        let o = identity_pairing(2);
        let expect = product_state(&[o.clone(), o.clone()]);
        // contract out-right and in-right with loops, compare with loops on the left legs
        let reduce = |f: &FoldedGate| -> Vec<C64> {
            let l = 16;
            let mut out = vec![C64::new(0., 0.); l * l];
            for ol in 0..l {
                for il in 0..l {
                    let mut acc = C64::new(0., 0.);
                    for or in 0..l {
                        for ir in 0..l {
                            acc += f.matrix()[(ol * l + or, il * l + ir)] * o[or] * o[ir];
                        }
                    }
                    out[ol * l + il] = acc;
                }
            }
            out
        };
        let g = random_du_gate_q2(&mut rng_from_seed(5));
        assert!(close(&reduce(&fold(&g)), &expect, 1e-12));
        let h = make_gate(haar_unitary(4, 13), 2, 1e-10).unwrap();
        assert!(!close(&reduce(&fold(&h)), &expect, 1e-3));
    }
}
