#![allow(dead_code)]

use otoc_core::gate::{make_gate, perturb, random_du_gate_q2, Gate};
use otoc_core::linalg::{haar_unitary, kron, random_hermitian, rng_from_seed};
use otoc_core::CMat;

pub fn perturbed(seed: u64, eps: f64) -> Gate {
    let v = random_du_gate_q2(&mut rng_from_seed(seed));
    perturb(&v, &random_hermitian(4, 7919 + seed), eps).unwrap()
}

pub fn haar_gate(seed: u64) -> Gate {
    make_gate(haar_unitary(4, seed), 2, 1e-10).unwrap()
}

fn eye(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Embed a two-site gate on sites (j, j+1) of an L-site chain, site 0 leftmost.
pub fn embed_pair(u: &CMat, q: usize, l: usize, j: usize) -> CMat {
    let left = q.pow(j as u32);
    let right = q.pow((l - j - 2) as u32);
    kron(&eye(left), &kron(u, &eye(right)))
}

pub fn embed_site(a: &CMat, q: usize, l: usize, j: usize) -> CMat {
    let left = q.pow(j as u32);
    let right = q.pow((l - j - 1) as u32);
    kron(&eye(left), &kron(a, &eye(right)))
}

/// Heisenberg-picture OTOC on the sites −t+1..=t. Layer s = 1..=t acts on
/// the pairs (j, j+1) with j ≡ t − s mod 2, so the final layer touches (0, 1).
pub fn state_vector_otoc(g: &Gate, alpha: &CMat, beta: &CMat, x: i64, t: i64) -> f64 {
    let q = g.q();
    let l = (2 * t) as usize;
    let idx = |site: i64| (site + t - 1) as usize;
    let dim = q.pow(l as u32);
    let mut evo = eye(dim);
    for s in 1..=t {
        let mut layer = eye(dim);
        for j in (-t + 1)..t {
            if (j - (t - s)).rem_euclid(2) == 0 {
                layer = embed_pair(g.matrix(), q, l, idx(j)) * layer;
            }
        }
        evo = layer * evo;
    }
    let a = evo.adjoint() * embed_site(alpha, q, l, idx(0)) * &evo;
    let b = embed_site(beta, q, l, idx(x));
    let ab = &a * &b;
    let v = (&ab * &ab).trace() / dim as f64;
    assert!(v.im.abs() < 1e-10);
    v.re
}

/// Diagonal composition on k+1 sites: gates[j] acts on (j, j+1), applied
/// in the order j = 0, 1, ..., k−1.
pub fn diagonal_composition(gates: &[&Gate]) -> CMat {
    let q = gates[0].q();
    let l = gates.len() + 1;
    let mut out = eye(q.pow(l as u32));
    for (j, g) in gates.iter().enumerate() {
        out = embed_pair(g.matrix(), q, l, j) * out;
    }
    out
}

/// B_k from the Schmidt values of the composition, cut between
/// (in 0, out 0..k−1) and (in 1..k, out k).
pub fn staircase_bk(g: &Gate, k: usize) -> f64 {
    staircase_bk_of(&vec![g; k])
}

pub fn staircase_bk_of(gates: &[&Gate]) -> f64 {
    let q = gates[0].q();
    let k = gates.len();
    let u = diagonal_composition(gates);
    let big = q.pow(k as u32);
    // row index of u: out digits o_0..o_k; column: in digits i_0..i_k
    let mut r = CMat::zeros(q * big, big * q);
    for row in 0..q * big {
        for col in 0..q * big {
            let (o_head, o_last) = (row / q, row % q);
            let (i_first, i_tail) = (col / big, col % big);
            r[(i_first * big + o_head, i_tail * q + o_last)] = u[(row, col)];
        }
    }
    let sv = r.singular_values();
    sv.iter().map(|s| s.powi(4)).sum::<f64>() / (q * big) as f64
}
