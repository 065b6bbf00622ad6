//! Independent oracles for the contraction code: a state-vector Heisenberg
//! evolution, Schmidt values of explicit diagonal compositions, and the full
//! folded column operator projected onto the MCS.

mod common;

use common::*;
use otoc_core::amplitudes::{compute_amplitudes, compute_amplitudes_sequence, haar_averaged_zk};
use otoc_core::brute_force::*;
use otoc_core::coords::{to_light_cone, Location};
use otoc_core::folded::{dot, identity_pairing, product_state, swap_pairing};
use otoc_core::gate::{random_du_gate_q2, Gate};
use otoc_core::linalg::{haar_unitary_with, pauli_x, pauli_y, pauli_z, rng_from_seed, traceless_basis};
use otoc_core::mcs::*;
use otoc_core::path_integral::otoc_lightcone;
use otoc_core::CMat;

fn exact_at(g: &Gate, alpha: &CMat, beta: &CMat, x: i64, t: i64) -> f64 {
    match to_light_cone(x, t).unwrap() {
        Location::Outside => 1.0,
        Location::Inside { n, m, parity } => otoc_exact(
            &CircuitColumnSpec::floquet(g.clone(), n),
            &Observable::Explicit(alpha.clone()),
            &Observable::Explicit(beta.clone()),
            m,
            parity,
        )
        .unwrap(),
    }
}

#[test]
fn folded_network_matches_state_vector() {
    let gates = [perturbed(1, 0.4), haar_gate(12), perturbed(6, 0.1)];
    let ops = [(pauli_x(), pauli_z()), (pauli_y(), pauli_y()), (pauli_z(), pauli_x())];
    for (g, (a, b)) in gates.iter().zip(&ops) {
        for t in 1..=4 {
            for x in (-t + 1)..=t {
                let sv = state_vector_otoc(g, a, b, x, t);
                let bf = exact_at(g, a, b, x, t);
                assert!((sv - bf).abs() < 1e-10, "x={x} t={t}: {sv} vs {bf}");
            }
        }
    }
}

#[test]
fn staircase_schmidt_values_give_bk() {
    for seed in 0..6 {
        let g = if seed % 2 == 0 { haar_gate(seed) } else { perturbed(seed, 0.3) };
        let a = compute_amplitudes(&g, 3);
        for k in 1..=3 {
            let s = staircase_bk(&g, k);
            assert!((a.b[k - 1] - s).abs() < 1e-10, "k={k}: {} vs {s}", a.b[k - 1]);
        }
    }
    // distinct gates: the channel is applied in staircase order
    let gs: Vec<_> = (0..3).map(|s| haar_gate(40 + s)).collect();
    let a = compute_amplitudes_sequence(&gs);
    for k in 1..=3 {
        let s = staircase_bk_of(&gs[..k].iter().collect::<Vec<_>>());
        assert!((a.b[k - 1] - s).abs() < 1e-10);
    }
}

#[test]
fn bk_from_raw_mcs_elements() {
    // (n,0|T|n,k) = B_k / q^k in the unnormalized product basis
    let g = perturbed(2, 0.35);
    let n = 3;
    let a = compute_amplitudes(&g, n);
    let op = FoldedColumnOperator::new(&g, n, DEFAULT_BUDGET).unwrap();
    let raw = |k: usize| {
        let mut legs = vec![swap_pairing(2); n - k];
        legs.extend(vec![identity_pairing(2); k]);
        product_state(&legs)
    };
    for k in 1..=n {
        let v = dot(&raw(0), &apply_column(&op, &raw(k)).unwrap());
        let want = a.b[k - 1] / 2f64.powi(k as i32);
        assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12, "k={k}: {v} vs {want}");
    }
}

fn projection_error(g: &Gate, n: usize) -> f64 {
    let z = compute_amplitudes(g, n + 1).z;
    let t = projected_transfer(&z, n, 2).unwrap();
    let op = FoldedColumnOperator::new(g, n, DEFAULT_BUDGET).unwrap();
    let basis: Vec<_> = (0..=n).map(|k| mcs_basis_vector(n, k, 2, DEFAULT_BUDGET).unwrap()).collect();
    let mut err: f64 = 0.0;
    for (k, bk) in basis.iter().enumerate() {
        let tk = apply_column(&op, bk).unwrap();
        for (l, bl) in basis.iter().enumerate() {
            let v = dot(bl, &tk);
            err = err.max((v.re - t.m[(l, k)]).abs()).max(v.im.abs());
        }
    }
    err
}

#[test]
fn projected_transfer_matches_folded_projection() {
    for seed in 0..4 {
        assert!(projection_error(&perturbed(100 + seed, 0.5), 3) < 1e-10);
        assert!(projection_error(&haar_gate(200 + seed), 3) < 1e-10);
    }
}

#[test]
fn dual_unitary_mcs_vectors_are_fixed() {
    let g = random_du_gate_q2(&mut rng_from_seed(77));
    for n in 1..=3 {
        let op = FoldedColumnOperator::new(&g, n, DEFAULT_BUDGET).unwrap();
        for k in 0..=n {
            let v = mcs_basis_vector(n, k, 2, DEFAULT_BUDGET).unwrap();
            let w = apply_column(&op, &v).unwrap();
            let err = v.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n} k={k} err={err}");
        }
    }
}

#[test]
fn dual_unitary_long_time_values() {
    // fast-relaxing member of the family, so m = 80 is deep in the MCS regime
    let g = otoc_core::analysis::BaseGate { j: 0.3, seed: 1 }.build();
    let basis = traceless_basis(2);
    let (alpha, beta) = (Observable::Explicit(basis[0].clone()), Observable::Explicit(basis[2].clone()));
    let m = 80;
    for n in 1..=3 {
        let spec = CircuitColumnSpec::floquet(g.clone(), n);
        let b = boundaries(n, 2, &alpha, &beta, &g).unwrap();
        let plus = otoc_exact(&spec, &alpha, &beta, m, Parity::Plus).unwrap();
        let want = if n == 1 { -1.0 / 3.0 } else { 0.0 };
        assert!((plus - want).abs() < 1e-6, "n={n}: {plus}");
        let minus = otoc_exact(&spec, &alpha, &beta, m, Parity::Minus).unwrap();
        let p = light_cone_purities(&g, &basis[2], n);
        let formula = (4.0 * p[n] - p[n - 1]) / 3.0;
        let z = vec![0.0; n];
        let mcs = otoc_mcs(&projected_transfer(&z, n, 2).unwrap(), &b, m, Parity::Minus).unwrap();
        assert!((minus - formula).abs() < 1e-6, "n={n}: {minus} vs {formula}");
        assert!((mcs - formula).abs() < 1e-12);
        let lc: f64 = b.left.iter().zip(&b.right_plus).map(|(l, r)| l * r).sum();
        assert!((lc - want).abs() < 1e-14);
    }
}

#[test]
fn single_defect_between_wide_patches() {
    // one perturbed column with w dual-unitary columns on either side: the
    // patches act as MCS projectors, leaving a single projected step
    let bg = otoc_core::analysis::BaseGate { j: 0.3, seed: 1 }.build();
    let defect = otoc_core::gate::perturb(&bg, &otoc_core::linalg::random_hermitian(4, 2), 0.4).unwrap();
    let (alpha, beta) = (Observable::Averaged, Observable::Averaged);
    let w = 60;
    for n in 1..=2 {
        let z = compute_amplitudes(&defect, n + 1).z;
        let t = projected_transfer(&z, n, 2).unwrap();
        let b = boundaries(n, 2, &alpha, &beta, &bg).unwrap();
        let spec = CircuitColumnSpec::dilute_defect(bg.clone(), defect.clone(), w, n).unwrap();
        let plus = otoc_exact(&spec, &alpha, &beta, 2 * w + 1, Parity::Plus).unwrap();
        let minus = otoc_exact(&spec, &alpha, &beta, 2 * w + 1, Parity::Minus).unwrap();
        let mcs_plus = otoc_mcs(&t, &b, 1, Parity::Plus).unwrap();
        let mcs_minus = otoc_mcs(&t, &b, 2, Parity::Minus).unwrap();
        assert!((plus - mcs_plus).abs() < 1e-6, "n={n}: {plus} vs {mcs_plus}");
        assert!((minus - mcs_minus).abs() < 1e-6, "n={n}: {minus} vs {mcs_minus}");
    }
}

#[test]
fn light_cone_row_is_closed_form() {
    for z1 in [0.0, 0.07, 0.3] {
        let z = [z1, 0.0];
        let t = projected_transfer(&z, 1, 2).unwrap();
        let b = boundaries(1, 2, &Observable::Averaged, &Observable::Averaged, &Gate::swap(2)).unwrap();
        for m in 1..40 {
            let v = otoc_mcs(&t, &b, m, Parity::Plus).unwrap();
            assert!((v - otoc_lightcone(z1, 2, m as u64)).abs() < 1e-14);
        }
    }
}

#[test]
fn haar_dressing_reproduces_zk_law() {
    let base = perturbed(3, 0.3);
    let z1 = compute_amplitudes(&base, 1).z1();
    let mut rng = rng_from_seed(42);
    let samples = 1000;
    let draws: Vec<[f64; 2]> = (0..samples)
        .map(|_| {
            let gates: Vec<_> = (0..3)
                .map(|_| {
                    let h: Vec<_> = (0..4).map(|_| haar_unitary_with(2, &mut rng)).collect();
                    base.dressed(&h[0], &h[1], &h[2], &h[3])
                })
                .collect();
            let a = compute_amplitudes_sequence(&gates);
            assert!((a.z1() - z1).abs() < 1e-12);
            [a.z(2), a.z(3)]
        })
        .collect();
    for k in 0..2 {
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / samples as f64;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        let target = haar_averaged_zk(z1, k + 2);
        assert!((mean - target).abs() < 3.0 * se, "k={}: {mean} vs {target} ± {se}", k + 2);
    }
}
