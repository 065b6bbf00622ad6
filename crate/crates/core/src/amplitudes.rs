//! Scattering amplitudes B_k, z_k from the operator-sum channel.
//!
//! B_k is the purity of the operator-Schmidt spectrum of a k-gate diagonal
//! staircase, normalized so that 1 ≤ B_k ≤ q². It is obtained by iterating a
//! CPTP map on q²×q² matrices k times from the identity and reading off the
//! Bell-state expectation value. z_1 = (B_1 − 1)/(q² − 1) and
//! z_k = (B_k − B_{k−1})/(q² − 1).

use serde::{Deserialize, Serialize};

use crate::gate::Gate;
use crate::{CMat, Error, Result, C64};

/// Kraus representation E_{kk'}[(a,a'),(b,b')] = q^{-1/2} Σ_f U_{ka,bf} U*_{k'a',b'f}.
#[derive(Clone, Debug)]
pub struct BkChannel {
    q: usize,
    kraus: Vec<CMat>,
}

impl BkChannel {
    pub fn new(g: &Gate) -> BkChannel {
        let q = g.q();
        let d = q * q;
        let s = 1.0 / (q as f64).sqrt();
        let mut kraus = Vec::with_capacity(d);
        for k in 0..q {
            for kp in 0..q {
                let e = CMat::from_fn(d, d, |row, col| {
                    let (a, ap) = (row / q, row % q);
                    let (b, bp) = (col / q, col % q);
                    let mut acc = C64::new(0.0, 0.0);
                    for f in 0..q {
                        acc += g.elem(k, a, b, f) * g.elem(kp, ap, bp, f).conj();
                    }
                    acc * s
                });
                kraus.push(e);
            }
        }
        BkChannel { q, kraus }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.q * self.q;
        let mut out = CMat::zeros(d, d);
        for e in &self.kraus {
            out += e * rho * e.adjoint();
        }
        out
    }
}

pub fn bk_channel_apply(g: &Gate, rho: &CMat) -> CMat {
    BkChannel::new(g).apply(rho)
}

/// |φ⟩ = Σ_j |jj⟩/√q
pub fn bell_state(q: usize) -> nalgebra::DVector<C64> {
    let mut v = nalgebra::DVector::zeros(q * q);
    for j in 0..q {
        v[j * q + j] = C64::new(1.0 / (q as f64).sqrt(), 0.0);
    }
    v
}

pub fn bell_expectation(rho: &CMat, q: usize) -> f64 {
    let phi = bell_state(q);
    (phi.adjoint() * rho * &phi)[(0, 0)].re
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScatteringAmplitudes {
    pub q: usize,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub z: Vec<f64>,
}

impl ScatteringAmplitudes {
    pub fn from_b(q: usize, b: Vec<f64>) -> ScatteringAmplitudes {
        let qq = (q * q) as f64 - 1.0;
        let z = (0..b.len())
            .map(|k| if k == 0 { (b[0] - 1.0) / qq } else { (b[k] - b[k - 1]) / qq })
            .collect();
        ScatteringAmplitudes { q, b, z }
    }

    pub fn k_max(&self) -> usize {
        self.b.len()
    }

    /// z_k with 1-based k; zero past k_max.
    pub fn z(&self, k: usize) -> f64 {
        if k == 0 {
            panic!("z_k is defined for k >= 1");
        }
        self.z.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn z1(&self) -> f64 {
        self.z(1)
    }

    /// z_1..z_len with z_j = 0 for j > keep.
    pub fn truncated(&self, keep: usize, len: usize) -> Vec<f64> {
        (1..=len).map(|k| if k <= keep { self.z(k) } else { 0.0 }).collect()
    }

    /// 1 ≤ B_k ≤ q², B_k monotone, 0 ≤ z_k ≤ (1 − z_1)^{k−1}.
    pub fn check_bounds(&self, tol: f64) -> Result<()> {
        let q2 = (self.q * self.q) as f64;
        for (i, &b) in self.b.iter().enumerate() {
            let k = i + 1;
            if b < 1.0 - tol || b > q2 + tol {
                return Err(Error::Invariant(format!("B_{k} = {b} outside [1, {q2}]")));
            }
            if i > 0 && b < self.b[i - 1] - tol {
                return Err(Error::Invariant(format!("B_{k} = {b} < B_{} = {}", k - 1, self.b[i - 1])));
            }
        }
        let z1 = self.z1();
        for (i, &z) in self.z.iter().enumerate() {
            let k = i + 1;
            let cap = (1.0 - z1).powi(i as i32);
            if z < -tol || z > cap + tol {
                return Err(Error::Invariant(format!("z_{k} = {z} outside [0, {cap}]")));
            }
        }
        Ok(())
    }
}

pub fn compute_amplitudes(g: &Gate, k_max: usize) -> ScatteringAmplitudes {
    let ch = BkChannel::new(g);
    let q = g.q();
    let mut rho = CMat::identity(q * q, q * q);
    let mut b = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        rho = ch.apply(&rho);
        b.push(bell_expectation(&rho, q));
    }
    ScatteringAmplitudes::from_b(q, b)
}

/// B_k for a staircase of distinct gates, B_k built from the first k of them.
pub fn compute_amplitudes_sequence(gates: &[Gate]) -> ScatteringAmplitudes {
    let q = gates[0].q();
    let mut rho = CMat::identity(q * q, q * q);
    let mut b = Vec::with_capacity(gates.len());
    for g in gates {
        rho = BkChannel::new(g).apply(&rho);
        b.push(bell_expectation(&rho, q));
    }
    ScatteringAmplitudes::from_b(q, b)
}

pub fn z1_from_entanglement(e_lin: f64, q: usize) -> Result<f64> {
    let q2 = (q * q) as f64;
    let max = 1.0 - 1.0 / q2;
    if !(-1e-12..=max + 1e-12).contains(&e_lin) {
        return Err(Error::OutOfRange { what: "E_lin", value: e_lin });
    }
    Ok(1.0 - q2 * e_lin / (q2 - 1.0))
}

/// q² − (q² − 1)(1 − z_1)^k
pub fn bk_lower_bound(b1: f64, q: usize, k: usize) -> f64 {
    let q2 = (q * q) as f64;
    q2 - (q2 - 1.0) * (1.0 - (b1 - 1.0) / (q2 - 1.0)).powi(k as i32)
}

pub fn haar_averaged_zk(z1: f64, k: usize) -> f64 {
    if k == 1 {
        z1
    } else {
        z1 * (1.0 - z1).powi(k as i32 - 1)
    }
}

pub fn relaxation_timescale(z1: f64) -> Result<f64> {
    if !(z1 > 0.0 && z1 < 1.0) {
        return Err(Error::Undefined(format!("relaxation timescale needs 0 < z1 < 1, got {z1}")));
    }
    Ok(-1.0 / (-z1).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{make_gate, perturb, random_du_gate_q2, schmidt_spectrum};
    use crate::linalg::{haar_unitary, max_abs_diff, random_hermitian, rng_from_seed};

    fn trace_norm(a: &CMat) -> f64 {
        a.singular_values().iter().sum()
    }

    #[test]
    fn identity_gate_fixes_bell_state() {
        let q = 2;
        let phi = bell_state(q);
        let proj = &phi * phi.adjoint();
        let out = bk_channel_apply(&Gate::identity(q), &proj);
        assert!(max_abs_diff(&out, &proj) < 1e-14);
        let a = compute_amplitudes(&Gate::identity(2), 3);
        assert_eq!(a.b.iter().map(|b| (b * 1e12).round() / 1e12).collect::<Vec<_>>(), vec![4.0; 3]);
    }

    #[test]
    fn dual_unitary_amplitudes_are_trivial() {
        let mut rng = rng_from_seed(2);
        for _ in 0..5 {
            let g = random_du_gate_q2(&mut rng);
            let a = compute_amplitudes(&g, 5);
            for b in &a.b {
                assert!((b - 1.0).abs() < 1e-12);
            }
            let phi = bell_state(2);
            let proj = &phi * phi.adjoint();
            assert!(max_abs_diff(&bk_channel_apply(&g, &proj), &proj) < 1e-12);
        }
        let a = compute_amplitudes(&Gate::swap(2), 4);
        assert!(a.b.iter().all(|b| (b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn channel_is_trace_preserving_and_contracting() {
        let g = make_gate(haar_unitary(4, 21), 2, 1e-10).unwrap();
        let ch = BkChannel::new(&g);
        let mut sum = CMat::zeros(4, 4);
        for e in ch.kraus() {
            sum += e.adjoint() * e;
        }
        assert!(max_abs_diff(&sum, &CMat::identity(4, 4)) < 1e-12);
        let rho = CMat::identity(4, 4).unscale(4.0);
        assert!((ch.apply(&rho).trace().re - 1.0).abs() < 1e-12);
        for seed in 0..20 {
            let h = random_hermitian(4, seed);
            let out = ch.apply(&h);
            assert!((out.trace() - h.trace()).norm() < 1e-12);
            assert!(trace_norm(&out) <= trace_norm(&h) + 1e-12);
        }
    }

    #[test]
    fn z1_matches_entanglement() {
        for seed in 0..10 {
            let g = make_gate(haar_unitary(4, seed), 2, 1e-10).unwrap();
            let a = compute_amplitudes(&g, 2);
            let sp = schmidt_spectrum(&g);
            assert!((z1_from_entanglement(sp.e_lin, 2).unwrap() - a.z1()).abs() < 1e-10);
            assert!((sp.purity_b1(2) - a.b[0]).abs() < 1e-10);
        }
        assert!(z1_from_entanglement(0.75, 2).unwrap().abs() < 1e-15);
        assert_eq!(z1_from_entanglement(0.0, 2).unwrap(), 1.0);
        assert!(z1_from_entanglement(0.9, 2).is_err());
    }

    #[test]
    fn z1_scales_as_eps_squared() {
        // A single W carries O(ε³) corrections that tilt the three-point slope
        // by up to ±0.25 at ε = 0.2, so average log z1 over an ensemble of W.
        let eps = [0.05, 0.1, 0.2];
        let mut logz = [0.0; 3];
        let samples = 16;
        for seed in 0..samples {
            let v = random_du_gate_q2(&mut rng_from_seed(seed));
            let w = random_hermitian(4, 1000 + seed);
            for (l, &e) in logz.iter_mut().zip(&eps) {
                *l += compute_amplitudes(&perturb(&v, &w, e).unwrap(), 1).z1().ln() / samples as f64;
            }
        }
        let z: Vec<f64> = logz.iter().map(|l| l.exp()).collect();
        let slope = crate::analysis::log_log_slope(&eps, &z);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        // and per gate the asymptotic exponent is exactly 2
        let v = random_du_gate_q2(&mut rng_from_seed(8));
        let w = random_hermitian(4, 99);
        let small = [0.0025, 0.005, 0.01];
        let z: Vec<f64> =
            small.iter().map(|&e| compute_amplitudes(&perturb(&v, &w, e).unwrap(), 1).z1()).collect();
        let slope = crate::analysis::log_log_slope(&small, &z);
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn witness_of_dual_unitarity() {
        let v = random_du_gate_q2(&mut rng_from_seed(8));
        assert!(compute_amplitudes(&v, 1).z1() <= 1e-10);
        assert!(crate::gate::is_dual_unitary(&v, 1e-8));
        let u = perturb(&v, &random_hermitian(4, 1), 0.05).unwrap();
        assert!(compute_amplitudes(&u, 1).z1() > 1e-10);
        assert!(!crate::gate::is_dual_unitary(&u, 1e-8));
    }

    #[test]
    fn convergence_to_q_squared() {
        let g = make_gate(haar_unitary(4, 4), 2, 1e-10).unwrap();
        let a = compute_amplitudes(&g, 60);
        assert!((a.b[59] - 4.0).abs() < 1e-6);
        a.check_bounds(1e-9).unwrap();
    }

    #[test]
    fn scalar_helpers() {
        assert_eq!(bk_lower_bound(1.0, 2, 5), 1.0);
        assert_eq!(bk_lower_bound(4.0, 2, 5), 4.0);
        assert_eq!(haar_averaged_zk(0.0, 3), 0.0);
        assert_eq!(haar_averaged_zk(1.0, 1), 1.0);
        assert_eq!(haar_averaged_zk(1.0, 2), 0.0);
        let tau = relaxation_timescale(1.0 - (-1.0f64).exp()).unwrap();
        assert!((tau - 1.0).abs() < 1e-12);
        let small = 1e-6;
        assert!((relaxation_timescale(small).unwrap() * small - 1.0).abs() < 1e-6);
        assert!(relaxation_timescale(0.0).is_err());
        assert!(relaxation_timescale(1.0).is_err());
    }

    #[test]
    fn json_shape() {
        let a = ScatteringAmplitudes::from_b(2, vec![1.3, 1.5]);
        let s = serde_json::to_value(&a).unwrap();
        assert!(s.get("B").is_some() && s.get("z").is_some() && s.get("q").is_some());
        assert!((a.z[0] - 0.1).abs() < 1e-15);
    }
}
