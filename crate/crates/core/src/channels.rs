//! Amplitude-damping channels: decay schedules, the system+environment
//! unitaries (as explicit matrices and as gate circuits), Kraus extraction and
//! the closed-form reduced density matrices.
//!
//! Single qubit: wire 0 is the system, wire 1 the environment, which starts in
//! `|1>`. Two qubits: wires 0-1 are the system, wires 2-3 the environment,
//! which starts in `|11> = 3̌`. `|0>` is the excited single-qubit state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{build_tau, decompose_c2ry, decompose_c3ry, Circuit, Gate, GateSpec};
use crate::tensor::{re, unitarity_deviation, ComplexMatrix, C64};

/// Largest `gamma * t` accepted by the two-qubit short-time construction.
pub const MAX_GAMMA_T: f64 = 0.25;

/// Environment outcome the Kraus operators are conditioned on, two-qubit case.
pub const ENV_INITIAL_TWO: usize = 3;

/// Environment initial state, single-qubit case.
pub const ENV_INITIAL_SINGLE: usize = 1;

fn check_time(t: f64, gamma: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and non-negative, got {t}")));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::Domain(format!("decay rate must be finite and non-negative, got {gamma}")));
    }
    Ok(())
}

/// Rotation angle reproducing `exp(-gamma t)` survival: `2 acos(exp(-gamma t / 2))`.
pub fn theta_single(t: f64, gamma: f64) -> Result<f64> {
    check_time(t, gamma)?;
    Ok(2.0 * (-gamma * t / 2.0).exp().acos())
}

/// Inverse of [`theta_single`]: `t = -2 ln cos(theta/2) / gamma`.
pub fn time_single(theta: f64, gamma: f64) -> Result<f64> {
    if !(0.0..std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain(format!("single-qubit angle must lie in [0, pi), got {theta}")));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::Domain(format!("decay rate must be positive, got {gamma}")));
    }
    Ok(-2.0 * (theta / 2.0).cos().ln() / gamma)
}

/// Decay strengths of the two-qubit channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strengths {
    pub g21: f64,
    pub g32: f64,
    pub g31: f64,
}

/// Rotation angles of the two-qubit channel, radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Thetas {
    pub theta21: f64,
    pub theta32: f64,
    pub theta31: f64,
}

impl Thetas {
    pub fn new(theta21: f64, theta32: f64, theta31: f64) -> Self {
        Self { theta21, theta32, theta31 }
    }
}

/// Short-time decay strengths, valid for `gamma t <= MAX_GAMMA_T`.
pub fn gammas_two(t: f64, gamma: f64) -> Result<Strengths> {
    check_time(t, gamma)?;
    let x = gamma * t;
    if x > MAX_GAMMA_T {
        return Err(Error::Domain(format!("gamma*t = {x} exceeds the short-time window {MAX_GAMMA_T}")));
    }
    let s = Strengths { g21: 2.0 * x - 4.0 * x * x, g32: 2.0 * x - 2.0 * x * x, g31: 2.0 * x * x };
    if s.g21 + s.g31 > 1.0 {
        return Err(Error::Domain("strengths out of range".into()));
    }
    Ok(s)
}

/// `theta = 2 asin(sqrt(Gamma))` per channel.
pub fn thetas_two(t: f64, gamma: f64) -> Result<Thetas> {
    let s = gammas_two(t, gamma)?;
    let angle = |g: f64| -> Result<f64> {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::Domain(format!("strength {g} outside [0, 1]")));
        }
        Ok(2.0 * g.sqrt().asin())
    };
    Ok(Thetas { theta21: angle(s.g21)?, theta32: angle(s.g32)?, theta31: angle(s.g31)? })
}

/// Time grid with the per-point channel parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Single { gamma: f64, times: Vec<f64>, thetas: Vec<f64> },
    Two { gamma: f64, times: Vec<f64>, strengths: Vec<Strengths>, thetas: Vec<Thetas> },
}

impl Schedule {
    /// Single-qubit grid defined by its angles.
    pub fn single_from_angles(gamma: f64, thetas: &[f64]) -> Result<Self> {
        let times = thetas.iter().map(|&th| time_single(th, gamma)).collect::<Result<Vec<_>>>()?;
        Ok(Schedule::Single { gamma, times, thetas: thetas.to_vec() })
    }

    /// Ten angles `(pi/10) i`, `i = 0..9`.
    pub fn single_default(gamma: f64) -> Result<Self> {
        let thetas: Vec<f64> = (0..10).map(|i| std::f64::consts::PI / 10.0 * i as f64).collect();
        Self::single_from_angles(gamma, &thetas)
    }

    pub fn two_from_times(gamma: f64, times: &[f64]) -> Result<Self> {
        let strengths = times.iter().map(|&t| gammas_two(t, gamma)).collect::<Result<Vec<_>>>()?;
        let thetas = times.iter().map(|&t| thetas_two(t, gamma)).collect::<Result<Vec<_>>>()?;
        Ok(Schedule::Two { gamma, times: times.to_vec(), strengths, thetas })
    }

    /// Ten times `0.005 i`, `i = 0..9`.
    pub fn two_default(gamma: f64) -> Result<Self> {
        let times: Vec<f64> = (0..10).map(|i| 0.005 * i as f64).collect();
        Self::two_from_times(gamma, &times)
    }

    pub fn times(&self) -> &[f64] {
        match self {
            Schedule::Single { times, .. } | Schedule::Two { times, .. } => times,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Schedule::Single { gamma, .. } | Schedule::Two { gamma, .. } => *gamma,
        }
    }

    pub fn len(&self) -> usize {
        self.times().len()
    }

    pub fn is_empty(&self) -> bool {
        self.times().is_empty()
    }
}

/// Identity with a real rotation `[[c, -s], [s, c]]` written into the
/// `(i, j)` plane, half-angle convention.
fn plane_rotation(dim: usize, i: usize, j: usize, theta: f64) -> ComplexMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_fn(dim, dim, |r, col| match (r, col) {
        _ if (r == i && col == i) || (r == j && col == j) => re(co),
        _ if r == i && col == j => re(-s),
        _ if r == j && col == i => re(s),
        _ if r == col => re(1.0),
        _ => re(0.0),
    })
}

/// Explicit 4x4 single-qubit damping unitary.
pub fn u_ad_single(theta: f64) -> ComplexMatrix {
    plane_rotation(4, 1, 2, theta)
}

/// `CX[Q0;Q1], CRy(theta)[Q1;Q0], CX[Q0;Q1]` in application order.
pub fn u_ad_single_circuit(theta: f64) -> Result<Circuit> {
    let mut circ = Circuit::new(2);
    circ.push(GateSpec::controlled(Gate::X, 0, 1)?)?;
    circ.push(GateSpec::controlled(Gate::Ry(theta), 1, 0)?)?;
    circ.push(GateSpec::controlled(Gate::X, 0, 1)?)?;
    Ok(circ)
}

/// The three rotation factors of the two-qubit unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Factor {
    R21,
    R31,
    R32,
}

/// Rotation planes (0-based) of each factor. The first index of each plane
/// carries the `cos, -sin` row.
fn factor_planes(f: Factor) -> &'static [(usize, usize)] {
    match f {
        Factor::R21 => &[(6, 9), (7, 10)],
        Factor::R31 => &[(7, 13)],
        Factor::R32 => &[(10, 13), (11, 14)],
    }
}

fn factor_angle(f: Factor, th: &Thetas) -> f64 {
    match f {
        Factor::R21 => th.theta21,
        Factor::R31 => th.theta31,
        Factor::R32 => th.theta32,
    }
}

/// Explicit 16x16 matrix of one rotation factor.
pub fn factor_explicit(f: Factor, th: &Thetas) -> ComplexMatrix {
    let angle = factor_angle(f, th);
    factor_planes(f)
        .iter()
        .fold(ComplexMatrix::identity(16), |acc, &(i, j)| plane_rotation(16, i, j, angle).matmul(&acc).expect("16x16"))
}

/// Operator product of the factors in the order given (leftmost acts last).
pub fn u_ad_two_ordered(th: &Thetas, order: [Factor; 3]) -> ComplexMatrix {
    order.iter().fold(ComplexMatrix::identity(16), |acc, &f| acc.matmul(&factor_explicit(f, th)).expect("16x16"))
}

/// Canonical factor order `R21 R31 R32`.
pub const CANONICAL_ORDER: [Factor; 3] = [Factor::R21, Factor::R31, Factor::R32];

/// Explicit two-qubit damping unitary on system (wires 0-1) plus environment
/// (wires 2-3).
pub fn u_ad_two_explicit(th: &Thetas) -> ComplexMatrix {
    u_ad_two_ordered(th, CANONICAL_ORDER)
}

/// Applies `outer` in order, then `core`, then `outer` reversed. For
/// involutive `outer` this is the conjugation `P core P^-1` with
/// `P = outer[0] outer[1] ...` as an operator product.
fn sandwich(outer: &[Circuit], core: &Circuit) -> Result<Circuit> {
    let mut circ = Circuit::new(4);
    for c in outer {
        circ.append(c)?;
    }
    circ.append(core)?;
    for c in outer.iter().rev() {
        circ.append(c)?;
    }
    Ok(circ)
}

/// Gate-level circuit of one rotation factor.
pub fn factor_circuit(f: Factor, th: &Thetas) -> Result<Circuit> {
    match f {
        Factor::R21 => sandwich(
            &[build_tau(11, 16)?, build_tau(10, 12)?, build_tau(12, 15)?],
            &decompose_c2ry(th.theta21, (1, 2), 0, 4)?,
        ),
        Factor::R31 => sandwich(&[build_tau(14, 16)?], &decompose_c3ry(th.theta31, (1, 2, 3), 0, 4)?),
        Factor::R32 => sandwich(&[build_tau(14, 16)?, build_tau(15, 16)?], &decompose_c2ry(th.theta32, (0, 2), 1, 4)?),
    }
}

/// Two-qubit damping unitary built from one- and two-qubit gates only.
pub fn u_ad_two_circuit(th: &Thetas) -> Result<Circuit> {
    let mut circ = Circuit::new(4);
    for f in CANONICAL_ORDER.iter().rev() {
        circ.append(&factor_circuit(*f, th)?)?;
    }
    Ok(circ)
}

/// Kraus operators indexed by environment outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<ComplexMatrix>,
    pub env_outcomes: Vec<usize>,
}

impl KrausSet {
    /// `max |sum M^dag M - I|`.
    pub fn completeness_deviation(&self) -> Result<f64> {
        let dim = self.operators.first().ok_or(Error::Empty("Kraus set"))?.rows();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for m in &self.operators {
            acc = acc.add(&m.adjoint().matmul(m)?)?;
        }
        acc.max_abs_diff(&ComplexMatrix::identity(dim))
    }

    /// `sum M rho M^dag`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let first = self.operators.first().ok_or(Error::Empty("Kraus set"))?;
        let mut out = ComplexMatrix::zeros(first.rows(), first.rows());
        for m in &self.operators {
            out = out.add(&m.conjugate(rho)?)?;
        }
        Ok(out)
    }
}

/// Projects a system+environment unitary onto environment outcomes:
/// `M_e[s, s'] = <s, e| U |s', env_initial>`. The environment is the trailing
/// tensor factor of dimension `env_dim`.
pub fn extract_kraus(u: &ComplexMatrix, env_dim: usize, env_initial: usize) -> Result<KrausSet> {
    if env_dim == 0 || !u.is_square() || !u.rows().is_multiple_of(env_dim) {
        return Err(Error::Dimension(format!(
            "{}x{} unitary with environment dimension {env_dim}",
            u.rows(),
            u.cols()
        )));
    }
    if env_initial >= env_dim {
        return Err(Error::Dimension(format!("environment state {env_initial} >= {env_dim}")));
    }
    let dev = unitarity_deviation(u).unwrap_or(f64::INFINITY);
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let sys = u.rows() / env_dim;
    let operators = (0..env_dim)
        .map(|e| ComplexMatrix::from_fn(sys, sys, |s, sp| u.get(s * env_dim + e, sp * env_dim + env_initial)))
        .collect();
    Ok(KrausSet { operators, env_outcomes: (0..env_dim).collect() })
}

/// Matrix elements of the two-qubit unitary that determine the channel,
/// 1-based as `(row, col)`: `(8,8), (11,8), (14,8), (12,12), (15,12)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelElements {
    pub u8_8: C64,
    pub u11_8: C64,
    pub u14_8: C64,
    pub u12_12: C64,
    pub u15_12: C64,
}

impl ChannelElements {
    pub fn from_unitary(u: &ComplexMatrix) -> Self {
        Self {
            u8_8: u.get(7, 7),
            u11_8: u.get(10, 7),
            u14_8: u.get(13, 7),
            u12_12: u.get(11, 11),
            u15_12: u.get(14, 11),
        }
    }
}

/// Closed-form output of the two-qubit channel for a check-basis input.
pub fn rho_out_two(rho_in: &ComplexMatrix, th: &Thetas) -> Result<ComplexMatrix> {
    if rho_in.rows() != 4 || rho_in.cols() != 4 {
        return Err(Error::Dimension("two-qubit density matrix must be 4x4".into()));
    }
    rho_in.validate_density(1e-10)?;
    let e = ChannelElements::from_unitary(&u_ad_two_explicit(th));
    Ok(rho_out_from_elements(rho_in, &e))
}

/// Element map of the two-qubit channel given the unitary's channel elements.
pub fn rho_out_from_elements(rho: &ComplexMatrix, e: &ChannelElements) -> ComplexMatrix {
    let p = |r: usize, col: usize| rho.get(r, col);
    let mut out = [[re(0.0); 4]; 4];
    out[0][0] = p(0, 0);
    out[0][1] = p(0, 1) * e.u8_8.conj();
    out[0][2] = p(0, 2) * e.u12_12.conj();
    out[0][3] = p(0, 3);
    out[1][1] = re(e.u8_8.norm_sqr()) * p(1, 1);
    out[1][2] = e.u8_8 * p(1, 2) * e.u12_12.conj();
    out[1][3] = e.u8_8 * p(1, 3);
    out[2][2] = re(e.u12_12.norm_sqr()) * p(2, 2) + re(e.u11_8.norm_sqr()) * p(1, 1);
    out[2][3] = e.u12_12 * p(2, 3) + e.u11_8 * p(1, 2) * e.u15_12.conj();
    out[3][3] = re(1.0) - out[0][0] - out[1][1] - out[2][2];
    ComplexMatrix::from_fn(4, 4, |r, col| if r <= col { out[r][col] } else { out[col][r].conj() })
}

/// Single-qubit channel output through its Kraus operators.
pub fn rho_out_single(rho_in: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    if rho_in.rows() != 2 || rho_in.cols() != 2 {
        return Err(Error::Dimension("single-qubit density matrix must be 2x2".into()));
    }
    rho_in.validate_density(1e-10)?;
    extract_kraus(&u_ad_single(theta), 2, ENV_INITIAL_SINGLE)?.apply(rho_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::verify_decomposition;
    use crate::tensor::{is_unitary, kron, partial_trace, StateVector};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn basis_rho(i: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&StateVector::basis(4, i).unwrap())
    }

    #[test]
    fn theta_single_values() {
        assert_eq!(theta_single(0.0, 1.0).unwrap(), 0.0);
        assert!((time_single(PI / 2.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((time_single(PI / 2.0, 1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        for i in 0..10 {
            let th = PI / 10.0 * i as f64;
            let t = time_single(th, 1.0).unwrap();
            assert!((theta_single(t, 1.0).unwrap() - th).abs() < 1e-12, "i={i}");
            assert!(((th / 2.0).sin().powi(2) - (1.0 - (-t).exp())).abs() < 1e-12);
        }
        assert!(theta_single(-1.0, 1.0).is_err());
        assert!(time_single(PI, 1.0).is_err());
    }

    #[test]
    fn theta_single_monotone_toward_pi() {
        let a = theta_single(1.0, 1.0).unwrap();
        let b = theta_single(10.0, 1.0).unwrap();
        let z = theta_single(60.0, 1.0).unwrap();
        assert!(a < b && b < z && z < PI);
        assert!(PI - z < 1e-10);
    }

    #[test]
    fn gammas_two_values() {
        let s0 = gammas_two(0.0, 1.0).unwrap();
        assert_eq!((s0.g21, s0.g32, s0.g31), (0.0, 0.0, 0.0));
        let s = gammas_two(0.005, 1.0).unwrap();
        assert!((s.g21 - 0.0099).abs() < 1e-15);
        assert!((s.g32 - 0.00995).abs() < 1e-15);
        assert!((s.g31 - 0.00005).abs() < 1e-17);
        let s = gammas_two(0.045, 1.0).unwrap();
        assert!((s.g21 - 0.0819).abs() < 1e-15);
        assert!((s.g32 - 0.08595).abs() < 1e-15);
        assert!((s.g31 - 0.00405).abs() < 1e-15);
    }

    #[test]
    fn window_is_enforced() {
        assert!(gammas_two(0.25, 1.0).is_ok());
        assert!(matches!(gammas_two(0.2501, 1.0), Err(Error::Domain(_))));
        assert!(matches!(thetas_two(0.1, 3.0), Err(Error::Domain(_))));
        assert!(thetas_two(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn thetas_two_values() {
        let th = thetas_two(0.0, 1.0).unwrap();
        assert_eq!(th, Thetas::default());
        let th = thetas_two(0.005, 1.0).unwrap();
        assert!((th.theta21 - 0.199_327_304_734_811_64).abs() < 1e-15);
        assert!((th.theta21 - 2.0 * 0.0099f64.sqrt().asin()).abs() < 1e-15);
        let mut prev = Thetas::default();
        for i in 1..10 {
            let th = thetas_two(0.005 * i as f64, 1.0).unwrap();
            assert!(th.theta21 > prev.theta21 && th.theta32 > prev.theta32 && th.theta31 > prev.theta31);
            prev = th;
        }
    }

    #[test]
    fn single_unitary_and_circuit() {
        assert_eq!(u_ad_single(0.0), ComplexMatrix::identity(4));
        let u = u_ad_single(PI);
        assert!((u.get(1, 2) - re(-1.0)).norm() < 1e-15 && (u.get(2, 1) - re(1.0)).norm() < 1e-15);
        assert!(u.get(1, 1).norm() < 1e-15);
        let th = 1.234;
        let u = u_ad_single(th);
        assert!((u.get(1, 1) - re((th / 2.0).cos())).norm() < 1e-15);
        assert_eq!(u.get(1, 1), u.get(2, 2));
        for th in [PI / 5.0, 0.3, 2.5] {
            let rep = verify_decomposition(&u_ad_single_circuit(th).unwrap(), &u_ad_single(th), 1e-12).unwrap();
            assert!(rep.pass, "{rep}");
        }
    }

    #[test]
    fn single_kraus_closed_form() {
        let th = 0.9;
        let (s, co) = (th / 2.0f64).sin_cos();
        let k = extract_kraus(&u_ad_single(th), 2, ENV_INITIAL_SINGLE).unwrap();
        let m0 = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, s, 0.0]).unwrap();
        let m1 = ComplexMatrix::from_real(2, 2, &[co, 0.0, 0.0, 1.0]).unwrap();
        assert!(k.operators[0].approx_eq(&m0, 1e-15));
        assert!(k.operators[1].approx_eq(&m1, 1e-15));
        assert!(k.completeness_deviation().unwrap() < 1e-15);
    }

    #[test]
    fn kraus_of_identity() {
        let k = extract_kraus(&ComplexMatrix::identity(16), 4, 3).unwrap();
        for (e, m) in k.operators.iter().enumerate() {
            let expect = if e == 3 { ComplexMatrix::identity(4) } else { ComplexMatrix::zeros(4, 4) };
            assert_eq!(*m, expect);
        }
        assert!(extract_kraus(&ComplexMatrix::identity(16).scale(re(2.0)), 4, 3).is_err());
        assert!(extract_kraus(&ComplexMatrix::identity(16), 3, 0).is_err());
        assert!(extract_kraus(&ComplexMatrix::identity(16), 4, 4).is_err());
    }

    #[test]
    fn two_qubit_explicit_identities() {
        assert_eq!(u_ad_two_explicit(&Thetas::default()), ComplexMatrix::identity(16));
        let th = Thetas::new(0.7, 0.4, 0.3);
        let u = u_ad_two_explicit(&th);
        assert!(is_unitary(&u, 1e-13));
        let e = ChannelElements::from_unitary(&u);
        let s21 = (th.theta21 / 2.0).sin();
        let c31 = (th.theta31 / 2.0).cos();
        assert!((e.u11_8.norm_sqr() - s21 * s21 * c31 * c31).abs() < 1e-15);
        assert!((e.u8_8.norm_sqr() + e.u11_8.norm_sqr() + e.u14_8.norm_sqr() - 1.0).abs() < 1e-15);
        assert!((e.u12_12.norm_sqr() + e.u15_12.norm_sqr() - 1.0).abs() < 1e-15);
        // Rows and columns outside the rotation planes are untouched.
        let touched = [6, 7, 9, 10, 11, 13, 14];
        for k in 0..16 {
            if !touched.contains(&k) {
                for j in 0..16 {
                    let expect = if j == k { re(1.0) } else { re(0.0) };
                    assert_eq!(u.get(k, j), expect);
                    assert_eq!(u.get(j, k), expect);
                }
            }
        }
    }

    #[test]
    fn factor_circuits_match_explicit_factors() {
        let th = Thetas::new(0.61, 0.47, 0.22);
        for f in CANONICAL_ORDER {
            let circ = factor_circuit(f, &th).unwrap();
            let rep = verify_decomposition(&circ, &factor_explicit(f, &th), 1e-10).unwrap();
            assert!(rep.pass, "{f:?}: {rep}");
        }
    }

    #[test]
    fn two_qubit_circuit_matches_explicit() {
        let zero = u_ad_two_circuit(&Thetas::default()).unwrap();
        assert!(verify_decomposition(&zero, &ComplexMatrix::identity(16), 1e-12).unwrap().pass);
        let th = thetas_two(0.005, 1.0).unwrap();
        let circ = u_ad_two_circuit(&th).unwrap();
        assert_eq!(circ.max_arity(), 2);
        let rep = verify_decomposition(&circ, &u_ad_two_explicit(&th), 1e-9).unwrap();
        assert!(rep.pass, "{rep}");
        assert_eq!(circ.len(), u_ad_two_circuit(&thetas_two(0.04, 1.0).unwrap()).unwrap().len());
    }

    #[test]
    fn two_qubit_kraus_sparsity() {
        let th = thetas_two(0.005, 1.0).unwrap();
        let k = extract_kraus(&u_ad_two_explicit(&th), 4, ENV_INITIAL_TWO).unwrap();
        assert!(k.completeness_deviation().unwrap() < 1e-12);
        assert_eq!(k.operators[0], ComplexMatrix::zeros(4, 4));
        let nonzero = |m: &ComplexMatrix| -> Vec<(usize, usize)> {
            (0..16).map(|i| (i / 4, i % 4)).filter(|&(r, col)| m.get(r, col).norm() > 0.0).collect()
        };
        assert_eq!(nonzero(&k.operators[1]), vec![(3, 1)]);
        assert_eq!(nonzero(&k.operators[2]), vec![(2, 1), (3, 2)]);
        assert_eq!(nonzero(&k.operators[3]), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        let s = gammas_two(0.005, 1.0).unwrap();
        assert!((k.operators[2].get(3, 2).norm_sqr() - s.g32).abs() < 1e-15);
        assert!((k.operators[1].get(3, 1).norm_sqr() - s.g31).abs() < 1e-15);
    }

    #[test]
    fn dark_and_ground_states_are_fixed() {
        let th = thetas_two(0.045, 1.0).unwrap();
        for i in [0, 3] {
            let out = rho_out_two(&basis_rho(i), &th).unwrap();
            assert!(out.approx_eq(&basis_rho(i), 1e-15));
        }
    }

    #[test]
    fn excited_state_populations() {
        let th = thetas_two(0.005, 1.0).unwrap();
        let out = rho_out_two(&basis_rho(1), &th).unwrap();
        let (s21, c21) = (th.theta21 / 2.0).sin_cos();
        let (s31, c31) = (th.theta31 / 2.0).sin_cos();
        let expect = [0.0, c21 * c21 * c31 * c31, s21 * s21 * c31 * c31, s31 * s31];
        for (k, w) in expect.iter().enumerate() {
            assert!((out.get(k, k).re - w).abs() < 1e-15);
        }
        let s = gammas_two(0.005, 1.0).unwrap();
        // Agrees with (0, 1 - G21 - G31, G21, G31) up to the G21 * G31 cross term.
        assert!((out.get(1, 1).re - (1.0 - s.g21 - s.g31)).abs() < 1e-6);
        assert!((out.get(3, 3).re - s.g31).abs() < 1e-15);
    }

    #[test]
    fn rho_out_rejects_invalid_input() {
        let bad = ComplexMatrix::identity(4);
        assert!(matches!(rho_out_two(&bad, &Thetas::default()), Err(Error::InvalidDensityMatrix(_))));
        assert!(rho_out_two(&ComplexMatrix::identity(2), &Thetas::default()).is_err());
    }

    #[test]
    fn single_channel_semigroup_on_diagonal_states() {
        let rho = ComplexMatrix::from_real(2, 2, &[0.8, 0.0, 0.0, 0.2]).unwrap();
        let (t1, t2) = (0.3, 0.55);
        let a = rho_out_single(&rho, theta_single(t1, 1.0).unwrap()).unwrap();
        let ab = rho_out_single(&a, theta_single(t2, 1.0).unwrap()).unwrap();
        let direct = rho_out_single(&rho, theta_single(t1 + t2, 1.0).unwrap()).unwrap();
        assert!(ab.approx_eq(&direct, 1e-12));
    }

    fn random_density(seed: [f64; 32]) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(4, 4, |r, col| C64::new(seed[2 * (4 * r + col)], seed[2 * (4 * r + col) + 1]));
        let rho = a.matmul(&a.adjoint()).unwrap();
        let tr = rho.trace().re;
        rho.scale(re(1.0 / tr)).hermitize()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn closed_form_matches_kraus_sum(seed in prop::array::uniform32(-1.0f64..1.0), t in 0.0f64..0.25) {
            prop_assume!(seed.iter().any(|x| x.abs() > 1e-3));
            let rho = random_density(seed);
            let th = thetas_two(t, 1.0).unwrap();
            let kraus = extract_kraus(&u_ad_two_explicit(&th), 4, ENV_INITIAL_TWO).unwrap();
            let via_kraus = kraus.apply(&rho).unwrap();
            let closed = rho_out_two(&rho, &th).unwrap();
            prop_assert!(closed.max_abs_diff(&via_kraus).unwrap() < 1e-12);
            prop_assert!((closed.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(closed.hermitian_eigenvalues().unwrap()[0] > -1e-10);
            let e = ChannelElements::from_unitary(&u_ad_two_explicit(&th));
            prop_assert!((closed.get(1, 3).norm() - e.u8_8.norm() * rho.get(1, 3).norm()).abs() < 1e-15);
        }

        #[test]
        fn dilation_matches_closed_form(seed in prop::array::uniform32(-1.0f64..1.0), t in 0.0f64..0.25) {
            prop_assume!(seed.iter().any(|x| x.abs() > 1e-3));
            let rho = random_density(seed);
            let th = thetas_two(t, 1.0).unwrap();
            let u = u_ad_two_explicit(&th);
            let joint = kron(&rho, &basis_rho(ENV_INITIAL_TWO)).unwrap();
            let reduced = partial_trace(&u.conjugate(&joint).unwrap(), &[4, 4], &[0]).unwrap();
            prop_assert!(reduced.max_abs_diff(&rho_out_two(&rho, &th).unwrap()).unwrap() < 1e-12);
        }
    }
}
