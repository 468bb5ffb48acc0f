//! Master-equation ground truth: closed-form solutions of the single-qubit and
//! collective two-qubit decay, and a fixed-step RK4 integrator for
//! `d rho/dt = sum_j g_j (L rho L^dag - {L^dag L, rho}/2)`.

use crate::error::{Error, Result};
use crate::spin::total_spin_ops;
use crate::tensor::{re, ComplexMatrix};

/// Default RK4 step.
pub const DEFAULT_DT: f64 = 1e-4;

/// Jump operator with its rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub rate: f64,
    pub op: ComplexMatrix,
}

/// Dissipative Lindblad problem without a Hamiltonian term.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladProblem {
    dim: usize,
    jumps: Vec<Jump>,
    // (L^dag, L^dag L) per jump
    products: Vec<(ComplexMatrix, ComplexMatrix)>,
    rho0: ComplexMatrix,
}

impl LindbladProblem {
    pub fn new(rho0: ComplexMatrix, jumps: Vec<Jump>) -> Result<Self> {
        rho0.validate_density(1e-10)?;
        let dim = rho0.rows();
        for j in &jumps {
            if j.op.rows() != dim || j.op.cols() != dim {
                return Err(Error::Dimension(format!(
                    "{}x{} jump operator for a {dim}-level system",
                    j.op.rows(),
                    j.op.cols()
                )));
            }
            if !j.rate.is_finite() || j.rate < 0.0 {
                return Err(Error::Domain(format!("jump rate must be non-negative, got {}", j.rate)));
            }
        }
        let products = jumps
            .iter()
            .map(|j| {
                let ld = j.op.adjoint();
                let ldl = ld.matmul(&j.op)?;
                Ok((ld, ldl))
            })
            .collect::<Result<_>>()?;
        Ok(Self { dim, jumps, products, rho0 })
    }

    /// Single qubit decaying through `sigma- = |1><0|` at rate `gamma`.
    pub fn single(rho0: ComplexMatrix, gamma: f64) -> Result<Self> {
        Self::new(rho0, vec![Jump { rate: gamma, op: sigma_minus() }])
    }

    /// Two qubits decaying collectively through `J-` at rate `gamma`.
    pub fn collective(rho0: ComplexMatrix, gamma: f64) -> Result<Self> {
        Self::new(rho0, vec![Jump { rate: gamma, op: total_spin_ops().1 }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial(&self) -> &ComplexMatrix {
        &self.rho0
    }

    /// Right-hand side of the master equation at `rho`.
    pub fn generator(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (j, (ld, ldl)) in self.jumps.iter().zip(&self.products) {
            let sandwich = j.op.matmul(rho)?.matmul(ld)?;
            let anti = ldl.matmul(rho)?.add(&rho.matmul(ldl)?)?;
            let term = sandwich.sub(&anti.scale(re(0.5)))?;
            out = out.add(&term.scale(re(j.rate)))?;
        }
        Ok(out)
    }
}

/// `|1><0|`, lowering the excited state `|0>` to the ground state `|1>`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]).expect("2x2")
}

fn check_args(t: f64, gamma: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and non-negative, got {t}")));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::Domain(format!("decay rate must be finite and non-negative, got {gamma}")));
    }
    Ok(())
}

/// Closed-form single-qubit solution.
pub fn analytic_single(rho_in: &ComplexMatrix, t: f64, gamma: f64) -> Result<ComplexMatrix> {
    check_args(t, gamma)?;
    if rho_in.rows() != 2 || rho_in.cols() != 2 {
        return Err(Error::Dimension("single-qubit density matrix must be 2x2".into()));
    }
    let decay = (-gamma * t).exp();
    let coherence = (-gamma * t / 2.0).exp();
    let p00 = rho_in.get(0, 0) * decay;
    let p01 = rho_in.get(0, 1) * coherence;
    Ok(ComplexMatrix::from_fn(2, 2, |r, col| match (r, col) {
        (0, 0) => p00,
        (0, 1) => p01,
        (1, 0) => p01.conj(),
        _ => re(1.0) - p00,
    }))
}

/// Closed-form collective two-qubit solution, check-basis ordering.
pub fn analytic_two(rho_in: &ComplexMatrix, t: f64, gamma: f64) -> Result<ComplexMatrix> {
    check_args(t, gamma)?;
    if rho_in.rows() != 4 || rho_in.cols() != 4 {
        return Err(Error::Dimension("two-qubit density matrix must be 4x4".into()));
    }
    let p = |r: usize, col: usize| rho_in.get(r, col);
    let gt = gamma * t;
    let e1 = (-gt).exp();
    let e2 = (-2.0 * gt).exp();
    let mut out = [[re(0.0); 4]; 4];
    out[0][0] = p(0, 0);
    out[0][1] = p(0, 1) * e1;
    out[0][2] = p(0, 2) * e1;
    out[0][3] = p(0, 3);
    out[1][1] = p(1, 1) * e2;
    out[1][2] = p(1, 2) * e2;
    out[1][3] = p(1, 3) * e1;
    out[2][2] = p(2, 2) * e2 + p(1, 1) * (2.0 * gt * e2);
    out[2][3] = p(2, 3) * e1 + p(1, 2) * (2.0 * e1 * (1.0 - e1));
    out[3][3] = re(1.0) - out[0][0] - out[1][1] - out[2][2];
    Ok(ComplexMatrix::from_fn(4, 4, |r, col| if r <= col { out[r][col] } else { out[col][r].conj() }))
}

/// `<J^z>` for one qubit with `J^z = Z/2`.
pub fn jz_expectation_single(rho: &ComplexMatrix) -> f64 {
    0.5 * (rho.get(0, 0).re - rho.get(1, 1).re)
}

/// `<J^z>` for two qubits in check-basis ordering, `J^z = diag(0, 1, 0, -1)`.
pub fn jz_expectation_two(rho: &ComplexMatrix) -> f64 {
    rho.get(1, 1).re - rho.get(3, 3).re
}

/// Integrates `problem` to `t_end` with classical RK4.
///
/// The step count is `round(t_end / dt)` and the step is adjusted to land on
/// `t_end` exactly. The state is re-Hermitized after every step.
pub fn rk4_integrate(problem: &LindbladProblem, t_end: f64, dt: f64) -> Result<ComplexMatrix> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Domain(format!("end time must be non-negative, got {t_end}")));
    }
    let steps = (t_end / dt).round();
    if steps > 1e9 {
        return Err(Error::Domain(format!("{steps} steps requested")));
    }
    let steps = steps as u64;
    let mut rho = problem.rho0.clone();
    if steps == 0 {
        return Ok(rho);
    }
    let h = t_end / steps as f64;
    let half = re(h / 2.0);
    let check_every = (steps / 64).max(1);
    for step in 1..=steps {
        let k1 = problem.generator(&rho)?;
        let k2 = problem.generator(&rho.add(&k1.scale(half))?)?;
        let k3 = problem.generator(&rho.add(&k2.scale(half))?)?;
        let k4 = problem.generator(&rho.add(&k3.scale(re(h)))?)?;
        let incr = k1.add(&k2.scale(re(2.0)))?.add(&k3.scale(re(2.0)))?.add(&k4)?;
        rho = rho.add(&incr.scale(re(h / 6.0)))?.hermitize();
        if step % check_every == 0 || step == steps {
            check_state(&rho, step as f64 * h)?;
        }
    }
    Ok(rho)
}

fn check_state(rho: &ComplexMatrix, t: f64) -> Result<()> {
    if rho.entries().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integration(format!("non-finite state at t = {t}")));
    }
    let drift = (rho.trace() - re(1.0)).norm();
    if drift > 1e-10 {
        return Err(Error::Integration(format!("trace drift {drift:e} at t = {t}")));
    }
    let min = rho.hermitian_eigenvalues()?[0];
    if min < -1e-6 {
        return Err(Error::Integration(format!("eigenvalue {min:e} below -1e-6 at t = {t}")));
    }
    Ok(())
}
