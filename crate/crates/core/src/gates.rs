//! Gate inventory, controlled-unitary embedding, multi-controlled
//! decompositions into one- and two-qubit gates, and a product verifier.
//!
//! A [`Circuit`] lists gates in application order. Its matrix is therefore
//! the reversed product `G_k ... G_2 G_1`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{c, re, unitarity_deviation, ComplexMatrix, StateVector, C64};

/// Unitarity tolerance applied to every gate matrix entering a circuit.
pub const GATE_UNITARY_TOL: f64 = 1e-10;

/// Named one-qubit gates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    I,
    X,
    Y,
    Z,
    H,
    S,
    T,
    P(f64),
    Rx(f64),
    Ry(f64),
    Rz(f64),
    SqrtX,
    FourthRootX,
}

impl Gate {
    /// Parses a gate name such as `"Ry"` or `"X^1/2"` with its angle list.
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let angle = || -> Result<f64> {
            match params {
                [a] if a.is_finite() => Ok(*a),
                [_] => Err(Error::Domain(format!("non-finite angle for `{name}`"))),
                _ => Err(Error::UnsupportedGate(format!("{name} expects exactly one angle"))),
            }
        };
        let none = |g: Gate| -> Result<Gate> {
            if params.is_empty() {
                Ok(g)
            } else {
                Err(Error::UnsupportedGate(format!("{name} takes no parameters")))
            }
        };
        match name {
            "I" => none(Gate::I),
            "X" => none(Gate::X),
            "Y" => none(Gate::Y),
            "Z" => none(Gate::Z),
            "H" => none(Gate::H),
            "S" => none(Gate::S),
            "T" => none(Gate::T),
            "X^1/2" | "X^{1/2}" | "SX" => none(Gate::SqrtX),
            "X^1/4" | "X^{1/4}" => none(Gate::FourthRootX),
            "P" => Ok(Gate::P(angle()?)),
            "Rx" => Ok(Gate::Rx(angle()?)),
            "Ry" => Ok(Gate::Ry(angle()?)),
            "Rz" => Ok(Gate::Rz(angle()?)),
            other => Err(Error::UnsupportedGate(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::I => "I",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::T => "T",
            Gate::P(_) => "P",
            Gate::Rx(_) => "Rx",
            Gate::Ry(_) => "Ry",
            Gate::Rz(_) => "Rz",
            Gate::SqrtX => "X^1/2",
            Gate::FourthRootX => "X^1/4",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::P(a) | Gate::Rx(a) | Gate::Ry(a) | Gate::Rz(a) => vec![a],
            _ => Vec::new(),
        }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let m = |e: [C64; 4]| ComplexMatrix::from_fn(2, 2, |r, col| e[2 * r + col]);
        let (o, z, i) = (re(1.0), re(0.0), c(0.0, 1.0));
        match *self {
            Gate::I => ComplexMatrix::identity(2),
            Gate::X => m([z, o, o, z]),
            Gate::Y => m([z, -i, i, z]),
            Gate::Z => m([o, z, z, -o]),
            Gate::H => m([o, o, o, -o]).scale(re(FRAC_1_SQRT_2)),
            Gate::S => Gate::P(PI / 2.0).matrix(),
            Gate::T => Gate::P(PI / 4.0).matrix(),
            Gate::P(phi) => m([o, z, z, C64::from_polar(1.0, phi)]),
            Gate::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                m([re(co), c(0.0, -s), c(0.0, -s), re(co)])
            }
            Gate::Ry(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                m([re(co), re(-s), re(s), re(co)])
            }
            Gate::Rz(t) => m([C64::from_polar(1.0, -t / 2.0), z, z, C64::from_polar(1.0, t / 2.0)]),
            Gate::SqrtX => x_root(1),
            Gate::FourthRootX => x_root(2),
        }
    }
}

/// `X^(1/2^k) = H P(pi/2^k) H`; `k = 0` gives `X` itself.
fn x_root(k: u32) -> ComplexMatrix {
    let h = Gate::H.matrix();
    let p = Gate::P(PI / f64::from(1u32 << k)).matrix();
    h.matmul(&p).and_then(|hp| hp.matmul(&h)).expect("2x2 products")
}

/// Looks up a one-qubit gate by name.
pub fn single_gate(name: &str, params: &[f64]) -> Result<ComplexMatrix> {
    Gate::parse(name, params).map(|g| g.matrix())
}

/// Two-qubit SWAP in the `|q0 q1>` basis.
pub fn swap_matrix() -> ComplexMatrix {
    ComplexMatrix::transposition(4, 1, 2)
}

/// One gate application: `matrix` acts on `targets` when every wire in
/// `controls` reads 1. The first target is the most significant index of
/// `matrix`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateSpec {
    pub name: String,
    #[serde(skip)]
    pub matrix: ComplexMatrix,
    pub controls: Vec<usize>,
    pub targets: Vec<usize>,
    pub params: Vec<f64>,
}

impl GateSpec {
    pub fn new(
        name: impl Into<String>,
        matrix: ComplexMatrix,
        controls: Vec<usize>,
        targets: Vec<usize>,
        params: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        check_wire_sets(&controls, &targets)?;
        let dim = 1usize << targets.len();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Dimension(format!(
                "gate `{name}` on {} target(s) needs a {dim}x{dim} matrix, got {}x{}",
                targets.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { name, matrix, controls, targets, params })
    }

    pub fn single(gate: Gate, target: usize) -> Self {
        Self::new(gate.name(), gate.matrix(), vec![], vec![target], gate.params()).expect("valid one-qubit gate")
    }

    /// Singly-controlled one-qubit gate. Fails on coincident wires.
    pub fn controlled(gate: Gate, control: usize, target: usize) -> Result<Self> {
        Self::new(gate.name(), gate.matrix(), vec![control], vec![target], gate.params())
    }

    pub fn swap(a: usize, b: usize) -> Result<Self> {
        Self::new("SWAP", swap_matrix(), vec![], vec![a, b], vec![])
    }

    pub fn adjoint(&self) -> Self {
        let name = match self.name.strip_suffix('†') {
            Some(base) => base.to_string(),
            None => format!("{}†", self.name),
        };
        Self { name, matrix: self.matrix.adjoint(), ..self.clone() }
    }

    /// Number of wires touched (controls plus targets).
    pub fn arity(&self) -> usize {
        self.controls.len() + self.targets.len()
    }

    fn max_wire(&self) -> usize {
        self.controls.iter().chain(&self.targets).copied().max().unwrap_or(0)
    }

    /// Full `2^n x 2^n` matrix of this gate on an `n_wires` register.
    pub fn embed(&self, n_wires: usize) -> Result<ComplexMatrix> {
        controlled_unitary(n_wires, &self.controls, &self.targets, &self.matrix)
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.controls.len() {
            0 => String::new(),
            1 => "C".to_string(),
            k => format!("C{k}"),
        };
        let params: Vec<String> = self.params.iter().map(|p| format!("{p:.6}")).collect();
        let wires = |w: &[usize]| w.iter().map(|q| format!("Q{q}")).collect::<String>();
        write!(f, "{prefix}{}", self.name)?;
        if !params.is_empty() {
            write!(f, "({})", params.join(","))?;
        }
        if self.controls.is_empty() {
            write!(f, "[{}]", wires(&self.targets))
        } else {
            write!(f, "[{};{}]", wires(&self.controls), wires(&self.targets))
        }
    }
}

fn check_wire_sets(controls: &[usize], targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Dimension("a gate needs at least one target".into()));
    }
    let mut all: Vec<usize> = controls.iter().chain(targets).copied().collect();
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::CoincidentWires(format!("controls {controls:?}, targets {targets:?}")));
    }
    Ok(())
}

/// Embeds `u` on `targets`, conditioned on all `controls` reading 1, into an
/// `n_wires` register.
pub fn controlled_unitary(
    n_wires: usize,
    controls: &[usize],
    targets: &[usize],
    u: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_wire_sets(controls, targets)?;
    if n_wires == 0 || n_wires > 12 {
        return Err(Error::Dimension(format!("unsupported register size {n_wires}")));
    }
    if let Some(&wire) = controls.iter().chain(targets).find(|&&w| w >= n_wires) {
        return Err(Error::WireOutOfRange { wire, n_wires });
    }
    let k = targets.len();
    if u.rows() != 1 << k || u.cols() != 1 << k {
        return Err(Error::Dimension(format!("{}x{} matrix on {k} target wire(s)", u.rows(), u.cols())));
    }
    let dev = unitarity_deviation(u).unwrap_or(f64::INFINITY);
    if dev > GATE_UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let dim = 1usize << n_wires;
    let bit = |w: usize| 1usize << (n_wires - 1 - w);
    let control_mask: usize = controls.iter().map(|&w| bit(w)).sum();
    let target_mask: usize = targets.iter().map(|&w| bit(w)).sum();
    let local = |idx: usize| -> usize { targets.iter().fold(0, |acc, &w| (acc << 1) | usize::from(idx & bit(w) != 0)) };
    Ok(ComplexMatrix::from_fn(dim, dim, |r, col| {
        if col & control_mask != control_mask {
            return if r == col { re(1.0) } else { re(0.0) };
        }
        if r & !target_mask != col & !target_mask {
            return re(0.0);
        }
        u.get(local(r), local(col))
    }))
}

/// Applies one gate to a state in place without building the full matrix.
fn apply_local(amps: &mut [C64], n_wires: usize, gate: &GateSpec) {
    let bit = |w: usize| 1usize << (n_wires - 1 - w);
    let control_mask: usize = gate.controls.iter().map(|&w| bit(w)).sum();
    let target_bits: Vec<usize> = gate.targets.iter().map(|&w| bit(w)).collect();
    let target_mask: usize = target_bits.iter().sum();
    let k = target_bits.len();
    let offset = |local: usize| -> usize {
        target_bits.iter().enumerate().filter(|(pos, _)| local & (1 << (k - 1 - pos)) != 0).map(|(_, b)| b).sum()
    };
    let offsets: Vec<usize> = (0..1 << k).map(offset).collect();
    let mut gathered = vec![re(0.0); 1 << k];
    for base in 0..amps.len() {
        if base & target_mask != 0 || base & control_mask != control_mask {
            continue;
        }
        for (g, &o) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            amps[base + o] = (0..1 << k).map(|col| gate.matrix.get(r, col) * gathered[col]).sum();
        }
    }
}

/// Ordered gate list on a fixed register.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Circuit {
    n_wires: usize,
    gates: Vec<GateSpec>,
}

impl Circuit {
    pub fn new(n_wires: usize) -> Self {
        Self { n_wires, gates: Vec::new() }
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: GateSpec) -> Result<()> {
        if gate.max_wire() >= self.n_wires {
            return Err(Error::WireOutOfRange { wire: gate.max_wire(), n_wires: self.n_wires });
        }
        let dev = unitarity_deviation(&gate.matrix).unwrap_or(f64::INFINITY);
        if dev > GATE_UNITARY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other` after the gates already present.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_wires != self.n_wires {
            return Err(Error::Dimension(format!(
                "cannot append a {}-wire circuit to a {}-wire circuit",
                other.n_wires, self.n_wires
            )));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// Inverse circuit: reversed order, each gate adjointed.
    pub fn adjoint(&self) -> Self {
        Self { n_wires: self.n_wires, gates: self.gates.iter().rev().map(GateSpec::adjoint).collect() }
    }

    /// Matrix of the whole circuit, `G_k ... G_1`.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let mut acc = ComplexMatrix::identity(1 << self.n_wires);
        for g in &self.gates {
            acc = g.embed(self.n_wires)?.matmul(&acc)?;
        }
        Ok(acc)
    }

    /// Runs the circuit on a state, gate by gate.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != 1 << self.n_wires {
            return Err(Error::Dimension(format!(
                "{}-dimensional state on a {}-wire circuit",
                state.dim(),
                self.n_wires
            )));
        }
        let mut amps = state.amplitudes().to_vec();
        for g in &self.gates {
            apply_local(&mut amps, self.n_wires, g);
        }
        StateVector::normalized(amps)
    }

    /// Largest number of wires touched by any single gate.
    pub fn max_arity(&self) -> usize {
        self.gates.iter().map(GateSpec::arity).max().unwrap_or(0)
    }

    /// Gate counts keyed by arity: index 1 holds one-qubit gates, and so on.
    pub fn arity_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.max_arity() + 1];
        for g in &self.gates {
            hist[g.arity()] += 1;
        }
        hist
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.gates.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join(" -> "))
    }
}

/// Families of one-qubit unitaries closed under square roots, so that a
/// k-controlled `U` can be expanded recursively through `sqrt(U)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Root {
    /// `Ry(angle)`; its root is `Ry(angle/2)`.
    Ry(f64),
    /// `X^(1/2^k)`; its root is `X^(1/2^(k+1))`.
    XPow(u32),
}

impl Root {
    fn sqrt(self) -> Self {
        match self {
            Root::Ry(a) => Root::Ry(a / 2.0),
            Root::XPow(k) => Root::XPow(k + 1),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Root::Ry(a) => Gate::Ry(a).matrix(),
            Root::XPow(k) => x_root(k),
        }
    }

    fn controlled(self, control: usize, target: usize, dagger: bool) -> Result<GateSpec> {
        let spec = match self {
            Root::Ry(a) => GateSpec::controlled(Gate::Ry(if dagger { -a } else { a }), control, target)?,
            Root::XPow(k) => {
                let name = if k == 0 { "X".to_string() } else { format!("X^1/{}", 1u64 << k) };
                let g = GateSpec::new(name, x_root(k), vec![control], vec![target], vec![])?;
                if dagger {
                    g.adjoint()
                } else {
                    g
                }
            }
        };
        Ok(spec)
    }
}

/// Expands `C^k U[controls; target]` into singly-controlled gates.
///
/// With `s = controls[0]`, `rest = controls[1..]` and `V = sqrt(U)`:
/// `CV[s;t], C^{k-1}X[rest;s], CV†[s;t], C^{k-1}X[rest;s], C^{k-1}V[rest;t]`.
/// For two controls this is the usual five-gate pattern.
pub fn multi_controlled(u: Root, controls: &[usize], target: usize, n_wires: usize) -> Result<Circuit> {
    check_wire_sets(controls, &[target])?;
    let mut circ = Circuit::new(n_wires);
    match controls {
        [] => {
            let g = GateSpec::new(root_name(u), u.matrix(), vec![], vec![target], root_params(u))?;
            circ.push(g)?;
        }
        [only] => circ.push(u.controlled(*only, target, false)?)?,
        [s, rest @ ..] => {
            let v = u.sqrt();
            let flip = multi_controlled(Root::XPow(0), rest, *s, n_wires)?;
            circ.push(v.controlled(*s, target, false)?)?;
            circ.append(&flip)?;
            circ.push(v.controlled(*s, target, true)?)?;
            circ.append(&flip)?;
            circ.append(&multi_controlled(v, rest, target, n_wires)?)?;
        }
    }
    Ok(circ)
}

fn root_name(u: Root) -> String {
    match u {
        Root::Ry(_) => "Ry".into(),
        Root::XPow(0) => "X".into(),
        Root::XPow(k) => format!("X^1/{}", 1u64 << k),
    }
}

fn root_params(u: Root) -> Vec<f64> {
    match u {
        Root::Ry(a) => vec![a],
        Root::XPow(_) => vec![],
    }
}

/// Five-gate expansion of a doubly-controlled `Ry(angle)`.
pub fn decompose_c2ry(angle: f64, controls: (usize, usize), target: usize, n_wires: usize) -> Result<Circuit> {
    multi_controlled(Root::Ry(angle), &[controls.0, controls.1], target, n_wires)
}

/// Expansion of a triply-controlled `Ry(angle)`; the inner Toffolis and the
/// trailing `C2Ry(angle/2)` are themselves expanded.
pub fn decompose_c3ry(angle: f64, controls: (usize, usize, usize), target: usize, n_wires: usize) -> Result<Circuit> {
    multi_controlled(Root::Ry(angle), &[controls.0, controls.1, controls.2], target, n_wires)
}

/// Interexchange pairs supported by [`build_tau`], 1-based.
pub const TAU_PAIRS: [(usize, usize); 6] = [(15, 16), (14, 16), (12, 16), (10, 12), (12, 15), (11, 16)];

/// Direct 16x16 transposition of basis states `i` and `j` (1-based).
pub fn tau_matrix(i: usize, j: usize) -> Result<ComplexMatrix> {
    if i == 0 || j == 0 || i > 16 || j > 16 || i == j {
        return Err(Error::UnsupportedPair(i, j));
    }
    Ok(ComplexMatrix::transposition(16, i - 1, j - 1))
}

fn c3x(controls: [usize; 3], target: usize) -> Result<Circuit> {
    multi_controlled(Root::XPow(0), &controls, target, 4)
}

fn c2x(controls: [usize; 2], target: usize) -> Result<Circuit> {
    multi_controlled(Root::XPow(0), &controls, target, 4)
}

fn chain(parts: &[&Circuit]) -> Result<Circuit> {
    let mut out = Circuit::new(4);
    for p in parts {
        out.append(p)?;
    }
    Ok(out)
}

/// Gate-level circuit for the interexchange operator swapping basis states
/// `i` and `j` (1-based) of a 4-wire register.
pub fn build_tau(i: usize, j: usize) -> Result<Circuit> {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (15, 16) => c3x([2, 0, 1], 3),
        (14, 16) => c3x([3, 0, 1], 2),
        (12, 16) => c3x([0, 2, 3], 1),
        (10, 12) => chain(&[&build_tau(14, 16)?, &c2x([0, 3], 2)?]),
        (12, 15) => {
            let t12 = build_tau(12, 16)?;
            chain(&[&t12, &build_tau(15, 16)?, &t12])
        }
        (11, 16) => {
            let t15 = build_tau(15, 16)?;
            chain(&[&t15, &build_tau(12, 16)?, &c2x([0, 2], 1)?, &t15])
        }
        _ => Err(Error::UnsupportedPair(i, j)),
    }
}

/// Outcome of comparing a circuit (or matrix) against a target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub label: String,
    pub max_abs_diff: f64,
    pub tol: f64,
    pub pass: bool,
    /// Row and column of the largest deviation.
    pub worst_entry: Option<(usize, usize)>,
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {} max|diff|={:.3e} tol={:.0e}", self.label, self.max_abs_diff, self.tol)?;
        if let (false, Some((r, col))) = (self.pass, self.worst_entry) {
            write!(f, " worst=({r},{col})")?;
        }
        Ok(())
    }
}

/// Compares two matrices elementwise.
pub fn verify_matrices(
    label: impl Into<String>,
    actual: &ComplexMatrix,
    target: &ComplexMatrix,
    tol: f64,
) -> Result<VerificationReport> {
    let worst = actual.worst_entry(target)?;
    let max_abs_diff = worst.map_or(0.0, |w| w.2);
    Ok(VerificationReport {
        label: label.into(),
        max_abs_diff,
        tol,
        pass: max_abs_diff <= tol,
        worst_entry: worst.map(|(r, col, _)| (r, col)),
    })
}

/// Multiplies out `circuit` and reports its Chebyshev distance to `target`.
pub fn verify_decomposition(circuit: &Circuit, target: &ComplexMatrix, tol: f64) -> Result<VerificationReport> {
    let dim = 1usize << circuit.n_wires();
    if target.rows() != dim || target.cols() != dim {
        return Err(Error::Dimension(format!(
            "{}-wire circuit against a {}x{} target",
            circuit.n_wires(),
            target.rows(),
            target.cols()
        )));
    }
    verify_matrices(format!("{}-gate circuit", circuit.len()), &circuit.unitary()?, target, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::is_unitary;
    use proptest::prelude::*;

    fn cx_printed_standard() -> ComplexMatrix {
        ComplexMatrix::from_real(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]).unwrap()
    }

    #[test]
    fn ry_zero_is_identity() {
        assert_eq!(single_gate("Ry", &[0.0]).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn hadamard_makes_plus_state() {
        let out = Gate::H.matrix().apply(&StateVector::basis(2, 0).unwrap()).unwrap();
        let plus = StateVector::new(vec![re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]).unwrap();
        assert!(out.max_abs_diff(&plus) < 1e-15);
    }

    #[test]
    fn x_roots_square_correctly() {
        let sx = Gate::SqrtX.matrix();
        assert!(sx.matmul(&sx).unwrap().approx_eq(&Gate::X.matrix(), 1e-12));
        let qx = Gate::FourthRootX.matrix();
        assert!(qx.matmul(&qx).unwrap().approx_eq(&sx, 1e-12));
        // H P(pi/2) H has the closed form (1/2)[[1+i, 1-i], [1-i, 1+i]].
        let expect = ComplexMatrix::from_fn(2, 2, |r, col| if r == col { c(0.5, 0.5) } else { c(0.5, -0.5) });
        assert!(sx.approx_eq(&expect, 1e-15));
    }

    #[test]
    fn named_phase_gates() {
        assert!(Gate::S.matrix().approx_eq(&ComplexMatrix::diag(&[re(1.0), c(0.0, 1.0)]), 1e-15));
        let t = Gate::T.matrix();
        assert!((t.get(1, 1) - c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
        let rz = Gate::Rz(PI).matrix();
        assert!(rz.approx_eq(&ComplexMatrix::diag(&[c(0.0, -1.0), c(0.0, 1.0)]), 1e-15));
        let rx = Gate::Rx(PI).matrix();
        assert!(rx.approx_eq(&Gate::X.matrix().scale(c(0.0, -1.0)), 1e-15));
    }

    #[test]
    fn every_named_gate_is_unitary() {
        for name in ["I", "X", "Y", "Z", "H", "S", "T", "X^1/2", "X^1/4"] {
            assert!(is_unitary(&single_gate(name, &[]).unwrap(), 1e-12), "{name}");
        }
        for name in ["P", "Rx", "Ry", "Rz"] {
            assert!(is_unitary(&single_gate(name, &[0.731]).unwrap(), 1e-12), "{name}");
        }
    }

    #[test]
    fn unknown_gates_and_bad_params_are_rejected() {
        assert!(matches!(single_gate("Q", &[]), Err(Error::UnsupportedGate(_))));
        assert!(single_gate("Ry", &[]).is_err());
        assert!(single_gate("X", &[1.0]).is_err());
        assert!(single_gate("Rz", &[f64::NAN]).is_err());
    }

    #[test]
    fn cnot_embedding() {
        let cx = controlled_unitary(2, &[0], &[1], &Gate::X.matrix()).unwrap();
        assert_eq!(cx, cx_printed_standard());
        let reversed = controlled_unitary(2, &[1], &[0], &Gate::X.matrix()).unwrap();
        let expect =
            ComplexMatrix::from_real(4, 4, &[1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0.]).unwrap();
        assert_eq!(reversed, expect);
        let ci = controlled_unitary(2, &[0], &[1], &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(ci, ComplexMatrix::identity(4));
    }

    #[test]
    fn triple_controlled_x_swaps_last_two_states() {
        let m = controlled_unitary(4, &[0, 1, 2], &[3], &Gate::X.matrix()).unwrap();
        assert_eq!(m, ComplexMatrix::transposition(16, 14, 15));
    }

    #[test]
    fn control_free_embedding_is_kron() {
        let h = Gate::H.matrix();
        let i2 = ComplexMatrix::identity(2);
        let m = controlled_unitary(3, &[], &[1], &h).unwrap();
        let expect = crate::tensor::kron_all([&i2, &h, &i2]).unwrap();
        assert!(m.approx_eq(&expect, 1e-15));
        let sw = controlled_unitary(2, &[], &[0, 1], &swap_matrix()).unwrap();
        assert_eq!(sw, swap_matrix());
        let sw_rev = controlled_unitary(2, &[], &[1, 0], &swap_matrix()).unwrap();
        assert_eq!(sw_rev, swap_matrix());
    }

    #[test]
    fn controlled_unitary_errors() {
        let x = Gate::X.matrix();
        assert!(matches!(controlled_unitary(2, &[2], &[0], &x), Err(Error::WireOutOfRange { wire: 2, .. })));
        assert!(matches!(controlled_unitary(2, &[0], &[0], &x), Err(Error::CoincidentWires(_))));
        let bad = ComplexMatrix::identity(2).scale(re(2.0));
        assert!(matches!(controlled_unitary(2, &[0], &[1], &bad), Err(Error::NotUnitary { .. })));
        assert!(controlled_unitary(2, &[0], &[1], &swap_matrix()).is_err());
    }

    #[test]
    fn c2ry_zero_angle_is_identity() {
        let circ = decompose_c2ry(0.0, (1, 2), 0, 4).unwrap();
        assert!(verify_decomposition(&circ, &ComplexMatrix::identity(16), 1e-12).unwrap().pass);
    }

    #[test]
    fn c2ry_pi_matches_direct() {
        let circ = decompose_c2ry(PI, (1, 2), 0, 4).unwrap();
        assert_eq!(circ.len(), 5);
        assert_eq!(circ.max_arity(), 2);
        let direct = controlled_unitary(4, &[1, 2], &[0], &Gate::Ry(PI).matrix()).unwrap();
        assert!(verify_decomposition(&circ, &direct, 1e-10).unwrap().pass);
    }

    #[test]
    fn c2ry_gate_layout() {
        let circ = decompose_c2ry(0.8, (1, 2), 0, 4).unwrap();
        let labels: Vec<String> = circ.gates().iter().map(|g| g.to_string()).collect();
        assert_eq!(
            labels,
            ["CRy(0.400000)[Q1;Q0]", "CX[Q2;Q1]", "CRy(-0.400000)[Q1;Q0]", "CX[Q2;Q1]", "CRy(0.400000)[Q2;Q0]"]
        );
    }

    #[test]
    fn c3ry_matches_direct() {
        for angle in [0.0, PI / 3.0, 2.9] {
            let circ = decompose_c3ry(angle, (1, 2, 3), 0, 4).unwrap();
            assert_eq!(circ.max_arity(), 2);
            let direct = controlled_unitary(4, &[1, 2, 3], &[0], &Gate::Ry(angle).matrix()).unwrap();
            let rep = verify_decomposition(&circ, &direct, 1e-10).unwrap();
            assert!(rep.pass, "{rep}");
        }
    }

    #[test]
    fn c2x_fourth_root_ladder_layout() {
        // Controls listed as (Q1, Q0) reproduce the ladder that starts on Q1.
        let circ = multi_controlled(Root::XPow(1), &[1, 0], 3, 4).unwrap();
        let labels: Vec<String> = circ.gates().iter().map(|g| g.to_string()).collect();
        assert_eq!(labels, ["CX^1/4[Q1;Q3]", "CX[Q0;Q1]", "CX^1/4†[Q1;Q3]", "CX[Q0;Q1]", "CX^1/4[Q0;Q3]"]);
        let direct = controlled_unitary(4, &[0, 1], &[3], &Gate::SqrtX.matrix()).unwrap();
        assert!(verify_decomposition(&circ, &direct, 1e-12).unwrap().pass);
    }

    #[test]
    fn tau_circuits_are_their_transpositions() {
        for (i, j) in TAU_PAIRS {
            let circ = build_tau(i, j).unwrap();
            assert_eq!(circ.max_arity(), 2);
            let u = circ.unitary().unwrap();
            let rep = verify_matrices(format!("tau{i},{j}"), &u, &tau_matrix(i, j).unwrap(), 1e-10).unwrap();
            assert!(rep.pass, "{rep}");
            assert!(u.matmul(&u).unwrap().approx_eq(&ComplexMatrix::identity(16), 1e-10));
        }
    }

    #[test]
    fn tau_12_15_has_two_off_diagonal_ones() {
        let u = build_tau(12, 15).unwrap().unitary().unwrap();
        for r in 0..16 {
            for col in 0..16 {
                let expect = match (r, col) {
                    (11, 14) | (14, 11) => 1.0,
                    (r, col) if r == col && r != 11 && r != 14 => 1.0,
                    _ => 0.0,
                };
                assert!((u.get(r, col) - re(expect)).norm() < 1e-10, "({r},{col})");
            }
        }
    }

    #[test]
    fn tau_11_16_exchanges_1010_and_1111() {
        let circ = build_tau(11, 16).unwrap();
        let out = circ.apply(&StateVector::basis(16, 0b1010).unwrap()).unwrap();
        assert!(out.max_abs_diff(&StateVector::basis(16, 0b1111).unwrap()) < 1e-10);
    }

    #[test]
    fn tau_rejects_other_pairs() {
        assert!(matches!(build_tau(1, 2), Err(Error::UnsupportedPair(1, 2))));
        assert_eq!(build_tau(16, 15).unwrap(), build_tau(15, 16).unwrap());
    }

    #[test]
    fn verify_trivial_cases() {
        let empty = Circuit::new(2);
        assert!(verify_decomposition(&empty, &ComplexMatrix::identity(4), 0.0).unwrap().pass);
        let mut cx = Circuit::new(2);
        cx.push(GateSpec::controlled(Gate::X, 0, 1).unwrap()).unwrap();
        let rep = verify_decomposition(&cx, &ComplexMatrix::identity(4), 1e-10).unwrap();
        assert!(!rep.pass);
        assert!((rep.max_abs_diff - 1.0).abs() < 1e-15);
        assert!(rep.worst_entry.is_some());
        assert!(verify_decomposition(&cx, &ComplexMatrix::identity(8), 1e-10).is_err());
    }

    #[test]
    fn circuit_push_validates_wires() {
        let mut circ = Circuit::new(2);
        assert!(circ.push(GateSpec::single(Gate::X, 2)).is_err());
        assert!(GateSpec::controlled(Gate::X, 1, 1).is_err());
    }

    #[test]
    fn adjoint_circuit_inverts() {
        let circ = decompose_c3ry(1.1, (0, 1, 2), 3, 4).unwrap();
        let prod = circ.adjoint().unitary().unwrap().matmul(&circ.unitary().unwrap()).unwrap();
        assert!(prod.approx_eq(&ComplexMatrix::identity(16), 1e-12));
        assert_eq!(GateSpec::single(Gate::H, 0).adjoint().adjoint().name, "H");
    }

    proptest! {
        #[test]
        fn state_application_matches_matrix_product(angle in -6.3f64..6.3, bits in 0usize..16) {
            let circ = decompose_c3ry(angle, (0, 2, 3), 1, 4).unwrap();
            let psi = StateVector::basis(16, bits).unwrap();
            let by_gates = circ.apply(&psi).unwrap();
            let by_matrix = circ.unitary().unwrap().apply(&psi).unwrap();
            prop_assert!(by_gates.max_abs_diff(&by_matrix) < 1e-12);
        }

        #[test]
        fn c2ry_decomposition_holds(angle in 0.0f64..PI, perm in 0usize..6) {
            let wires = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]][perm];
            let circ = decompose_c2ry(angle, (wires[0], wires[1]), wires[2], 3).unwrap();
            let direct = controlled_unitary(3, &wires[..2], &[wires[2]], &Gate::Ry(angle).matrix()).unwrap();
            prop_assert!(verify_decomposition(&circ, &direct, 1e-10).unwrap().pass);
        }

        #[test]
        fn circuits_are_unitary(angle in -PI..PI) {
            let u = decompose_c3ry(angle, (3, 1, 0), 2, 4).unwrap().unitary().unwrap();
            prop_assert!(is_unitary(&u, 1e-10));
        }
    }
}
