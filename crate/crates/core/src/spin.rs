//! Two-qubit total-spin bookkeeping.
//!
//! Two bases are in play. The physical one diagonalizes `J^2` and `J^z`
//! (singlet plus triplet). The circuits and samplers instead work in the
//! computational basis with the labels `|00> = 0̌`, `|01> = 1̌`, `|10> = 2̌`,
//! `|11> = 3̌`, on which the spin operators are represented with the same
//! matrices as in the physical basis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{re, ComplexMatrix, StateVector};

/// `|j, m>` with both quantum numbers stored doubled, so half-integers stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinLabel {
    pub twice_j: u32,
    pub twice_m: i32,
}

impl SpinLabel {
    pub fn new(twice_j: u32, twice_m: i32) -> Result<Self> {
        let j = twice_j as i32;
        if twice_m.abs() > j || (j - twice_m) % 2 != 0 {
            return Err(Error::Domain(format!("m = {}/2 is not allowed for j = {}/2", twice_m, twice_j)));
        }
        Ok(Self { twice_j, twice_m })
    }

    pub fn j(&self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    pub fn m(&self) -> f64 {
        f64::from(self.twice_m) / 2.0
    }
}

/// Labels of the two-qubit check basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckLabel {
    Zero,
    One,
    Two,
    Three,
}

impl CheckLabel {
    pub const ALL: [CheckLabel; 4] = [CheckLabel::Zero, CheckLabel::One, CheckLabel::Two, CheckLabel::Three];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Spin quantum numbers carried by this label.
    pub fn spin(self) -> SpinLabel {
        let (twice_j, twice_m) = match self {
            CheckLabel::Zero => (0, 0),
            CheckLabel::One => (2, 2),
            CheckLabel::Two => (2, 0),
            CheckLabel::Three => (2, -2),
        };
        SpinLabel { twice_j, twice_m }
    }
}

impl fmt::Display for CheckLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\u{30c}", self.index())
    }
}

/// Computational index `|n0 n1>` (0..3) to its check label. Pure relabeling.
pub fn relabel(index: usize) -> Result<CheckLabel> {
    CheckLabel::ALL.get(index).copied().ok_or_else(|| Error::Dimension(format!("two-qubit index {index} out of range")))
}

/// Inverse of [`relabel`].
pub fn unrelabel(label: CheckLabel) -> usize {
    label.index()
}

/// `(J+, J-, Jz)` in check-basis ordering.
pub fn total_spin_ops() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let r2 = std::f64::consts::SQRT_2;
    let jminus = ComplexMatrix::from_fn(4, 4, |r, col| match (r, col) {
        (2, 1) | (3, 2) => re(r2),
        _ => re(0.0),
    });
    let jplus = jminus.adjoint();
    let jz = ComplexMatrix::diag(&[re(0.0), re(1.0), re(0.0), re(-1.0)]);
    (jplus, jminus, jz)
}

/// `J^2 = J- J+ + Jz^2 + Jz` in check-basis ordering.
pub fn total_spin_squared() -> ComplexMatrix {
    let (jp, jm, jz) = total_spin_ops();
    let jz2 = jz.matmul(&jz).expect("4x4");
    jm.matmul(&jp).expect("4x4").add(&jz2).and_then(|a| a.add(&jz)).expect("4x4")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// Bell state as amplitudes over `|00>, |01>, |10>, |11>`.
pub fn bell_state(kind: BellKind) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let a = match kind {
        BellKind::PhiPlus => [h, 0.0, 0.0, h],
        BellKind::PhiMinus => [h, 0.0, 0.0, -h],
        BellKind::PsiPlus => [0.0, h, h, 0.0],
        BellKind::PsiMinus => [0.0, h, -h, 0.0],
    };
    StateVector::new(a.iter().copied().map(re).collect()).expect("unit norm")
}

/// The two maps between the tensor-product basis and the spin labels.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisMap {
    /// Columns are the physical spin states `0̌..3̌` in tensor coordinates.
    pub physical_change: ComplexMatrix,
    /// Check label assigned to each computational index.
    pub relabeling: [CheckLabel; 4],
}

impl Default for BasisMap {
    fn default() -> Self {
        let h = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let cols = [
            [0.0, h, -h, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, h, h, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        Self { physical_change: ComplexMatrix::from_fn(4, 4, |r, col| re(cols[col][r])), relabeling: CheckLabel::ALL }
    }
}

impl BasisMap {
    /// Expresses a tensor-basis operator in physical spin coordinates.
    pub fn to_spin_coordinates(&self, op: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.physical_change.adjoint().matmul(op)?.matmul(&self.physical_change)
    }

    /// Spin coordinates of a tensor-basis state.
    pub fn state_to_spin(&self, state: &StateVector) -> Result<StateVector> {
        self.physical_change.adjoint().apply(state)
    }
}

/// Collective spin operators built qubit by qubit in the tensor basis, with
/// `|0>` the excited single-qubit state: `(J+, J-, Jz)`.
pub fn tensor_spin_ops() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let i2 = ComplexMatrix::identity(2);
    let lower = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]).expect("2x2");
    let half_z = ComplexMatrix::diag(&[re(0.5), re(-0.5)]);
    let collect = |op: &ComplexMatrix| op.kron(&i2).and_then(|a| i2.kron(op).and_then(|b| a.add(&b))).expect("4x4");
    let jm = collect(&lower);
    (jm.adjoint(), jm, collect(&half_z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{is_unitary, C64};

    fn ket(i: usize) -> StateVector {
        StateVector::basis(4, i).unwrap()
    }

    #[test]
    fn lowering_operator_action() {
        let (_, jm, _) = total_spin_ops();
        let out = jm.apply(&ket(0)).unwrap();
        assert!(out.amplitudes().iter().all(|a| a.norm() == 0.0));
        let out = jm.apply(&ket(1)).unwrap();
        assert!((out.amplitudes()[2] - re(2f64.sqrt())).norm() < 1e-15);
        assert_eq!(out.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
    }

    #[test]
    fn commutator_is_twice_jz() {
        let (jp, jm, jz) = total_spin_ops();
        let comm = jp.matmul(&jm).unwrap().sub(&jm.matmul(&jp).unwrap()).unwrap();
        assert!(comm.approx_eq(&jz.scale(re(2.0)), 1e-15));
    }

    #[test]
    fn casimir_eigenvalues() {
        let j2 = total_spin_squared();
        assert!(j2.approx_eq(&ComplexMatrix::diag(&[re(0.0), re(2.0), re(2.0), re(2.0)]), 1e-12));
        for label in CheckLabel::ALL {
            let s = label.spin();
            let v = ket(label.index());
            let j = s.j();
            let j2v = j2.apply(&v).unwrap();
            assert!((j2v.amplitudes()[label.index()] - re(j * (j + 1.0))).norm() < 1e-12);
            let (_, _, jz) = total_spin_ops();
            assert!((jz.get(label.index(), label.index()) - re(s.m())).norm() < 1e-12);
        }
    }

    #[test]
    fn bell_states() {
        let map = BasisMap::default();
        let psi_minus = map.state_to_spin(&bell_state(BellKind::PsiMinus)).unwrap();
        assert!(psi_minus.max_abs_diff(&ket(0)) < 1e-15);
        let phi_plus = map.state_to_spin(&bell_state(BellKind::PhiPlus)).unwrap();
        let h = FRAC_1_SQRT_2;
        let expect = StateVector::new(vec![re(0.0), re(h), re(0.0), re(h)]).unwrap();
        assert!(phi_plus.max_abs_diff(&expect) < 1e-15);
        let overlap: C64 = bell_state(BellKind::PhiPlus).inner(&bell_state(BellKind::PhiMinus)).unwrap();
        assert!(overlap.norm() < 1e-15);
    }

    #[test]
    fn physical_change_properties() {
        let map = BasisMap::default();
        assert!(is_unitary(&map.physical_change, 1e-15));
        let (tp, tm, tz) = tensor_spin_ops();
        let (jp, jm, jz) = total_spin_ops();
        assert!(map.to_spin_coordinates(&tm).unwrap().approx_eq(&jm, 1e-15));
        assert!(map.to_spin_coordinates(&tp).unwrap().approx_eq(&jp, 1e-15));
        assert!(map.to_spin_coordinates(&tz).unwrap().approx_eq(&jz, 1e-15));
    }

    #[test]
    fn spin_ops_block_diagonal_over_singlet_and_triplet() {
        let map = BasisMap::default();
        let (tp, tm, tz) = tensor_spin_ops();
        for op in [tp, tm, tz] {
            let s = map.to_spin_coordinates(&op).unwrap();
            for k in 1..4 {
                assert!(s.get(0, k).norm() < 1e-15 && s.get(k, 0).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn relabel_round_trip() {
        assert_eq!(relabel(1).unwrap(), CheckLabel::One);
        assert_eq!(relabel(3).unwrap(), CheckLabel::Three);
        for i in 0..4 {
            assert_eq!(unrelabel(relabel(i).unwrap()), i);
        }
        assert!(relabel(4).is_err());
        assert_eq!(CheckLabel::Two.to_string(), "2\u{30c}");
    }

    #[test]
    fn spin_label_validation() {
        assert!(SpinLabel::new(2, 0).is_ok());
        assert!(SpinLabel::new(1, 1).is_ok());
        assert!(SpinLabel::new(1, 0).is_err());
        assert!(SpinLabel::new(2, 4).is_err());
    }
}
