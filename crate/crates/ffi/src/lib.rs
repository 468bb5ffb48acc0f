//! C ABI over the `qdamp` engine.
//!
//! Every fallible call returns a [`QdStatus`]; on failure the message is
//! available from [`qd_last_error`] on the same thread. Matrices and
//! experiment results cross the boundary as opaque handles and must be
//! released with their `_free` function. Strings returned by the library are
//! released with [`qd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdamp::channels::{rho_out_two, thetas_two, u_ad_single, u_ad_two_circuit, u_ad_two_explicit, Thetas};
use qdamp::experiment::{run_experiment, run_verify, ExperimentConfig, ExperimentKind, ExperimentResult, OutputFormat};
use qdamp::lindblad::{analytic_two, jz_expectation_two};
use qdamp::tensor::{c, ComplexMatrix};
use qdamp::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    VerificationFailed = 4,
    IntegrationFailed = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for QdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) | Error::SizeOverflow { .. } => QdStatus::DimensionMismatch,
            Error::Verification(_) | Error::NotUnitary { .. } => QdStatus::VerificationFailed,
            Error::Integration(_) => QdStatus::IntegrationFailed,
            Error::Io(_) => QdStatus::Io,
            _ => QdStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|&b| b != 0);
        CString::new(bytes).expect("nul bytes removed")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: QdStatus, msg: impl Into<String>) -> QdStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting engine errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), QdStatus>) -> QdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(QdStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check<T>(r: qdamp::Result<T>) -> Result<T, QdStatus> {
    r.map_err(|e| fail(QdStatus::from(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), QdStatus> {
    if p.is_null() {
        Err(fail(QdStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn qd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, nul-terminated library version.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque complex matrix.
pub struct QdMatrix(ComplexMatrix);

/// Opaque experiment result.
pub struct QdResult(ExperimentResult);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QdThetas {
    pub theta21: f64,
    pub theta32: f64,
    pub theta31: f64,
}

impl From<QdThetas> for Thetas {
    fn from(t: QdThetas) -> Self {
        Thetas::new(t.theta21, t.theta32, t.theta31)
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdExperiment {
    Single = 0,
    Collective = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QdConfig {
    pub experiment: QdExperiment,
    /// Initial condition 1..6, collective runs only.
    pub initial: u8,
    pub gamma: f64,
    pub n_shots: u64,
    pub n_ave: u64,
    pub seed: u64,
    pub exact: bool,
}

/// One row of an experiment result. Single-qubit runs fill two weights.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QdRow {
    pub t: f64,
    pub theta21: f64,
    pub theta32: f64,
    pub theta31: f64,
    pub weights: [f64; 4],
    pub n_weights: usize,
    pub jz_mean: f64,
    pub jz_var: f64,
    pub jz_exact_me: f64,
}

/// Defaults used by the command-line tool for `experiment`.
#[no_mangle]
pub extern "C" fn qd_config_default(experiment: QdExperiment) -> QdConfig {
    let d = ExperimentConfig::default();
    QdConfig {
        experiment,
        initial: d.initial,
        gamma: d.gamma,
        n_shots: d.n_shots,
        n_ave: d.n_ave,
        seed: d.seed,
        exact: d.exact,
    }
}

unsafe fn write_matrix(out: *mut *mut QdMatrix, m: ComplexMatrix) -> Result<(), QdStatus> {
    non_null(out, "out")?;
    *out = Box::into_raw(Box::new(QdMatrix(m)));
    Ok(())
}

unsafe fn matrix_ref<'a>(m: *const QdMatrix) -> Result<&'a ComplexMatrix, QdStatus> {
    non_null(m, "matrix")?;
    Ok(&(*m).0)
}

/// Builds a `rows x cols` matrix from row-major real and imaginary parts.
///
/// # Safety
/// `re` and `im` must point to `rows * cols` doubles; `im` may be null for a
/// real matrix. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_matrix_new(
    rows: usize,
    cols: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut QdMatrix,
) -> QdStatus {
    guard(|| {
        non_null(re, "re")?;
        let len = rows
            .checked_mul(cols)
            .filter(|&n| n > 0)
            .ok_or_else(|| fail(QdStatus::DimensionMismatch, format!("invalid shape {rows}x{cols}")))?;
        let re = std::slice::from_raw_parts(re, len);
        let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
        let m = check(ComplexMatrix::new(rows, cols, (0..len).map(|k| c(re[k], im.map_or(0.0, |v| v[k]))).collect()))?;
        write_matrix(out, m)
    })
}

/// # Safety
/// `m` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_matrix_free(m: *mut QdMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_matrix_rows(m: *const QdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_matrix_cols(m: *const QdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `m` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_matrix_get(
    m: *const QdMatrix,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> QdStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        if row >= m.rows() || col >= m.cols() {
            return Err(fail(
                QdStatus::DimensionMismatch,
                format!("entry ({row}, {col}) outside {}x{}", m.rows(), m.cols()),
            ));
        }
        let z = m.get(row, col);
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Copies all entries row-major into `re` and `im`, each of length `len`.
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qd_matrix_copy(m: *const QdMatrix, re: *mut f64, im: *mut f64, len: usize) -> QdStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        let n = m.entries().len();
        if len != n {
            return Err(fail(QdStatus::DimensionMismatch, format!("buffer holds {len} entries, matrix has {n}")));
        }
        let re = std::slice::from_raw_parts_mut(re, n);
        let im = std::slice::from_raw_parts_mut(im, n);
        for (k, z) in m.entries().iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Dilation unitary of the single-qubit channel (4x4).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_u_ad_single(theta: f64, out: *mut *mut QdMatrix) -> QdStatus {
    guard(|| {
        if !theta.is_finite() {
            return Err(fail(QdStatus::InvalidArgument, "theta must be finite"));
        }
        write_matrix(out, u_ad_single(theta))
    })
}

/// Dilation unitary of the collective two-qubit channel (16x16), built from
/// the plane rotations directly.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_u_ad_two_explicit(thetas: QdThetas, out: *mut *mut QdMatrix) -> QdStatus {
    guard(|| write_matrix(out, u_ad_two_explicit(&thetas.into())))
}

/// Same unitary, multiplied out from its one- and two-qubit gate circuit.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_u_ad_two_circuit(thetas: QdThetas, out: *mut *mut QdMatrix) -> QdStatus {
    guard(|| {
        let u = check(u_ad_two_circuit(&thetas.into()).and_then(|c| c.unitary()))?;
        write_matrix(out, u)
    })
}

/// Rotation angles for time `t` at decay rate `gamma`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_thetas_two(t: f64, gamma: f64, out: *mut QdThetas) -> QdStatus {
    guard(|| {
        non_null(out, "out")?;
        let th = check(thetas_two(t, gamma))?;
        *out = QdThetas { theta21: th.theta21, theta32: th.theta32, theta31: th.theta31 };
        Ok(())
    })
}

/// Output of the two-qubit channel for a 4x4 input density matrix.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_rho_out_two(rho: *const QdMatrix, thetas: QdThetas, out: *mut *mut QdMatrix) -> QdStatus {
    guard(|| {
        let rho = matrix_ref(rho)?;
        let m = check(rho_out_two(rho, &thetas.into()))?;
        write_matrix(out, m)
    })
}

/// Closed-form master-equation solution at time `t` for a 4x4 input.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_analytic_two(
    rho: *const QdMatrix,
    t: f64,
    gamma: f64,
    out: *mut *mut QdMatrix,
) -> QdStatus {
    guard(|| {
        let rho = matrix_ref(rho)?;
        let m = check(analytic_two(rho, t, gamma))?;
        write_matrix(out, m)
    })
}

/// `<J^z>` of a 4x4 two-qubit density matrix.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_jz_two(rho: *const QdMatrix, out: *mut f64) -> QdStatus {
    guard(|| {
        let rho = matrix_ref(rho)?;
        non_null(out, "out")?;
        if rho.rows() != 4 || rho.cols() != 4 {
            return Err(fail(QdStatus::DimensionMismatch, "expected a 4x4 matrix"));
        }
        *out = jz_expectation_two(rho);
        Ok(())
    })
}

/// Runs a single-qubit or collective experiment.
///
/// # Safety
/// `config` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_run_experiment(config: *const QdConfig, out: *mut *mut QdResult) -> QdStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let c = *config;
        let cfg = ExperimentConfig {
            experiment: match c.experiment {
                QdExperiment::Single => ExperimentKind::Single,
                QdExperiment::Collective => ExperimentKind::Collective,
            },
            initial: c.initial,
            gamma: c.gamma,
            n_shots: c.n_shots,
            n_ave: c.n_ave,
            seed: c.seed,
            format: OutputFormat::Csv,
            exact: c.exact,
        };
        let res = check(run_experiment(&cfg))?;
        *out = Box::into_raw(Box::new(QdResult(res)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_result_free(r: *mut QdResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_result_len(r: *const QdResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.rows.len())
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_result_row(r: *const QdResult, index: usize, out: *mut QdRow) -> QdStatus {
    guard(|| {
        non_null(r, "result")?;
        non_null(out, "out")?;
        let rows = &(*r).0.rows;
        let row =
            rows.get(index).ok_or_else(|| fail(QdStatus::InvalidArgument, format!("row {index} of {}", rows.len())))?;
        let mut weights = [0.0; 4];
        let n = row.weights.len().min(4);
        weights[..n].copy_from_slice(&row.weights[..n]);
        *out = QdRow {
            t: row.t,
            theta21: row.theta21,
            theta32: row.theta32,
            theta31: row.theta31,
            weights,
            n_weights: n,
            jz_mean: row.jz_mean,
            jz_var: row.jz_var,
            jz_exact_me: row.jz_exact_me,
        };
        Ok(())
    })
}

/// CSV rendering identical to the command-line output. Release with
/// [`qd_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_result_to_csv(r: *const QdResult, out: *mut *mut c_char) -> QdStatus {
    guard(|| {
        non_null(r, "result")?;
        non_null(out, "out")?;
        let csv = check((*r).0.to_csv_string())?;
        let s = CString::new(csv).map_err(|e| fail(QdStatus::Io, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs the decomposition and channel verification suite. Returns
/// `VerificationFailed` when any check fails; the counts are filled either way.
///
/// # Safety
/// `n_checks` and `n_failed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qd_verify(n_checks: *mut usize, n_failed: *mut usize) -> QdStatus {
    guard(|| {
        let rep = check(run_verify())?;
        let failed = rep.failures().count();
        if !n_checks.is_null() {
            *n_checks = rep.checks.len();
        }
        if !n_failed.is_null() {
            *n_failed = failed;
        }
        if failed > 0 {
            return Err(fail(QdStatus::VerificationFailed, format!("{failed} check(s) failed")));
        }
        Ok(())
    })
}
