//! End-to-end experiments: initial-state preparation, sampling over the time
//! grid, oracle attachment, and CSV/JSON output. Also the verification suite.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    extract_kraus, factor_explicit, rho_out_from_elements, u_ad_single, u_ad_single_circuit, u_ad_two_circuit,
    u_ad_two_explicit, u_ad_two_ordered, ChannelElements, Factor, Schedule, Thetas, CANONICAL_ORDER,
    ENV_INITIAL_SINGLE, ENV_INITIAL_TWO,
};
use crate::error::{Error, Result};
use crate::gates::{
    build_tau, controlled_unitary, decompose_c2ry, decompose_c3ry, multi_controlled, tau_matrix, verify_decomposition,
    verify_matrices, Circuit, Gate, GateSpec, Root, VerificationReport, TAU_PAIRS,
};
use crate::lindblad::{analytic_single, analytic_two, jz_expectation_single, jz_expectation_two};
use crate::sampler::{
    average_and_variance, draw_counts, jz_single, jz_single_exact, jz_two, jz_two_exact, outcome_probs, round_rng,
    system_weights, ShotRecord,
};
use crate::tensor::{ComplexMatrix, StateVector};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SHOTS: u64 = 1 << 14;
pub const DEFAULT_AVE: u64 = 25;

/// CSV header shared by both experiments.
pub const CSV_HEADER: &str = "t,theta21,theta32,theta31,w0,w1,w2,w3,jz_mean,jz_var,jz_exact_me,n_shots,n_ave,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Single,
    Collective,
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Initial-condition id, 1..=6; used by the collective experiment only.
    pub initial: u8,
    pub gamma: f64,
    pub n_shots: u64,
    pub n_ave: u64,
    pub seed: u64,
    pub format: OutputFormat,
    /// Report exact probabilities instead of sampling.
    pub exact: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Single,
            initial: 3,
            gamma: 1.0,
            n_shots: DEFAULT_SHOTS,
            n_ave: DEFAULT_AVE,
            seed: DEFAULT_SEED,
            format: OutputFormat::Csv,
            exact: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_shots == 0 || self.n_ave == 0 {
            return Err(Error::Config("--shots and --ave must be at least 1".into()));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.experiment == ExperimentKind::Collective {
            if !(1..=6).contains(&self.initial) {
                return Err(Error::Config(format!("initial condition must be 1..6, got {}", self.initial)));
            }
            Schedule::two_default(self.gamma).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Two-wire preparation circuit for initial condition `l`.
pub fn prepare_initial(l: u8) -> Result<Circuit> {
    let mut circ = Circuit::new(2);
    let x = |w| GateSpec::single(Gate::X, w);
    match l {
        1 => {
            circ.push(GateSpec::single(Gate::I, 0))?;
            circ.push(GateSpec::single(Gate::I, 1))?;
        }
        2 => {
            circ.push(x(0))?;
            circ.push(x(1))?;
        }
        3 => circ.push(x(1))?,
        4 => circ.push(x(0))?,
        5 | 6 => {
            if l == 6 {
                circ.push(x(0))?;
            }
            circ.push(x(1))?;
            // SWAP CH[Q0;Q1] SWAP
            circ.push(GateSpec::swap(0, 1)?)?;
            circ.push(GateSpec::controlled(Gate::H, 0, 1)?)?;
            circ.push(GateSpec::swap(0, 1)?)?;
        }
        _ => return Err(Error::Config(format!("initial condition must be 1..6, got {l}"))),
    }
    Ok(circ)
}

/// Check-basis density matrix prepared by initial condition `l`.
pub fn initial_density(l: u8) -> Result<ComplexMatrix> {
    let psi = prepare_initial(l)?.apply(&StateVector::basis(4, 0)?)?;
    Ok(ComplexMatrix::outer(&psi))
}

/// Outcome that must collect every shot for the non-decaying conditions.
pub fn no_decay_outcome(l: u8) -> Option<usize> {
    match l {
        1 => Some(0b0011),
        2 => Some(0b1111),
        _ => None,
    }
}

/// Full simulation circuit for one collective time point.
pub fn collective_circuit(l: u8, thetas: &Thetas) -> Result<Circuit> {
    let mut circ = Circuit::new(4);
    circ.push(GateSpec::single(Gate::X, 2))?;
    circ.push(GateSpec::single(Gate::X, 3))?;
    for g in prepare_initial(l)?.gates() {
        circ.push(g.clone())?;
    }
    circ.append(&u_ad_two_circuit(thetas)?)?;
    Ok(circ)
}

/// Full simulation circuit for one single-qubit time point.
pub fn single_circuit(theta: f64) -> Result<Circuit> {
    let mut circ = Circuit::new(2);
    circ.push(GateSpec::single(Gate::X, 1))?;
    circ.append(&u_ad_single_circuit(theta)?)?;
    Ok(circ)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub t: f64,
    pub theta21: f64,
    pub theta32: f64,
    pub theta31: f64,
    /// System weights `w_0..w_3` (two entries for the single-qubit run).
    pub weights: Vec<f64>,
    pub jz_mean: f64,
    pub jz_var: f64,
    /// Master-equation value.
    pub jz_exact_me: f64,
    /// Exact expectation of the sampled circuit (no shot noise).
    pub jz_circuit: f64,
    /// Counts pooled over all rounds, by outcome index; empty in exact mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pooled_counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<u8>,
    pub gamma: f64,
    pub n_shots: u64,
    pub n_ave: u64,
    pub seed: u64,
    pub exact: bool,
    pub rows: Vec<ResultRow>,
}

/// Samples every time point in every round. Round `alpha` uses the stream
/// seeded with `seed ^ alpha` and visits the time points in order.
fn sample_rounds(probs: &[Vec<f64>], n_shots: u64, n_ave: u64, seed: u64) -> Result<Vec<Vec<ShotRecord>>> {
    let n_qubits = probs.first().map_or(0, |p| p.len().trailing_zeros());
    (0..n_ave)
        .into_par_iter()
        .map(|alpha| {
            let mut rng = round_rng(seed, alpha);
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let counts = draw_counts(&mut rng, p, n_shots)?;
                    Ok(ShotRecord { time_index: i, n_qubits, counts, n_shots, seed: seed ^ alpha })
                })
                .collect()
        })
        .collect()
}

struct Point {
    jz_mean: f64,
    jz_var: f64,
    weights: Vec<f64>,
    pooled: Vec<u64>,
}

fn summarize(
    probs: &[Vec<f64>],
    cfg: &ExperimentConfig,
    env_qubits: u32,
    estimator: fn(&ShotRecord) -> Result<f64>,
    exact: fn(&[f64]) -> f64,
) -> Result<Vec<Point>> {
    if cfg.exact {
        return Ok(probs
            .iter()
            .map(|p| Point { jz_mean: exact(p), jz_var: 0.0, weights: system_weights(p, env_qubits), pooled: vec![] })
            .collect());
    }
    let rounds = sample_rounds(probs, cfg.n_shots, cfg.n_ave, cfg.seed)?;
    (0..probs.len())
        .map(|i| {
            let samples = rounds.iter().map(|r| estimator(&r[i])).collect::<Result<Vec<_>>>()?;
            let (jz_mean, jz_var) = average_and_variance(&samples)?;
            let mut pooled = vec![0u64; probs[i].len()];
            for r in &rounds {
                for (acc, c) in pooled.iter_mut().zip(&r[i].counts) {
                    *acc += c;
                }
            }
            let total = (cfg.n_shots * cfg.n_ave) as f64;
            let weights =
                pooled.chunks(1 << env_qubits).map(|chunk| chunk.iter().sum::<u64>() as f64 / total).collect();
            Ok(Point { jz_mean, jz_var, weights, pooled })
        })
        .collect()
}

/// Single-qubit decay over the angles `(pi/10) i`, `i = 0..9`.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let Schedule::Single { times, thetas, .. } = Schedule::single_default(cfg.gamma)? else {
        unreachable!("single schedule")
    };
    let start = StateVector::basis(4, 0)?;
    let probs =
        thetas.par_iter().map(|&th| outcome_probs(&single_circuit(th)?.apply(&start)?)).collect::<Result<Vec<_>>>()?;
    let points = summarize(&probs, cfg, 1, jz_single, jz_single_exact)?;
    let rho0 = ComplexMatrix::outer(&StateVector::basis(2, 0)?);
    let rows = points
        .into_iter()
        .enumerate()
        .map(|(i, pt)| {
            let me = analytic_single(&rho0, times[i], cfg.gamma)?;
            Ok(ResultRow {
                t: times[i],
                theta21: thetas[i],
                theta32: thetas[i],
                theta31: thetas[i],
                weights: pt.weights,
                jz_mean: pt.jz_mean,
                jz_var: pt.jz_var,
                jz_exact_me: jz_expectation_single(&me),
                jz_circuit: jz_single_exact(&probs[i]),
                pooled_counts: pt.pooled,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        experiment: ExperimentKind::Single,
        initial: None,
        gamma: cfg.gamma,
        n_shots: cfg.n_shots,
        n_ave: cfg.n_ave,
        seed: cfg.seed,
        exact: cfg.exact,
        rows,
    })
}

/// Collective decay of initial condition `cfg.initial` over `t_i = 0.005 i`.
pub fn run_collective(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let Schedule::Two { times, thetas, .. } = Schedule::two_default(cfg.gamma)? else {
        unreachable!("two-qubit schedule")
    };
    let l = cfg.initial;
    let start = StateVector::basis(16, 0)?;
    let probs = thetas
        .par_iter()
        .map(|th| outcome_probs(&collective_circuit(l, th)?.apply(&start)?))
        .collect::<Result<Vec<_>>>()?;
    let points = summarize(&probs, cfg, 2, jz_two, jz_two_exact)?;
    if let Some(k) = no_decay_outcome(l) {
        for (i, (p, pt)) in probs.iter().zip(&points).enumerate() {
            let all_there =
                if cfg.exact { (p[k] - 1.0).abs() <= 1e-12 } else { pt.pooled[k] == cfg.n_shots * cfg.n_ave };
            if !all_there {
                return Err(Error::Verification(format!(
                    "initial condition {l} leaked out of |{k:04b}> at time index {i}"
                )));
            }
        }
    }
    let rho0 = initial_density(l)?;
    let rows = points
        .into_iter()
        .enumerate()
        .map(|(i, pt)| {
            let me = analytic_two(&rho0, times[i], cfg.gamma)?;
            Ok(ResultRow {
                t: times[i],
                theta21: thetas[i].theta21,
                theta32: thetas[i].theta32,
                theta31: thetas[i].theta31,
                weights: pt.weights,
                jz_mean: pt.jz_mean,
                jz_var: pt.jz_var,
                jz_exact_me: jz_expectation_two(&me),
                jz_circuit: jz_two_exact(&probs[i]),
                pooled_counts: pt.pooled,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        experiment: ExperimentKind::Collective,
        initial: Some(l),
        gamma: cfg.gamma,
        n_shots: cfg.n_shots,
        n_ave: cfg.n_ave,
        seed: cfg.seed,
        exact: cfg.exact,
        rows,
    })
}

/// Dispatches a sampling experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.experiment {
        ExperimentKind::Single => run_single(cfg),
        ExperimentKind::Collective => run_collective(cfg),
        ExperimentKind::Verify => Err(Error::Config("verify does not produce an experiment result".into())),
    }
}

/// Float formatting used in CSV output: 17 significant digits.
pub fn format_float(x: f64) -> String {
    // Adding 0.0 folds -0.0 into 0.0.
    format!("{:.16e}", x + 0.0)
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for row in &self.rows {
            let mut fields: Vec<String> =
                [row.t, row.theta21, row.theta32, row.theta31].iter().map(|&x| format_float(x)).collect();
            for k in 0..4 {
                fields.push(row.weights.get(k).map(|&x| format_float(x)).unwrap_or_default());
            }
            fields.extend([row.jz_mean, row.jz_var, row.jz_exact_me].iter().map(|&x| format_float(x)));
            fields.extend([self.n_shots.to_string(), self.n_ave.to_string(), self.seed.to_string()]);
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write<W: Write>(&self, format: OutputFormat, mut w: W) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => {
                writeln!(w, "{}", self.to_json_string()?)?;
                Ok(())
            }
        }
    }
}

/// Outcome of the verification suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerificationReport>,
    /// Diagnostics that are recorded but never fail the suite.
    pub info: Vec<VerificationReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationReport> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        for c in &self.info {
            writeln!(f, "INFO {} max|diff|={:.3e}", c.label, c.max_abs_diff)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn labelled(mut rep: VerificationReport, label: String) -> VerificationReport {
    rep.label = label;
    rep
}

fn completeness_report(
    label: String,
    u: &ComplexMatrix,
    env_dim: usize,
    env: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let k = extract_kraus(u, env_dim, env)?;
    let dev = k.completeness_deviation()?;
    Ok(VerificationReport { label, max_abs_diff: dev, tol, pass: dev <= tol, worst_entry: None })
}

const DECOMP_TOL: f64 = 1e-10;

/// Runs every decomposition, interexchange and channel identity.
pub fn run_verify() -> Result<VerifyReport> {
    let mut rep = VerifyReport::default();
    let Schedule::Single { thetas: single_thetas, .. } = Schedule::single_default(1.0)? else { unreachable!() };
    let Schedule::Two { times, thetas: two_thetas, .. } = Schedule::two_default(1.0)? else { unreachable!() };

    for &th in &single_thetas {
        let r = verify_decomposition(&u_ad_single_circuit(th)?, &u_ad_single(th), 1e-12)?;
        rep.checks.push(labelled(r, format!("single-qubit circuit theta={th:.6}")));
    }

    let mut angles: Vec<f64> = two_thetas.iter().flat_map(|t| [t.theta21, t.theta32, t.theta31]).collect();
    angles.extend([PI / 3.0, PI / 2.0, PI]);
    for &a in &angles {
        let ry = Gate::Ry(a).matrix();
        for (ctrl, tgt) in [((1, 2), 0), ((0, 2), 1)] {
            let direct = controlled_unitary(4, &[ctrl.0, ctrl.1], &[tgt], &ry)?;
            let r = verify_decomposition(&decompose_c2ry(a, ctrl, tgt, 4)?, &direct, DECOMP_TOL)?;
            rep.checks.push(labelled(r, format!("C2Ry({a:.6})[Q{}Q{};Q{tgt}]", ctrl.0, ctrl.1)));
        }
        let direct = controlled_unitary(4, &[1, 2, 3], &[0], &ry)?;
        let r = verify_decomposition(&decompose_c3ry(a, (1, 2, 3), 0, 4)?, &direct, DECOMP_TOL)?;
        rep.checks.push(labelled(r, format!("C3Ry({a:.6})[Q1Q2Q3;Q0]")));
    }

    let sqrt_x = Gate::SqrtX.matrix();
    let x = Gate::X.matrix();
    let ladders: [(&str, Root, Vec<usize>, usize, &ComplexMatrix); 5] = [
        ("C2X^1/2[Q0Q1;Q3]", Root::XPow(1), vec![1, 0], 3, &sqrt_x),
        ("C2X[Q0Q3;Q2]", Root::XPow(0), vec![0, 3], 2, &x),
        ("C2X[Q0Q2;Q1]", Root::XPow(0), vec![0, 2], 1, &x),
        ("C3X[Q0Q1Q2;Q3]", Root::XPow(0), vec![2, 0, 1], 3, &x),
        ("C3X[Q0Q1Q3;Q2]", Root::XPow(0), vec![3, 0, 1], 2, &x),
    ];
    for (label, root, controls, target, u) in ladders {
        let direct = controlled_unitary(4, &controls, &[target], u)?;
        let r = verify_decomposition(&multi_controlled(root, &controls, target, 4)?, &direct, DECOMP_TOL)?;
        rep.checks.push(labelled(r, label.to_string()));
    }

    for (i, j) in TAU_PAIRS {
        let r = verify_decomposition(&build_tau(i, j)?, &tau_matrix(i, j)?, DECOMP_TOL)?;
        rep.checks.push(labelled(r, format!("tau{i},{j}")));
    }
    let t1216 = build_tau(12, 16)?.unitary()?;
    let t1516 = build_tau(15, 16)?.unitary()?;
    let alt = t1516.matmul(&t1216)?.matmul(&t1516)?;
    rep.checks.push(verify_matrices("tau12,15 = tau15,16 tau12,16 tau15,16", &alt, &tau_matrix(12, 15)?, DECOMP_TOL)?);

    for th in &two_thetas {
        for f in CANONICAL_ORDER {
            let circ = crate::channels::factor_circuit(f, th)?;
            let r = verify_decomposition(&circ, &factor_explicit(f, th), 1e-9)?;
            rep.checks.push(labelled(r, format!("{f:?} circuit theta21={:.6}", th.theta21)));
        }
        let r = verify_decomposition(&u_ad_two_circuit(th)?, &u_ad_two_explicit(th), 1e-9)?;
        rep.checks.push(labelled(r, format!("two-qubit circuit theta21={:.6}", th.theta21)));
    }

    for &th in &single_thetas {
        rep.checks.push(completeness_report(
            format!("Kraus completeness single theta={th:.6}"),
            &u_ad_single(th),
            2,
            ENV_INITIAL_SINGLE,
            1e-12,
        )?);
    }
    for (t, th) in times.iter().zip(&two_thetas) {
        rep.checks.push(completeness_report(
            format!("Kraus completeness two-qubit t={t:.3}"),
            &u_ad_two_explicit(th),
            4,
            ENV_INITIAL_TWO,
            1e-12,
        )?);
    }

    // Alternate factor orderings, recorded without a pass/fail verdict.
    let th = two_thetas.last().copied().unwrap_or_default();
    let canonical = ChannelElements::from_unitary(&u_ad_two_explicit(&th));
    let excited = ComplexMatrix::outer(&StateVector::basis(4, 1)?);
    let base = rho_out_from_elements(&excited, &canonical);
    for order in orderings() {
        if order == CANONICAL_ORDER {
            continue;
        }
        let u = u_ad_two_ordered(&th, order);
        let k = extract_kraus(&u, 4, ENV_INITIAL_TWO)?;
        let mut r = verify_matrices(
            format!("ordering {order:?} channel on 1\u{30c} at t=0.045"),
            &k.apply(&excited)?,
            &base,
            0.0,
        )?;
        r.pass = true;
        rep.info.push(r);
    }
    Ok(rep)
}

fn orderings() -> Vec<[Factor; 3]> {
    use Factor::*;
    vec![[R21, R31, R32], [R21, R32, R31], [R31, R21, R32], [R31, R32, R21], [R32, R21, R31], [R32, R31, R21]]
}
