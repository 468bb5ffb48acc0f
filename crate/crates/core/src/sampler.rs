//! Seeded measurement sampling and the estimators built on it.
//!
//! Randomness comes from xoshiro256++ seeded through `seed_from_u64`. An
//! averaging round `alpha` draws from its own stream seeded with
//! `seed ^ alpha`, so rounds can run in any order or in parallel and still
//! reproduce bit for bit. Multinomial counts are drawn as a chain of
//! conditional binomials in outcome-index order.

use std::collections::BTreeMap;

use rand_distr::{Binomial, Distribution};
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::StateVector;

/// Tolerance on `sum p = 1` accepted by the sampler.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Outcome counts of one batch of shots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub time_index: usize,
    pub n_qubits: u32,
    /// Counts indexed by computational-basis outcome.
    pub counts: Vec<u64>,
    pub n_shots: u64,
    pub seed: u64,
}

impl ShotRecord {
    /// Counts keyed by bit string, most significant wire first; zeros omitted.
    pub fn counts_by_label(&self) -> BTreeMap<String, u64> {
        self.counts.iter().enumerate().filter(|(_, &n)| n > 0).map(|(k, &n)| (bit_label(k, self.n_qubits), n)).collect()
    }

    /// Count of one outcome given as a bit string such as `"0111"`.
    pub fn count(&self, label: &str) -> Option<u64> {
        if label.len() != self.n_qubits as usize {
            return None;
        }
        let idx = usize::from_str_radix(label, 2).ok()?;
        self.counts.get(idx).copied()
    }

    /// Outcomes that occurred at least once.
    pub fn support(&self) -> Vec<usize> {
        self.counts.iter().enumerate().filter(|(_, &n)| n > 0).map(|(k, _)| k).collect()
    }
}

/// Bit string of `index` on `n_qubits` wires, wire 0 first.
pub fn bit_label(index: usize, n_qubits: u32) -> String {
    format!("{index:0width$b}", width = n_qubits as usize)
}

/// Born-rule probabilities over the computational basis.
pub fn outcome_probs(state: &StateVector) -> Result<Vec<f64>> {
    let probs: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(total));
    }
    Ok(probs)
}

fn check_probs(probs: &[f64]) -> Result<u32> {
    if probs.len() < 2 || !probs.len().is_power_of_two() {
        return Err(Error::InvalidProbabilities(format!("{} outcomes is not a qubit register", probs.len())));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -1e-12) {
        return Err(Error::InvalidProbabilities(format!("probability {p} is negative or not finite")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidProbabilities(format!("probabilities sum to {total}")));
    }
    Ok(probs.len().trailing_zeros())
}

/// Stream for averaging round `round`.
pub fn round_rng(seed: u64, round: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ round)
}

/// Multinomial draw of `n_shots` outcomes from `rng`.
pub fn draw_counts<R: Rng + ?Sized>(rng: &mut R, probs: &[f64], n_shots: u64) -> Result<Vec<u64>> {
    check_probs(probs)?;
    if n_shots == 0 {
        return Err(Error::Config("n_shots must be at least 1".into()));
    }
    let clamped: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let mut mass_left: f64 = clamped.iter().sum();
    let mut remaining = n_shots;
    let mut counts = vec![0u64; probs.len()];
    let last = probs.len() - 1;
    for (k, &p) in clamped.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            counts[k] = remaining;
            break;
        }
        let q = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 1.0 };
        let n = if q == 0.0 {
            0
        } else if q == 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).map_err(|e| Error::InvalidProbabilities(e.to_string()))?.sample(rng)
        };
        counts[k] = n;
        remaining -= n;
        mass_left -= p;
    }
    Ok(counts)
}

/// Deterministic multinomial sample: identical inputs give identical counts.
pub fn sample_counts(probs: &[f64], n_shots: u64, seed: u64) -> Result<ShotRecord> {
    let n_qubits = check_probs(probs)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let counts = draw_counts(&mut rng, probs, n_shots)?;
    Ok(ShotRecord { time_index: 0, n_qubits, counts, n_shots, seed })
}

fn checked_total(record: &ShotRecord, n_qubits: u32) -> Result<f64> {
    if record.n_qubits != n_qubits || record.counts.len() != 1 << n_qubits {
        return Err(Error::Dimension(format!("expected a {n_qubits}-qubit record, got {} qubits", record.n_qubits)));
    }
    let total: u64 = record.counts.iter().sum();
    if total == 0 || record.n_shots == 0 {
        return Err(Error::Empty("shot record"));
    }
    if total != record.n_shots {
        return Err(Error::InvalidProbabilities(format!("counts sum to {total} but n_shots is {}", record.n_shots)));
    }
    Ok(total as f64)
}

/// `(N00 + N01 - N10 - N11) / (2 N)` on a system+environment record.
pub fn jz_single(record: &ShotRecord) -> Result<f64> {
    let n = checked_total(record, 2)?;
    let c = &record.counts;
    Ok((c[0] as f64 + c[1] as f64 - c[2] as f64 - c[3] as f64) / (2.0 * n))
}

/// `sum_{n2 n3} (N_{01 n2 n3} - N_{11 n2 n3}) / N` on a 4-qubit record.
pub fn jz_two(record: &ShotRecord) -> Result<f64> {
    let n = checked_total(record, 4)?;
    let diff: i128 = record
        .counts
        .iter()
        .enumerate()
        .map(|(k, &cnt)| match k >> 2 {
            1 => i128::from(cnt),
            3 => -i128::from(cnt),
            _ => 0,
        })
        .sum();
    Ok(diff as f64 / n)
}

/// System weights `w_s = sum_e p(s, e)` with the environment as the trailing
/// `env_qubits` wires.
pub fn system_weights(probs: &[f64], env_qubits: u32) -> Vec<f64> {
    let env = 1usize << env_qubits;
    probs.chunks(env).map(|chunk| chunk.iter().sum()).collect()
}

/// Exact `<J^z>` of the single-qubit system from outcome probabilities.
pub fn jz_single_exact(probs: &[f64]) -> f64 {
    let w = system_weights(probs, 1);
    0.5 * (w[0] - w[1])
}

/// Exact `<J^z>` of the two-qubit system from outcome probabilities.
pub fn jz_two_exact(probs: &[f64]) -> f64 {
    let w = system_weights(probs, 2);
    w[1] - w[3]
}

/// Mean and population variance `mean(x^2) - mean(x)^2`.
pub fn average_and_variance(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Empty("sample list"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mean_sq = samples.iter().map(|x| x * x).sum::<f64>() / n;
    // The two-sum form can dip a rounding error below zero.
    Ok((mean, (mean_sq - mean * mean).max(0.0)))
}
