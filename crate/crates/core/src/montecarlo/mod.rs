//! Monte Carlo estimation of typical-node degrees.
//!
//! Every trial draws its randomness from `RngStream(seed, trial_index)` and
//! contributes an integer degree to an [`EstimatorState`]. States hold only
//! integer tallies, so merging is exactly associative and commutative and
//! any parallel schedule produces bit-identical reports.

mod exact;
mod in_degree;
mod sweep;
mod window;

use std::ops::Range;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::point_process::RngStream;

pub use exact::{estimate_baseline_exact, estimate_sectorized_exact, exact_baseline_trial, exact_sectorized_trial};
pub use in_degree::{estimate_in_degree_windowed, guard_radius, simulate_in_trial, InTrial};
pub use sweep::{neutralization_point, neutralization_sweep, point_seed, write_sweep_table, SweepPoint, SweepRow};
pub use window::{estimate_windowed, simulate_out_trial, OutTrial};

/// Limits on adaptive window growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowLimits {
    pub max_doublings: u32,
    /// Cap on the expected number of sampled points in one trial.
    pub max_expected_points: f64,
}

impl Default for WindowLimits {
    fn default() -> Self {
        WindowLimits { max_doublings: 40, max_expected_points: 5.0e7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_max_degree")]
    pub max_degree_tracked: usize,
    #[serde(default)]
    pub window: WindowLimits,
}

fn default_confidence() -> f64 {
    0.95
}

fn default_max_degree() -> usize {
    64
}

impl ExperimentConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            trials,
            seed,
            confidence: default_confidence(),
            max_degree_tracked: default_max_degree(),
            window: WindowLimits::default(),
        }
    }

    pub fn with_max_degree(mut self, max_degree_tracked: usize) -> Self {
        self.max_degree_tracked = max_degree_tracked;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence {} must lie in (0, 1)", self.confidence)));
        }
        Ok(())
    }
}

/// What a state estimates: merging is only meaningful within one experiment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExperimentId {
    pub estimator: String,
    pub params_hash: u64,
    pub seed: u64,
}

impl ExperimentId {
    pub fn new(estimator: &str, params: &serde_json::Value, seed: u64) -> Self {
        let digest = Sha256::digest(format!("{estimator}\n{params}").as_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        ExperimentId { estimator: estimator.to_string(), params_hash: u64::from_le_bytes(head), seed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub id: ExperimentId,
    pub n: u64,
    pub sum: u64,
    pub sum_sq: u128,
    /// Counts for degrees `0..=max_degree_tracked`.
    pub histogram: Vec<u64>,
    pub overflow: u64,
}

impl EstimatorState {
    pub fn empty(id: ExperimentId, max_degree_tracked: usize) -> Self {
        EstimatorState { id, n: 0, sum: 0, sum_sq: 0, histogram: vec![0; max_degree_tracked + 1], overflow: 0 }
    }

    pub fn push(&mut self, degree: u64) {
        self.n += 1;
        self.sum += degree;
        self.sum_sq += degree as u128 * degree as u128;
        match self.histogram.get_mut(degree as usize) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum as f64 / self.n as f64
    }

    /// Unbiased sample variance, computed from exact integer moments.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as u128;
        let s = self.sum as u128;
        let num = n * self.sum_sq - s * s;
        (num as f64 / (n * (n - 1)) as f64).max(0.0)
    }
}

/// Componentwise sum of two states of the same experiment.
pub fn merge(a: &EstimatorState, b: &EstimatorState) -> Result<EstimatorState> {
    if a.id != b.id || a.histogram.len() != b.histogram.len() {
        return Err(Error::IdentityMismatch);
    }
    Ok(EstimatorState {
        id: a.id.clone(),
        n: a.n + b.n,
        sum: a.sum + b.sum,
        sum_sq: a.sum_sq + b.sum_sq,
        histogram: a.histogram.iter().zip(&b.histogram).map(|(x, y)| x + y).collect(),
        overflow: a.overflow + b.overflow,
    })
}

/// Probability mass on `0..len` plus the mass beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub mass: Vec<f64>,
    pub overflow: f64,
}

impl Pmf {
    pub fn new(mass: Vec<f64>, overflow: f64) -> Self {
        Pmf { mass, overflow }
    }

    /// Tabulates `f` on `0..=max`; the overflow bucket takes the remaining mass.
    pub fn from_fn(max: usize, f: impl Fn(u64) -> f64) -> Self {
        let mass: Vec<f64> = (0..=max as u64).map(f).collect();
        let overflow = (1.0 - mass.iter().sum::<f64>()).max(0.0);
        Pmf { mass, overflow }
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Total-variation distance `½ Σ |p(n) − q(n)|`, overflow buckets included.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.mass.len() != q.mass.len() {
        return Err(Error::SupportMismatch(p.mass.len(), q.mass.len()));
    }
    let body: f64 = p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).abs()).sum();
    Ok(0.5 * (body + (p.overflow - q.overflow).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub parameters: serde_json::Value,
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub ci_method: String,
    pub trials: u64,
    pub pmf: Vec<f64>,
    pub overflow_mass: f64,
    pub seed: u64,
}

impl EstimateReport {
    pub fn from_state(state: &EstimatorState, parameters: serde_json::Value, confidence: f64) -> Self {
        let n = state.n.max(1) as f64;
        let mean = state.mean();
        let stderr = (state.variance() / n).sqrt();
        let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
        EstimateReport {
            estimator: state.id.estimator.clone(),
            parameters,
            mean,
            stderr,
            ci_low: mean - z * stderr,
            ci_high: mean + z * stderr,
            confidence,
            ci_method: "normal approximation".into(),
            trials: state.n,
            pmf: state.histogram.iter().map(|&c| c as f64 / n).collect(),
            overflow_mass: state.overflow as f64 / n,
            seed: state.id.seed,
        }
    }

    pub fn empirical_pmf(&self) -> Pmf {
        Pmf::new(self.pmf.clone(), self.overflow_mass)
    }

    pub fn ci_contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn ci_overlaps(&self, other: &EstimateReport) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

const CHUNK: u64 = 1024;

/// Runs trials `range` of an experiment and tallies their degrees.
///
/// Trials are grouped in fixed chunks that rayon may schedule in any order;
/// the integer tallies make the result independent of that order.
pub fn run_trial_range<F>(id: &ExperimentId, cfg: &ExperimentConfig, range: Range<u64>, trial: F) -> Result<EstimatorState>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    let empty = EstimatorState::empty(id.clone(), cfg.max_degree_tracked);
    let start = range.start;
    let chunks = (range.end.saturating_sub(start)).div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(range.end);
            let mut state = empty.clone();
            for t in lo..hi {
                let mut rng = RngStream::new(cfg.seed, t).rng();
                state.push(trial(&mut rng)?);
            }
            Ok(state)
        })
        .try_reduce(|| empty.clone(), |a, b| merge(&a, &b))
}

pub(crate) fn run_experiment<F>(
    estimator: &str,
    parameters: serde_json::Value,
    cfg: &ExperimentConfig,
    trial: F,
) -> Result<EstimateReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    cfg.validate()?;
    let id = ExperimentId::new(estimator, &parameters, cfg.seed);
    let state = run_trial_range(&id, cfg, 0..cfg.trials, trial)?;
    Ok(EstimateReport::from_state(&state, parameters, cfg.confidence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn id(name: &str) -> ExperimentId {
        ExperimentId::new(name, &serde_json::json!({"k": 1}), 7)
    }

    fn state_of(values: &[u64]) -> EstimatorState {
        let mut s = EstimatorState::empty(id("t"), 4);
        values.iter().for_each(|v| s.push(*v));
        s
    }

    #[test]
    fn tv_examples() {
        let p = Pmf::new(vec![0.5, 0.5], 0.0);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        let a = Pmf::new(vec![1.0, 0.0], 0.0);
        let b = Pmf::new(vec![0.0, 1.0], 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        let q = Pmf::new(vec![0.75, 0.25], 0.0);
        assert_eq!(tv_distance(&p, &q).unwrap(), 0.25);
        let c = Pmf::new(vec![0.5, 0.25], 0.25);
        assert_eq!(tv_distance(&p, &c).unwrap(), 0.25);
        assert_eq!(tv_distance(&p, &Pmf::new(vec![1.0], 0.0)), Err(Error::SupportMismatch(2, 1)));
    }

    #[test]
    fn merge_examples() {
        let a = state_of(&[0, 3, 9, 2]);
        let b = state_of(&[1, 1, 5]);
        let empty = EstimatorState::empty(id("t"), 4);
        assert_eq!(merge(&a, &empty).unwrap(), a);
        assert_eq!(merge(&a, &b).unwrap(), merge(&b, &a).unwrap());
        let concat = state_of(&[0, 3, 9, 2, 1, 1, 5]);
        let m = merge(&a, &b).unwrap();
        assert_eq!(m, concat);
        assert_eq!(m.mean(), concat.mean());
        assert_eq!(m.variance(), concat.variance());
        assert_eq!(m.overflow, 2);
        let other = EstimatorState::empty(id("other"), 4);
        assert_eq!(merge(&a, &other), Err(Error::IdentityMismatch));
    }

    #[test]
    fn moments() {
        let s = state_of(&[1, 2, 3, 4]);
        assert_eq!(s.mean(), 2.5);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-15);
        let r = EstimateReport::from_state(&s, serde_json::Value::Null, 0.95);
        assert!(r.ci_contains(r.mean));
        assert!((r.ci_high - r.mean - 1.959_963_985 * r.stderr).abs() < 1e-8);
        let mass: f64 = r.pmf.iter().sum::<f64>() + r.overflow_mass;
        assert!((mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shards_equal_serial() {
        let cfg = ExperimentConfig::new(10_000, 99);
        let ident = id("draws");
        let trial = |rng: &mut ChaCha8Rng| Ok(rng.random_range(0..10u64));
        let serial = run_trial_range(&ident, &cfg, 0..10_000, trial).unwrap();
        let mut merged = EstimatorState::empty(ident.clone(), cfg.max_degree_tracked);
        for k in 0..4 {
            let shard = run_trial_range(&ident, &cfg, k * 2500..(k + 1) * 2500, trial).unwrap();
            merged = merge(&merged, &shard).unwrap();
        }
        assert_eq!(serial, merged);
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let again = pool.install(|| run_trial_range(&ident, &cfg, 0..10_000, trial)).unwrap();
            assert_eq!(serial, again);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(0, 1).validate().is_err());
        let mut cfg = ExperimentConfig::new(10, 1);
        cfg.confidence = 1.0;
        assert!(cfg.validate().is_err());
        let parsed: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"trials": 5, "seed": 1, "confidense": 0.9}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn report_json_fields() {
        let r = EstimateReport::from_state(&state_of(&[1, 2]), serde_json::json!({"a": 1}), 0.95);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["parameters", "mean", "stderr", "ci_low", "ci_high", "trials", "pmf", "overflow_mass", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
