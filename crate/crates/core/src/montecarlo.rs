//! Seeded, parallel experiment harness.
//!
//! Trial `t` draws all of its randomness from two ChaCha streams derived from
//! `(seed, t)`: one for the channel, one for the exclusion choices. Records are
//! collected in trial order and reduced sequentially, so a report depends only
//! on the configuration and never on the number of worker threads.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{apply_mask, sample_bernoulli_mask};
use crate::error::{invalid, Result};
use crate::matching::structural_rank;
use crate::spectral::{
    block_gains, compact, db_to_linear, squared_singular_values, srbp_capacity_from_gains,
    svd_capacity_from_gains, GainProfile,
};
use crate::srbp::{
    block_size_bound, block_triangulate, extract_blocks, initialize, lower_triangulate, BlockClass,
};

pub const DEFAULT_TRIALS: usize = 10_000;

/// Tolerance of the per-realization check `C_srbp <= C_svd`.
pub const ACHIEVABILITY_TOLERANCE: f64 = 1e-9;

/// `0:2:30` dB.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=15).map(|i| 2.0 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SchemeSet {
    pub svd: bool,
    pub srbp: bool,
}

impl Default for SchemeSet {
    fn default() -> Self {
        Self {
            svd: true,
            srbp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub snr_grid_db: Vec<f64>,
    pub seed: u64,
    pub schemes: SchemeSet,
    /// Variance of each nonzero virtual entry. `1/δ` gives the physical channel
    /// unit energy per antenna pair.
    pub entry_variance: f64,
    /// Worker threads; `None` uses the global rayon pool. Never affects results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// `δ = 1/n`, 10 000 trials, SNR grid 0:2:30 dB, seed 0.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            delta: if n > 0 { 1.0 / n as f64 } else { 0.0 },
            trials: DEFAULT_TRIALS,
            snr_grid_db: default_snr_grid(),
            seed: 0,
            schemes: SchemeSet::default(),
            entry_variance: 1.0,
            threads: None,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_snr_grid(mut self, grid: Vec<f64>) -> Self {
        self.snr_grid_db = grid;
        self
    }

    pub fn with_entry_variance(mut self, variance: f64) -> Self {
        self.entry_variance = variance;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("antenna count must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(invalid("SNR grid values must be finite"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("SNR grid must be strictly increasing"));
        }
        if !(self.entry_variance > 0.0 && self.entry_variance.is_finite()) {
            return Err(invalid(format!(
                "entry variance must be positive, got {}",
                self.entry_variance
            )));
        }
        if self.threads == Some(0) {
            return Err(invalid("thread count must be at least 1"));
        }
        Ok(())
    }

    /// RNG for the mask and channel values of trial `t`.
    pub fn channel_rng(&self, t: usize) -> ChaCha8Rng {
        stream_rng(self.seed, 2 * t as u64)
    }

    /// RNG for the exclusion choices of trial `t`.
    pub fn algorithm_rng(&self, t: usize) -> ChaCha8Rng {
        stream_rng(self.seed, 2 * t as u64 + 1)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Block counts per shape class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BlockCensus {
    pub single: usize,
    pub row_vector: usize,
    pub column_vector: usize,
    pub other: usize,
}

impl BlockCensus {
    pub fn add(&mut self, class: BlockClass) {
        match class {
            BlockClass::Single => self.single += 1,
            BlockClass::RowVector => self.row_vector += 1,
            BlockClass::ColumnVector => self.column_vector += 1,
            BlockClass::Other => self.other += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.single + self.row_vector + self.column_vector + self.other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityPoint {
    pub snr_db: f64,
    pub svd: Option<f64>,
    pub srbp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub n: usize,
    pub n_d: usize,
    pub n_ex_active: usize,
    pub n_residual: usize,
    pub n_bar: usize,
    /// Structural rank of the mask: the DoF of the SVD transceiver.
    pub svd_rank: usize,
    pub census: BlockCensus,
    /// Largest block rows and columns seen in this trial.
    pub max_block: (usize, usize),
    /// `(N̄ − N_d + 1, N_ex + 1)` for this trial.
    pub block_bound: (usize, usize),
    pub capacities: Vec<CapacityPoint>,
}

impl TrialRecord {
    pub fn accounting_holds(&self) -> bool {
        self.n_d + self.n_ex_active + self.n_residual == self.n
    }

    pub fn within_block_bound(&self) -> bool {
        self.max_block.0 <= self.block_bound.0 && self.max_block.1 <= self.block_bound.1
    }
}

/// Runs one trial. Capacities are computed only when `with_capacity` is set.
pub fn simulate_trial(
    cfg: &ExperimentConfig,
    t: usize,
    with_capacity: bool,
) -> Result<TrialRecord> {
    let mut channel_rng = cfg.channel_rng(t);
    let mut algo_rng = cfg.algorithm_rng(t);
    let mask = sample_bernoulli_mask(cfg.n, cfg.n, cfg.delta, &mut channel_rng)?;

    let tri = lower_triangulate(initialize(&mask), &mut algo_rng);
    let decomp = block_triangulate(&tri, &mask)?;
    let mut census = BlockCensus::default();
    let mut max_block = (0, 0);
    for b in decomp.blocks() {
        census.add(b.class());
        let (r, c) = b.shape();
        max_block = (max_block.0.max(r), max_block.1.max(c));
    }

    let mut capacities = Vec::new();
    if with_capacity {
        let channel = apply_mask(&mask, &mut channel_rng);
        let scale = |g: GainProfile| g.scaled(cfg.entry_variance);
        let svd_gains = cfg
            .schemes
            .svd
            .then(|| scale(squared_singular_values(&compact(channel.values()))));
        let srbp_gains = if cfg.schemes.srbp {
            Some(scale(block_gains(&extract_blocks(&decomp, &channel)?)))
        } else {
            None
        };
        for &snr_db in &cfg.snr_grid_db {
            let rho = db_to_linear(snr_db);
            capacities.push(CapacityPoint {
                snr_db,
                svd: svd_gains
                    .clone()
                    .map(|g| svd_capacity_from_gains(g, rho).capacity),
                srbp: srbp_gains
                    .clone()
                    .map(|g| srbp_capacity_from_gains(g, rho).capacity),
            });
        }
    }

    Ok(TrialRecord {
        trial: t,
        n: cfg.n,
        n_d: tri.n_d(),
        n_ex_active: tri.n_ex_active(),
        n_residual: tri.n_residual(),
        n_bar: tri.n_bar(),
        svd_rank: structural_rank(&mask),
        census,
        max_block,
        block_bound: block_size_bound(&tri),
        capacities,
    })
}

/// All trial records of `cfg`, in trial order.
pub fn run_trials(cfg: &ExperimentConfig, with_capacity: bool) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let work = || -> Result<Vec<TrialRecord>> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| simulate_trial(cfg, t, with_capacity))
            .collect()
    };
    match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
}

/// Sequential Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn summary(&self) -> MetricSummary {
        let stderr = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        MetricSummary {
            mean: self.mean,
            stderr,
        }
    }
}

fn summarize(records: &[TrialRecord], f: impl Fn(&TrialRecord) -> f64) -> MetricSummary {
    let mut m = Moments::default();
    for r in records {
        m.push(f(r));
    }
    m.summary()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassShare {
    /// Mean number of blocks of this class per trial.
    pub average: f64,
    /// Share of all blocks, in percent.
    pub percentage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusSummary {
    pub single: ClassShare,
    pub row_vector: ClassShare,
    pub column_vector: ClassShare,
    pub other: ClassShare,
    pub blocks_per_trial: f64,
}

impl CensusSummary {
    fn from_records(records: &[TrialRecord]) -> Self {
        let mut total = BlockCensus::default();
        for r in records {
            total.single += r.census.single;
            total.row_vector += r.census.row_vector;
            total.column_vector += r.census.column_vector;
            total.other += r.census.other;
        }
        let trials = records.len().max(1) as f64;
        let blocks = total.total();
        let share = |count: usize| ClassShare {
            average: count as f64 / trials,
            percentage: if blocks > 0 {
                100.0 * count as f64 / blocks as f64
            } else {
                0.0
            },
        };
        Self {
            single: share(total.single),
            row_vector: share(total.row_vector),
            column_vector: share(total.column_vector),
            other: share(total.other),
            blocks_per_trial: blocks as f64 / trials,
        }
    }

    /// Percentage of blocks that are single entries or vectors.
    pub fn single_or_vector_percentage(&self) -> f64 {
        self.single.percentage + self.row_vector.percentage + self.column_vector.percentage
    }

    pub fn percentage_total(&self) -> f64 {
        self.single_or_vector_percentage() + self.other.percentage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub c_svd: Option<f64>,
    pub c_srbp: Option<f64>,
    pub c_svd_stderr: Option<f64>,
    pub c_srbp_stderr: Option<f64>,
}

impl CurvePoint {
    /// `C_srbp / C_svd` of the mean curves.
    pub fn ratio(&self) -> Option<f64> {
        match (self.c_srbp, self.c_svd) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub per_metric: BTreeMap<String, MetricSummary>,
    pub census: CensusSummary,
    pub curves: Vec<CurvePoint>,
    /// Trials breaking `n_d + n_ex_active + n_residual = N`.
    pub accounting_violations: usize,
    /// Trials with a block larger than `(N̄ − N_d + 1) × (N_ex + 1)`.
    pub block_bound_violations: usize,
    /// (trial, SNR) points with `C_srbp > C_svd + 1e-9`.
    pub achievability_violations: usize,
}

impl AggregateReport {
    pub fn from_records(experiment: &str, cfg: &ExperimentConfig, records: &[TrialRecord]) -> Self {
        let mut per_metric = BTreeMap::new();
        let mut put = |name: &str, f: &dyn Fn(&TrialRecord) -> f64| {
            per_metric.insert(name.to_string(), summarize(records, f));
        };
        put("n_d", &|r| r.n_d as f64);
        put("n_ex_active", &|r| r.n_ex_active as f64);
        put("n_residual", &|r| r.n_residual as f64);
        put("n_bar", &|r| r.n_bar as f64);
        put("n_bar_minus_n_d", &|r| (r.n_bar - r.n_d) as f64);
        put("svd_rank", &|r| r.svd_rank as f64);
        put("max_block_rows", &|r| r.max_block.0 as f64);
        put("max_block_cols", &|r| r.max_block.1 as f64);
        put("blocks_single", &|r| r.census.single as f64);
        put("blocks_row_vector", &|r| r.census.row_vector as f64);
        put("blocks_column_vector", &|r| r.census.column_vector as f64);
        put("blocks_other", &|r| r.census.other as f64);

        let mut curves = Vec::new();
        let mut achievability_violations = 0;
        if let Some(first) = records.first() {
            for (k, point) in first.capacities.iter().enumerate() {
                let mut svd = Moments::default();
                let mut srbp = Moments::default();
                for r in records {
                    let p = &r.capacities[k];
                    if let Some(v) = p.svd {
                        svd.push(v);
                    }
                    if let Some(v) = p.srbp {
                        srbp.push(v);
                    }
                    if let (Some(a), Some(b)) = (p.srbp, p.svd) {
                        if a > b + ACHIEVABILITY_TOLERANCE {
                            achievability_violations += 1;
                        }
                    }
                }
                let pick = |m: &Moments| (m.count > 0).then(|| m.summary());
                curves.push(CurvePoint {
                    snr_db: point.snr_db,
                    c_svd: pick(&svd).map(|s| s.mean),
                    c_srbp: pick(&srbp).map(|s| s.mean),
                    c_svd_stderr: pick(&svd).map(|s| s.stderr),
                    c_srbp_stderr: pick(&srbp).map(|s| s.stderr),
                });
            }
        }

        Self {
            experiment: experiment.to_string(),
            config: cfg.clone(),
            per_metric,
            census: CensusSummary::from_records(records),
            curves,
            accounting_violations: records.iter().filter(|r| !r.accounting_holds()).count(),
            block_bound_violations: records.iter().filter(|r| !r.within_block_bound()).count(),
            achievability_violations,
        }
    }

    pub fn metric(&self, name: &str) -> Option<MetricSummary> {
        self.per_metric.get(name).copied()
    }

    pub fn mean(&self, name: &str) -> f64 {
        self.metric(name).map_or(f64::NAN, |m| m.mean)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| invalid(format!("json encoding failed: {e}")))
    }

    /// `metric,mean,stderr`.
    pub fn write_metrics_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "mean", "stderr"])
            .map_err(csv_err)?;
        for (name, m) in &self.per_metric {
            w.write_record([name.clone(), m.mean.to_string(), m.stderr.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// `class,average,percentage`.
    pub fn write_census_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["class", "average", "percentage"])
            .map_err(csv_err)?;
        let c = &self.census;
        for (name, share) in [
            ("single", c.single),
            ("row_vector", c.row_vector),
            ("column_vector", c.column_vector),
            ("other", c.other),
        ] {
            w.write_record([
                name.to_string(),
                share.average.to_string(),
                share.percentage.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// `snr_db,c_svd,c_srbp,ratio`; missing schemes are empty fields.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["snr_db", "c_svd", "c_srbp", "ratio"])
            .map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.curves {
            w.write_record([
                p.snr_db.to_string(),
                opt(p.c_svd),
                opt(p.c_srbp),
                opt(p.ratio()),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io_err)
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    invalid(format!("csv write failed: {e}"))
}

fn io_err(e: std::io::Error) -> crate::Error {
    invalid(format!("write failed: {e}"))
}

/// Table of mean beam pairs, SVD rank and the surrounding statistics.
pub fn run_dof_trials(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    let records = run_trials(cfg, false)?;
    Ok(AggregateReport::from_records("dof", cfg, &records))
}

/// Block-size classification; the census lives in [`AggregateReport::census`].
pub fn run_block_census(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    let records = run_trials(cfg, false)?;
    Ok(AggregateReport::from_records("block-census", cfg, &records))
}

/// Mean SVD and SRBP capacities over the SNR grid, on shared realizations.
pub fn run_capacity_sweep(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    if cfg.snr_grid_db.is_empty() {
        return Err(invalid("capacity sweep needs a nonempty SNR grid"));
    }
    let records = run_trials(cfg, true)?;
    Ok(AggregateReport::from_records(
        "capacity-sweep",
        cfg,
        &records,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(8).validate().is_ok());
        assert!(ExperimentConfig::new(8).with_trials(0).validate().is_err());
        assert!(ExperimentConfig::new(0).validate().is_err());
        assert!(ExperimentConfig::new(8).with_delta(1.5).validate().is_err());
        assert!(ExperimentConfig::new(8)
            .with_snr_grid(vec![0.0, 0.0])
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(8)
            .with_snr_grid(vec![3.0, 1.0])
            .validate()
            .is_err());
    }

    #[test]
    fn default_grid() {
        let g = default_snr_grid();
        assert_eq!(g.len(), 16);
        assert_eq!((g[0], g[15]), (0.0, 30.0));
    }

    #[test]
    fn trial_streams_are_isolated() {
        let cfg = ExperimentConfig::new(16).with_seed(3);
        let a = simulate_trial(&cfg, 5, false).unwrap();
        let b = simulate_trial(&cfg, 5, false).unwrap();
        assert_eq!(a, b);
        let other = ExperimentConfig::new(16).with_seed(3).with_trials(1);
        assert_eq!(simulate_trial(&other, 5, false).unwrap(), a);
    }

    #[test]
    fn dense_masks_have_full_rank() {
        let cfg = ExperimentConfig::new(12).with_delta(1.0).with_trials(50);
        let records = run_trials(&cfg, false).unwrap();
        assert!(records.iter().all(|r| r.svd_rank == 12));
    }

    #[test]
    fn census_percentages_sum_to_hundred() {
        let cfg = ExperimentConfig::new(32).with_trials(200).with_seed(1);
        let rep = run_block_census(&cfg).unwrap();
        assert!((rep.census.percentage_total() - 100.0).abs() < 0.01);
        assert!((rep.census.blocks_per_trial - rep.mean("n_d")).abs() < 1e-9);
    }

    #[test]
    fn capacity_sweep_needs_grid() {
        let cfg = ExperimentConfig::new(8)
            .with_trials(2)
            .with_snr_grid(vec![]);
        assert!(run_capacity_sweep(&cfg).is_err());
    }

    #[test]
    fn single_scheme_sweep_leaves_other_curve_empty() {
        let mut cfg = ExperimentConfig::new(8)
            .with_trials(5)
            .with_snr_grid(vec![0.0, 10.0]);
        cfg.schemes.srbp = false;
        let rep = run_capacity_sweep(&cfg).unwrap();
        assert!(rep
            .curves
            .iter()
            .all(|p| p.c_srbp.is_none() && p.c_svd.is_some()));
    }

    #[test]
    fn moments_match_direct_formula() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        let s = m.summary();
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.stderr - (var / 5.0).sqrt()).abs() < 1e-12);
    }
}
