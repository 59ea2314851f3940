//! Seeded Monte Carlo runs comparing the realized giant with its prediction.
//!
//! Every `(n, trial)` cell draws from its own stream seeded by
//! [`derive_trial_seed`], so records do not depend on scheduling or on the
//! number of worker threads.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{predict, CriticalityReport};
use crate::degree_model::{BiDegreeDistribution, DistributionSpec, DEFAULT_TRUNCATION_TAIL};
use crate::error::{Error, Result};
use crate::exploration::{asymptotic_omega, default_omega, linear_core, CoreCriterion};
use crate::generator::{
    binomial_digraph, generate_simple, pair_configuration, Digraph, DEFAULT_MAX_ATTEMPTS,
};
use crate::scc::{cycle_census, strongly_connected_components, DEFAULT_WORK_CAP};
use crate::stream_from_seed;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for one cell of an experiment grid:
/// `mix(master ⊕ mix((n + φ) ⊕ mix(trial·φ + 1)))` with the SplitMix64
/// finalizer `mix` and `φ = 0x9e3779b97f4a7c15`. Each layer is a bijection,
/// so distinct trials at the same `(master, n)` never collide.
pub fn derive_trial_seed(master: u64, n: u64, trial: u64) -> u64 {
    let inner = mix64(trial.wrapping_mul(GOLDEN).wrapping_add(1));
    mix64(master ^ mix64(n.wrapping_add(GOLDEN) ^ inner))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    /// Configuration-model multigraph.
    Multigraph,
    /// Configuration model conditioned on simplicity by rejection.
    Simple,
    /// Binomial digraph with `p = λ/n`, λ the family's mean degree.
    Binomial,
}

impl std::str::FromStr for GraphMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multigraph" | "multi" => Ok(GraphMode::Multigraph),
            "simple" => Ok(GraphMode::Simple),
            "binomial" => Ok(GraphMode::Binomial),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

/// Threshold `ω` used for the linear core at each `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaPolicy {
    /// `⌈ln² n⌉`.
    LogSquared,
    /// `⌈ln⁶ n⌉`.
    LogSixth,
    Fixed(u64),
}

impl OmegaPolicy {
    pub fn omega(self, n: usize) -> u64 {
        match self {
            OmegaPolicy::LogSquared => default_omega(n),
            OmegaPolicy::LogSixth => asymptotic_omega(n).ceil() as u64,
            OmegaPolicy::Fixed(w) => w.max(1),
        }
    }
}

impl std::str::FromStr for OmegaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log2" | "log-squared" => Ok(OmegaPolicy::LogSquared),
            "log6" | "log-sixth" => Ok(OmegaPolicy::LogSixth),
            other => other
                .parse()
                .map(OmegaPolicy::Fixed)
                .map_err(|_| Error::InvalidConfig(format!("unknown omega policy {other:?}"))),
        }
    }
}

/// Growing sequence `a_n` against which subcritical giants are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    LogSquared,
    Log,
    Sqrt,
}

impl Schedule {
    pub fn value(self, n: usize) -> f64 {
        let n = n.max(2) as f64;
        match self {
            Schedule::LogSquared => n.ln().powi(2),
            Schedule::Log => n.ln(),
            Schedule::Sqrt => n.sqrt(),
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log2" | "log-squared" => Ok(Schedule::LogSquared),
            "log" => Ok(Schedule::Log),
            "sqrt" => Ok(Schedule::Sqrt),
            other => Err(Error::InvalidConfig(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: DistributionSpec,
    pub truncation_tail: f64,
    /// Strictly ascending.
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub mode: GraphMode,
    /// Compute the linear core with this threshold policy; `None` skips it.
    pub omega: Option<OmegaPolicy>,
    pub core_criterion: CoreCriterion,
    /// Cycle census cutoff length; `None` skips the census.
    pub census_max_length: Option<usize>,
    pub census_work_cap: u64,
    pub max_attempts: usize,
    pub schedule: Schedule,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(family: DistributionSpec, n_list: Vec<usize>, trials: u64, seed: u64) -> Self {
        Self {
            family,
            truncation_tail: DEFAULT_TRUNCATION_TAIL,
            n_list,
            trials,
            seed,
            mode: GraphMode::Multigraph,
            omega: None,
            core_criterion: CoreCriterion::LevelThreshold,
            census_max_length: None,
            census_work_cap: DEFAULT_WORK_CAP,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            schedule: Schedule::LogSquared,
            workers: None,
        }
    }

    pub fn with_core(mut self, policy: OmegaPolicy) -> Self {
        self.omega = Some(policy);
        self
    }

    pub fn with_census(mut self, max_length: usize) -> Self {
        self.census_max_length = Some(max_length);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidConfig("n list is empty".into()));
        }
        if self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "n list must be positive and strictly ascending".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.census_max_length == Some(0) {
            return Err(Error::InvalidConfig(
                "cycle length cutoff must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Measurements from one generated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: u64,
    pub seed: u64,
    pub arcs: usize,
    pub v_giant: usize,
    pub e_giant: usize,
    pub v_ratio: f64,
    pub e_ratio: f64,
    pub second_order: usize,
    pub omega: Option<u64>,
    pub core_ratio: Option<f64>,
    pub core_edge_ratio: Option<f64>,
    /// `|core \ giant|` and `|giant \ core|`.
    pub core_minus_giant: Option<usize>,
    pub giant_minus_core: Option<usize>,
    /// Cycle counts for lengths `1..=max`, when the census ran.
    pub cycle_counts: Option<Vec<u64>>,
    pub cycles_truncated: bool,
    pub ms_generate: f64,
    pub ms_scc: f64,
}

impl TrialRecord {
    pub fn cycles_total(&self) -> Option<u64> {
        self.cycle_counts.as_ref().map(|c| c.iter().sum())
    }

    /// Equality ignoring wall-clock timings.
    pub fn same_measurements(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self {
            ms_generate: 0.0,
            ms_scc: 0.0,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

/// One CSV row; the column set and order is fixed.
#[derive(Debug, Serialize)]
struct CsvRow {
    n: usize,
    trial: u64,
    seed: u64,
    v_giant: usize,
    e_giant: usize,
    v_ratio: f64,
    e_ratio: f64,
    core_ratio: Option<f64>,
    core_edge_ratio: Option<f64>,
    second_order: usize,
    cycles_total: Option<u64>,
    ms_generate: f64,
    ms_scc: f64,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "n",
    "trial",
    "seed",
    "v_giant",
    "e_giant",
    "v_ratio",
    "e_ratio",
    "core_ratio",
    "core_edge_ratio",
    "second_order",
    "cycles_total",
    "ms_generate",
    "ms_scc",
];

/// Summary moments of a sample; the variance is the unbiased estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub variance: f64,
    pub second_moment: f64,
    pub stderr: f64,
}

impl SampleStats {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len() as f64;
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                variance: f64::NAN,
                second_moment: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / k;
        let second_moment = values.iter().map(|v| v * v).sum::<f64>() / k;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            variance,
            second_moment,
            stderr: (variance / k).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub trials: u64,
    pub v_ratio: SampleStats,
    pub e_ratio: SampleStats,
    pub core_ratio: Option<SampleStats>,
    pub max_giant_order: usize,
    /// The schedule value `a_n` and `max giant order / a_n`.
    pub a_n: f64,
    pub max_giant_over_a_n: f64,
    pub omega: Option<u64>,
    pub cycles_total: Option<SampleStats>,
    /// Per-length cycle statistics for lengths `1..=max`.
    pub cycles_by_length: Option<Vec<SampleStats>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub family: String,
    pub mode: GraphMode,
    pub seed: u64,
    pub prediction: CriticalityReport,
    pub sizes: Vec<SizeSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub records: Vec<TrialRecord>,
}

impl ExperimentOutcome {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(CsvRow {
                n: r.n,
                trial: r.trial,
                seed: r.seed,
                v_giant: r.v_giant,
                e_giant: r.e_giant,
                v_ratio: r.v_ratio,
                e_ratio: r.e_ratio,
                core_ratio: r.core_ratio,
                core_edge_ratio: r.core_edge_ratio,
                second_order: r.second_order,
                cycles_total: r.cycles_total(),
                ms_generate: r.ms_generate,
                ms_scc: r.ms_scc,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.summary)?;
        Ok(())
    }

    pub fn records_for(&self, n: usize) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(move |r| r.n == n)
    }
}

fn generate(
    config: &ExperimentConfig,
    dist: &BiDegreeDistribution,
    n: usize,
    seed: u64,
) -> Result<Digraph> {
    let mut rng = stream_from_seed(seed);
    match config.mode {
        GraphMode::Multigraph => Ok(pair_configuration(
            &dist.sample_sequence(n, &mut rng)?,
            &mut rng,
        )),
        GraphMode::Simple => {
            let seq = dist.sample_sequence(n, &mut rng)?;
            generate_simple(&seq, &mut rng, config.max_attempts)
        }
        GraphMode::Binomial => binomial_digraph(n, (dist.lambda() / n as f64).min(1.0), &mut rng),
    }
}

/// Generates and measures one graph.
pub fn run_trial(
    config: &ExperimentConfig,
    dist: &BiDegreeDistribution,
    n: usize,
    trial: u64,
) -> Result<TrialRecord> {
    let seed = derive_trial_seed(config.seed, n as u64, trial);
    let started = Instant::now();
    let g = generate(config, dist, n, seed)?;
    let ms_generate = started.elapsed().as_secs_f64() * 1e3;

    let started = Instant::now();
    let scc = strongly_connected_components(&g);
    let ms_scc = started.elapsed().as_secs_f64() * 1e3;

    let nf = n as f64;
    let mut record = TrialRecord {
        n,
        trial,
        seed,
        arcs: g.arc_count(),
        v_giant: scc.giant_order,
        e_giant: scc.giant_size,
        v_ratio: scc.giant_order as f64 / nf,
        e_ratio: scc.giant_size as f64 / nf,
        second_order: scc.second_order,
        omega: None,
        core_ratio: None,
        core_edge_ratio: None,
        core_minus_giant: None,
        giant_minus_core: None,
        cycle_counts: None,
        cycles_truncated: false,
        ms_generate,
        ms_scc,
    };
    if let Some(policy) = config.omega {
        let omega = policy.omega(n);
        let core = linear_core(&g, omega, config.core_criterion);
        let (a, b) = crate::exploration::symmetric_difference(&core.members, &scc.giant_members());
        record.omega = Some(omega);
        record.core_ratio = Some(core.len() as f64 / nf);
        record.core_edge_ratio = Some(core.core_edges as f64 / nf);
        record.core_minus_giant = Some(a);
        record.giant_minus_core = Some(b);
    }
    if let Some(max_length) = config.census_max_length {
        let census = cycle_census(&g, max_length, config.census_work_cap);
        record.cycle_counts = Some(census.counts.values().copied().collect());
        record.cycles_truncated = census.truncated;
    }
    Ok(record)
}

fn summarize(config: &ExperimentConfig, n: usize, records: &[&TrialRecord]) -> SizeSummary {
    let column = |f: &dyn Fn(&TrialRecord) -> Option<f64>| -> Option<SampleStats> {
        let values: Option<Vec<f64>> = records.iter().map(|r| f(r)).collect();
        values.map(|v| SampleStats::of(&v))
    };
    let max_giant_order = records.iter().map(|r| r.v_giant).max().unwrap_or(0);
    let a_n = config.schedule.value(n);
    let cycles_by_length = config.census_max_length.map(|len| {
        (0..len)
            .map(|k| {
                let v: Vec<f64> = records
                    .iter()
                    .map(|r| r.cycle_counts.as_ref().map_or(0.0, |c| c[k] as f64))
                    .collect();
                SampleStats::of(&v)
            })
            .collect()
    });
    SizeSummary {
        n,
        trials: records.len() as u64,
        v_ratio: column(&|r| Some(r.v_ratio)).expect("always present"),
        e_ratio: column(&|r| Some(r.e_ratio)).expect("always present"),
        core_ratio: config.omega.and_then(|_| column(&|r| r.core_ratio)),
        max_giant_order,
        a_n,
        max_giant_over_a_n: max_giant_order as f64 / a_n,
        omega: config.omega.map(|p| p.omega(n)),
        cycles_total: config
            .census_max_length
            .and_then(|_| column(&|r| r.cycles_total().map(|c| c as f64))),
        cycles_by_length,
    }
}

/// Runs every `(n, trial)` cell, in parallel across trials, and aggregates
/// per-`n` statistics beside the analytic prediction.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let dist = config.family.build(config.truncation_tail)?;
    let prediction = match config.mode {
        GraphMode::Binomial => predict(
            &DistributionSpec::PoissonPair { nu: dist.lambda() }.build(config.truncation_tail)?,
        )?,
        _ => predict(&dist)?,
    };
    let cells: Vec<(usize, u64)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let work = || -> Result<Vec<TrialRecord>> {
        cells
            .par_iter()
            .map(|&(n, t)| run_trial(config, &dist, n, t))
            .collect()
    };
    let records = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let sizes = config
        .n_list
        .iter()
        .map(|&n| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            summarize(config, n, &rows)
        })
        .collect();
    Ok(ExperimentOutcome {
        summary: ExperimentSummary {
            family: config.family.to_string(),
            mode: config.mode,
            seed: config.seed,
            prediction,
            sizes,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_trial_seed(1, 100, 5), derive_trial_seed(1, 100, 5));
        assert_ne!(derive_trial_seed(1, 100, 5), derive_trial_seed(1, 100, 6));
        assert_ne!(derive_trial_seed(1, 100, 5), derive_trial_seed(2, 100, 5));
        assert_ne!(derive_trial_seed(1, 100, 5), derive_trial_seed(1, 1000, 5));
    }

    #[test]
    fn seed_grid_has_no_collisions() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            for t in 0..250_000u64 {
                assert!(seen.insert(derive_trial_seed(42, n, t)));
            }
        }
    }

    #[test]
    fn config_validation() {
        let spec = DistributionSpec::Regular { d: 2 };
        assert!(ExperimentConfig::new(spec.clone(), vec![10, 100], 1, 0)
            .validate()
            .is_ok());
        assert!(ExperimentConfig::new(spec.clone(), vec![], 1, 0)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(spec.clone(), vec![100, 10], 1, 0)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(spec, vec![10], 0, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn regular_two_giant_is_nearly_everything() {
        let config = ExperimentConfig::new(DistributionSpec::Regular { d: 2 }, vec![1000], 5, 3);
        let out = run_experiment(&config).unwrap();
        assert_eq!(out.records.len(), 5);
        assert_eq!(out.summary.prediction.eta, 1.0);
        assert!(out.summary.sizes[0].v_ratio.mean > 0.95);
    }

    #[test]
    fn sample_stats() {
        let s = SampleStats::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 1.0);
        assert!((s.second_moment - 14.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn csv_header_is_fixed() {
        let config =
            ExperimentConfig::new(DistributionSpec::PoissonPair { nu: 1.5 }, vec![50], 2, 9)
                .with_census(4);
        let out = run_experiment(&config).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 3);
    }
}
