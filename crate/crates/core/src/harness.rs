//! End-to-end experiments: sample, design, match, evaluate, report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::eval::{self, EvalError, OverlapResult};
use crate::graph::{sample_er, GraphError, GraphSample};
use crate::matcher::{self, MatchConfig, MatchError, StepRecord};
use crate::rational;
use crate::tree::{self, Design, DesignError, DesignSummary};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TREEMATCH_OUT_DIR";

const H_SEED_XOR: u64 = 0x9E37_79B9_7F4A_7C15;
const ORDER_SEED_XOR: u64 = 0xD1B5_4A32_D192_ED03;
const BASELINE_SEED_XOR: u64 = 0x8CB9_2BA7_2F3D_8DD7;

pub const DEFAULT_ZETA_MAX: usize = 10;
pub const DEFAULT_RANDOM_SAMPLES: usize = 100;
pub const DEFAULT_THRESHOLD: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// 2 for configuration problems, 3 when no admissible tree exists.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Design(
                DesignError::EtaInfeasible { .. } | DesignError::ZetaBudget { .. } | DesignError::Infeasible { .. },
            ) => 3,
            HarnessError::Io { .. } | HarnessError::Json(_) | HarnessError::Csv(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub kappa0: Option<u64>,
    pub zeta_max: usize,
    pub embed_cap: u64,
    pub baselines: bool,
}

impl RunConfig {
    pub fn new(n: usize, alpha: f64, epsilon: f64, seed: u64) -> Self {
        RunConfig {
            n,
            alpha,
            epsilon,
            seed,
            kappa0: None,
            zeta_max: DEFAULT_ZETA_MAX,
            embed_cap: matcher::DEFAULT_EMBED_CAP,
            baselines: true,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 2 {
            return Err(HarnessError::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.n > u32::MAX as usize / 2 {
            return Err(HarnessError::Config(format!("n = {} is too large", self.n)));
        }
        if self.embed_cap == 0 {
            return Err(HarnessError::Config("embed cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeReport {
    #[serde(flatten)]
    pub design: DesignSummary,
    /// usage cap in force (the override when given)
    pub kappa0_used: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceDigest {
    pub steps: usize,
    pub successes: usize,
    pub failures: usize,
    pub cap_hits: usize,
    pub mean_cand_size: f64,
    pub mean_explored: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdBaseline {
    pub threshold: usize,
    pub hits: usize,
    pub overlap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Baselines {
    /// `C(n,2) p^2`
    pub expected_random: f64,
    pub random_samples: usize,
    pub random_mean: f64,
    pub random_std: f64,
    pub threshold: ThresholdBaseline,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Fields that legitimately differ between otherwise identical runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMeta {
    pub wallclock_ms: u64,
    pub out_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub p: f64,
    pub edges_g: usize,
    pub edges_h: usize,
    pub tree: TreeReport,
    /// `(1 - eps) / (2 alpha - 1)`
    pub target_ratio: f64,
    pub digest: TraceDigest,
    pub overlap: OverlapResult,
    pub certified_ratio: f64,
    pub certificate: Certificate,
    pub baselines: Option<Baselines>,
    pub permutation: Vec<u32>,
    pub trace: Vec<StepRecord>,
    pub meta: RunMeta,
}

/// Both graphs of an experiment.
pub struct GraphPair {
    pub g: GraphSample,
    pub h: GraphSample,
    pub p: f64,
}

/// `p = n^-alpha`; the first graph uses `seed`, the second a fixed xor of it.
pub fn sample_pair(n: usize, alpha: f64, seed: u64) -> Result<GraphPair, HarnessError> {
    let p = (n as f64).powf(-alpha);
    Ok(GraphPair { g: sample_er(n, p, seed)?, h: sample_er(n, p, seed ^ H_SEED_XOR)?, p })
}

pub fn ordering_seed(seed: u64) -> u64 {
    seed ^ ORDER_SEED_XOR
}

pub fn run_experiment(config: &RunConfig) -> Result<RunReport, HarnessError> {
    let (report, _) = run_with_graphs(config)?;
    Ok(report)
}

/// Like [`run_experiment`] but also hands back the sampled graphs.
pub fn run_with_graphs(config: &RunConfig) -> Result<(RunReport, GraphPair), HarnessError> {
    let start = Instant::now();
    config.validate()?;
    let design = tree::design(config.alpha, config.epsilon, config.zeta_max)?;
    let pair = sample_pair(config.n, config.alpha, config.seed)?;
    let report = run_on(config, &design, &pair, start)?;
    Ok((report, pair))
}

fn run_on(config: &RunConfig, design: &Design, pair: &GraphPair, start: Instant) -> Result<RunReport, HarnessError> {
    let kappa0 = config.kappa0.unwrap_or(design.params.kappa0);
    if kappa0 == 0 {
        return Err(HarnessError::Config("kappa0 must be positive".into()));
    }
    let mcfg = MatchConfig {
        eta: design.params.eta.clone(),
        kappa0,
        embed_cap: config.embed_cap,
        seed: ordering_seed(config.seed),
    };
    let outcome = matcher::run_greedy(&pair.g, &pair.h, &design.tree, mcfg)?;
    let cert = matcher::verify_certificates(&pair.g, &pair.h, &design.tree, kappa0, &outcome);
    let n = config.n;
    let steps = outcome.trace.len();
    let mean = |f: fn(&StepRecord) -> usize| {
        if steps == 0 {
            0.0
        } else {
            outcome.trace.iter().map(f).sum::<usize>() as f64 / steps as f64
        }
    };
    let digest = TraceDigest {
        steps,
        successes: outcome.successes,
        failures: steps - outcome.successes,
        cap_hits: outcome.cap_hits(),
        mean_cand_size: mean(|r| r.cand_size),
        mean_explored: mean(|r| r.explored),
    };
    let baselines = if config.baselines {
        Some(baselines(pair, n, config.seed, rational::to_f64(&design.params.eta))?)
    } else {
        None
    };
    let certified = design.tree.zeta() * outcome.successes;
    Ok(RunReport {
        config: config.clone(),
        p: pair.p,
        edges_g: pair.g.edge_count(),
        edges_h: pair.h.edge_count(),
        tree: TreeReport { design: design.summary(), kappa0_used: kappa0 },
        target_ratio: rational::to_f64(&design.requested_ratio()),
        digest,
        overlap: OverlapResult { value: cert.overlap, per_step_certified: certified, ratio: cert.overlap as f64 / n as f64 },
        certified_ratio: certified as f64 / n as f64,
        certificate: Certificate { ok: cert.ok(), violations: cert.violations },
        baselines,
        permutation: outcome.permutation,
        trace: outcome.trace,
        meta: RunMeta { wallclock_ms: start.elapsed().as_millis() as u64, out_path: None },
    })
}

fn baselines(pair: &GraphPair, n: usize, seed: u64, eta: f64) -> Result<Baselines, HarnessError> {
    let samples = eval::random_permutation_overlaps(&pair.g, &pair.h, DEFAULT_RANDOM_SAMPLES, seed ^ BASELINE_SEED_XOR)?;
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<usize>() as f64 / k;
    let var = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let th = eval::threshold_matcher(&pair.g, &pair.h, DEFAULT_THRESHOLD, eta)?;
    Ok(Baselines {
        expected_random: eval::expected_random_overlap(n, pair.p),
        random_samples: samples.len(),
        random_mean: mean,
        random_std: var.sqrt(),
        threshold: ThresholdBaseline {
            threshold: DEFAULT_THRESHOLD,
            hits: th.hit_count(),
            overlap: eval::overlap(&pair.g, &pair.h, &th.permutation)?,
        },
    })
}

/// Default report location inside `dir`.
pub fn default_report_name(config: &RunConfig) -> String {
    format!("run_n{}_a{}_e{}_s{}.json", config.n, config.alpha, config.epsilon, config.seed)
}

/// Writes pretty JSON with a trailing newline and records the path in `meta`.
pub fn write_report(report: &mut RunReport, path: &Path) -> Result<(), HarnessError> {
    report.meta.out_path = Some(path.display().to_string());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Writes both edge lists as `<prefix>.g.edges` and `<prefix>.h.edges`.
pub fn dump_graphs(pair: &GraphPair, prefix: &str) -> Result<(PathBuf, PathBuf), HarnessError> {
    let gp = PathBuf::from(format!("{prefix}.g.edges"));
    let hp = PathBuf::from(format!("{prefix}.h.edges"));
    for (graph, path) in [(&pair.g, &gp), (&pair.h, &hp)] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        graph.write_edge_list(std::io::BufWriter::new(file))?;
    }
    Ok((gp, hp))
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub chi: Option<usize>,
    pub zeta: Option<usize>,
    pub successes: Option<usize>,
    pub steps: Option<usize>,
    pub overlap: Option<usize>,
    pub ratio: Option<f64>,
    pub certified_ratio: Option<f64>,
    pub target_ratio: Option<f64>,
    pub wallclock_ms: u64,
    pub random_mean: Option<f64>,
    pub cap_hits: Option<usize>,
    pub error: String,
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "n",
    "alpha",
    "epsilon",
    "seed",
    "chi",
    "zeta",
    "successes",
    "steps",
    "overlap",
    "ratio",
    "certified_ratio",
    "target_ratio",
    "wallclock_ms",
    "random_mean",
    "cap_hits",
    "error",
];

fn row_for(config: &RunConfig) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        n: config.n,
        alpha: config.alpha,
        epsilon: config.epsilon,
        seed: config.seed,
        chi: None,
        zeta: None,
        successes: None,
        steps: None,
        overlap: None,
        ratio: None,
        certified_ratio: None,
        target_ratio: None,
        wallclock_ms: 0,
        random_mean: None,
        cap_hits: None,
        error: String::new(),
    };
    match run_experiment(config) {
        Ok(r) => {
            row.chi = Some(r.tree.design.chi);
            row.zeta = Some(r.tree.design.zeta);
            row.successes = Some(r.digest.successes);
            row.steps = Some(r.digest.steps);
            row.overlap = Some(r.overlap.value);
            row.ratio = Some(r.overlap.ratio);
            row.certified_ratio = Some(r.certified_ratio);
            row.target_ratio = Some(r.target_ratio);
            row.random_mean = r.baselines.as_ref().map(|b| b.random_mean);
            row.cap_hits = Some(r.digest.cap_hits);
            if !r.certificate.ok {
                row.error = format!("certificate: {}", r.certificate.violations.join("; "));
            }
        }
        Err(e) => row.error = e.to_string(),
    }
    row.wallclock_ms = start.elapsed().as_millis() as u64;
    row
}

/// Runs every config in parallel; rows come back in input order. Failed runs
/// become rows with the `error` column set.
pub fn sweep(configs: &[RunConfig]) -> Result<Vec<SweepRow>, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one configuration".into()));
    }
    Ok(configs.par_iter().map(row_for).collect())
}

/// Cartesian product of sizes and seeds sharing the remaining settings.
pub fn sweep_configs(base: &RunConfig, ns: &[usize], seeds: &[u64]) -> Vec<RunConfig> {
    ns.iter()
        .flat_map(|&n| seeds.iter().map(move |&seed| RunConfig { n, seed, ..base.clone() }))
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::Io { path: PathBuf::from("<csv>"), source: e })?;
    Ok(())
}
