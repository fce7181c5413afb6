use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use treematch::eval;
use treematch::graph::{sample_er, GraphSample};
use treematch::harness::{self, HarnessError, RunConfig, OUT_DIR_ENV};
use treematch::matcher::DEFAULT_EMBED_CAP;
use treematch::tree;

const EXIT_CAP: u8 = 4;

#[derive(Parser)]
#[command(name = "treematch", version, about = "Greedy tree-planting matcher for independent Erdos-Renyi graph pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design and verify the template tree for (alpha, epsilon)
    Design {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = harness::DEFAULT_ZETA_MAX)]
        zeta_max: usize,
    },
    /// Sample a graph pair, run the matcher and write a JSON report
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: Common,
        /// Report path (default: $TREEMATCH_OUT_DIR/<name>.json, else stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write <prefix>.g.edges and <prefix>.h.edges
        #[arg(long)]
        graphs: Option<String>,
    },
    /// Run a grid of sizes and seeds in parallel and write CSV
    Sweep {
        /// Comma-separated vertex counts
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[command(flatten)]
        common: Common,
        /// CSV path (default: $TREEMATCH_OUT_DIR/sweep.csv, else stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact maximum overlap by exhaustive search (n <= 9)
    Brute {
        #[command(flatten)]
        source: GraphSource,
    },
    /// Union-bound exponent ln n! + ln P[Bin(C(n,2), p^2) >= ceil(rho n)]
    Bound {
        #[arg(long)]
        n: usize,
        /// Edge density; defaults to n^-alpha when --alpha is given
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        rho: f64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    epsilon: f64,
    /// Usage cap override (default ceil(4 zeta / eta) + 1)
    #[arg(long)]
    kappa0: Option<u64>,
    #[arg(long, default_value_t = harness::DEFAULT_ZETA_MAX)]
    zeta_max: usize,
    #[arg(long, default_value_t = DEFAULT_EMBED_CAP)]
    embed_cap: u64,
    /// Skip the random-permutation and threshold baselines
    #[arg(long)]
    no_baselines: bool,
}

impl Common {
    fn config(&self, n: usize, seed: u64) -> RunConfig {
        RunConfig {
            n,
            alpha: self.alpha,
            epsilon: self.epsilon,
            seed,
            kappa0: self.kappa0,
            zeta_max: self.zeta_max,
            embed_cap: self.embed_cap,
            baselines: !self.no_baselines,
        }
    }
}

#[derive(Args)]
struct GraphSource {
    /// Edge list of the first graph
    #[arg(long, requires = "h")]
    g: Option<PathBuf>,
    /// Edge list of the second graph
    #[arg(long, requires = "g")]
    h: Option<PathBuf>,
    /// Sample both graphs with this many vertices instead
    #[arg(long, conflicts_with = "g")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn default_out(name: &str) -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(|d| PathBuf::from(d).join(name))
}

fn print_line(value: &serde_json::Value) -> Result<(), HarnessError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{value}").map_err(|source| HarnessError::Io { path: "<stdout>".into(), source })
}

fn dispatch(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Design { alpha, epsilon, zeta_max } => {
            let d = tree::design(alpha, epsilon, zeta_max)?;
            print_line(&serde_json::to_value(d.summary())?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { n, seed, common, out, graphs } => {
            let config = common.config(n, seed);
            let (mut report, pair) = harness::run_with_graphs(&config)?;
            if let Some(prefix) = graphs {
                harness::dump_graphs(&pair, &prefix)?;
            }
            match out.or_else(|| default_out(&harness::default_report_name(&config))) {
                Some(path) => {
                    harness::write_report(&mut report, &path)?;
                    eprintln!(
                        "wrote {} (overlap {}, certified {}, {} of {} steps succeeded)",
                        path.display(),
                        report.overlap.value,
                        report.overlap.per_step_certified,
                        report.digest.successes,
                        report.digest.steps
                    );
                }
                None => print_line(&serde_json::to_value(&report)?)?,
            }
            if !report.certificate.ok {
                return Err(HarnessError::Config(format!(
                    "certificate recheck failed: {}",
                    report.certificate.violations.join("; ")
                )));
            }
            if report.digest.cap_hits > 0 {
                eprintln!("embedding cap reached in {} steps; raise --embed-cap", report.digest.cap_hits);
                return Ok(ExitCode::from(EXIT_CAP));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { n, seeds, common, out } => {
            let configs = harness::sweep_configs(&common.config(0, 0), &n, &seeds);
            let rows = harness::sweep(&configs)?;
            match out.or_else(|| default_out("sweep.csv")) {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.into(), source })?;
                    }
                    let file = std::fs::File::create(&path)
                        .map_err(|source| HarnessError::Io { path: path.clone(), source })?;
                    harness::write_sweep_csv(&rows, file)?;
                    eprintln!("wrote {} ({} rows)", path.display(), rows.len());
                }
                None => harness::write_sweep_csv(&rows, std::io::stdout().lock())?,
            }
            if rows.iter().any(|r| r.cap_hits.unwrap_or(0) > 0) {
                eprintln!("embedding cap reached in some runs; raise --embed-cap");
                return Ok(ExitCode::from(EXIT_CAP));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Brute { source } => {
            let (g, h) = load_pair(&source)?;
            let (pi, value) = eval::brute_force_max(&g, &h)?;
            print_line(&json!({ "n": g.n(), "value": value, "permutation": pi }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound { n, p, alpha, rho } => {
            let p = match (p, alpha) {
                (Some(p), _) => p,
                (None, Some(a)) => (n as f64).powf(-a),
                (None, None) => return Err(HarnessError::Config("give --p or --alpha".into())),
            };
            let value = eval::first_moment_bound(n, p, rho)?;
            let threshold = (rho * n as f64).ceil();
            // JSON has no infinities: -inf is reported as null with a flag
            print_line(&json!({
                "n": n,
                "p": p,
                "rho": rho,
                "threshold": threshold,
                "log_bound": value.is_finite().then_some(value),
                "tail_is_zero": value == f64::NEG_INFINITY,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_pair(source: &GraphSource) -> Result<(GraphSample, GraphSample), HarnessError> {
    match (&source.g, &source.h, source.n) {
        (Some(gp), Some(hp), _) => {
            let read = |p: &PathBuf| -> Result<GraphSample, HarnessError> {
                let f = std::fs::File::open(p).map_err(|e| HarnessError::Io { path: p.clone(), source: e })?;
                Ok(GraphSample::read_edge_list(std::io::BufReader::new(f))?)
            };
            let g = read(gp)?;
            let h = read(hp)?;
            if g.n() != h.n() {
                return Err(HarnessError::Config(format!("vertex counts differ: {} vs {}", g.n(), h.n())));
            }
            Ok((g, h))
        }
        (None, None, Some(n)) => Ok((sample_er(n, source.p, source.seed)?, sample_er(n, source.p, source.seed ^ 0x9E37_79B9_7F4A_7C15)?)),
        _ => Err(HarnessError::Config("give --g and --h, or --n".into())),
    }
}
