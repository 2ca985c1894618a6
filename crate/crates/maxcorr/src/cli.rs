//! Command-line surface.
//!
//! Exit codes are a stable contract: 0 success, 1 domain or data error,
//! 2 usage error. Every run involving randomness prints its seed so the
//! exact invocation can be reproduced.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::conditions::{ConditionReport, VerdictThresholds};
use crate::corr::{
    largest_offdiag, standardize_columns, test_statistic, DataMatrix, DEFAULT_BLOCK,
};
use crate::dist::DistributionSpec;
use crate::io::{
    load_csv, write_report, write_values_csv, RunConfig, RunRequest, TestReport,
};
use crate::limit;
use crate::mc::{run_replications, McConfig, McMode};

#[derive(Parser)]
#[command(
    name = "maxcorr",
    version,
    about = "Largest-entry statistics of sample correlation matrices",
    long_about = "Coherence tests, their extreme-value limit law, Monte Carlo \
                  experiments, and tail-condition diagnostics for symmetric laws."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the full report as JSON to this path.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Write the resolved run configuration as JSON to this path.
    #[arg(long, value_name = "PATH")]
    emit_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence test of an observations-by-variables CSV dataset.
    Test {
        /// Input CSV (rows = observations, columns = variables).
        input: PathBuf,
        /// Drop constant columns instead of failing on them.
        #[arg(long)]
        skip_degenerate: bool,
        /// Column-block size of the scan kernel (tuning only).
        #[arg(long, default_value_t = DEFAULT_BLOCK)]
        block: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo experiment over random matrices or column pairs.
    Simulate {
        /// Law of the entries, e.g. normal, student-t:5, pareto:4,1+std.
        #[arg(long, default_value = "normal")]
        dist: String,
        /// Observations per column.
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Number of columns.
        #[arg(long, default_value_t = 50)]
        p: usize,
        /// Replications.
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Master seed; generated and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = automatic). Never affects results.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Statistic: test-stat, weak-law, or lemma:NAME with NAME one of
        /// self-normalized, mean-product, symmetrized-ratio, max-vs-single,
        /// levy, disjoint-max.
        #[arg(long, default_value = "test-stat")]
        mode: String,
        /// Ascending tail-curve thresholds (lemma modes).
        #[arg(long, value_delimiter = ',', value_name = "A,B,...")]
        thresholds: Vec<f64>,
        /// Also dump per-replication values as CSV.
        #[arg(long, value_name = "PATH")]
        values_csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tail-condition diagnostics for a law: double-tail integral, series,
    /// tail ratios, and trend verdicts.
    Condition {
        #[arg(long)]
        dist: String,
        /// Ascending sample sizes (>= 4 points spanning a decade).
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80,160,320")]
        n_grid: Vec<u64>,
        /// Ascending tail points, each > e.
        #[arg(long, value_delimiter = ',', default_value = "3,6,12,30,60,120")]
        x_grid: Vec<f64>,
        /// Required first/last decay for a holds-likely verdict.
        #[arg(long, default_value_t = VerdictThresholds::default().decay_factor)]
        decay_factor: f64,
        /// Ceiling the last value must undercut for holds-likely.
        #[arg(long, default_value_t = VerdictThresholds::default().floor)]
        floor: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Moment and tail table for a named law.
    Dist {
        #[arg(long)]
        dist: String,
        /// Absolute-moment orders to tabulate.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,6")]
        moments: Vec<f64>,
        /// Points at which to print the survival function.
        #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
        tail_points: Vec<f64>,
    },
    /// Tail probability of the limit law at a statistic value.
    Pvalue {
        /// Observed centered statistic t = n L^2 - a(p).
        #[arg(allow_negative_numbers = true)]
        t: f64,
    },
    /// Quantile of the limit law at probability q in (0,1).
    Quantile {
        #[arg(allow_negative_numbers = true)]
        q: f64,
    },
}

/// Parses arguments and runs a command, returning the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; they are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Test { input, skip_degenerate, block, out } => {
            cmd_test(&input, skip_degenerate, block, &out)
        }
        Command::Simulate {
            dist,
            n,
            p,
            reps,
            seed,
            threads,
            mode,
            thresholds,
            values_csv,
            out,
        } => cmd_simulate(&dist, n, p, reps, seed, threads, &mode, thresholds, values_csv, &out),
        Command::Condition { dist, n_grid, x_grid, decay_factor, floor, out } => {
            cmd_condition(&dist, &n_grid, &x_grid, decay_factor, floor, &out)
        }
        Command::Dist { dist, moments, tail_points } => cmd_dist(&dist, &moments, &tail_points),
        Command::Pvalue { t } => {
            let (p, clamped) = limit::pvalue_clamped(t);
            println!("{p}");
            if clamped {
                eprintln!("note: true value underflows f64; clamped");
            }
            Ok(())
        }
        Command::Quantile { q } => {
            let t = limit::quantile(q).map_err(|e| e.to_string())?;
            println!("{t}");
            Ok(())
        }
    }
}

fn parse_dist(s: &str) -> Result<DistributionSpec, String> {
    s.parse::<DistributionSpec>().map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

fn cmd_test(
    input: &PathBuf,
    skip_degenerate: bool,
    block: usize,
    out: &OutputArgs,
) -> Result<(), String> {
    let loaded = load_csv(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let first_pass = standardize_columns(&loaded).map_err(|e| e.to_string())?;

    let mut dropped: Vec<usize> = Vec::new();
    let matrix: DataMatrix<f64>;
    let z = if first_pass.degenerate_columns().is_empty() {
        matrix = loaded;
        first_pass
    } else if skip_degenerate {
        dropped = first_pass.degenerate_columns().to_vec();
        matrix = loaded.drop_columns(&dropped);
        if matrix.p() < 2 {
            return Err(format!(
                "only {} non-degenerate column(s) remain after dropping {:?}",
                matrix.p(),
                one_based(&dropped)
            ));
        }
        standardize_columns(&matrix).map_err(|e| e.to_string())?
    } else {
        return Err(format!(
            "column(s) {:?} are constant; re-run with --skip-degenerate to drop them",
            one_based(first_pass.degenerate_columns())
        ));
    };

    let (l, (i, j)) = largest_offdiag(&z, block).map_err(|e| e.to_string())?;
    let n = matrix.n();
    let p = matrix.p();
    let ts = test_statistic(n, l, p).map_err(|e| e.to_string())?;
    let (p_value, p_value_clamped) = limit::pvalue_clamped(ts.t);
    let report = TestReport {
        n,
        p,
        coherence: l,
        argmax_pair: (i + 1, j + 1),
        t_statistic: ts.t,
        weak_law: ts.weak_law,
        p_value,
        p_value_clamped,
        shape_ratio: n as f64 / p as f64,
        shape_warning: !(0.1..=10.0).contains(&(n as f64 / p as f64)),
        dropped_columns: one_based(&dropped),
    };

    println!("n = {}, p = {}, shape ratio n/p = {}", report.n, report.p, report.shape_ratio);
    if !report.dropped_columns.is_empty() {
        println!("dropped constant columns: {:?}", report.dropped_columns);
    }
    if report.shape_warning {
        println!("warning: n/p outside [0.1, 10]; the limit law is a stretch here");
    }
    println!(
        "coherence L = {} at columns ({}, {})",
        report.coherence, report.argmax_pair.0, report.argmax_pair.1
    );
    println!("statistic T = n L^2 - a(p) = {}", report.t_statistic);
    println!("weak-law statistic sqrt(n/log n) L = {}", report.weak_law);
    match (report.p_value_clamped, report.p_value) {
        (true, v) => println!("p-value < {v:e} (underflow clamp)"),
        (false, v) => println!("p-value = {v}"),
    }

    if let Some(path) = &out.output {
        write_report(&report, "test-report", path).map_err(|e| e.to_string())?;
        println!("report written to {}", path.display());
    }
    if let Some(path) = &out.emit_config {
        let cfg = RunConfig {
            seed: 0,
            threads: 0,
            output: out.output.clone(),
            values_csv: None,
            skip_degenerate,
            verdict_thresholds: VerdictThresholds::default(),
            request: RunRequest::Test { input: input.clone() },
        };
        write_report(&cfg, "run-config", path).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn one_based(zero_based: &[usize]) -> Vec<usize> {
    zero_based.iter().map(|i| i + 1).collect()
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    dist: &str,
    n: usize,
    p: usize,
    reps: usize,
    seed: Option<u64>,
    threads: usize,
    mode: &str,
    thresholds: Vec<f64>,
    values_csv: Option<PathBuf>,
    out: &OutputArgs,
) -> Result<(), String> {
    let spec = parse_dist(dist)?;
    let mode = parse_mode(mode, thresholds)?;
    let (seed, generated) = match seed {
        Some(s) => (s, false),
        None => (rand::random(), true),
    };
    let cfg = McConfig { dist: spec, n, p, reps, seed, mode, threads };
    println!("seed = {seed}{}", if generated { " (generated)" } else { "" });

    let report = run_replications(&cfg).map_err(|e| e.to_string())?;
    if report.shape_warning {
        println!(
            "warning: n/p = {} outside [0.1, 10]; the limit law is a stretch here",
            report.shape_ratio
        );
    }
    let s = &report.summary;
    println!(
        "reps = {}, mean = {}, median = {}, q95 = {}",
        report.values.len(),
        s.mean,
        s.median,
        s.q95
    );
    if let Some(ks) = report.ks_to_limit {
        println!("ks distance to limit law = {ks}");
    }
    if let Some(curves) = &report.tail_curves {
        for pt in curves {
            println!(
                "n * P(stat > {}) = {} (se {})",
                pt.threshold, pt.value, pt.std_error
            );
        }
    }
    println!(
        "wall = {:.2}s ({:.1} reps/s)",
        report.wall_seconds, report.reps_per_second
    );

    if let Some(path) = &out.output {
        write_report(&report, "mc-report", path).map_err(|e| e.to_string())?;
        println!("report written to {}", path.display());
    }
    if let Some(path) = &values_csv {
        let aux = report.aux_values.as_deref().map(|a| ("aux", a));
        write_values_csv(path, &report.values, aux).map_err(|e| e.to_string())?;
        println!("values written to {}", path.display());
    }
    if let Some(path) = &out.emit_config {
        let cfg_doc = RunConfig {
            seed,
            threads,
            output: out.output.clone(),
            values_csv,
            skip_degenerate: false,
            verdict_thresholds: VerdictThresholds::default(),
            request: RunRequest::Simulate {
                dist: parse_dist(dist)?,
                n,
                p,
                reps,
                mode: report.config.mode.clone(),
            },
        };
        write_report(&cfg_doc, "run-config", path).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn parse_mode(mode: &str, thresholds: Vec<f64>) -> Result<McMode, String> {
    match mode {
        "test-stat" => Ok(McMode::TestStat),
        "weak-law" => Ok(McMode::WeakLaw),
        _ => match mode.strip_prefix("lemma:") {
            Some(name) => {
                let stat = name.parse().map_err(|e: crate::mc::McError| e.to_string())?;
                Ok(McMode::Lemma { stat, thresholds })
            }
            None => Err(format!(
                "unknown mode '{mode}' (expected test-stat, weak-law, or lemma:NAME)"
            )),
        },
    }
}

// ---------------------------------------------------------------------------
// condition
// ---------------------------------------------------------------------------

fn cmd_condition(
    dist: &str,
    n_grid: &[u64],
    x_grid: &[f64],
    decay_factor: f64,
    floor: f64,
    out: &OutputArgs,
) -> Result<(), String> {
    let spec = parse_dist(dist)?;
    let th = VerdictThresholds { decay_factor, floor };
    let report = ConditionReport::evaluate_with(spec, n_grid, x_grid, &th)
        .map_err(|e| e.to_string())?;

    println!("dist = {}", report.dist);
    // Sequence endpoints span many decades; fixed-precision scientific
    // notation keeps the lines scannable.
    let span = |v: &[f64]| format!("{:.6e} -> {:.6e}", v[0], v[v.len() - 1]);
    println!(
        "integral16     {:<13} [{} over n = {}..{}]",
        report.verdicts.integral16.to_string(),
        span(&report.integral16),
        report.n_grid[0],
        report.n_grid[report.n_grid.len() - 1]
    );
    println!(
        "series111      {:<13} [summands {}]",
        report.verdicts.series111.to_string(),
        span(&report.series111_terms)
    );
    let r14: Vec<f64> = report.ratios.iter().map(|r| r.r14).collect();
    let r15: Vec<f64> = report.ratios.iter().map(|r| r.r15).collect();
    let rm: Vec<f64> = report.ratios.iter().map(|r| r.r_marginal).collect();
    println!("ratio14        {:<13} [{}]", report.verdicts.ratio14.to_string(), span(&r14));
    println!("ratio15        {:<13} [{}]", report.verdicts.ratio15.to_string(), span(&r15));
    println!(
        "ratio-marginal {:<13} [{}]",
        report.verdicts.ratio_marginal.to_string(),
        span(&rm)
    );

    if let Some(path) = &out.output {
        write_report(&report, "condition-report", path).map_err(|e| e.to_string())?;
        println!("report written to {}", path.display());
    }
    if let Some(path) = &out.emit_config {
        let cfg = RunConfig {
            seed: 0,
            threads: 0,
            output: out.output.clone(),
            values_csv: None,
            skip_degenerate: false,
            verdict_thresholds: th,
            request: RunRequest::Condition {
                dist: parse_dist(dist)?,
                n_grid: n_grid.to_vec(),
                x_grid: x_grid.to_vec(),
            },
        };
        write_report(&cfg, "run-config", path).map_err(|e| e.to_string())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dist
// ---------------------------------------------------------------------------

fn cmd_dist(dist: &str, moments: &[f64], tail_points: &[f64]) -> Result<(), String> {
    let spec = parse_dist(dist)?;
    println!("dist = {} (scale {})", spec, spec.scale());
    for &r in moments {
        let m = spec.moment_abs(r).map_err(|e| e.to_string())?;
        if m.is_finite() {
            println!("E|X|^{r} = {m}");
        } else {
            println!("E|X|^{r} = inf");
        }
    }
    for q in [0.5, 0.9, 0.99] {
        println!("quantile_abs({q}) = {}", spec.quantile_abs(q).map_err(|e| e.to_string())?);
    }
    for &x in tail_points {
        if x < 0.0 {
            return Err(format!("tail point {x} must be nonnegative"));
        }
        println!("P(|X| > {x}) = {}", spec.survival(x));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
