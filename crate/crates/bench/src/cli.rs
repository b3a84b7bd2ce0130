//! Command-line front end: `run`, `pe` and `selfcheck`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use slse_core::sketch::SketchKind;

use crate::config::{parse_count, ExperimentConfig, SolverKind, StopMode};
use crate::error::{BenchError, Result};
use crate::experiment::{estimate_pe, pe_limit, run_experiment, setup_trial, ExperimentOutput};
use crate::output::{emit_outputs, render_csv, OutputPaths};

#[derive(Debug, Parser)]
#[command(name = "slse-bench", version, about = "Benchmark sequential sketched least-squares solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run seeded trials and write trajectories and summaries.
    Run(RunArgs),
    /// Monte-Carlo estimate of the relative prediction efficiency of one sketch.
    Pe(PeArgs),
    /// Quick internal consistency checks on tiny problems.
    Selfcheck,
}

/// Every override is kept as text and routed through the same parser as config files.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    /// Condition number of the generated design.
    #[arg(long)]
    pub cond: Option<String>,
    #[arg(long)]
    pub sigma2: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Comma-separated subset of slse-frs, m-ihs, pcg.
    #[arg(long)]
    pub solvers: Option<String>,
    /// srht, countsketch or gaussian.
    #[arg(long)]
    pub sketch: Option<String>,
    #[arg(long)]
    pub omega: Option<String>,
    /// One count, a comma list with one count per subproblem, or `bound` (smallest counts meeting the lower bounds).
    #[arg(long)]
    pub ai: Option<String>,
    #[arg(long)]
    pub r_mult: Option<String>,
    #[arg(long)]
    pub m1_mult: Option<String>,
    /// Comma-separated sketch sizes replacing the doubling schedule.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    /// oracle, residual or fixed.
    #[arg(long)]
    pub stop: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub target_factor: Option<String>,
    /// practical or theorem.
    #[arg(long)]
    pub params: Option<String>,
    /// growing or shrinking precision ratio for the theorem schedule.
    #[arg(long)]
    pub orientation: Option<String>,
    #[arg(long)]
    pub memory_cap_mb: Option<String>,
    /// Keep the momentum term across subproblem boundaries.
    #[arg(long)]
    pub carry_momentum: bool,
    /// Write zero wall times so output depends only on the configuration.
    #[arg(long)]
    pub no_wall_clock: bool,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeArgs {
    #[arg(long, default_value = "2^12", value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value = "2^6", value_parser = parse_count)]
    pub d: usize,
    #[arg(long, default_value = "2^11", value_parser = parse_count)]
    pub m: usize,
    #[arg(long, default_value = "srht", value_parser = parse_sketch)]
    pub sketch: SketchKind,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_sketch(s: &str) -> std::result::Result<SketchKind, String> {
    s.parse().map_err(|e: slse_core::Error| e.to_string())
}

impl RunArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let pairs = [
            ("n", &self.n),
            ("d", &self.d),
            ("cond", &self.cond),
            ("sigma2", &self.sigma2),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("solvers", &self.solvers),
            ("sketch", &self.sketch),
            ("omega", &self.omega),
            ("ai", &self.ai),
            ("r-mult", &self.r_mult),
            ("m1-mult", &self.m1_mult),
            ("sizes", &self.sizes),
            ("t-max", &self.t_max),
            ("stop", &self.stop),
            ("tol", &self.tol),
            ("target-factor", &self.target_factor),
            ("params", &self.params),
            ("orientation", &self.orientation),
            ("memory-cap-mb", &self.memory_cap_mb),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.carry_momentum {
            cfg.reset_momentum = false;
        }
        if self.no_wall_clock {
            cfg.wall_clock = false;
        }
        for (slot, flag) in [(&mut cfg.out_csv, &self.out_csv), (&mut cfg.out_json, &self.out_json), (&mut cfg.out_svg, &self.out_svg)] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        Ok(cfg)
    }
}

fn sci(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"))
}

pub fn print_summary(out: &mut dyn Write, cfg: &ExperimentConfig, result: &ExperimentOutput) -> std::io::Result<()> {
    writeln!(
        out,
        "n={} d={} cond={:e} sigma2={:e} trials={} sketch={} target={}x OLS",
        cfg.n, cfg.d, cfg.kappa, cfg.sigma2, cfg.trials, cfg.sketch, cfg.target_factor
    )?;
    writeln!(
        out,
        "{:<10} {:>12} {:>12} {:>8} {:>14} {:>12} {:>12}",
        "solver", "mean final", "mean OLS", "reached", "flops-to-tgt", "time-to-tgt", "init s"
    )?;
    for s in &result.summary.solvers {
        writeln!(
            out,
            "{:<10} {:>12.3e} {:>12.3e} {:>5}/{:<2} {:>14} {:>12} {:>12.3e}",
            s.solver.as_str(),
            s.mean_final_pred_error,
            s.mean_ols_error,
            s.reached_target,
            s.trials,
            sci(s.mean_flops_to_target),
            sci(s.mean_time_to_target),
            s.mean_init_seconds
        )?;
    }
    Ok(())
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.to_config()?;
    let result = run_experiment(&cfg)?;
    let paths = OutputPaths {
        csv: cfg.out_csv.clone(),
        json: cfg.out_json.clone(),
        svg: cfg.out_svg.clone(),
    };
    emit_outputs(&result.records, &cfg, &result.summary, &paths)?;
    print_summary(out, &cfg, &result).map_err(|e| BenchError::io("<stdout>", e))
}

pub fn cmd_pe(args: &PeArgs, out: &mut dyn Write) -> Result<()> {
    let pe = estimate_pe(args.n, args.d, args.m, args.sketch, args.trials, args.seed)?;
    writeln!(
        out,
        "pe estimate {pe:.6} limit {:.6} (n={} d={} m={} sketch={} trials={})",
        pe_limit(args.n, args.d, args.m),
        args.n,
        args.d,
        args.m,
        args.sketch,
        args.trials
    )
    .map_err(|e| BenchError::io("<stdout>", e))
}

/// Tiny end-to-end checks; fails with a precondition error if any check fails.
pub fn cmd_selfcheck(out: &mut dyn Write) -> Result<()> {
    let tiny = ExperimentConfig {
        n: 1 << 8,
        d: 1 << 3,
        kappa: 10.0,
        sigma2: 0.0,
        trials: 2,
        stop: StopMode::Fixed,
        t_max: 40,
        wall_clock: false,
        solvers: SolverKind::ALL.to_vec(),
        ..Default::default()
    };
    let mut failures = 0;
    let mut report = |name: &str, ok: bool, detail: String| -> Result<()> {
        if !ok {
            failures += 1;
        }
        writeln!(out, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }).map_err(|e| BenchError::io("<stdout>", e))
    };

    let first = run_experiment(&tiny)?;
    let second = run_experiment(&tiny)?;
    let same = render_csv(&first.records)? == render_csv(&second.records)?;
    report("deterministic csv", same, format!("{} rows", first.records.len()))?;

    let setup = setup_trial(&tiny, 0)?;
    let signal = slse_core::dense::norm2(&slse_core::dense::matvec(&setup.model.x, &setup.model.beta_true)?).powi(2);
    let worst = first
        .summary
        .trials
        .iter()
        .filter(|t| t.trial == 0 && t.solver != SolverKind::Pcg)
        .map(|t| t.final_pred_error)
        .fold(0.0, f64::max);
    report("noiseless recovery", worst <= 1e-18 * signal, format!("max final error {worst:.3e}"))?;

    let pe = estimate_pe(1 << 7, 4, 1 << 7, SketchKind::Srht, 4, 0)?;
    report("unsketched efficiency", (pe - 1.0).abs() < 1e-9, format!("pe {pe:.12}"))?;

    if failures > 0 {
        return Err(BenchError::Precondition(format!("{failures} self-check(s) failed")));
    }
    Ok(())
}

/// Parse `args` (including the program name) and run; returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Pe(a) => cmd_pe(a, out),
        Command::Selfcheck => cmd_selfcheck(out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
