//! `qrecycle` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 infeasible problem.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::{damped_epr, epr_state, DampingParams, DensityMatrix};
use crate::experiment::{
    breakdown, evaluate_gamma, fmt_sig, run_sweep_with, summarize, write_csv, write_json, SweepRow,
    SweepSpec, SweepStatus,
};
use crate::filtering::{filter_branch, Povm, SchemeKind};
use crate::metrics::{concurrence, fidelity, ppt_report, reflected_pair_pt_eigenvalues, PptReport};
use crate::optimize::{solve_tier1, solve_tier2, FilterSolution, OptimizerConfig, RecyclePolicy};
use crate::qmath::ComplexMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qrecycle", version, about = "Entanglement distillation with recycled Gisin filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize the first- and second-tier filters for one damping value.
    Optimize(OptimizeArgs),
    /// Sweep the damping factor and write per-γ results.
    Sweep(SweepArgs),
    /// Per-outcome contributions to the recycled survival rate at one γ.
    Breakdown(BreakdownArgs),
    /// Print a filtered state with its fidelity, concurrence and PPT spectrum.
    Inspect(InspectArgs),
    /// PPT test of the doubly-reflected pair against its closed-form spectrum.
    Ppt(PptArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Full,
    Partial,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Full => SchemeKind::Full,
            SchemeArg::Partial => SchemeKind::Partial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Lattice size for the α scans.
    #[arg(long, default_value_t = 2001, value_parser = clap::value_parser!(u32).range(3..))]
    grid_points: u32,
    /// Golden-section iterations after the scan.
    #[arg(long, default_value_t = 60)]
    refine_iters: u32,
}

impl SolverArgs {
    fn config(&self, f_threshold: f64) -> anyhow::Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            grid_points: self.grid_points as usize,
            refine_iters: self.refine_iters as usize,
            f_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "full")]
    scheme: SchemeArg,
    #[arg(long, value_parser = unit_closed)]
    gamma: f64,
    /// Fidelity threshold F_th.
    #[arg(long, value_parser = unit_open)]
    fth: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "full")]
    scheme: SchemeArg,
    #[arg(long, value_parser = unit_open)]
    fth: f64,
    #[arg(long, default_value_t = 0.0, value_parser = unit_closed)]
    gamma_start: f64,
    #[arg(long, default_value_t = 1.0, value_parser = unit_closed)]
    gamma_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    gamma_step: f64,
    /// Only pairs reflected on both arms may be recycled (full scheme).
    #[arg(long)]
    restricted_rr: bool,
    /// Skip the 1e-4 refinement around feasibility boundaries.
    #[arg(long)]
    no_densify: bool,
    /// Write rows here; without it rows go to stdout and the summary to stderr.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: DataFormat,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct BreakdownArgs {
    #[arg(long, value_enum, default_value = "full")]
    scheme: SchemeArg,
    #[arg(long, value_parser = unit_closed)]
    gamma: f64,
    #[arg(long, value_parser = unit_open)]
    fth: f64,
    #[arg(long)]
    restricted_rr: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StateArg {
    /// Damped pair before any filter.
    RhoPrime,
    /// Full scheme: both transmitted.
    Tt,
    /// Full scheme: Alice transmitted, Bob reflected.
    Tr,
    /// Full scheme: Alice reflected, Bob transmitted.
    Rt,
    /// Full scheme: both reflected.
    Rr,
    /// Partial scheme: Alice transmitted.
    T,
    /// Partial scheme: Alice reflected.
    R,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long, value_parser = unit_closed)]
    gamma: f64,
    /// First-tier α; required for every state except rho-prime.
    #[arg(long, value_parser = unit_open)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "rho-prime")]
    state: StateArg,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct PptArgs {
    #[arg(long, value_parser = unit_closed)]
    gamma: f64,
    #[arg(long, value_parser = unit_closed)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn unit_closed(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{}", e.render().ansi());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Optimize(a) => cmd_optimize(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Breakdown(a) => cmd_breakdown(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
        Command::Ppt(a) => cmd_ppt(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

#[derive(Serialize)]
struct OptimizeReport {
    scheme: SchemeKind,
    gamma: f64,
    f_threshold: f64,
    unfiltered_fidelity: f64,
    tier1: FilterSolution,
    tier2: Option<FilterSolution>,
}

fn cmd_optimize(a: &OptimizeArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = a.solver.config(a.fth)?;
    let scheme: SchemeKind = a.scheme.into();
    let rho_prime = damped_epr(DampingParams::new(a.gamma)?);
    let tier1 = solve_tier1(&rho_prime, scheme, &cfg)?;
    let tier2 = if tier1.feasible { Some(solve_tier2(&rho_prime, &tier1, scheme, &cfg)?) } else { None };
    let report = OptimizeReport {
        scheme,
        gamma: a.gamma,
        f_threshold: a.fth,
        unfiltered_fidelity: crate::channel::unfiltered_fidelity(a.gamma),
        tier1,
        tier2,
    };

    match a.format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            writeln!(out, "scheme: {}  gamma: {}  F_th: {}", scheme, fmt_sig(a.gamma), fmt_sig(a.fth))?;
            writeln!(out, "unfiltered fidelity: {}", fmt_sig(report.unfiltered_fidelity))?;
            if report.unfiltered_fidelity >= a.fth {
                writeln!(out, "note: the unfiltered pair already meets F_th; filtering is optional")?;
            }
            write_solution(out, "tier 1", &report.tier1)?;
            match &report.tier2 {
                Some(t2) => {
                    write_solution(out, "tier 2", t2)?;
                    writeln!(
                        out,
                        "gain: {} points",
                        fmt_sig(100.0 * (t2.objective_value - report.tier1.objective_value))
                    )?;
                }
                None => writeln!(out, "infeasible: no filter reaches F_th at this damping")?,
            }
        }
    }
    Ok(if report.tier1.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn write_solution(out: &mut dyn Write, name: &str, s: &FilterSolution) -> std::io::Result<()> {
    writeln!(
        out,
        "{name}: feasible={} alpha={} beta={} survival={} fidelity={}",
        s.feasible,
        fmt_sig(s.alpha_star),
        fmt_sig(s.beta_star),
        fmt_sig(s.objective_value),
        fmt_sig(s.constraint_fidelity)
    )?;
    for c in &s.contributions {
        writeln!(
            out,
            "  {:<6} p={} fidelity={} counted={}",
            c.label.to_string(),
            fmt_sig(c.probability),
            c.fidelity.map(fmt_sig).unwrap_or_else(|| "-".into()),
            c.counted
        )?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let mut spec = SweepSpec::new(a.scheme.into(), a.fth).with_range(a.gamma_start, a.gamma_end, a.gamma_step);
    spec.restricted_rr_only = a.restricted_rr;
    if a.no_densify {
        spec.densify = None;
    }
    spec.validate()?;
    let cfg = a.solver.config(a.fth)?;
    let rows = run_sweep_with(&spec, &cfg)?;

    let write_rows = |w: &mut dyn Write| -> anyhow::Result<()> {
        match a.format {
            DataFormat::Csv => write_csv(&rows, spec.scheme, w)?,
            DataFormat::Json => write_json(&spec, &cfg, &rows, w)?,
        }
        Ok(())
    };
    let summary_sink: &mut dyn Write = match &a.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_rows(&mut w)?;
            w.flush().with_context(|| format!("cannot write {}", path.display()))?;
            out
        }
        None => {
            write_rows(out)?;
            err
        }
    };
    write_summary(summary_sink, &rows, &spec)?;
    Ok(EXIT_OK)
}

fn write_summary(w: &mut dyn Write, rows: &[SweepRow], spec: &SweepSpec) -> std::io::Result<()> {
    let s = summarize(rows, spec.f_threshold);
    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_else(|| "-".into());
    writeln!(
        w,
        "scheme={} F_th={} restricted_rr={} rows={} feasible_rows={}",
        spec.scheme,
        fmt_sig(spec.f_threshold),
        spec.restricted_rr_only,
        s.rows,
        s.feasible_rows
    )?;
    match s.feasible_range {
        Some((lo, hi)) => writeln!(w, "feasible gamma range: [{}, {}]", fmt_sig(lo), fmt_sig(hi))?,
        None => writeln!(w, "feasible gamma range: none")?,
    }
    writeln!(w, "unfiltered gamma limit: {}", fmt_sig(s.unfiltered_gamma_limit))?;
    writeln!(w, "gain points: min {} max {}", opt(s.min_gain_points), opt(s.max_gain_points))?;
    writeln!(
        w,
        "max survival: benchmark {} recycled {}",
        opt(s.max_benchmark_survival),
        opt(s.max_recycled_survival)
    )
}

#[derive(Serialize)]
struct BreakdownReport<'a> {
    scheme: SchemeKind,
    f_threshold: f64,
    restricted_rr: bool,
    row: &'a SweepRow,
}

fn cmd_breakdown(a: &BreakdownArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let scheme: SchemeKind = a.scheme.into();
    if a.restricted_rr && scheme != SchemeKind::Full {
        bail!("--restricted-rr needs --scheme full");
    }
    let policy = if a.restricted_rr { RecyclePolicy::ReflectedPairOnly } else { RecyclePolicy::AllOutcomes };
    let cfg = a.solver.config(a.fth)?;
    let row = evaluate_gamma(a.gamma, scheme, policy, &cfg)?;
    match a.format {
        ReportFormat::Json => {
            let report = BreakdownReport { scheme, f_threshold: a.fth, restricted_rr: a.restricted_rr, row: &row };
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            writeln!(out, "scheme: {scheme}  gamma: {}  F_th: {}", fmt_sig(a.gamma), fmt_sig(a.fth))?;
            writeln!(out, "status: {}", row.status.as_str())?;
            if row.status == SweepStatus::Feasible {
                for (label, p) in breakdown(&row) {
                    writeln!(out, "  {:<6} {}", label.to_string(), fmt_sig(p))?;
                }
                writeln!(out, "benchmark survival: {}", fmt_sig(row.benchmark_survival))?;
                writeln!(out, "recycled survival:  {}", fmt_sig(row.recycled_survival))?;
                writeln!(out, "gain: {} points", fmt_sig(row.gain_points))?;
            }
        }
    }
    Ok(match row.status {
        SweepStatus::Feasible => EXIT_OK,
        SweepStatus::NoFilterNeeded => EXIT_OK,
        SweepStatus::Infeasible => EXIT_INFEASIBLE,
    })
}

#[derive(Serialize)]
struct StateReport {
    state: String,
    gamma: f64,
    alpha: Option<f64>,
    probability: f64,
    /// Row-major `[re, im]` pairs.
    matrix: Vec<Vec<[f64; 2]>>,
    trace: f64,
    fidelity: f64,
    concurrence: f64,
    ppt: PptReport,
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let rho_prime = damped_epr(DampingParams::new(a.gamma)?);
    let (probability, state) = if a.state == StateArg::RhoPrime {
        (1.0, rho_prime)
    } else {
        let Some(alpha) = a.alpha else {
            bail!("--alpha is required for --state {:?}", a.state);
        };
        let p = Povm::new(alpha)?;
        let (t, r) = (p.transmit(), p.reflect());
        let (op_a, op_b) = match a.state {
            StateArg::Tt => (Some(&t), Some(&t)),
            StateArg::Tr => (Some(&t), Some(&r)),
            StateArg::Rt => (Some(&r), Some(&t)),
            StateArg::Rr => (Some(&r), Some(&r)),
            StateArg::T => (Some(&t), None),
            StateArg::R => (Some(&r), None),
            StateArg::RhoPrime => unreachable!(),
        };
        let br = filter_branch(&rho_prime, op_a, op_b)?;
        let Some(state) = br.state else {
            bail!("branch probability {} is zero; no conditional state", br.probability);
        };
        (br.probability, state)
    };
    let report = state_report(a, probability, &state)?;
    match a.format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            writeln!(out, "state: {}  gamma: {}", report.state, fmt_sig(a.gamma))?;
            if let Some(alpha) = a.alpha {
                writeln!(out, "alpha: {}  beta: {}", fmt_sig(alpha), fmt_sig(1.0 - alpha))?;
            }
            writeln!(out, "branch probability: {}", fmt_sig(probability))?;
            write_matrix(out, state.matrix())?;
            writeln!(out, "trace: {}", fmt_sig(report.trace))?;
            writeln!(out, "fidelity with Phi+: {}", fmt_sig(report.fidelity))?;
            writeln!(out, "concurrence: {}", fmt_sig(report.concurrence))?;
            write_ppt(out, &report.ppt)?;
        }
    }
    Ok(EXIT_OK)
}

fn state_report(a: &InspectArgs, probability: f64, state: &DensityMatrix) -> anyhow::Result<StateReport> {
    let m = state.matrix();
    let matrix = (0..4).map(|i| (0..4).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect()).collect();
    let name = a.state.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    Ok(StateReport {
        state: name,
        gamma: a.gamma,
        alpha: a.alpha,
        probability,
        matrix,
        trace: state.trace(),
        fidelity: fidelity(&epr_state(), state)?,
        concurrence: concurrence(state)?,
        ppt: ppt_report(m)?,
    })
}

fn write_matrix(out: &mut dyn Write, m: &ComplexMatrix) -> std::io::Result<()> {
    let complex = m.entries().iter().any(|z| z.im != 0.0);
    writeln!(out, "density matrix (basis |00>, |01>, |10>, |11>):")?;
    for i in 0..4 {
        let cells: Vec<String> = (0..4)
            .map(|j| {
                let z = m.get(i, j);
                if complex {
                    format!("{:>13.10}{:+.10}i", z.re, z.im)
                } else {
                    format!("{:>13.10}", z.re)
                }
            })
            .collect();
        writeln!(out, "  [{}]", cells.join(" "))?;
    }
    Ok(())
}

fn write_ppt(out: &mut dyn Write, ppt: &PptReport) -> std::io::Result<()> {
    let ev: Vec<String> = ppt.eigenvalues.iter().map(|&x| fmt_sig(x)).collect();
    writeln!(out, "partial-transpose eigenvalues: [{}]", ev.join(", "))?;
    writeln!(out, "min eigenvalue: {}", fmt_sig(ppt.min_eigenvalue))?;
    writeln!(out, "entangled: {}", if ppt.is_entangled { "yes" } else { "no (separable)" })
}

#[derive(Serialize)]
struct PptCommandReport {
    gamma: f64,
    alpha: f64,
    beta: f64,
    numeric: PptReport,
    /// `λ₁..λ₄` in closed form.
    closed_form: [f64; 4],
    max_deviation: f64,
}

fn cmd_ppt(a: &PptArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let beta = 1.0 - a.alpha;
    let rho_prime = damped_epr(DampingParams::new(a.gamma)?);
    let m0 = ComplexMatrix::from_diag(&[a.alpha, beta])?;
    let numerator = crate::filtering::filter_numerator(rho_prime.matrix(), Some(&m0), Some(&m0))?;
    let numeric = ppt_report(&numerator)?;
    let closed_form = reflected_pair_pt_eigenvalues(a.alpha, beta, a.gamma);
    let mut sorted = closed_form;
    sorted.sort_by(f64::total_cmp);
    let max_deviation = numeric
        .eigenvalues
        .iter()
        .zip(sorted)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let report = PptCommandReport { gamma: a.gamma, alpha: a.alpha, beta, numeric, closed_form, max_deviation };
    match a.format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            writeln!(
                out,
                "reflected pair (unnormalized)  gamma: {}  alpha: {}  beta: {}",
                fmt_sig(a.gamma),
                fmt_sig(a.alpha),
                fmt_sig(beta)
            )?;
            write_matrix(out, &numerator)?;
            write_ppt(out, &report.numeric)?;
            let cf: Vec<String> = closed_form.iter().map(|&x| fmt_sig(x)).collect();
            writeln!(out, "closed form lambda1..4: [{}]", cf.join(", "))?;
            writeln!(out, "max |numeric - closed form|: {:e}", max_deviation)?;
        }
    }
    Ok(EXIT_OK)
}
