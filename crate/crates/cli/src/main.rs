mod config;
mod record;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use qdc::analysis::{
    critical_strengths, find_pc_quenched, linear_grid, quenched_capacity, sweep, Problem, QuenchConfig, ScanConfig,
    SweepAxis, SweepOutput,
};
use qdc::capacity::{EncodingStrategy, PartyLayout};
use qdc::channels::{ChannelSpec, DrawPolicy};
use qdc::exec::{with_threads, Execution};
use qdc::optimizer::OptimizerConfig;
use qdc::oracles::{validate_all, OracleReport};
use qdc::states::ResourceState;
use qdc::tables::{compute_table, CellOutcome, TableContext, TableId};
use qdc::QdcError;
use serde::Serialize;

use record::{write_rows, Format, RunRecord, TOOL_VERSION};

#[derive(Parser, Debug)]
#[command(name = "qdc", version, about = "Dense-coding capacities of multiqubit states under Pauli noise")]
struct Cli {
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, env = "QDC_THREADS")]
    threads: Option<usize>,
    /// key = value file mirroring the long flags; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// One capacity (or two-receiver bound) evaluation.
    #[command(args_override_self = true)]
    Capacity {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Capacity along a grid of p, alpha or the state parameter.
    #[command(args_override_self = true)]
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "p")]
        axis: SweepAxis,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[command(flatten)]
        quench: QuenchArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Critical, revival and advantage strengths. The p of --channel is ignored.
    #[command(args_override_self = true)]
    Critical {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        quench: QuenchArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Disorder-averaged capacity of a random channel.
    #[command(args_override_self = true)]
    Quench {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        quench: QuenchArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Runs every closed-form check.
    #[command(args_override_self = true)]
    Validate {
        #[command(flatten)]
        opt: OptArgs,
        /// Text table unless json is given.
        #[arg(long)]
        format: Option<Format>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes one of the reference tables alongside its tabulated values.
    #[command(args_override_self = true)]
    Table {
        #[arg(long)]
        which: TableId,
        #[command(flatten)]
        opt: OptArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        quench: QuenchArgs,
        #[arg(long, default_value = "per-qubit")]
        draw: DrawPolicy,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// e.g. gghz:n=3,x=0.70711, gw3:a=0.5,b=0.25, w:n=4, bell
    #[arg(long)]
    state: ResourceState,
    /// Defaults to all non-receiver qubits.
    #[arg(long)]
    senders: Option<usize>,
    #[arg(long, default_value_t = 1)]
    receivers: usize,
    /// Senders reporting to the first receiver (two receivers only).
    #[arg(long)]
    split: Option<usize>,
    /// e.g. dephasing:alpha=0.5,p=0.3 or depolarizing:alpha=0.3,p=0.1,eps=0.7,draw=per-qubit
    #[arg(long)]
    channel: ChannelSpec,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args, Debug)]
struct OptArgs {
    #[arg(long)]
    opt_pop: Option<usize>,
    #[arg(long)]
    opt_evals: Option<usize>,
    #[arg(long)]
    opt_seed: Option<u64>,
    #[arg(long)]
    opt_restarts: Option<usize>,
    #[arg(long)]
    opt_tol: Option<f64>,
    /// Identity encoding (a lower bound on the capacity).
    #[arg(long)]
    no_optimize: bool,
}

#[derive(Args, Debug)]
struct QuenchArgs {
    #[arg(long, default_value_t = 4000)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optimize the encoding in every realization.
    #[arg(long)]
    optimize_per_realization: bool,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value_t = 1e-3)]
    scan_step: f64,
    #[arg(long, default_value_t = 1e-4)]
    refine: f64,
    #[arg(long, default_value_t = 1e-9)]
    collapse_tol: f64,
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numeric(String),
    Io(io::Error),
}

impl From<QdcError> for CliError {
    fn from(e: QdcError) -> Self {
        match e {
            QdcError::Parse(_) | QdcError::Domain(_) | QdcError::Dimension(_) => Self::Usage(e.to_string()),
            QdcError::NotHermitian(_) | QdcError::NotPsd(_) | QdcError::Numeric(_) => Self::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

impl OptArgs {
    fn config(&self) -> OptimizerConfig {
        let mut cfg = OptimizerConfig::default();
        cfg.population = self.opt_pop.or(cfg.population);
        cfg.max_evaluations = self.opt_evals.unwrap_or(cfg.max_evaluations);
        cfg.seed = self.opt_seed.unwrap_or(cfg.seed);
        cfg.restarts = self.opt_restarts.unwrap_or(cfg.restarts);
        cfg.tolerance = self.opt_tol.unwrap_or(cfg.tolerance);
        cfg
    }

    fn encoding(&self) -> EncodingStrategy {
        if self.no_optimize {
            EncodingStrategy::Identity
        } else {
            EncodingStrategy::Optimized(self.config())
        }
    }
}

impl ProblemArgs {
    fn problem(&self) -> CliResult<Problem> {
        let senders = match self.senders {
            Some(s) => s,
            None => self.state.n_qubits().checked_sub(self.receivers).ok_or_else(|| {
                CliError::Usage(format!("state has fewer than {} qubits", self.receivers))
            })?,
        };
        let layout = match (self.receivers, self.split) {
            (1, None) => PartyLayout::one_receiver(senders)?,
            (1, Some(_)) => return Err(CliError::Usage("--split needs --receivers 2".into())),
            (2, split) => PartyLayout::two_receivers(senders, split.unwrap_or(senders / 2))?,
            (r, _) => return Err(CliError::Usage(format!("--receivers must be 1 or 2, got {r}"))),
        };
        Ok(Problem::new(self.state, layout, self.channel, self.opt.encoding())?)
    }
}

impl QuenchArgs {
    fn config(&self, opt: &OptArgs) -> QuenchConfig {
        QuenchConfig {
            realizations: self.realizations,
            master_seed: self.seed,
            optimize_per_realization: self.optimize_per_realization,
            optimizer: opt.config(),
            execution: Execution::Parallel,
        }
    }
}

impl ScanArgs {
    fn config(&self) -> ScanConfig {
        ScanConfig { scan_step: self.scan_step, refine: self.refine, collapse_tol: self.collapse_tol, execution: Execution::Parallel }
    }
}

fn sink(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(out: &OutArgs, rows: &[T], default: Format) -> CliResult<()> {
    let mut w = sink(&out.out)?;
    write_rows(&mut w, rows, out.format.unwrap_or(default))?;
    w.flush()?;
    Ok(())
}

fn quench_record(problem: &Problem, qc: &QuenchConfig) -> CliResult<RunRecord> {
    let q = quenched_capacity(&problem.state, &problem.layout, &problem.channel, qc)?;
    let mut rec = RunRecord::from_problem(problem).with_quench(&q, qc.master_seed, problem.layout.classical_bound());
    // the per-realization optimizer is what the opt_* columns describe here
    rec.optimized = qc.optimize_per_realization;
    if !qc.optimize_per_realization {
        rec = RunRecord { opt_seed: None, opt_population: None, opt_max_evaluations: None, opt_restarts: None, opt_tolerance: None, ..rec };
    }
    Ok(rec)
}

#[derive(Serialize)]
struct TableRow {
    table: String,
    quantity: &'static str,
    family: &'static str,
    layout: String,
    alpha: f64,
    epsilon: Option<f64>,
    reference: Option<f64>,
    computed: Option<f64>,
    abs_diff: Option<f64>,
    tolerance: f64,
    pass: bool,
    bracket_resolution: f64,
    tool_version: &'static str,
}

impl From<&CellOutcome> for TableRow {
    fn from(o: &CellOutcome) -> Self {
        let c = &o.cell;
        let r = qdc::analysis::round_sig12;
        Self {
            table: c.table.to_string(),
            quantity: c.quantity.name(),
            family: c.family.name(),
            layout: c.layout.label(),
            alpha: c.alpha,
            epsilon: (c.table == TableId::III).then_some(c.epsilon),
            reference: c.reference,
            computed: o.computed.map(r),
            abs_diff: c.reference.zip(o.computed).map(|(a, b)| r((a - b).abs())),
            tolerance: o.tolerance,
            pass: o.pass,
            bracket_resolution: r(o.bracket_resolution),
            tool_version: TOOL_VERSION,
        }
    }
}

fn write_reports_text(w: &mut dyn Write, reports: &[OracleReport]) -> io::Result<()> {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    writeln!(w, "{:<width$}  {:>14}  {:>14}  {:>10}  {:>9}  result", "name", "numeric", "closed_form", "abs_error", "tol")?;
    for r in reports {
        writeln!(
            w,
            "{:<width$}  {:>14.10}  {:>14.10}  {:>10.3e}  {:>9.1e}  {}",
            r.name,
            r.numeric_value,
            r.closed_form_value,
            r.abs_error,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        )?;
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    writeln!(w, "{} checks, {} failed", reports.len(), failed)
}

fn run(cmd: Cmd) -> CliResult<bool> {
    match cmd {
        Cmd::Capacity { problem, out } => {
            let pr = problem.problem()?;
            let rec = if pr.channel.is_random() {
                let qc = QuenchArgs { realizations: 4000, seed: 0, optimize_per_realization: false }.config(&problem.opt);
                quench_record(&pr, &qc)?
            } else {
                RunRecord::from_problem(&pr).with_capacity(&pr.capacity()?)
            };
            emit(&out, &[rec], Format::Json)?;
        }
        Cmd::Sweep { problem, axis, from, to, steps, quench, out } => {
            let base = problem.problem()?;
            let grid = linear_grid(from, to, steps)?;
            let qc = quench.config(&problem.opt);
            let rows = sweep(&base, axis, &grid, Some(&qc), Execution::Parallel)?;
            let recs: Vec<RunRecord> = rows
                .iter()
                .map(|row| match &row.output {
                    SweepOutput::Capacity(c) => RunRecord::from_problem(&row.problem).with_capacity(c),
                    SweepOutput::Quenched(q) => {
                        let mut rec =
                            RunRecord::from_problem(&row.problem).with_quench(q, qc.master_seed, row.problem.layout.classical_bound());
                        rec.optimized = qc.optimize_per_realization;
                        rec
                    }
                })
                .collect();
            emit(&out, &recs, Format::Csv)?;
        }
        Cmd::Critical { problem, scan, quench, out } => {
            let pr = problem.problem()?;
            let sc = scan.config();
            let rec = if pr.channel.is_random() {
                let qc = quench.config(&problem.opt);
                let b = find_pc_quenched(&pr.state, &pr.layout, &pr.channel, &qc, &sc)?;
                let mut rec = RunRecord::from_problem(&pr);
                rec.p_c = b.map(|b| qdc::analysis::round_sig12(b.at));
                rec.bracket_resolution = Some(b.map_or(0.0, |b| b.width()));
                rec.realizations = Some(qc.realizations);
                rec.master_seed = Some(qc.master_seed);
                rec
            } else {
                RunRecord::from_problem(&pr).with_strengths(&critical_strengths(&pr, &sc)?)
            };
            emit(&out, &[rec], Format::Json)?;
        }
        Cmd::Quench { problem, quench, out } => {
            let pr = problem.problem()?;
            if !pr.channel.is_random() {
                return Err(CliError::Usage("quench needs a channel with eps > 0".into()));
            }
            let rec = quench_record(&pr, &quench.config(&problem.opt))?;
            emit(&out, &[rec], Format::Json)?;
        }
        Cmd::Validate { opt, format, out } => {
            let reports = validate_all(&opt.config())?;
            let mut w = sink(&out)?;
            match format {
                Some(Format::Json) => write_rows(&mut w, &reports, Format::Json)?,
                Some(Format::Csv) => write_rows(&mut w, &reports, Format::Csv)?,
                None => write_reports_text(&mut w, &reports)?,
            }
            w.flush()?;
            return Ok(reports.iter().all(|r| r.pass));
        }
        Cmd::Table { which, opt, scan, quench, draw, out } => {
            let ctx = TableContext {
                scan: scan.config(),
                encoding: opt.encoding(),
                quench: quench.config(&opt),
                draw_policy: draw,
                execution: Execution::Parallel,
            };
            let outcomes = compute_table(which, &ctx)?;
            let rows: Vec<TableRow> = outcomes.iter().map(TableRow::from).collect();
            emit(&out, &rows, Format::Csv)?;
            let passed = outcomes.iter().filter(|o| o.pass).count();
            eprintln!("table {which}: {passed}/{} cells within tolerance", outcomes.len());
        }
    }
    Ok(true)
}

/// Splices the config file's flags in right after the subcommand name.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config::config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = args.iter().skip(1).position(|a| names.iter().any(|n| a.to_str() == Some(n))) else {
        return Ok(args);
    };
    let pos = pos + 1;
    let sub = cmd.find_subcommand(args[pos].to_str().unwrap_or_default()).expect("known subcommand");
    let known: Vec<(String, bool)> = sub
        .get_arguments()
        .chain(cmd.get_arguments())
        .filter(|a| a.get_id() != "config")
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
        .collect();
    let extra = config::file_args(&text, &known).map_err(|e| e.0)?;
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = cli.threads.unwrap_or(0);
    match with_threads(threads, move || run(cli.cmd)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
