use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use condbayes::inference::{PriorError, PriorStore, UndefinedPolicy};
use condbayes::pipeline::{
    count_candidates, enumerate_candidates_capped, initial_priors, iteration_path, run, write_report,
    IterationReport, PipelineError, PriorMode, ReportFormat, RunOptions, Session, SessionLock, DEFAULT_SPACE_CAP,
};
use condbayes::ranking::{RankKey, DEFAULT_VARIANCE_WINDOW};
use condbayes::spec::{parse_spec, SpecError, Specification};
use condbayes::synth::{generate, GeneratorModel, SynthError};
use condbayes::trace::{load_events, load_trace, store_trace, wrangle, Trace, TraceError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_ALL_DROPPED: u8 = 3;

#[derive(Parser)]
#[command(name = "condbayes", version, about = "Mine conditional probabilistic invariants from traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Undefined {
    GivenUnmet,
    Exclude,
}

#[derive(Subcommand)]
enum Command {
    /// Infer and rank invariants over one or more traces, in order.
    Run(RunArgs),
    /// Summarize the candidate space of a specification.
    Enumerate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        max_givens: Option<usize>,
        /// Print every candidate id.
        #[arg(long)]
        list: bool,
    },
    /// Sample a trace from a generator model.
    Synth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write a specification covering the planted structure.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Resample `timestamp,variable,value` events onto a uniform grid.
    Wrangle {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        timestep: f64,
        #[arg(long)]
        out: PathBuf,
        /// Variables to keep, comma separated; all by default.
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Trace files, processed in the order given.
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    /// Treat trace files as raw event logs and resample them.
    #[arg(long, requires = "timestep")]
    wrangle: bool,
    #[arg(long)]
    timestep: Option<f64>,
    /// uniform, empirical:<trace-dir> or file:<priors.json>.
    #[arg(long, conflicts_with = "priors")]
    prior: Option<String>,
    /// Read initial priors from a file; same as `--prior file:<path>`.
    #[arg(long)]
    priors: Option<PathBuf>,
    #[arg(long)]
    priors_out: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    #[arg(long, default_value = "surprise")]
    rank_by: RankKey,
    #[arg(long)]
    top: Option<usize>,
    /// Start a new session persisted at this path.
    #[arg(long, conflicts_with = "resume")]
    session: Option<PathBuf>,
    /// Continue an existing session.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "given-unmet")]
    undefined: Undefined,
    #[arg(long)]
    max_givens: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_WINDOW)]
    variance_window: usize,
    #[arg(long, default_value_t = DEFAULT_SPACE_CAP)]
    space_cap: u64,
    /// Also write `<report>.iter<N>.<ext>` after every trace.
    #[arg(long)]
    per_iteration: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Enumerate { spec, max_givens, list } => cmd_enumerate(&spec, max_givens, list),
        Command::Synth {
            model,
            seed,
            length,
            out,
            spec_out,
        } => cmd_synth(&model, seed, length, &out, spec_out.as_deref()),
        Command::Wrangle {
            events,
            timestep,
            out,
            vars,
        } => cmd_wrangle(&events, timestep, &out, &vars),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_validation(&e) {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn is_validation(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<SpecError>().is_some()
            || c.downcast_ref::<TraceError>()
                .is_some_and(|t| !matches!(t, TraceError::Io(_)))
            || c.downcast_ref::<PipelineError>().is_some_and(PipelineError::is_validation)
            || c.downcast_ref::<SynthError>()
                .is_some_and(|s| !matches!(s, SynthError::Io(_)))
            || c.downcast_ref::<PriorError>()
                .is_some_and(|p| !matches!(p, PriorError::Io(_)))
            || c.downcast_ref::<Usage>().is_some()
    })
}

/// A bad combination of arguments.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn load_spec(path: &Path, max_givens: Option<usize>) -> Result<Specification> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut spec = parse_spec(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(m) = max_givens {
        spec.max_givens = m;
        spec.validate()?;
    }
    Ok(spec)
}

fn read_trace_file(path: &Path, wrangle_step: Option<f64>) -> Result<Trace> {
    let trace = match wrangle_step {
        Some(dt) => {
            let events = load_events(path)?;
            wrangle(&events, dt, &[])?
        }
        None => load_trace(path)?,
    };
    Ok(trace)
}

fn trace_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Usage(format!("no .csv traces in {}", dir.display())).into());
    }
    Ok(files)
}

fn prior_mode(args: &RunArgs, wrangle_step: Option<f64>) -> Result<PriorMode> {
    if let Some(p) = &args.priors {
        return Ok(PriorMode::Given(PriorStore::load(p).with_context(|| format!("reading {}", p.display()))?));
    }
    let raw = args.prior.as_deref().unwrap_or("uniform");
    if raw == "uniform" {
        return Ok(PriorMode::Uniform);
    }
    if let Some(dir) = raw.strip_prefix("empirical:") {
        let traces = trace_files_in(Path::new(dir))?
            .iter()
            .map(|f| read_trace_file(f, wrangle_step).with_context(|| format!("prior trace {}", f.display())))
            .collect::<Result<Vec<_>>>()?;
        return Ok(PriorMode::Empirical(traces));
    }
    if let Some(file) = raw.strip_prefix("file:") {
        return Ok(PriorMode::Given(PriorStore::load(file).with_context(|| format!("reading {file}"))?));
    }
    Err(Usage(format!("unknown prior mode `{raw}` (expected uniform, empirical:<dir> or file:<path>)")).into())
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let spec = load_spec(&args.spec, args.max_givens)?;
    let set = enumerate_candidates_capped(&spec, args.space_cap)?;
    info!("{} candidates", set.len());
    let wrangle_step = if args.wrangle { args.timestep } else { None };

    let traces: Vec<(String, Trace)> = args
        .traces
        .iter()
        .map(|p| {
            let name = p.display().to_string();
            read_trace_file(p, wrangle_step)
                .with_context(|| format!("trace {name}"))
                .map(|t| (name, t))
        })
        .collect::<Result<_>>()?;

    let (mut session, session_path, _lock) = match (&args.resume, &args.session) {
        (Some(path), _) => {
            let lock = SessionLock::acquire(path)?;
            let session = Session::load(path).with_context(|| format!("resuming {}", path.display()))?;
            session.check_spec(&spec)?;
            if args.prior.is_some() || args.priors.is_some() {
                warn!("ignoring prior options while resuming a session");
            }
            (session, Some(path.clone()), Some(lock))
        }
        (None, Some(path)) => {
            let lock = SessionLock::acquire(path)?;
            if path.exists() {
                return Err(Usage(format!("session {} already exists; use --resume", path.display())).into());
            }
            let session = Session::new(&spec, initial_priors(&spec, &prior_mode(&args, wrangle_step)?)?);
            (session, Some(path.clone()), Some(lock))
        }
        (None, None) => {
            let session = Session::new(&spec, initial_priors(&spec, &prior_mode(&args, wrangle_step)?)?);
            (session, None, None)
        }
    };

    let opts = RunOptions {
        policy: match args.undefined {
            Undefined::GivenUnmet => UndefinedPolicy::GivenUnmet,
            Undefined::Exclude => UndefinedPolicy::Exclude,
        },
        rank_by: args.rank_by,
        variance_window: args.variance_window,
    };
    if let Some(path) = &session_path {
        session.save(path)?;
    }
    let reports = run(&set, &traces, &mut session, &opts, |report, session| {
        if let Some(path) = &session_path {
            session.save(path)?;
        }
        if args.per_iteration {
            write_report(&iteration_path(&args.report, report.iteration), report, args.format, args.top)?;
        }
        Ok(())
    })?;

    let last = reports
        .last()
        .cloned()
        .unwrap_or_else(|| IterationReport::empty(args.variance_window));
    write_report(&args.report, &last, args.format, args.top)?;
    if let Some(p) = &args.priors_out {
        session.priors.save(p)?;
    }
    if last.all_dropped() {
        eprintln!("every candidate was dropped in the final iteration; see the sidecar report for reasons");
        return Ok(ExitCode::from(EXIT_ALL_DROPPED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(path: &Path, max_givens: Option<usize>, list: bool) -> Result<ExitCode> {
    let spec = load_spec(path, max_givens)?;
    let (outcomes, givens) = spec.expand_predicates();
    let total = count_candidates(&spec);
    println!("outcome atoms: {}", outcomes.len());
    for o in &outcomes {
        println!("  {}", o.id);
    }
    println!("given atoms: {}", givens.len());
    for g in &givens {
        println!("  {}", g.id);
    }
    println!("max givens: {}", spec.max_givens);
    println!("constraints: {}", spec.constraints.len());
    println!("candidates: {total}");
    if list {
        let set = enumerate_candidates_capped(&spec, u64::MAX)?;
        for c in &set.candidates {
            let gs: Vec<&str> = c.givens.iter().map(|&g| set.givens[g].id.as_str()).collect();
            println!("P({} | {})", set.outcomes[c.outcome].id, gs.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(model: &Path, seed: Option<u64>, length: usize, out: &Path, spec_out: Option<&Path>) -> Result<ExitCode> {
    let m = GeneratorModel::load(model).with_context(|| format!("model {}", model.display()))?;
    let Some(seed) = seed.or(m.seed) else {
        bail!(Usage("no seed given on the command line or in the model".into()));
    };
    let trace = generate(&m, seed, length)?;
    store_trace(&trace, out)?;
    if let Some(p) = spec_out {
        fs::write(p, m.planted_spec(condbayes::spec::DEFAULT_MAX_GIVENS).render())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_wrangle(events: &Path, timestep: f64, out: &Path, vars: &[String]) -> Result<ExitCode> {
    let ev = load_events(events).with_context(|| format!("events {}", events.display()))?;
    let trace = wrangle(&ev, timestep, vars)?;
    store_trace(&trace, out)?;
    Ok(ExitCode::SUCCESS)
}
