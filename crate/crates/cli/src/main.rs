use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tccsim_core::{
    campaign, generate, parse_trace, serialize_trace, CampaignParams, CampaignReport,
    GeneratorParams, InjectionMode, Scheme, SimConfig, Simulation, SimulationReport, TargetClass,
};

#[derive(Parser)]
#[command(name = "tccsim", version, about = "Two-level write-back cache simulator with selectable L2 error protection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trace under one protection scheme and report counters and energy
    Simulate(SimulateArgs),
    /// Run a trace under all three schemes and compare them
    Compare(CompareArgs),
    /// Replay a trace many times, injecting one fault per run
    Inject(InjectArgs),
    /// Generate a synthetic trace with a known silent-write fraction
    GenTrace(GenTraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Conventional,
    Mmecc,
    Tcc,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Conventional => Scheme::Conventional,
            SchemeArg::Mmecc => Scheme::Mmecc,
            SchemeArg::Tcc => Scheme::Tcc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    /// Trace file (R <hex-addr> / W <hex-addr> <16-hex-value> lines)
    trace: PathBuf,
    /// key=value configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured protection scheme
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, value_enum, default_value = "json")]
    out: OutputFormat,
    /// Report destination; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the post-flush memory image to this file
    #[arg(long)]
    dump_image: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    trace: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    out: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InjectArgs {
    trace: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Campaign RNG seed (results are reproducible per seed)
    #[arg(long)]
    seed: u64,
    /// Number of injections
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, value_enum, default_value = "single")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "any")]
    class: ClassArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Double,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Clean,
    Dirty,
    Any,
    Ecc,
}

#[derive(Args)]
struct GenTraceArgs {
    /// Generator RNG seed (the trace is reproducible per seed)
    #[arg(long)]
    seed: u64,
    /// Configuration supplying the L1 geometry the trace is shaped for
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    n_ops: usize,
    #[arg(long, default_value_t = 1024)]
    working_set: usize,
    #[arg(long, default_value_t = 0.3)]
    write_ratio: f64,
    #[arg(long, default_value_t = 0.37)]
    silent_fraction: f64,
    #[arg(long, default_value_t = 0, value_parser = parse_hex_or_dec)]
    base_addr: u64,
    /// Trace destination; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_hex_or_dec(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| e.to_string())
}

enum CliError {
    /// Bad input: unreadable files, malformed traces or configs. Exit 2.
    Usage(String),
    /// The run itself failed or an invariant did not hold. Exit 1.
    Failed(String),
}

fn usage<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Usage(format!("{context}: {e}"))
}

fn load_config(path: &Option<PathBuf>) -> Result<SimConfig, CliError> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(usage(&p.display().to_string()))?;
            SimConfig::parse(&text).map_err(usage(&p.display().to_string()))
        }
    }
}

fn load_trace(path: &PathBuf) -> Result<Vec<tccsim_core::TraceRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(usage(&path.display().to_string()))?;
    parse_trace(&text).map_err(usage(&path.display().to_string()))
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match output {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => fs::write(p, content).map_err(|e| CliError::Failed(format!("{}: {e}", p.display()))),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(s) = args.scheme {
        config.scheme = s.into();
    }
    config.validate().map_err(usage("config"))?;
    let trace = load_trace(&args.trace)?;
    let outcome = Simulation::run(&trace, &config);
    let report = SimulationReport::new(&config, &outcome);
    let content = match args.out {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failed(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => format!(
            "scheme,{}\n{},{}\n",
            tccsim_core::StatsReport::csv_header(),
            config.scheme,
            report.stats.csv_row()
        ),
    };
    emit(&args.output, &content)?;
    if let Some(path) = &args.dump_image {
        let mut f = fs::File::create(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        outcome.image.dump(&mut f).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareReport {
    conventional: SimulationReport,
    mmecc: SimulationReport,
    tcc: SimulationReport,
    /// Post-flush data images are bit-identical across the three schemes.
    images_equal: bool,
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let base_config = load_config(&args.config)?;
    base_config.validate().map_err(usage("config"))?;
    let trace = load_trace(&args.trace)?;
    let run = |scheme| {
        let config = SimConfig { scheme, ..base_config };
        let outcome = Simulation::run(&trace, &config);
        (SimulationReport::new(&config, &outcome), outcome.image)
    };
    let (conv, conv_img) = run(Scheme::Conventional);
    let (mmecc, mmecc_img) = run(Scheme::Mmecc);
    let (tcc, tcc_img) = run(Scheme::Tcc);
    let images_equal = conv_img.same_data_below(&mmecc_img, base_config.ecc_region_base)
        && conv_img.same_data_below(&tcc_img, base_config.ecc_region_base);
    let report = CompareReport { conventional: conv, mmecc, tcc, images_equal };

    let content = match args.out {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failed(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = format!("scheme,{}\n", tccsim_core::StatsReport::csv_header());
            for r in [&report.conventional, &report.mmecc, &report.tcc] {
                s.push_str(&format!("{},{}\n", r.config.scheme, r.stats.csv_row()));
            }
            s
        }
    };
    emit(&args.output, &content)?;
    eprintln!("{}", comparison_table(&report));
    if !images_equal {
        return Err(CliError::Failed("memory images diverged across schemes".into()));
    }
    Ok(())
}

/// Per-metric table normalized to the conventional scheme.
fn comparison_table(r: &CompareReport) -> String {
    let rows: [(&str, [f64; 3]); 5] = [
        ("l2_accesses_total", [
            r.conventional.stats.l2_accesses_total as f64,
            r.mmecc.stats.l2_accesses_total as f64,
            r.tcc.stats.l2_accesses_total as f64,
        ]),
        ("l2_miss_rate", [
            r.conventional.stats.l2_miss_rate,
            r.mmecc.stats.l2_miss_rate,
            r.tcc.stats.l2_miss_rate,
        ]),
        ("dynamic_energy", [r.conventional.energy.dynamic, r.mmecc.energy.dynamic, r.tcc.energy.dynamic]),
        ("total_energy", [r.conventional.energy.total, r.mmecc.energy.total, r.tcc.energy.total]),
        ("amat_cycles", [
            r.conventional.stats.amat_cycles as f64,
            r.mmecc.stats.amat_cycles as f64,
            r.tcc.stats.amat_cycles as f64,
        ]),
    ];
    let mut out = format!(
        "{:<20} {:>14} {:>24} {:>24}\n",
        "metric", "conventional", "mmecc (x conv)", "tcc (x conv)"
    );
    for (name, [c, m, t]) in rows {
        let cell = |v: f64| {
            let ratio = if c == 0.0 { 1.0 } else { v / c };
            format!("{v:.4} ({ratio:.3})")
        };
        out.push_str(&format!("{name:<20} {c:>14.4} {:>24} {:>24}\n", cell(m), cell(t)));
    }
    out.push_str(&format!("images_equal: {}\n", r.images_equal));
    out
}

#[derive(Serialize)]
struct InjectReport {
    config: SimConfig,
    #[serde(flatten)]
    campaign: CampaignReport,
}

fn cmd_inject(args: &InjectArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    config.validate().map_err(usage("config"))?;
    let trace = load_trace(&args.trace)?;
    let params = CampaignParams {
        n_injections: args.n,
        mode: match args.mode {
            ModeArg::Single => InjectionMode::Single,
            ModeArg::Double => InjectionMode::Double,
        },
        class: match args.class {
            ClassArg::Clean => TargetClass::Clean,
            ClassArg::Dirty => TargetClass::Dirty,
            ClassArg::Any => TargetClass::Any,
            ClassArg::Ecc => TargetClass::Ecc,
        },
        seed: args.seed,
    };
    let report = campaign(&trace, &config, &params).map_err(CliError::Failed)?;
    let tally = report.tally;
    let full = InjectReport { config, campaign: report };
    let mut content = serde_json::to_string_pretty(&full).map_err(|e| CliError::Failed(e.to_string()))?;
    content.push('\n');
    emit(&args.output, &content)?;
    eprintln!(
        "{} injections: corrected_dirty={} refetched_clean={} due={} masked={} sdc={}",
        tally.total(),
        tally.corrected_dirty,
        tally.refetched_clean,
        tally.due,
        tally.masked,
        tally.sdc
    );
    Ok(())
}

fn cmd_gen_trace(args: &GenTraceArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    config.validate().map_err(usage("config"))?;
    let params = GeneratorParams {
        n_ops: args.n_ops,
        working_set_blocks: args.working_set,
        write_ratio: args.write_ratio,
        silent_fraction: args.silent_fraction,
        seed: args.seed,
        base_addr: args.base_addr,
        l1_capacity: config.l1_capacity,
        l1_ways: config.l1_ways,
    };
    let (trace, gt) = generate(&params).map_err(CliError::Usage)?;
    let content = format!(
        "# synthetic trace: n_ops={} working_set_blocks={} write_ratio={} silent_fraction={} seed={}\n\
         # ground truth: writebacks={} silent={} nonsilent_fast={} nonsilent_aliased={} silent_fraction={:.6}\n{}",
        params.n_ops,
        params.working_set_blocks,
        params.write_ratio,
        params.silent_fraction,
        params.seed,
        gt.writebacks,
        gt.silent,
        gt.nonsilent_fast,
        gt.nonsilent_aliased,
        gt.silent_fraction(),
        serialize_trace(&trace)
    );
    emit(&args.output, &content)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Inject(args) => cmd_inject(args),
        Command::GenTrace(args) => cmd_gen_trace(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
