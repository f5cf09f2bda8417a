use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tsvsim::config::{parse_threshold_range, RunConfig, Settings};
use tsvsim::oracle::{
    codec_disagreements, enumerate_all, model_disagreements, verify_retention_theorem,
};
use tsvsim::replay::{replay, sweep_st, RunReport};
use tsvsim::report::{
    render_run_report, write_histogram_csv, write_run_report, write_sweep_csv, RunReportFile,
};
use tsvsim::{
    generate, CodecSpec, Coefficient, GeneratorKind, GeneratorSpec, GridLayout, SwitchThreshold,
};

/// Exit status for bad input or configuration.
const EXIT_INVALID: u8 = 1;
/// Exit status for a broken internal invariant (decoder mismatch, oracle disagreement).
const EXIT_INTERNAL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tsvsim",
    version,
    about = "TSV crosstalk classification and retention-coding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay one trace through a codec and report delay and class statistics.
    Simulate(SimulateArgs),
    /// Replay one trace at every switch threshold in a range.
    Sweep(SweepArgs),
    /// Classify one 3x3 transition pattern.
    Classify(ClassifyArgs),
    /// Write a synthetic trace.
    Gen(GenArgs),
    /// Enumerate all 3x3 patterns and check the class taxonomy and codec decisions.
    Oracle(OracleArgs),
    /// Compare two run reports class by class.
    Report(ReportArgs),
}

/// Settings shared by `simulate` and `sweep`; each flag overrides the
/// same key from `--config`.
#[derive(Args)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace file.
    #[arg(long)]
    trace: Option<String>,
    /// text | binary
    #[arg(long)]
    trace_format: Option<String>,
    /// Generator kind instead of a trace file: uniform | flip | flip:<p> | counter | constant.
    #[arg(long = "gen")]
    generator: Option<String>,
    /// Toggle probability for the flip generator.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    words: Option<String>,
    /// Generated word width, or record width of a binary trace.
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    bitwidth: Option<String>,
    /// row_major | snake
    #[arg(long)]
    bit_order: Option<String>,
    #[arg(long)]
    lambda1: Option<String>,
    #[arg(long)]
    lambda2: Option<String>,
    #[arg(long)]
    pi0: Option<String>,
    /// max | mean
    #[arg(long)]
    aggregation: Option<String>,
}

impl RunArgs {
    fn settings(&self, extra: &[(&str, &Option<String>)]) -> Result<Settings> {
        let mut settings = match &self.config {
            Some(path) => Settings::parse(
                &std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?,
            )?,
            None => Settings::default(),
        };
        let flags = [
            ("trace", &self.trace),
            ("trace_format", &self.trace_format),
            ("gen", &self.generator),
            ("p", &self.p),
            ("seed", &self.seed),
            ("words", &self.words),
            ("width", &self.width),
            ("rows", &self.rows),
            ("cols", &self.cols),
            ("bitwidth", &self.bitwidth),
            ("bit_order", &self.bit_order),
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("pi0", &self.pi0),
            ("aggregation", &self.aggregation),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(value) = value {
                settings.set(key, value.as_str());
            }
        }
        Ok(settings)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// 3dcam | uncoded
    #[arg(long)]
    codec: Option<String>,
    /// Switch threshold, 0..=39.
    #[arg(long)]
    st: Option<String>,
    /// JSON report path; printed to stdout when absent.
    #[arg(long)]
    json: Option<String>,
    /// Class histogram CSV (uncoded before, coded after).
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Threshold range `A:B` (inclusive) or a single value.
    #[arg(long, default_value = "0:39")]
    st: String,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// `PREV:NEXT`, each nine bits of a 3x3 cluster in row-major order.
    #[arg(long)]
    pattern: String,
}

#[derive(Args)]
struct GenArgs {
    /// uniform | flip | flip:<p> | counter | constant
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    words: usize,
    #[arg(long)]
    width: usize,
    /// Toggle probability for `flip`.
    #[arg(long)]
    p: Option<f64>,
    /// text | binary
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Also check the model and the encoder against the enumeration.
    #[arg(long)]
    verify_all: bool,
    /// Switch threshold for the retention check.
    #[arg(long, default_value_t = 20)]
    st: u32,
}

#[derive(Args)]
struct ReportArgs {
    /// Report of the uncoded run.
    #[arg(long)]
    before: PathBuf,
    /// Report of the coded run.
    #[arg(long)]
    after: PathBuf,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let settings = args.run.settings(&[
        ("codec", &args.codec),
        ("st", &args.st),
        ("json", &args.json),
        ("csv", &args.csv),
    ])?;
    let config = RunConfig::from_settings(&settings)?;
    let trace = config.load_trace()?;
    let layout = config.layout_for(trace.width())?;
    let options = config.replay_options();

    let baseline = replay(&trace, &layout, &CodecSpec::Uncoded, &options)?;
    let mut report = match config.codec_spec() {
        CodecSpec::Uncoded => baseline.clone(),
        codec => replay(&trace, &layout, &codec, &options)?,
    };
    if baseline.mean_bus_delay > 0.0 {
        report.normalize_against(&baseline)?;
    }

    match &config.json_out {
        Some(path) => {
            write_run_report(&report, &layout, &config, path)?;
            println!("{}", summary(&report));
        }
        None => print!("{}", render_run_report(&report, &layout, &config)),
    }
    if let Some(path) = &config.csv_out {
        write_histogram_csv(
            &baseline.class_histogram,
            &report.class_histogram,
            output(Some(path))?,
        )?;
    }
    Ok(())
}

fn summary(report: &RunReport) -> String {
    format!(
        "codec={} cycles={} mean_bus_delay={:.4} max_bus_delay={:.4} normalized_delay={} retention_rate={:.4}",
        report.codec,
        report.cycles,
        report.mean_bus_delay,
        report.max_bus_delay,
        report
            .normalized_delay
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}")),
        report.retention_rate,
    )
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = RunConfig::from_settings(&args.run.settings(&[])?)?;
    let thresholds = parse_threshold_range(&args.st)?;
    let trace = config.load_trace()?;
    let layout = config.layout_for(trace.width())?;
    let table = sweep_st(&trace, &layout, &config.replay_options(), &thresholds)?;
    write_sweep_csv(&table, output(args.out.as_deref())?)?;
    if let Some(best) = table.argmin() {
        eprintln!(
            "minimum mean bus delay at st={best} ({}; uncoded mean {:.4})",
            if table.has_interior_minimum() {
                "interior"
            } else {
                "at the range boundary"
            },
            table.baseline.mean_bus_delay
        );
    }
    Ok(())
}

fn parse_cluster(bits: &str) -> Result<Vec<bool>> {
    if bits.len() != 9 || !bits.chars().all(|c| c == '0' || c == '1') {
        bail!(tsvsim::Error::InvalidParameter {
            name: "pattern",
            reason: format!("expected nine 0/1 characters, got {bits:?}"),
        });
    }
    Ok(bits.chars().map(|c| c == '1').collect())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let (prev, next) =
        args.pattern
            .split_once(':')
            .ok_or_else(|| tsvsim::Error::InvalidParameter {
                name: "pattern",
                reason: "expected PREV:NEXT".into(),
            })?;
    let layout = GridLayout::new(3, 3, 9)?;
    let pattern = layout.neighborhood_of((1, 1), &parse_cluster(prev)?, &parse_cluster(next)?)?;
    let coefficient: Coefficient = pattern.coefficient();
    println!(
        "class={} coefficient={coefficient}",
        pattern.class().index()
    );
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let mut kind: GeneratorKind = args.kind.parse()?;
    if let (GeneratorKind::Flip { .. }, Some(p)) = (kind, args.p) {
        kind = GeneratorKind::Flip { p };
    }
    let trace = generate(&GeneratorSpec {
        kind,
        seed: args.seed,
        count: args.words,
        width: args.width,
    })?;
    let bytes = match args.format.as_str() {
        "text" => trace.to_text().into_bytes(),
        "binary" => trace.to_binary(),
        other => bail!(tsvsim::Error::InvalidParameter {
            name: "format",
            reason: format!("expected text or binary, got {other:?}"),
        }),
    };
    std::fs::write(&args.out, bytes).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

/// Outcome of the oracle command, mapped to an exit status by the caller.
fn oracle(args: OracleArgs) -> Result<u8> {
    let st = SwitchThreshold::new(args.st)?;
    let enumeration = enumerate_all();
    let histogram = enumeration.class_histogram();
    let mut switching = [0u64; tsvsim::CLASS_COUNT];
    for e in enumeration.switching() {
        switching[usize::from(e.class)] += 1;
    }

    println!(
        "{:>5}  {:>11}  {:>8}  {:>9}",
        "class", "coefficient", "patterns", "switching"
    );
    for (class, (&all, &sw)) in histogram.iter().zip(&switching).enumerate() {
        let coefficient = tsvsim::CrosstalkClass::new(class as u8)?.coefficient();
        println!("{class:>5}  {coefficient:>11}  {all:>8}  {sw:>9}");
    }
    let attained = enumeration.attained_classes();
    let missing: Vec<String> = (0..tsvsim::CLASS_COUNT as u8)
        .filter(|c| !attained.contains(c))
        .map(|c| c.to_string())
        .collect();
    println!(
        "patterns={} classes_attained={} unattained=[{}]",
        enumeration.entries().len(),
        attained.len(),
        missing.join(",")
    );

    let retention = verify_retention_theorem(&enumeration, st);
    println!(
        "retention st={} candidates={} violations={} min_class_drop={}",
        retention.st,
        retention.candidates,
        retention.violations.len(),
        retention
            .min_class_drop
            .map_or_else(|| "n/a".to_string(), |d| d.to_string())
    );

    let mut status = 0;
    if args.verify_all {
        let model = model_disagreements(&enumeration);
        let codec = codec_disagreements(&enumeration, st);
        println!(
            "model_disagreements={} codec_disagreements={}",
            model.len(),
            codec.len()
        );
        if !model.is_empty() || !codec.is_empty() {
            status = EXIT_INTERNAL;
        } else if !retention.holds() {
            status = EXIT_INVALID;
        }
    }
    Ok(status)
}

fn report(args: ReportArgs) -> Result<()> {
    let before = RunReportFile::read(&args.before)?;
    let after = RunReportFile::read(&args.after)?;
    if before.cycles != after.cycles {
        bail!(tsvsim::Error::Incomparable(format!(
            "{} cycles vs {} cycles",
            before.cycles, after.cycles
        )));
    }
    write_histogram_csv(
        &before.class_histogram,
        &after.class_histogram,
        output(args.csv.as_deref())?,
    )?;
    let above = |h: &[u64]| h[21..].iter().sum::<u64>();
    eprintln!(
        "events above class 20: before={} after={}; mean bus delay ratio {:.4}",
        above(&before.class_histogram),
        above(&after.class_histogram),
        if before.mean_bus_delay > 0.0 {
            after.mean_bus_delay / before.mean_bus_delay
        } else {
            f64::NAN
        }
    );
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("TSVSIM_THREADS") {
        let threads: usize = value
            .trim()
            .parse()
            .map_err(|_| tsvsim::Error::InvalidParameter {
                name: "TSVSIM_THREADS",
                reason: format!("not a thread count: {value:?}"),
            })?;
        if threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .context("configuring worker threads")?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| 0),
        Command::Sweep(a) => sweep(a).map(|_| 0),
        Command::Classify(a) => classify(a).map(|_| 0),
        Command::Gen(a) => gen(a).map(|_| 0),
        Command::Oracle(a) => oracle(a),
        Command::Report(a) => report(a).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e:#}");
            let internal = e
                .downcast_ref::<tsvsim::Error>()
                .is_some_and(tsvsim::Error::is_internal);
            ExitCode::from(if internal {
                EXIT_INTERNAL
            } else {
                EXIT_INVALID
            })
        }
    }
}
