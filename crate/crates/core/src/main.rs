use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use ergokit::ingest::{
    read_recording, send_recording, write_recording, AnalysisWindow, ParseOptions, Recording, Speed, StreamOptions,
    StreamSession, DEFAULT_RATE_HZ,
};
use ergokit::metrics::{metric_series, write_series_csv, MetricKind, Thresholds, DEFAULT_W_ETA};
use ergokit::report::{
    build_comparison, read_timing_csv, read_tlx_csv, session_aggregates, write_table_csv, write_timing_boxplots,
    write_tlx_table, ComparisonConfig, LiveScorer, NasaTlxRecord, SessionTiming,
};
use ergokit::skeleton::{validate_skeleton, SkeletonDescriptor};
use ergokit::stats::NormalizationMode;
use ergokit::synth::cohort;
use ergokit::teleop::{
    cop_step, read_cop_log, read_mouse_log, write_command_log, CommandLogRow, CopMapperParams, MapperCommand,
    MapperState, MouseConfig, MouseMapper,
};
use ergokit::Error;

#[derive(Parser)]
#[command(name = "ergokit", version, about = "Kinematic ergonomics analysis for teleoperation interfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Full,
    Marks,
}

impl From<WindowArg> for AnalysisWindow {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Full => AnalysisWindow::Full,
            WindowArg::Marks => AnalysisWindow::Marks,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    PerSubjectMax,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Check a skeleton config and list every violation.
    Validate { skeleton: PathBuf },
    /// Per-frame metric series and session aggregates of one recording.
    Analyze {
        recording: PathBuf,
        #[arg(long)]
        skeleton: Option<PathBuf>,
        /// `all` or a comma-separated list (posture, rom, usage, com).
        #[arg(long, default_value = "all")]
        metrics: String,
        #[arg(long, value_enum, default_value = "full")]
        window: WindowArg,
        #[arg(long, default_value_t = DEFAULT_W_ETA)]
        w_eta: f64,
        #[arg(long)]
        out: PathBuf,
        /// Accept and skip joints or links the skeleton does not declare.
        #[arg(long)]
        ignore_unknown: bool,
    },
    /// Two-group comparison report from directories of recordings.
    Compare {
        #[arg(long)]
        group_a: PathBuf,
        #[arg(long)]
        group_b: PathBuf,
        #[arg(long)]
        skeleton: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "per-subject-max")]
        normalize: NormalizeArg,
        #[arg(long, value_enum, default_value = "full")]
        window: WindowArg,
        #[arg(long, default_value_t = DEFAULT_W_ETA)]
        w_eta: f64,
        /// Report JSON path, `-` for stdout.
        #[arg(long)]
        out: PathBuf,
        /// Also write table and boxplot CSVs into this directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[arg(long)]
        ignore_unknown: bool,
    },
    /// Listen for frames over UDP and emit live scores as JSON lines.
    Stream {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        skeleton: Option<PathBuf>,
        /// Score output, `-` for stdout.
        #[arg(long, default_value = "-")]
        scores_out: PathBuf,
        /// Stop after this many seconds without datagrams.
        #[arg(long)]
        idle_timeout: Option<f64>,
        #[arg(long)]
        max_frames: Option<u64>,
        /// Sender frame rate (Hz), used to count lost frames.
        #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
        rate: f64,
        #[arg(long, default_value_t = DEFAULT_W_ETA)]
        w_eta: f64,
    },
    /// Send a recording to a UDP listener, one frame per datagram.
    Replay {
        recording: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Wall-clock speed factor; 0 sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
    /// Run a 3D-mouse sample log through the mapper.
    SimulateMouse {
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = MouseConfig::DEFAULT.window)]
        window: usize,
        #[arg(long, default_value_t = MouseConfig::DEFAULT.fullscale)]
        fullscale: f64,
    },
    /// Run a CoP log through the deadzone locomotion mapper.
    SimulateCop {
        cop: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with `CopMapperParams` fields.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Deadzone half-width in x and y (m).
        #[arg(long, default_value_t = 0.03)]
        deadzone: f64,
    },
    /// Mean and standard deviation table of NASA-TLX sheets.
    Tlx {
        sheets: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic two-group cohort as recordings.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        subjects: usize,
        /// Group A excursions relative to group B.
        #[arg(long, default_value_t = 2.0)]
        ratio: f64,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(Error::Io(e))
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_skeleton(path: Option<&Path>) -> CliResult<SkeletonDescriptor> {
    Ok(match path {
        Some(p) => SkeletonDescriptor::load_validated(p)?,
        None => SkeletonDescriptor::default_model(),
    })
}

fn output(path: &Path) -> CliResult<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdout().lock()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

fn path_err(path: &Path, e: io::Error) -> Failure {
    Failure::Data(Error::Data(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| path_err(path, e))
}

fn parse_opts(ignore_unknown: bool) -> ParseOptions {
    ParseOptions { ignore_unknown_ids: ignore_unknown }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Validate { skeleton } => {
            let desc = SkeletonDescriptor::load(&skeleton)?;
            let report = validate_skeleton(&desc);
            if report.is_ok() {
                println!("ok: {} joints, {} links, {} DoFs", desc.joints.len(), desc.links.len(), desc.total_dofs());
                Ok(())
            } else {
                for v in &report.violations {
                    println!("{:?}: {}", v.kind, v.message);
                }
                Err(Failure::Data(Error::Config(format!("{} violation(s)", report.violations.len()))))
            }
        }
        Command::Analyze { recording, skeleton, metrics, window, w_eta, out, ignore_unknown } => {
            let kinds = parse_metrics(&metrics)?;
            let desc = load_skeleton(skeleton.as_deref())?;
            let rec = read_recording(&recording, &desc, &parse_opts(ignore_unknown))?;
            let frames = rec.window(window.into())?;
            fs::create_dir_all(&out)?;
            for kind in kinds {
                let rows = metric_series(kind, frames, &desc, w_eta)?;
                write_series_csv(&rows, BufWriter::new(File::create(out.join(format!("{}.csv", kind.as_str())))?))?;
            }
            let aggs = session_aggregates(&rec, &desc, window.into(), w_eta)?;
            let mut w = output(&out.join("aggregates.json"))?;
            serde_json::to_writer_pretty(&mut w, &aggs).map_err(Error::from)?;
            writeln!(w)?;
            eprintln!("{} frames analysed, output in {}", frames.len(), out.display());
            Ok(())
        }
        Command::Compare { group_a, group_b, skeleton, normalize, window, w_eta, out, csv_dir, ignore_unknown } => {
            let desc = load_skeleton(skeleton.as_deref())?;
            let opts = parse_opts(ignore_unknown);
            let (recs_a, recs_b) = (load_group(&group_a, &desc, &opts)?, load_group(&group_b, &desc, &opts)?);
            let config = ComparisonConfig {
                normalization: match normalize {
                    NormalizeArg::PerSubjectMax => NormalizationMode::PerSubjectMax,
                    NormalizeArg::None => NormalizationMode::None,
                },
                window: window.into(),
                w_eta,
                labels: None,
            };
            let mut report = build_comparison(&recs_a, &recs_b, &desc, &config)?;
            let timings = match (read_timings(&group_a)?, read_timings(&group_b)?) {
                (Some(a), Some(b)) => {
                    report.attach_timing(&a, &b)?;
                    Some((a, b))
                }
                _ => None,
            };
            if let (Some(a), Some(b)) = (read_tlx(&group_a)?, read_tlx(&group_b)?) {
                report.attach_tlx(&a, &b)?;
            }
            let mut w = output(&out)?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(Error::from)?;
            writeln!(w)?;
            w.flush()?;
            if let Some(dir) = csv_dir {
                fs::create_dir_all(&dir)?;
                write_table_csv(&report, File::create(dir.join("table2.csv"))?)?;
                if let Some((a, b)) = timings {
                    let labels = (report.groups.a.as_str(), report.groups.b.as_str());
                    write_timing_boxplots(labels, &a, &b, File::create(dir.join("boxplots.csv"))?)?;
                }
            }
            Ok(())
        }
        Command::Stream { port, skeleton, scores_out, idle_timeout, max_frames, rate, w_eta } => {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Failure::Usage(format!("--rate must be positive, got {rate}")));
            }
            let desc = Arc::new(load_skeleton(skeleton.as_deref())?);
            let idle = match idle_timeout {
                Some(s) if !(s > 0.0 && s.is_finite()) => {
                    return Err(Failure::Usage(format!("--idle-timeout must be positive, got {s}")))
                }
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            let opts = StreamOptions { idle_timeout: idle, max_frames, nominal_rate: Some(rate), ..Default::default() };
            let session = StreamSession::bind(("0.0.0.0", port), Arc::clone(&desc), opts)?;
            eprintln!("listening on {}", session.local_addr()?);
            let mut scorer = LiveScorer::new(desc, Thresholds::default(), w_eta);
            let mut w = output(&scores_out)?;
            let stats = session.run(&mut |frame| {
                let event = scorer.push(&frame)?;
                serde_json::to_writer(&mut w, &event)?;
                writeln!(w)?;
                Ok(())
            })?;
            w.flush()?;
            eprintln!("{}", serde_json::to_string(&stats).map_err(Error::from)?);
            Ok(())
        }
        Command::Replay { recording, port, host, speed, skeleton } => {
            let speed = if speed == 0.0 {
                Speed::Unlimited
            } else if speed > 0.0 && speed.is_finite() {
                Speed::Factor(speed)
            } else {
                return Err(Failure::Usage(format!("--speed must be >= 0, got {speed}")));
            };
            let desc = load_skeleton(skeleton.as_deref())?;
            let rec = read_recording(&recording, &desc, &ParseOptions::default())?;
            let target = std::net::ToSocketAddrs::to_socket_addrs(&(host.as_str(), port))?
                .next()
                .ok_or_else(|| Failure::Usage(format!("cannot resolve {host}")))?;
            let sent = send_recording(&rec, target, speed)?;
            eprintln!("sent {sent} frames to {target}");
            Ok(())
        }
        Command::SimulateMouse { samples, out, window, fullscale } => {
            if window == 0 || !(fullscale > 0.0) {
                return Err(Failure::Usage("--window and --fullscale must be positive".into()));
            }
            let samples = read_mouse_log(open(&samples)?)?;
            let mut mapper = MouseMapper::new(MouseConfig { window, fullscale, ..MouseConfig::DEFAULT });
            let rows: Vec<CommandLogRow> =
                samples.iter().map(|s| CommandLogRow { t: s.t, command: mapper.process(s) }).collect();
            write_command_log(&rows, output(&out)?)?;
            Ok(())
        }
        Command::SimulateCop { cop, out, params, deadzone } => {
            if !(deadzone >= 0.0) {
                return Err(Failure::Usage(format!("--deadzone must be >= 0, got {deadzone}")));
            }
            let params: CopMapperParams = match params {
                Some(p) => CopMapperParams::from_toml_str(&fs::read_to_string(&p).map_err(|e| path_err(&p, e))?)?,
                None => CopMapperParams::default(),
            };
            params.validate()?;
            let samples = read_cop_log(open(&cop)?)?;
            let mut state = MapperState::with_deadzone([deadzone, deadzone]);
            let rows: Vec<CommandLogRow> = samples
                .iter()
                .map(|s| CommandLogRow {
                    t: s.t,
                    command: MapperCommand::Twist(cop_step(&params, &mut state, s.cop, s.rate)),
                })
                .collect();
            write_command_log(&rows, output(&out)?)?;
            Ok(())
        }
        Command::Tlx { sheets, out } => {
            let sheets = read_tlx_csv(open(&sheets)?)?;
            write_tlx_table(&sheets, output(&out)?)?;
            Ok(())
        }
        Command::Synth { out, subjects, ratio, duration } => {
            if subjects == 0 || !(ratio > 0.0) || !(duration > 0.0) {
                return Err(Failure::Usage("--subjects, --ratio and --duration must be positive".into()));
            }
            let desc = SkeletonDescriptor::default_model();
            let (a, b) = cohort(&desc, subjects, ratio, duration, ("group_a", "group_b"));
            for (dir, group) in [("a", a), ("b", b)] {
                let dir = out.join(dir);
                fs::create_dir_all(&dir)?;
                for rec in group {
                    let path = dir.join(format!("{}.ergframes", rec.subject_id));
                    write_recording(&rec, BufWriter::new(File::create(path)?))?;
                }
            }
            eprintln!("wrote {subjects} subjects per group to {}", out.display());
            Ok(())
        }
    }
}

fn parse_metrics(spec: &str) -> CliResult<Vec<MetricKind>> {
    if spec == "all" {
        return Ok(MetricKind::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| MetricKind::parse(s.trim()).ok_or_else(|| Failure::Usage(format!("unknown metric `{s}`"))))
        .collect()
}

fn load_group(dir: &Path, desc: &SkeletonDescriptor, opts: &ParseOptions) -> CliResult<Vec<Recording>> {
    let mut paths: Vec<PathBuf> =
        fs::read_dir(dir).map_err(|e| path_err(dir, e))?.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "ergframes"));
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Data(Error::Data(format!("no .ergframes files in {}", dir.display()))));
    }
    paths.iter().map(|p| Ok(read_recording(p, desc, opts)?)).collect()
}

/// Timings of a group directory, in subject order, if `timing.csv` exists.
fn read_timings(dir: &Path) -> CliResult<Option<Vec<SessionTiming>>> {
    let path = dir.join("timing.csv");
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(read_timing_csv(open(&path)?)?.into_values().collect()))
}

fn read_tlx(dir: &Path) -> CliResult<Option<Vec<NasaTlxRecord>>> {
    let path = dir.join("tlx.csv");
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(read_tlx_csv(open(&path)?)?.into_iter().map(|s| s.record).collect()))
}
