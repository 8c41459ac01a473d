//! The `egress-sim` command line.
//!
//! Exit codes: 0 success, 2 user error (bad flags, invalid map, spec or
//! results file), 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::behavior::BehaviorParams;
use crate::engine::{format_events, run, SimConfig, Speeds, DEFAULT_OFFICER_ENTRY};
use crate::experiment::{run_matrix, ExperimentError, MatrixSpec};
use crate::layout::layout_stats;
use crate::maps::{self, LoadError};
use crate::report::{render_csv, render_markdown, render_svg, ResultsFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable capping worker threads for `batch` (0 = all cores).
pub const THREADS_ENV: &str = "EGRESS_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "egress-sim",
    version,
    about = "School evacuation simulation with and without gunshot detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Parse and validate a floor map, printing its room and exit counts.
    ValidateMap {
        /// Map file, or the name of a bundled map.
        path: String,
    },
    /// Run one simulation and print its outcome.
    Run(RunArgs),
    /// Run a configuration matrix and write a results file.
    Batch {
        /// Matrix spec file (`key = value` lines).
        spec: PathBuf,
        /// Directory receiving `results.csv`.
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Render a results file.
    Report {
        results: PathBuf,
        #[arg(long, short, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Md,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Map file, or the name of a bundled map.
    #[arg(long)]
    pub map: String,
    #[arg(long, default_value_t = 100)]
    pub students: usize,
    /// Seconds to simulate.
    #[arg(long, default_value_t = 360)]
    pub runtime: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to --seed.
    #[arg(long)]
    pub placement_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub detector: Switch,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma_officer: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub tick: u32,
    #[arg(long, default_value_t = DEFAULT_OFFICER_ENTRY)]
    pub officer_entry: u32,
    #[arg(long)]
    pub speed_student: Option<u32>,
    #[arg(long)]
    pub speed_shooter: Option<u32>,
    #[arg(long)]
    pub speed_officer: Option<u32>,
    /// Also print the event log, one `time,kind,subject,x,y` line per event.
    #[arg(long)]
    pub events: bool,
}

impl RunArgs {
    fn config(&self, layout: Arc<crate::layout::FloorLayout>) -> SimConfig {
        let d = BehaviorParams::default();
        let s = Speeds::default();
        SimConfig {
            layout,
            student_count: self.students,
            runtime: self.runtime,
            tick: self.tick,
            detector_enabled: self.detector == Switch::On,
            officer_entry: self.officer_entry,
            speeds: Speeds {
                student: self.speed_student.unwrap_or(s.student),
                shooter: self.speed_shooter.unwrap_or(s.shooter),
                officer: self.speed_officer.unwrap_or(s.officer),
            },
            params: BehaviorParams {
                alpha: self.alpha.unwrap_or(d.alpha),
                beta: self.beta.unwrap_or(d.beta),
                gamma: self.gamma.unwrap_or(d.gamma),
                gamma_officer: self.gamma_officer.unwrap_or(d.gamma_officer),
                sigma: self.sigma.unwrap_or(d.sigma),
                epsilon: self.epsilon.unwrap_or(d.epsilon),
            },
            seed: self.seed,
            placement_seed: self.placement_seed.unwrap_or(self.seed),
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn user(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USER,
            message: message.to_string(),
        }
    }
    fn io(message: impl ToString) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => Failure::io(e),
            LoadError::Layout { .. } => Failure::user(e),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_USER
            } else {
                // --help / --version
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: CliCommand, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        CliCommand::ValidateMap { path } => {
            let layout = maps::resolve(&path, None)?;
            let stats = layout_stats(&layout);
            emit(
                out,
                &format!("rooms={} exits={}\n", stats.room_count, stats.exit_count),
            )
        }
        CliCommand::Run(args) => {
            let layout = Arc::new(maps::resolve(&args.map, None)?);
            let config = args.config(layout);
            let result = run(&config).map_err(Failure::user)?;
            let mut text = format!("{}\n", result.outcome);
            if args.events {
                text.push_str(&format_events(&result.events));
            }
            emit(out, &text)
        }
        CliCommand::Batch { spec, out: dir } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Failure::io(format!("{}: {e}", spec.display())))?;
            let matrix = MatrixSpec::parse(&text)
                .map_err(|e| Failure::user(format!("{}: {e}", spec.display())))?;
            let base = spec.parent().map(Path::to_path_buf);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(thread_cap())
                .build()
                .map_err(Failure::io)?;
            let report = pool
                .install(|| run_matrix(&matrix, base.as_deref()))
                .map_err(|e| match e {
                    ExperimentError::Load(l) => Failure::from(l),
                    other => Failure::user(other),
                })?;
            let csv = ResultsFile::from_report(&report).to_csv_string();
            let path = write_atomically(&dir, "results.csv", &csv)?;
            emit(
                out,
                &format!("cells={} results={}\n", report.cells.len(), path.display()),
            )
        }
        CliCommand::Report { results, format } => {
            let text = std::fs::read_to_string(&results)
                .map_err(|e| Failure::io(format!("{}: {e}", results.display())))?;
            let file = ResultsFile::parse(&text)
                .map_err(|e| Failure::user(format!("{}: {e}", results.display())))?;
            let rendered = match format {
                Format::Csv => render_csv(&file),
                Format::Md => render_markdown(&file),
                Format::Svg => render_svg(&file),
            };
            emit(out, &rendered)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(Failure::io)
}

/// `EGRESS_SIM_THREADS`, where unset, empty, 0 or unparsable mean "all cores".
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

// Write to a sibling temp file and rename, so a failure never leaves a
// half-written results file behind.
fn write_atomically(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(|e| Failure::io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, &target)
        .map_err(|e| Failure::io(format!("{}: {e}", target.display())))?;
    Ok(target)
}
