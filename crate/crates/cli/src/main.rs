//! `compton`: batch front end for the multi-photon Compton engine.
//!
//! Exit codes: 0 success, 1 validation error, 2 flagged numerics (results
//! are still written), 3 I/O error.

mod scenario;
mod table;
mod tasks;
mod units;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compton_core::kinematics::{omega_max, Boost};
use compton_core::ELECTRON_MASS;

use scenario::{
    AxisFile, BeamFile, ChannelSpec, DetectorFile, Format, LegFile, NumericsFile, Overrides, PointFile, ProcessSpec,
    Scenario, ScenarioFile, Task, SCHEMA_VERSION,
};
use units::EnergySpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "compton", version, about = "Single, double and triple Compton scattering: cross sections and photon entanglement")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Monte Carlo seed (overrides the scenario).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo angle samples (overrides the scenario).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; without one, data goes to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Exit 0 even when some results did not reach their tolerance.
    #[arg(long, global = true)]
    allow_flagged: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file.
    Run { scenario: PathBuf },
    /// Check a scenario file and print derived quantities; computes nothing.
    Validate { scenario: PathBuf },
    /// Monte Carlo total cross section at one beam setting.
    Total {
        #[command(flatten)]
        beam: BeamArgs,
        /// SC, DC or TC.
        #[arg(long, default_value = "TC")]
        process: String,
    },
    /// Differential cross section (and optionally photon entanglement) at one point.
    Point {
        #[command(flatten)]
        beam: BeamArgs,
        /// SC, DC or TC.
        #[arg(long, default_value = "TC")]
        process: String,
        /// Common polar angle of a Mercedes-star detector set.
        #[arg(long, conflicts_with_all = ["thetas", "phis"])]
        mercedes: Option<f64>,
        /// Polar angles, one per emitted photon.
        #[arg(long, value_delimiter = ',', requires = "phis")]
        thetas: Vec<f64>,
        /// Azimuths, one per emitted photon.
        #[arg(long, value_delimiter = ',')]
        phis: Vec<f64>,
        /// Energies of all but the last photon.
        #[arg(long, value_delimiter = ',')]
        omegas: Vec<String>,
        /// Channel labels ("111", "2111"), "summed", "summed-all" or "all".
        #[arg(long, default_value = "summed")]
        channel: String,
        /// Also compute the density matrix, τ and Q (TC only).
        #[arg(long)]
        entanglement: bool,
    },
}

#[derive(Args, Debug)]
struct BeamArgs {
    /// Incoming photon energy, e.g. "180 keV".
    #[arg(long)]
    omega0: String,
    /// Incoming electron energy, e.g. "m" or "50 GeV".
    #[arg(long, default_value = "m")]
    e_i: String,
    /// Photon threshold, e.g. "3.6 keV" or "omega0/50".
    #[arg(long)]
    cutoff: String,
    /// Incoming polarization label (1 = x, 2 = y).
    #[arg(long, default_value_t = 1)]
    incoming: u8,
}

impl BeamArgs {
    fn file(&self) -> BeamFile {
        BeamFile {
            omega0: EnergySpec::Text(self.omega0.clone()),
            e_i: EnergySpec::Text(self.e_i.clone()),
            cutoff: EnergySpec::Text(self.cutoff.clone()),
            incoming: self.incoming,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("compton: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let overrides = Overrides {
        seed: g.seed,
        samples: g.samples,
        output: g.output.clone(),
        format: g.format.as_deref().map(Format::parse).transpose().map_err(CliError::Validation)?,
    };
    match &cli.command {
        Command::Run { scenario } => {
            let source = read(scenario)?;
            let s = Scenario::parse(&source, &overrides)?;
            run_and_write(&s, &source, g.allow_flagged)
        }
        Command::Validate { scenario } => {
            let source = read(scenario)?;
            let s = Scenario::parse(&source, &overrides)?;
            print!("{}", report(&s));
            Ok(0)
        }
        Command::Total { beam, process } => {
            let file = ScenarioFile {
                schema: SCHEMA_VERSION,
                name: None,
                task: Task::TotalVsOmega0,
                process: ProcessSpec::One(process.clone()),
                beam: beam.file(),
                detectors: None,
                channels: None,
                grid: None,
                sweep: None,
                omega0_scan: Some(AxisFile {
                    min: EnergySpec::Text(beam.omega0.clone()),
                    max: EnergySpec::Text(beam.omega0.clone()),
                    count: 1,
                    log: false,
                    variable: None,
                    centres: false,
                }),
                point: None,
                numerics: NumericsFile::default(),
                output: None,
            };
            let mut ov = overrides;
            ov.format = ov.format.or(Some(Format::Json));
            let s = Scenario::from_file(file, &ov)?;
            run_and_write(&s, &format!("{:?}", cli.command), g.allow_flagged)
        }
        Command::Point { beam, process, mercedes, thetas, phis, omegas, channel, entanglement } => {
            let detectors = match mercedes {
                Some(t) => DetectorFile { preset: Some("mercedes".into()), theta: Some(*t), legs: None },
                None => {
                    if thetas.len() != phis.len() {
                        return Err(CliError::Validation("--thetas and --phis need the same length".into()));
                    }
                    let legs = thetas.iter().zip(phis).map(|(&theta, &phi)| LegFile { theta, phi }).collect();
                    DetectorFile { preset: None, theta: None, legs: Some(legs) }
                }
            };
            let file = ScenarioFile {
                schema: SCHEMA_VERSION,
                name: None,
                task: Task::SinglePoint,
                process: ProcessSpec::One(process.clone()),
                beam: beam.file(),
                detectors: Some(detectors),
                channels: Some(ChannelSpec::Keyword(channel.clone())),
                grid: None,
                sweep: None,
                omega0_scan: None,
                point: Some(PointFile {
                    omegas: omegas.iter().map(|w| EnergySpec::Text(w.clone())).collect(),
                    entanglement: *entanglement,
                }),
                numerics: NumericsFile::default(),
                output: None,
            };
            let s = Scenario::from_file(file, &overrides)?;
            run_and_write(&s, &format!("{:?}", cli.command), g.allow_flagged)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run_and_write(s: &Scenario, source: &str, allow_flagged: bool) -> Result<u8, CliError> {
    let table = tasks::run(s, source)?;
    match &s.output {
        Some(path) => {
            for f in table.write(path, s.format)? {
                eprintln!("wrote {}", f.display());
            }
        }
        None => {
            let bytes = match s.format {
                Format::Csv => table.to_csv()?,
                Format::Json => table.to_json()?,
            };
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    let m = &table.metadata;
    if m.masked > 0 {
        eprintln!("{} cells masked (forbidden or below threshold)", m.masked);
    }
    if m.flagged > 0 {
        eprintln!("{} results did not reach their tolerance:", m.flagged);
        for n in m.notes.iter().take(10) {
            eprintln!("  {n}");
        }
        if !allow_flagged {
            return Ok(2);
        }
    }
    Ok(0)
}

/// Derived quantities and warnings for `validate`.
fn report(s: &Scenario) -> String {
    use std::fmt::Write;
    let mut r = String::new();
    let boost = Boost::from_energy(s.e_i);
    let cfg = s.config();
    let n = s.processes.iter().map(|p| p.emitted()).max().unwrap_or(1);
    let _ = writeln!(r, "scenario ok: task {}", s.task.label());
    if let Some(name) = &s.name {
        let _ = writeln!(r, "name: {name}");
    }
    let procs: Vec<&str> = s.processes.iter().map(|p| scenario::process_label(*p)).collect();
    let _ = writeln!(r, "process: {}", procs.join(", "));
    let _ = writeln!(r, "omega0 = {:e} MeV, E_i = {:e} MeV, cutoff = {:e} MeV", s.omega0, s.e_i, s.cutoff);
    let _ = writeln!(r, "gamma_i = {:.6e}, beta_i = {:.15}", boost.gamma, boost.beta);
    let w_rest = boost.doppler_to_rest(0.0) * s.omega0;
    let _ = writeln!(r, "rest-frame omega0' = {w_rest:.6e} MeV");
    if boost.is_identity() {
        let _ = writeln!(r, "threshold regime: electron at rest, cutoff/omega0 = {:.4e}", s.cutoff / s.omega0);
    } else {
        let _ = writeln!(r, "threshold regime: lab threshold, mapped leg by leg into the electron rest frame");
        let fixed_angles = s.sweep.is_none();
        for (j, d) in s.directions.iter().enumerate().filter(|_| fixed_angles) {
            let t = boost.angle_to_rest(d.theta);
            let _ = writeln!(
                r,
                "  photon {}: rest-frame angle {t:.6e}, rest-frame threshold {:.6e} MeV",
                j + 1,
                boost.rest_threshold(s.cutoff, t)
            );
        }
    }
    if s.sweep.is_some() {
        let phis: Vec<String> = s.directions.iter().map(|d| format!("{:.6}", d.phi)).collect();
        let _ = writeln!(r, "detectors: mercedes, swept polar angle, phi = {}", phis.join(" "));
    } else if !s.directions.is_empty() {
        let dirs: Vec<String> = s.directions.iter().map(|d| format!("({:.6}, {:.6})", d.theta, d.phi)).collect();
        let _ = writeln!(r, "detectors (theta, phi): {}", dirs.join(" "));
    }
    if !s.channels.is_empty() && s.task != scenario::Task::TotalVsOmega0 {
        let ch: Vec<String> = s.channels.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(r, "channels: {}", ch.join(" "));
    }
    let available = s.omega0 + s.e_i - ELECTRON_MASS;
    let mut empty = n as f64 * s.cutoff >= available;
    if let Some([a1, a2]) = &s.grid {
        let _ = writeln!(r, "grid omega1: {:e} .. {:e} MeV, {} cells", a1.min, a1.max, a1.count);
        let _ = writeln!(r, "grid omega2: {:e} .. {:e} MeV, {} cells", a2.min, a2.max, a2.count);
        let d = &s.directions;
        let top = omega_max(&cfg, &[d[1].null_vector() * s.cutoff], d[0], d[2], s.cutoff);
        match top {
            Ok(t) => {
                let _ = writeln!(r, "threshold boundary: omega1 max = {t:e} MeV at omega2 = cutoff");
                empty |= t <= s.cutoff;
            }
            Err(_) => empty = true,
        }
        empty |= a1.max < a1.min || a2.max < a2.min;
    }
    if let Some((v, a)) = &s.sweep {
        let _ = writeln!(r, "sweep {:?}: {} .. {}, {} points", v, a.min, a.max, a.count);
    }
    if let Some(a) = &s.omega0_scan {
        let _ = writeln!(r, "omega0 scan: {:e} .. {:e} MeV, {} points{}", a.min, a.max, a.count, if a.log { " (log)" } else { "" });
    }
    if s.task == scenario::Task::TotalVsOmega0 {
        let _ = writeln!(r, "monte carlo: {} samples, seed {}, {} shards", s.samples, s.seed, s.shards);
    }
    if empty {
        let _ = writeln!(r, "warning: cutoff at or above the kinematic maximum; all grids empty");
    }
    match &s.output {
        Some(p) => {
            let _ = writeln!(r, "output: {} ({:?})", p.display(), s.format);
        }
        None => {
            let _ = writeln!(r, "output: stdout ({:?})", s.format);
        }
    }
    r
}
