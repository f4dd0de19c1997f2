//! Scenario files: TOML, versioned, unknown keys rejected.

use std::f64::consts::PI;
use std::path::PathBuf;

use compton_core::kinematics::{mercedes, omega_max, Direction, Polarization, ScatterConfig};
use compton_core::quadrature::{McOptions, RombergOptions};
use compton_core::{Channel, Process, ELECTRON_MASS};
use serde::{Deserialize, Serialize};

use crate::units::{CutoffSpec, EnergySpec};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    pub name: Option<String>,
    pub task: Task,
    pub process: ProcessSpec,
    pub beam: BeamFile,
    pub detectors: Option<DetectorFile>,
    pub channels: Option<ChannelSpec>,
    pub grid: Option<GridFile>,
    pub sweep: Option<AxisFile>,
    pub omega0_scan: Option<AxisFile>,
    pub point: Option<PointFile>,
    #[serde(default)]
    pub numerics: NumericsFile,
    pub output: Option<OutputFile>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
pub enum Task {
    #[serde(rename = "grid-S")]
    GridS,
    #[serde(rename = "grid-Sbar")]
    GridSbar,
    #[serde(rename = "grid-tau-Q")]
    GridTauQ,
    #[serde(rename = "angular-sweep")]
    AngularSweep,
    #[serde(rename = "total-vs-omega0")]
    TotalVsOmega0,
    #[serde(rename = "single-point")]
    SinglePoint,
}

impl Task {
    pub fn label(self) -> &'static str {
        match self {
            Task::GridS => "grid-S",
            Task::GridSbar => "grid-Sbar",
            Task::GridTauQ => "grid-tau-Q",
            Task::AngularSweep => "angular-sweep",
            Task::TotalVsOmega0 => "total-vs-omega0",
            Task::SinglePoint => "single-point",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ProcessSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamFile {
    pub omega0: EnergySpec,
    pub e_i: EnergySpec,
    pub cutoff: EnergySpec,
    /// Linear polarization label of the incoming photon: 1 (x) or 2 (y).
    #[serde(default = "default_incoming")]
    pub incoming: u8,
}

fn default_incoming() -> u8 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorFile {
    pub preset: Option<String>,
    pub theta: Option<f64>,
    pub legs: Option<Vec<LegFile>>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegFile {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    /// "all" or "summed" (emitted polarizations) or "summed-all".
    Keyword(String),
    List(Vec<String>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub omega1: AxisFile,
    pub omega2: AxisFile,
}

/// `min`/`max` are energies, angles or sweep values depending on the axis.
/// For the energy grid, `"cutoff"` and `"auto"` (threshold boundary) are
/// accepted as bounds.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisFile {
    pub min: EnergySpec,
    pub max: EnergySpec,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
    /// Sweep variable for angular sweeps: "theta" (default) or
    /// "gamma-pi-minus-theta", the backscattering angle scaled by γ_i.
    pub variable: Option<String>,
    /// Grid cells are taken at interval centres instead of including the ends.
    #[serde(default)]
    pub centres: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub omegas: Vec<EnergySpec>,
    #[serde(default)]
    pub entanglement: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsFile {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub shards: Option<usize>,
    pub romberg_tol: Option<f64>,
    pub romberg_max_level: Option<usize>,
    pub romberg_min_level: Option<usize>,
    pub sdp_tol: Option<f64>,
    /// ε_up/ε_low for the leading-logarithm comparison columns.
    pub er_ratio: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format \"{other}\" (csv or json)")),
        }
    }
}

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
    pub centres: bool,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        let at = |t: f64| {
            if self.log {
                (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
            } else {
                self.min + t * (self.max - self.min)
            }
        };
        if self.centres {
            (0..n).map(|i| at((i as f64 + 0.5) / n as f64)).collect()
        } else if n == 1 {
            vec![self.min]
        } else {
            (0..n).map(|i| if i + 1 == n { self.max } else { at(i as f64 / (n - 1) as f64) }).collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    Theta,
    GammaPiMinusTheta,
}

/// A validated scenario with every energy in MeV.
#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: Option<String>,
    pub task: Task,
    #[serde(serialize_with = "ser_processes")]
    pub processes: Vec<Process>,
    pub omega0: f64,
    pub e_i: f64,
    #[serde(skip)]
    pub cutoff_spec: CutoffSpec,
    pub cutoff: f64,
    pub incoming: u8,
    #[serde(serialize_with = "ser_directions")]
    pub directions: Vec<Direction>,
    pub common_theta: Option<f64>,
    #[serde(serialize_with = "ser_channels")]
    pub channels: Vec<Channel>,
    pub grid: Option<[Axis; 2]>,
    pub sweep: Option<(SweepVariable, Axis)>,
    pub omega0_scan: Option<Axis>,
    pub point_omegas: Vec<f64>,
    pub entanglement: bool,
    pub seed: u64,
    pub samples: usize,
    pub shards: usize,
    pub romberg: RombergOptions,
    pub sdp_tol: f64,
    pub er_ratio: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

fn ser_processes<S: serde::Serializer>(p: &[Process], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(p.iter().map(|p| process_label(*p)))
}

fn ser_directions<S: serde::Serializer>(d: &[Direction], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(d.iter().map(|d| [d.theta, d.phi]))
}

fn ser_channels<S: serde::Serializer>(c: &[Channel], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|c| c.to_string()))
}

pub fn process_label(p: Process) -> &'static str {
    match p {
        Process::Single => "SC",
        Process::Double => "DC",
        Process::Triple => "TC",
    }
}

fn parse_process(s: &str) -> Result<Process, CliError> {
    match s {
        "SC" => Ok(Process::Single),
        "DC" => Ok(Process::Double),
        "TC" => Ok(Process::Triple),
        other => Err(invalid("process", format!("unknown process \"{other}\" (SC, DC or TC)"))),
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

fn energy(field: &str, e: &EnergySpec) -> Result<f64, CliError> {
    let v = e.mev().map_err(|m| invalid(field, m))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(field, format!("must be a positive energy, got {v}")));
    }
    Ok(v)
}

fn number(field: &str, e: &EnergySpec) -> Result<f64, CliError> {
    match e {
        EnergySpec::Mev(v) if v.is_finite() => Ok(*v),
        _ => Err(invalid(field, "expected a number")),
    }
}

impl Scenario {
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        Self::from_file(file, overrides)
    }

    pub fn from_file(f: ScenarioFile, ov: &Overrides) -> Result<Self, CliError> {
        if f.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("version {} is not supported (expected {SCHEMA_VERSION})", f.schema)));
        }
        let processes = match &f.process {
            ProcessSpec::One(s) => vec![parse_process(s)?],
            ProcessSpec::Many(v) => v.iter().map(|s| parse_process(s)).collect::<Result<_, _>>()?,
        };
        if processes.is_empty() {
            return Err(invalid("process", "at least one process is required"));
        }
        if processes.len() > 1 && f.task != Task::TotalVsOmega0 {
            return Err(invalid("process", format!("task {} takes a single process", f.task.label())));
        }
        let omega0 = energy("beam.omega0", &f.beam.omega0)?;
        let e_i = f.beam.e_i.mev().map_err(|m| invalid("beam.e_i", m))?;
        if !(e_i >= ELECTRON_MASS * (1.0 - 1e-12)) || !e_i.is_finite() {
            return Err(invalid("beam.e_i", format!("{e_i} MeV is below the electron mass {ELECTRON_MASS} MeV")));
        }
        let cutoff_spec = CutoffSpec::parse(&f.beam.cutoff).map_err(|m| invalid("beam.cutoff", m))?;
        let cutoff = cutoff_spec.resolve(omega0, e_i);
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(invalid("beam.cutoff", format!("must be positive, got {cutoff}")));
        }
        if !(1..=2).contains(&f.beam.incoming) {
            return Err(invalid("beam.incoming", format!("polarization label must be 1 or 2, got {}", f.beam.incoming)));
        }
        let n = processes.iter().map(|p| p.emitted()).max().unwrap();
        let (directions, common_theta) = match (&f.detectors, f.task) {
            (None, Task::TotalVsOmega0) => (Vec::new(), None),
            (None, _) => return Err(invalid("detectors", "required for this task")),
            (Some(d), _) => detectors(d, n, f.task)?,
        };
        let channels = channels(f.channels.as_ref(), &processes, f.task)?;

        let grid = match (f.task, &f.grid) {
            (Task::GridS | Task::GridSbar | Task::GridTauQ, Some(g)) => {
                if processes[0] != Process::Triple {
                    return Err(invalid("process", "ω₁×ω₂ grids are defined for TC"));
                }
                let cfg = ScatterConfig::new(omega0, e_i, cutoff);
                Some([
                    energy_axis("grid.omega1", &g.omega1, &cfg, &directions, [1, 0])?,
                    energy_axis("grid.omega2", &g.omega2, &cfg, &directions, [0, 1])?,
                ])
            }
            (Task::GridS | Task::GridSbar | Task::GridTauQ, None) => return Err(invalid("grid", "required for this task")),
            (_, Some(_)) => return Err(invalid("grid", format!("not used by task {}", f.task.label()))),
            _ => None,
        };
        let sweep = match (f.task, &f.sweep) {
            (Task::AngularSweep, Some(a)) => {
                let var = match a.variable.as_deref() {
                    None | Some("theta") => SweepVariable::Theta,
                    Some("gamma-pi-minus-theta") => SweepVariable::GammaPiMinusTheta,
                    Some(o) => return Err(invalid("sweep.variable", format!("unknown variable \"{o}\""))),
                };
                let axis = plain_axis("sweep", a)?;
                let gamma = e_i / ELECTRON_MASS;
                let thetas = match var {
                    SweepVariable::Theta => [axis.min, axis.max],
                    SweepVariable::GammaPiMinusTheta => [PI - axis.min / gamma, PI - axis.max / gamma],
                };
                if thetas.iter().any(|t| !(0.0..=PI).contains(t)) {
                    return Err(invalid("sweep", "polar angles must lie in [0, π]"));
                }
                Some((var, axis))
            }
            (Task::AngularSweep, None) => return Err(invalid("sweep", "required for this task")),
            (_, Some(_)) => return Err(invalid("sweep", format!("not used by task {}", f.task.label()))),
            _ => None,
        };
        let omega0_scan = match (f.task, &f.omega0_scan) {
            (Task::TotalVsOmega0, Some(a)) => Some(Axis {
                min: energy("omega0_scan.min", &a.min)?,
                max: energy("omega0_scan.max", &a.max)?,
                count: positive_count("omega0_scan.count", a.count)?,
                log: a.log,
                centres: a.centres,
            }),
            (Task::TotalVsOmega0, None) => return Err(invalid("omega0_scan", "required for this task")),
            (_, Some(_)) => return Err(invalid("omega0_scan", format!("not used by task {}", f.task.label()))),
            _ => None,
        };
        let (point_omegas, entanglement) = match (f.task, &f.point) {
            (Task::SinglePoint, Some(p)) => {
                let w: Vec<f64> = p
                    .omegas
                    .iter()
                    .enumerate()
                    .map(|(i, e)| energy(&format!("point.omegas[{i}]"), e))
                    .collect::<Result<_, _>>()?;
                if w.len() + 1 != n {
                    return Err(invalid(
                        "point.omegas",
                        format!("{} emitted photons need {} fixed energies, got {}", n, n - 1, w.len()),
                    ));
                }
                if p.entanglement && processes[0] != Process::Triple {
                    return Err(invalid("point.entanglement", "the photon density matrix is defined for TC"));
                }
                (w, p.entanglement)
            }
            (Task::SinglePoint, None) => return Err(invalid("point", "required for this task")),
            (_, Some(_)) => return Err(invalid("point", format!("not used by task {}", f.task.label()))),
            _ => (Vec::new(), false),
        };

        let nf = &f.numerics;
        let romberg = RombergOptions {
            rel_tol: nf.romberg_tol.unwrap_or(RombergOptions::default().rel_tol),
            max_level: nf.romberg_max_level.unwrap_or(RombergOptions::default().max_level),
            min_level: nf.romberg_min_level.unwrap_or(RombergOptions::default().min_level),
        };
        if !(romberg.rel_tol > 0.0) || romberg.min_level > romberg.max_level || romberg.max_level > 20 {
            return Err(invalid("numerics", "romberg_tol must be positive and min_level ≤ max_level ≤ 20"));
        }
        let samples = ov.samples.or(nf.samples).unwrap_or(10_000);
        if samples == 0 {
            return Err(invalid("numerics.samples", "must be positive"));
        }
        let shards = nf.shards.unwrap_or(McOptions::new(1, 0).shards);
        if shards == 0 || shards > samples {
            return Err(invalid("numerics.shards", "must be between 1 and the sample count"));
        }
        let sdp_tol = nf.sdp_tol.unwrap_or(1e-10);
        if !(sdp_tol > 0.0) {
            return Err(invalid("numerics.sdp_tol", "must be positive"));
        }
        let er_ratio = nf.er_ratio.unwrap_or(5.0);
        if !(er_ratio >= 1.0) {
            return Err(invalid("numerics.er_ratio", "must be at least 1"));
        }
        let out = f.output.as_ref();
        let output = ov.output.clone().or_else(|| out.and_then(|o| o.path.clone()));
        let format = match (ov.format, out.and_then(|o| o.format.as_deref())) {
            (Some(fmt), _) => fmt,
            (None, Some(s)) => Format::parse(s).map_err(|m| invalid("output.format", m))?,
            (None, None) => match output.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("json") => Format::Json,
                _ if f.task == Task::SinglePoint => Format::Json,
                _ => Format::Csv,
            },
        };
        Ok(Scenario {
            name: f.name,
            task: f.task,
            processes,
            omega0,
            e_i,
            cutoff_spec,
            cutoff,
            incoming: f.beam.incoming,
            directions,
            common_theta,
            channels,
            grid,
            sweep,
            omega0_scan,
            point_omegas,
            entanglement,
            seed: ov.seed.or(nf.seed).unwrap_or(0),
            samples,
            shards,
            romberg,
            sdp_tol,
            er_ratio,
            output,
            format,
        })
    }

    pub fn config(&self) -> ScatterConfig {
        self.config_at(self.omega0)
    }

    /// Beam at another photon energy, the cutoff rule re-applied.
    pub fn config_at(&self, omega0: f64) -> ScatterConfig {
        ScatterConfig::new(omega0, self.e_i, self.cutoff_spec.resolve(omega0, self.e_i))
            .with_incoming(Polarization::Basis(self.incoming))
    }

    pub fn process(&self) -> Process {
        self.processes[0]
    }

    pub fn mc_options(&self) -> McOptions {
        let mut o = McOptions::new(self.samples, self.seed);
        o.shards = self.shards;
        o.romberg = self.romberg;
        o
    }
}

fn positive_count(field: &str, n: usize) -> Result<usize, CliError> {
    if n == 0 || n > 100_000 {
        return Err(invalid(field, format!("count must be between 1 and 100000, got {n}")));
    }
    Ok(n)
}

fn plain_axis(field: &str, a: &AxisFile) -> Result<Axis, CliError> {
    let axis = Axis {
        min: number(&format!("{field}.min"), &a.min)?,
        max: number(&format!("{field}.max"), &a.max)?,
        count: positive_count(&format!("{field}.count"), a.count)?,
        log: a.log,
        centres: a.centres,
    };
    if axis.log && !(axis.min > 0.0 && axis.max > 0.0) {
        return Err(invalid(field, "log axes need positive bounds"));
    }
    Ok(axis)
}

/// Energy axis of photon `var` (index into `[ω₁, ω₂]`) for a TC grid. The
/// `"auto"` bound is the threshold boundary with the other photon at ε.
fn energy_axis(
    field: &str,
    a: &AxisFile,
    cfg: &ScatterConfig,
    dirs: &[Direction],
    which: [usize; 2],
) -> Result<Axis, CliError> {
    if a.variable.is_some() {
        return Err(invalid(field, "variable is only used by angular sweeps"));
    }
    let var = if which[0] == 1 { 0 } else { 1 };
    let other = 1 - var;
    let bound = |name: &str, e: &EnergySpec| -> Result<f64, CliError> {
        match e {
            EnergySpec::Text(s) if s == "cutoff" => Ok(cfg.cutoff),
            EnergySpec::Text(s) if s == "auto" => {
                omega_max(cfg, &[dirs[other].null_vector() * cfg.cutoff], dirs[var], dirs[2], cfg.cutoff)
                    .map_err(|e| invalid(&format!("{field}.{name}"), e))
            }
            e => energy(&format!("{field}.{name}"), e),
        }
    };
    let axis = Axis {
        min: bound("min", &a.min)?,
        max: bound("max", &a.max)?,
        count: positive_count(&format!("{field}.count"), a.count)?,
        log: a.log,
        centres: a.centres,
    };
    // an inverted range is kept: every cell is then masked, and `validate`
    // reports the grid as empty
    Ok(axis)
}

fn detectors(d: &DetectorFile, n: usize, task: Task) -> Result<(Vec<Direction>, Option<f64>), CliError> {
    match (&d.preset, d.theta, &d.legs) {
        (Some(p), theta, None) if p == "mercedes" => {
            let theta = match (theta, task) {
                (Some(t), _) if (0.0..=PI).contains(&t) => Some(t),
                (Some(t), _) => return Err(invalid("detectors.theta", format!("{t} is outside [0, π]"))),
                (None, Task::AngularSweep) => None,
                (None, _) => return Err(invalid("detectors.theta", "required with the mercedes preset")),
            };
            Ok((mercedes(theta.unwrap_or(0.0), n), theta))
        }
        (Some(p), _, None) => Err(invalid("detectors.preset", format!("unknown preset \"{p}\""))),
        (None, None, Some(legs)) => {
            if task == Task::AngularSweep {
                return Err(invalid("detectors", "angular sweeps use the mercedes preset"));
            }
            if legs.len() != n {
                return Err(invalid("detectors.legs", format!("expected {n} legs, got {}", legs.len())));
            }
            for (i, l) in legs.iter().enumerate() {
                if !(0.0..=PI).contains(&l.theta) || !l.phi.is_finite() {
                    return Err(invalid(&format!("detectors.legs[{i}]"), "θ must lie in [0, π]"));
                }
            }
            Ok((legs.iter().map(|l| Direction::new(l.theta, l.phi)).collect(), None))
        }
        _ => Err(invalid("detectors", "give either preset (with theta) or legs")),
    }
}

fn all_labels(n: usize) -> Vec<String> {
    (0..1usize << n)
        .map(|c| (0..n).map(|j| if c >> (n - 1 - j) & 1 == 1 { '2' } else { '1' }).collect())
        .collect()
}

fn channels(spec: Option<&ChannelSpec>, processes: &[Process], task: Task) -> Result<Vec<Channel>, CliError> {
    let n = processes[0].emitted();
    match task {
        Task::GridSbar | Task::GridTauQ | Task::TotalVsOmega0 => {
            return match spec {
                None => Ok(vec![Channel::SummedAll]),
                Some(_) => Err(invalid("channels", format!("task {} fixes its own channel sum", task.label()))),
            }
        }
        _ => {}
    }
    let one = |label: &str| -> Result<Vec<Channel>, CliError> {
        match label {
            "summed" => Ok(vec![Channel::SummedEmitted]),
            "summed-all" => Ok(vec![Channel::SummedAll]),
            // every λ₀λ₁…λₙ combination, the layout of the angular figures
            "all" => Ok(all_labels(n + 1).into_iter().map(|l| Channel::parse(&l, n).unwrap()).collect()),
            l => Ok(vec![Channel::parse(l, n).map_err(|e| invalid("channels", e))?]),
        }
    };
    match spec {
        None => Err(invalid("channels", "required for this task")),
        Some(ChannelSpec::Keyword(k)) => one(k),
        Some(ChannelSpec::List(v)) if v.is_empty() => Err(invalid("channels", "empty channel list")),
        Some(ChannelSpec::List(v)) => Ok(v.iter().map(|l| one(l)).collect::<Result<Vec<_>, _>>()?.concat()),
    }
}
