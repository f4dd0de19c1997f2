//! Task execution. Every number in a table comes from a `compton_core` call.

use std::f64::consts::PI;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use compton_core::entanglement::{tau, SdpOptions};
use compton_core::kinematics::{mercedes, Direction, PhotonLeg};
use compton_core::quadrature::{integrate_energies, total_cross_section, RNG_DESCRIPTION};
use compton_core::xsec::{
    dsigma, s_value, select_summed, sigma_dc_nr, sigma_er, sigma_sc_total, sigma_tc_nr, DifferentialPoint,
};
use compton_core::{Channel, DensityMatrix, Error, FrameStrategy, SpinTreatment, ELECTRON_MASS};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::scenario::{process_label, Scenario, SweepVariable, Task};
use crate::table::{Metadata, ResultTable};
use crate::CliError;

/// Outcome of one grid cell or sweep point.
struct Cell {
    values: Vec<Option<f64>>,
    flagged: bool,
    masked: bool,
    note: Option<String>,
}

impl Cell {
    fn masked(width: usize, note: Option<String>) -> Self {
        Cell { values: vec![None; width], flagged: false, masked: true, note }
    }
}

/// Kinematic failures mask a cell; anything else aborts the run.
fn maskable(e: &Error) -> bool {
    matches!(e, Error::Forbidden(_) | Error::DegenerateKinematics(_) | Error::OnResonance(_) | Error::OffShell { .. })
}

fn numerical(e: Error) -> CliError {
    match e {
        Error::InvalidInput(m) => CliError::Validation(m),
        other => CliError::Numerical(other.to_string()),
    }
}

pub fn run(s: &Scenario, source: &str) -> Result<ResultTable, CliError> {
    let start = Instant::now();
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = Metadata {
        tool: "compton".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        task: s.task.label().into(),
        scenario: json!({ "resolved": s, "source": source }),
        seed: s.seed,
        samples: (s.task == Task::TotalVsOmega0).then_some(s.samples),
        rng: (s.task == Task::TotalVsOmega0).then(|| RNG_DESCRIPTION.to_string()),
        flagged: 0,
        masked: 0,
        notes: Vec::new(),
        wall_time_s: 0.0,
        started_unix_s: started,
    };
    let mut table = match s.task {
        Task::GridS | Task::GridSbar | Task::GridTauQ => grid(s, meta)?,
        Task::AngularSweep => sweep(s, meta)?,
        Task::TotalVsOmega0 => totals(s, meta)?,
        Task::SinglePoint => point(s, meta)?,
    };
    table.metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(table)
}

fn assemble(columns: Vec<String>, mut meta: Metadata, cells: Vec<Cell>) -> ResultTable {
    meta.flagged = cells.iter().filter(|c| c.flagged).count();
    meta.masked = cells.iter().filter(|c| c.masked).count();
    meta.notes.extend(cells.iter().filter_map(|c| c.note.clone()));
    let mut t = ResultTable::new(columns, meta);
    for c in cells {
        t.push(c.values);
    }
    t
}

fn channel_column(prefix: &str, ch: &Channel) -> String {
    format!("{prefix}_{ch}")
}

// grids ──────────────────────────────────────────────────────────────────────

fn grid(s: &Scenario, meta: Metadata) -> Result<ResultTable, CliError> {
    let [a1, a2] = s.grid.as_ref().expect("validated");
    let cfg = s.config();
    let d = &s.directions;
    let mut columns = vec!["omega1".to_string(), "omega2".into(), "omega3".into()];
    match s.task {
        Task::GridS => columns.extend(s.channels.iter().map(|c| channel_column("S", c))),
        Task::GridSbar => columns.push("Sbar".into()),
        _ => columns.extend(["tau", "Q", "Sbar", "sdp_converged"].map(String::from)),
    }
    let w1s = a1.values();
    let w2s = a2.values();
    let cells: Vec<(usize, usize)> = (0..w1s.len()).flat_map(|i| (0..w2s.len()).map(move |j| (i, j))).collect();
    let sdp = SdpOptions { tol: s.sdp_tol, ..SdpOptions::default() };
    let width = columns.len();
    let out: Vec<Cell> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<Cell, CliError> {
            let (w1, w2) = (w1s[i], w2s[j]);
            let legs = [PhotonLeg { omega: w1, direction: d[0] }, PhotonLeg { omega: w2, direction: d[1] }];
            let mut row = vec![Some(w1), Some(w2)];
            let cell_note = |e: &Error| Some(format!("cell (omega1={w1}, omega2={w2}): {e}"));
            let eval = |ch: &Channel, spin| dsigma(&cfg, &legs, d[2], ch, spin, FrameStrategy::Auto);
            let first = match s.task {
                Task::GridS => eval(&s.channels[0], SpinTreatment::Averaged),
                _ => eval(&Channel::SummedAll, SpinTreatment::Averaged),
            };
            let first = match first {
                Ok(p) if p.allowed => p,
                Ok(_) => return Ok(masked_row(row, width, None)),
                Err(e) if maskable(&e) => return Ok(masked_row(row, width, cell_note(&e))),
                Err(e) => return Err(numerical(e)),
            };
            row.push(Some(first.omegas[2]));
            match s.task {
                Task::GridS => {
                    row.push(s_value(&first));
                    for ch in &s.channels[1..] {
                        row.push(s_value(&eval(ch, SpinTreatment::Averaged).map_err(numerical)?));
                    }
                    Ok(Cell { values: row, flagged: false, masked: false, note: None })
                }
                Task::GridSbar => {
                    row.push(s_value(&first));
                    Ok(Cell { values: row, flagged: false, masked: false, note: None })
                }
                _ => {
                    let dm = match DensityMatrix::at_point(&cfg, legs, d[2], SpinTreatment::Summed, FrameStrategy::Auto) {
                        Ok(dm) => dm,
                        Err(e) if maskable(&e) => return Ok(masked_row(row, width, cell_note(&e))),
                        Err(e) => return Err(numerical(e)),
                    };
                    let t = tau(&dm, &sdp).map_err(numerical)?;
                    let q = dm.entropy().map_err(numerical)?;
                    row.extend([Some(t.tau), Some(q), s_value(&first), Some(f64::from(u8::from(t.converged)))]);
                    let note = (!t.converged).then(|| {
                        format!("cell (omega1={w1}, omega2={w2}): witness SDP stopped with gap {:e}", t.gap)
                    });
                    Ok(Cell { values: row, flagged: !t.converged, masked: false, note })
                }
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(assemble(columns, meta, out))
}

fn masked_row(mut row: Vec<Option<f64>>, width: usize, note: Option<String>) -> Cell {
    row.resize(width, None);
    Cell { values: row, ..Cell::masked(0, note) }
}

// angular sweep ──────────────────────────────────────────────────────────────

fn sweep(s: &Scenario, meta: Metadata) -> Result<ResultTable, CliError> {
    let (var, axis) = s.sweep.as_ref().expect("validated");
    let cfg = s.config();
    let process = s.process();
    let gamma = s.e_i / ELECTRON_MASS;
    let mut columns = vec!["theta".to_string()];
    if *var == SweepVariable::GammaPiMinusTheta {
        columns.push("gamma_pi_minus_theta".into());
    }
    columns.extend(s.channels.iter().map(|c| channel_column("dsigma", c)));
    columns.extend(["romberg_level", "romberg_converged"].map(String::from));
    let xs = axis.values();
    let out: Vec<Cell> = xs
        .par_iter()
        .map(|&x| -> Result<Cell, CliError> {
            let theta = match var {
                SweepVariable::Theta => x,
                SweepVariable::GammaPiMinusTheta => PI - x / gamma,
            };
            let mut row = vec![Some(theta)];
            if *var == SweepVariable::GammaPiMinusTheta {
                row.push(Some(x));
            }
            let dirs: Vec<Direction> = mercedes(theta, process.emitted());
            let e = integrate_energies(&cfg, &dirs, FrameStrategy::Auto, &s.romberg).map_err(numerical)?;
            for ch in &s.channels {
                let v = select_summed(&e.table, process, ch, SpinTreatment::Averaged).map_err(numerical)?;
                row.push(Some(v));
            }
            row.push(Some(e.max_level as f64));
            row.push(Some(f64::from(u8::from(e.converged))));
            let note = (!e.converged)
                .then(|| format!("theta={theta}: energy integral reached {:e} after level {}", e.achieved, e.max_level));
            Ok(Cell { values: row, flagged: !e.converged, masked: false, note })
        })
        .collect::<Result<_, _>>()?;
    Ok(assemble(columns, meta, out))
}

// totals ─────────────────────────────────────────────────────────────────────

fn totals(s: &Scenario, mut meta: Metadata) -> Result<ResultTable, CliError> {
    let axis = s.omega0_scan.as_ref().expect("validated");
    let mut columns = vec!["omega0".to_string(), "cutoff".into()];
    for p in &s.processes {
        let l = process_label(*p).to_lowercase();
        columns.push(format!("sigma_{l}"));
        columns.push(format!("sigma_{l}_err"));
    }
    columns.extend(["sigma_sc_kn", "sigma_dc_nr", "sigma_tc_nr", "sigma_dc_er", "sigma_tc_er"].map(String::from));
    if s.e_i > ELECTRON_MASS * (1.0 + 1e-12) {
        meta.notes.push("comparison columns are evaluated at the rest-frame photon energy".into());
        meta.notes.push(
            "angles sampled in the electron rest frame: 30% uniform, 70% ∝ 1/(1 + a − cosθ) about the beam, a = m/omega0'"
                .into(),
        );
    }
    let mut cells = Vec::new();
    for w in axis.values() {
        let cfg = s.config_at(w);
        let mut row = vec![Some(w), Some(cfg.cutoff)];
        let mut flagged = false;
        let mut notes = Vec::new();
        for p in &s.processes {
            match total_cross_section(*p, &cfg, &s.mc_options()) {
                Ok(est) => {
                    flagged |= est.flagged();
                    if est.flagged() {
                        notes.push(format!(
                            "omega0={w} {}: {} unconverged energy integrals, {} skipped points",
                            process_label(*p),
                            est.unconverged,
                            est.skipped_points
                        ));
                    }
                    row.extend([Some(est.value), Some(est.error)]);
                }
                Err(Error::NoAcceptedSamples) => {
                    notes.push(format!("omega0={w} {}: no sample above threshold", process_label(*p)));
                    row.extend([None, None]);
                }
                Err(e) => return Err(numerical(e)),
            }
        }
        let w_rest = cfg.boost().doppler_to_rest(0.0) * w;
        // the leading-log forms need ω₀ > m/2 to be positive
        let er = |n| (w_rest > 0.5 * ELECTRON_MASS).then(|| sigma_er(w_rest, n, s.er_ratio));
        row.extend([Some(sigma_sc_total(w_rest)), Some(sigma_dc_nr(w_rest)), Some(sigma_tc_nr(w_rest)), er(1), er(2)]);
        let masked = row.iter().any(Option::is_none);
        cells.push(Cell { values: row, flagged, masked, note: (!notes.is_empty()).then(|| notes.join("; ")) });
    }
    Ok(assemble(columns, meta, cells))
}

// single point ───────────────────────────────────────────────────────────────

fn point(s: &Scenario, meta: Metadata) -> Result<ResultTable, CliError> {
    let cfg = s.config();
    let d = &s.directions;
    let n = d.len();
    let known: Vec<PhotonLeg> =
        s.point_omegas.iter().zip(d).map(|(&omega, &direction)| PhotonLeg { omega, direction }).collect();
    let mut columns: Vec<String> = (1..=n).map(|j| format!("omega{j}")).collect();
    columns.extend(s.channels.iter().map(|c| channel_column("dsigma", c)));
    columns.extend(s.channels.iter().map(|c| channel_column("S", c)));
    let values: Vec<DifferentialPoint> = s
        .channels
        .iter()
        .map(|ch| dsigma(&cfg, &known, d[n - 1], ch, SpinTreatment::Averaged, FrameStrategy::Auto))
        .collect::<Result<_, _>>()
        .map_err(|e| if maskable(&e) { CliError::Validation(format!("point: {e}")) } else { numerical(e) })?;
    let first = &values[0];
    let mut row: Vec<Option<f64>> = first.omegas.iter().map(|&w| Some(w)).collect();
    if !first.allowed {
        row[n - 1] = None;
    }
    row.extend(values.iter().map(|p| first.allowed.then_some(p.value)));
    row.extend(values.iter().map(s_value));
    let mut cell = Cell { values: row, flagged: false, masked: !first.allowed, note: None };
    if !first.allowed {
        cell.note = Some("point is forbidden or below threshold".into());
    }
    let mut extra = None;
    if s.entanglement && first.allowed {
        let legs = [known[0], known[1]];
        let dm = DensityMatrix::at_point(&cfg, legs, d[2], SpinTreatment::Summed, FrameStrategy::Auto)
            .map_err(numerical)?;
        let t = tau(&dm, &SdpOptions { tol: s.sdp_tol, ..SdpOptions::default() }).map_err(numerical)?;
        let check = t.decomposition.verify(1e-8).map_err(numerical)?;
        cell.flagged = !t.converged;
        extra = Some(json!({
            "density_matrix": dm.to_record(),
            "entropy_Q": dm.entropy().map_err(numerical)?,
            "tau": t.tau,
            "certified": t.certified(),
            "sdp": {
                "converged": t.converged,
                "iterations": t.iterations,
                "gap": t.gap,
                "dual_residual": t.dual_residual,
            },
            "certificate": {
                "valid": check.valid,
                "min_eigenvalue": check.min_eigenvalue,
                "max_eigenvalue": check.max_eigenvalue,
                "reconstruction": check.reconstruction,
                "witness": matrix_json(&t.decomposition.w),
            },
        }));
    }
    let mut table = assemble(columns, meta, vec![cell]);
    table.extra = extra;
    Ok(table)
}

fn matrix_json(m: &compton_core::entanglement::Matrix8) -> Value {
    Value::Array(
        (0..8).map(|r| Value::Array((0..8).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect())).collect(),
    )
}
