//! Differential cross sections for one, two and three emitted photons, the
//! analytic single-Compton results and the limiting total cross sections.
//!
//! For n emitted photons with the energies of the first n − 1 given and the
//! last one fixed by four-momentum conservation,
//!
//! ```text
//! dσ = α^{n+1} / (2π)^{2n−2} · m^{2−2n} · ω₁…ωₙ / [E_f (p_i·k₀)] · |d(E_f + ωₙ)/dωₙ|⁻¹ · |N|²
//! ```
//!
//! differential in dΩ₁…dΩₙ dω₁…dω_{n−1}. Values are in barn, with MeV for the
//! energy differentials and sr for the solid angles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{amplitude_tensor, AmplitudeTensor, PhotonInput};
use crate::constants::{to_barn, ALPHA, ELECTRON_MASS};
use crate::dirac::FourVector;
use crate::error::{Error, Result};
use crate::kinematics::{
    boost_config_to_rest_frame, energy_jacobian, final_electron, jacobian_general, legs_to_lab,
    solve_last_omega, Boost, Direction, PhotonLeg, Polarization, ScatterConfig,
};

/// Number of emitted photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Process {
    #[serde(rename = "SC")]
    Single,
    #[serde(rename = "DC")]
    Double,
    #[serde(rename = "TC")]
    Triple,
}

impl Process {
    pub fn emitted(self) -> usize {
        match self {
            Process::Single => 1,
            Process::Double => 2,
            Process::Triple => 3,
        }
    }

    pub fn from_emitted(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Process::Single),
            2 => Ok(Process::Double),
            3 => Ok(Process::Triple),
            _ => Err(Error::InvalidInput(format!("unsupported number of emitted photons: {n}"))),
        }
    }

    /// n! for the n emitted photons.
    pub fn symmetry_factor(self) -> f64 {
        (1..=self.emitted()).product::<usize>() as f64
    }
}

/// Polarization channel selection. Labels are 1 or 2 and refer to the
/// linear basis `(ε¹, ε²)` of each photon.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// Emitted labels λ₁…λₙ; the incoming photon carries the configured
    /// polarization.
    Emitted(Vec<u8>),
    /// Labels λ₀λ₁…λₙ including the incoming photon.
    Full(Vec<u8>),
    /// Summed over the emitted polarizations, configured incoming photon.
    SummedEmitted,
    /// Summed over every polarization, incoming one included.
    SummedAll,
}

impl Channel {
    /// Parses a label string such as `"111"`. With `n` emitted photons, a
    /// string of length n selects [`Channel::Emitted`], n + 1 selects
    /// [`Channel::Full`].
    pub fn parse(labels: &str, n: usize) -> Result<Self> {
        let v: Vec<u8> = labels
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                _ => Err(Error::InvalidInput(format!("bad polarization label '{c}' in \"{labels}\""))),
            })
            .collect::<Result<_>>()?;
        if v.len() == n {
            Ok(Channel::Emitted(v))
        } else if v.len() == n + 1 {
            Ok(Channel::Full(v))
        } else {
            Err(Error::InvalidInput(format!(
                "channel \"{labels}\" has {} labels, expected {n} or {}",
                v.len(),
                n + 1
            )))
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let bad = |v: &Vec<u8>, len: usize| v.len() != len || v.iter().any(|&l| l != 1 && l != 2);
        match self {
            Channel::Emitted(v) if bad(v, n) => {
                Err(Error::InvalidInput(format!("emitted channel {v:?} invalid for {n} photons")))
            }
            Channel::Full(v) if bad(v, n + 1) => {
                Err(Error::InvalidInput(format!("channel {v:?} invalid for {n} photons")))
            }
            _ => Ok(()),
        }
    }

    /// Value of this channel from the incoming-contracted (`incoming`, 2ⁿ
    /// entries) and full (`full`, 2ⁿ⁺¹ entries) channel tables.
    pub fn select(&self, full: &[f64], incoming: &[f64]) -> f64 {
        let idx = |v: &[u8]| AmplitudeTensor::channel_index(&v.iter().map(|l| l - 1).collect::<Vec<_>>());
        match self {
            Channel::Emitted(v) => incoming[idx(v)],
            Channel::Full(v) => full[idx(v)],
            Channel::SummedEmitted => incoming.iter().sum(),
            Channel::SummedAll => full.iter().sum(),
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Channel::Emitted(v) | Channel::Full(v) => {
                v.iter().try_for_each(|l| write!(f, "{l}"))
            }
            Channel::SummedEmitted => f.write_str("summed"),
            Channel::SummedAll => f.write_str("summed-all"),
        }
    }
}

/// Treatment of the electron spins.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinTreatment {
    /// ½ Σ over incoming and outgoing spin.
    #[default]
    Averaged,
    /// Σ over incoming and outgoing spin.
    Summed,
    /// Fixed spin labels (1 or 2) of the incoming and outgoing electron.
    Fixed(u8, u8),
}

impl SpinTreatment {
    fn check(self) -> Result<()> {
        match self {
            SpinTreatment::Fixed(a, b) if !(1..=2).contains(&a) || !(1..=2).contains(&b) => {
                Err(Error::InvalidInput("spin labels must be 1 or 2".into()))
            }
            _ => Ok(()),
        }
    }
}

/// How to evaluate a configuration with a moving electron.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameStrategy {
    /// Directly in the frame of the configuration.
    Direct,
    /// In the incoming-electron rest frame, mapped back with the Jacobian.
    RestFrame,
    /// Rest frame whenever the electron moves.
    #[default]
    Auto,
}

impl FrameStrategy {
    pub fn use_rest_frame(self, config: &ScatterConfig) -> bool {
        match self {
            FrameStrategy::Direct => false,
            FrameStrategy::RestFrame => true,
            FrameStrategy::Auto => config.e_i > ELECTRON_MASS * (1.0 + 1e-12),
        }
    }
}

/// Kinematics, phase-space factor and amplitudes at one allowed point.
#[derive(Clone, Debug)]
pub struct KinematicPoint {
    /// Emitted photon momenta, the solved last photon included.
    pub emitted: Vec<FourVector>,
    pub p_f: FourVector,
    /// Factor multiplying |N|² to give the differential cross section in barn.
    pub phase_space: f64,
    pub tensor: AmplitudeTensor,
}

/// Outcome of solving the closure for a point.
#[derive(Clone, Debug)]
pub enum PointOutcome {
    Allowed(KinematicPoint),
    /// ω_last ≤ 0 or E_f ≤ 0: no physical solution.
    Forbidden,
}

/// Solves for the last photon and evaluates the amplitudes, with no
/// threshold applied. `known` are the energies and directions of the first
/// n − 1 photons.
pub fn kinematic_point(config: &ScatterConfig, known: &[PhotonLeg], last: Direction) -> Result<PointOutcome> {
    let n = known.len() + 1;
    Process::from_emitted(n)?;
    let mut emitted: Vec<FourVector> = known.iter().map(PhotonLeg::k).collect();
    let omega = solve_last_omega(config, &emitted, last)?;
    if !(omega > 0.0) {
        return Ok(PointOutcome::Forbidden);
    }
    emitted.push(last.null_vector() * omega);
    let p_f = final_electron(config, &emitted);
    if !(p_f.t > 0.0) {
        return Ok(PointOutcome::Forbidden);
    }
    let jac = energy_jacobian(config, &emitted)?;
    let p_i = config.p_i();
    let k0 = config.k0();
    let m = ELECTRON_MASS;
    let omegas: f64 = emitted.iter().map(|k| k.t).product();
    let two_pi = 2.0 * std::f64::consts::PI;
    let coupling = ALPHA.powi(n as i32 + 1) / two_pi.powi(2 * n as i32 - 2) * m.powi(2 - 2 * n as i32);
    let phase_space = to_barn(coupling * omegas / (p_f.t * p_i.dot(k0) * jac.abs()));

    let mut photons = Vec::with_capacity(n + 1);
    photons.push(PhotonInput::new(k0, config.incoming_basis()));
    for (k, dir) in emitted.iter().zip(known.iter().map(|l| l.direction).chain([last])) {
        photons.push(PhotonInput::new(*k, dir.polarization_basis()));
    }
    let tensor = amplitude_tensor(p_i, p_f, &photons)?;
    Ok(PointOutcome::Allowed(KinematicPoint { emitted, p_f, phase_space, tensor }))
}

/// Differential cross section for every channel and spin at one point.
///
/// `full[s][c]` holds the 2ⁿ⁺¹ channels (incoming photon on its linear basis)
/// and `incoming[s][c]` the 2ⁿ channels with the incoming photon in the
/// configured polarization; `s = 2(r_i − 1) + (r_f − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointWeights {
    pub process: Process,
    /// Emitted legs in the frame of the configuration, the last one solved.
    pub legs: Vec<PhotonLeg>,
    pub full: [Vec<f64>; 4],
    pub incoming: [Vec<f64>; 4],
}

impl PointWeights {
    fn from_point(config: &ScatterConfig, point: &KinematicPoint, legs: Vec<PhotonLeg>, scale: f64) -> Result<Self> {
        let t = &point.tensor;
        let f = point.phase_space * scale;
        let full = [0, 1, 2, 3].map(|s| (0..t.channels()).map(|c| f * t.get(s >> 1, s & 1, c).norm_sqr()).collect());
        let coef = config.incoming.coefficients(&config.incoming_basis())?;
        let contracted = t.contract_incoming(coef);
        let incoming = [0, 1, 2, 3].map(|s| contracted[s].iter().map(|a| f * a.norm_sqr()).collect());
        Ok(PointWeights { process: Process::from_emitted(legs.len())?, legs, full, incoming })
    }

    /// Spin-summed tables, `full` followed by `incoming`.
    pub fn spin_summed(&self) -> Vec<f64> {
        let sum = |t: &[Vec<f64>; 4]| -> Vec<f64> {
            (0..t[0].len()).map(|c| t.iter().map(|v| v[c]).sum()).collect()
        };
        let mut out = sum(&self.full);
        out.extend(sum(&self.incoming));
        out
    }

    pub fn value(&self, channel: &Channel, spin: SpinTreatment) -> Result<f64> {
        channel.check(self.process.emitted())?;
        spin.check()?;
        let pick = |s: usize| channel.select(&self.full[s], &self.incoming[s]);
        Ok(match spin {
            SpinTreatment::Averaged => 0.5 * (0..4).map(pick).sum::<f64>(),
            SpinTreatment::Summed => (0..4).map(pick).sum(),
            SpinTreatment::Fixed(a, b) => pick(2 * (a as usize - 1) + (b as usize - 1)),
        })
    }
}

/// Channel value from a spin-summed table as produced by
/// [`PointWeights::spin_summed`] (or its integral over energies).
pub fn select_summed(table: &[f64], process: Process, channel: &Channel, spin: SpinTreatment) -> Result<f64> {
    let n = process.emitted();
    channel.check(n)?;
    let nf = 1 << (n + 1);
    if table.len() != nf + (nf >> 1) {
        return Err(Error::InvalidInput(format!("channel table has {} entries", table.len())));
    }
    let v = channel.select(&table[..nf], &table[nf..]);
    match spin {
        SpinTreatment::Averaged => Ok(0.5 * v),
        SpinTreatment::Summed => Ok(v),
        SpinTreatment::Fixed(..) => {
            Err(Error::InvalidInput("fixed spins are not available from spin-summed tables".into()))
        }
    }
}

/// Length of the spin-summed channel table for `process`.
pub fn table_len(process: Process) -> usize {
    let nf = 1 << (process.emitted() + 1);
    nf + nf / 2
}

/// Whether a leg in the evaluation frame passes the lab threshold.
fn passes(boost: Option<&Boost>, leg: &PhotonLeg, cutoff: f64) -> bool {
    match boost {
        None => leg.omega > cutoff,
        Some(b) => b.doppler_to_lab(leg.direction.theta) * leg.omega > cutoff,
    }
}

/// All channel weights at one point, or `None` if the point is forbidden or
/// any emitted photon is at or below the threshold. Energies in `known` and
/// the returned legs are in the frame of `config`.
pub fn point_weights(
    config: &ScatterConfig,
    known: &[PhotonLeg],
    last: Direction,
    strategy: FrameStrategy,
) -> Result<Option<PointWeights>> {
    config.validate()?;
    if strategy.use_rest_frame(config) {
        let mut all = known.to_vec();
        all.push(PhotonLeg { omega: 1.0, direction: last });
        let img = boost_config_to_rest_frame(config, &all);
        let (last_rest, known_rest) = img.legs.split_last().expect("at least one leg");
        let w = rest_point_weights(&img.config, known_rest, last_rest.direction, &img.boost)?;
        Ok(w.map(|mut w| {
            w.legs = legs_to_lab(&img.boost, &w.legs);
            w
        }))
    } else {
        direct_point_weights(config, known, last, None, 1.0)
    }
}

/// Rest-frame evaluation with lab thresholds; the returned weights are lab
/// cross sections (rest-frame values divided by the Jacobian J), legs in
/// the rest frame.
pub fn rest_point_weights(
    rest: &ScatterConfig,
    known: &[PhotonLeg],
    last: Direction,
    boost: &Boost,
) -> Result<Option<PointWeights>> {
    let thetas: Vec<f64> = known.iter().map(|l| l.direction.theta).chain([last.theta]).collect();
    let inv_j = 1.0 / jacobian_general(boost, &thetas, true);
    direct_point_weights(rest, known, last, Some(boost), inv_j)
}

fn direct_point_weights(
    config: &ScatterConfig,
    known: &[PhotonLeg],
    last: Direction,
    boost: Option<&Boost>,
    scale: f64,
) -> Result<Option<PointWeights>> {
    if known.iter().any(|l| !passes(boost, l, config.cutoff)) {
        return Ok(None);
    }
    let point = match kinematic_point(config, known, last)? {
        PointOutcome::Allowed(p) => p,
        PointOutcome::Forbidden => return Ok(None),
    };
    let omega = point.emitted.last().expect("solved photon").t;
    let last_leg = PhotonLeg { omega, direction: last };
    if !passes(boost, &last_leg, config.cutoff) {
        return Ok(None);
    }
    let mut legs = known.to_vec();
    legs.push(last_leg);
    PointWeights::from_point(config, &point, legs, scale).map(Some)
}

/// One differential cross section value with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DifferentialPoint {
    pub process: Process,
    pub channel: Channel,
    pub spin: SpinTreatment,
    /// Emitted photon energies (MeV) and directions; the last energy is the
    /// solved one, or 0 when the point is forbidden.
    pub omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// b·MeV⁻⁽ⁿ⁻¹⁾·sr⁻ⁿ.
    pub value: f64,
    /// False in the forbidden or below-threshold region (value = 0).
    pub allowed: bool,
}

/// Differential cross section for n = known.len() + 1 emitted photons.
pub fn dsigma(
    config: &ScatterConfig,
    known: &[PhotonLeg],
    last: Direction,
    channel: &Channel,
    spin: SpinTreatment,
    strategy: FrameStrategy,
) -> Result<DifferentialPoint> {
    let process = Process::from_emitted(known.len() + 1)?;
    channel.check(process.emitted())?;
    spin.check()?;
    let w = point_weights(config, known, last, strategy)?;
    let dirs: Vec<Direction> = known.iter().map(|l| l.direction).chain([last]).collect();
    let (value, allowed, omegas) = match &w {
        Some(w) => (w.value(channel, spin)?, true, w.legs.iter().map(|l| l.omega).collect()),
        None => (0.0, false, known.iter().map(|l| l.omega).chain([0.0]).collect()),
    };
    let dirs: Vec<Direction> = match &w {
        Some(w) => w.legs.iter().map(|l| l.direction).collect(),
        None => dirs,
    };
    Ok(DifferentialPoint {
        process,
        channel: channel.clone(),
        spin,
        omegas,
        thetas: dirs.iter().map(|d| d.theta).collect(),
        phis: dirs.iter().map(|d| d.phi).collect(),
        value,
        allowed,
    })
}

/// Five-fold triple-Compton cross section dσ/dΩ₁dΩ₂dΩ₃dω₁dω₂ (b·MeV⁻²·sr⁻³).
pub fn dsigma_tc(
    config: &ScatterConfig,
    legs: [PhotonLeg; 2],
    direction3: Direction,
    channel: &Channel,
    spin: SpinTreatment,
) -> Result<DifferentialPoint> {
    dsigma(config, &legs, direction3, channel, spin, FrameStrategy::Auto)
}

/// Three-fold double-Compton cross section dσ/dΩ₁dΩ₂dω₁ (b·MeV⁻¹·sr⁻²).
pub fn dsigma_dc(
    config: &ScatterConfig,
    leg1: PhotonLeg,
    direction2: Direction,
    channel: &Channel,
    spin: SpinTreatment,
) -> Result<DifferentialPoint> {
    dsigma(config, &[leg1], direction2, channel, spin, FrameStrategy::Auto)
}

/// Single-Compton dσ/dΩ₁ (b·sr⁻¹) from the numerical amplitude.
pub fn dsigma_sc(
    config: &ScatterConfig,
    direction1: Direction,
    channel: &Channel,
    spin: SpinTreatment,
) -> Result<DifferentialPoint> {
    dsigma(config, &[], direction1, channel, spin, FrameStrategy::Auto)
}

/// Polarized Klein-Nishina cross section for an electron at rest, averaged
/// over the initial and summed over the final electron spin (b·sr⁻¹).
///
/// `pol0` is the incoming polarization and `pol1` the emitted one, on the
/// linear bases of the respective photons.
pub fn dsigma_sc_analytic(
    config: &ScatterConfig,
    direction1: Direction,
    pol0: Polarization,
    pol1: Polarization,
) -> Result<DifferentialPoint> {
    if (config.e_i - ELECTRON_MASS).abs() > 1e-12 * ELECTRON_MASS {
        return Err(Error::InvalidInput(format!(
            "the analytic single-Compton formula needs the electron at rest, got E_i = {} MeV",
            config.e_i
        )));
    }
    let m = ELECTRON_MASS;
    let w0 = config.omega0;
    let w1 = compton_energy(w0, direction1.theta.cos());
    let e0 = polarization_vector(pol0, config.incoming_basis())?;
    let e1 = polarization_vector(pol1, direction1.polarization_basis())?;
    let dot: Complex64 = (1..4).map(|i| e0[i].conj() * e1[i]).sum();
    let r = w1 / w0;
    let value = to_barn(0.25 * (ALPHA / m).powi(2) * r * r * (r + 1.0 / r - 2.0 + 4.0 * dot.norm_sqr()));
    let label = |p: Polarization| match p {
        Polarization::Basis(l) => l,
        Polarization::Explicit(_) => 0,
    };
    Ok(DifferentialPoint {
        process: Process::Single,
        channel: Channel::Full(vec![label(pol0), label(pol1)]),
        spin: SpinTreatment::Averaged,
        omegas: vec![w1],
        thetas: vec![direction1.theta],
        phis: vec![direction1.phi],
        value,
        allowed: true,
    })
}

fn polarization_vector(pol: Polarization, basis: [FourVector; 2]) -> Result<[Complex64; 4]> {
    let c = pol.coefficients(&basis)?;
    let mut v = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        v[i] = c[0] * basis[0][i] + c[1] * basis[1][i];
    }
    Ok(v)
}

/// Energy of the photon scattered off an electron at rest.
pub fn compton_energy(omega0: f64, cos_theta: f64) -> f64 {
    omega0 / (1.0 + omega0 / ELECTRON_MASS * (1.0 - cos_theta))
}

/// Klein-Nishina total cross section (b) for an electron at rest.
pub fn sigma_sc_total(omega0: f64) -> f64 {
    let k = omega0 / ELECTRON_MASS;
    let thomson = 8.0 * std::f64::consts::PI / 3.0 * (ALPHA / ELECTRON_MASS).powi(2);
    let ratio = if k < 1e-3 {
        // series; the closed form cancels catastrophically here
        1.0 - 2.0 * k + 26.0 / 5.0 * k.powi(2) - 133.0 / 10.0 * k.powi(3) + 1144.0 / 35.0 * k.powi(4)
    } else {
        let l = (2.0 * k).ln_1p();
        let a = (1.0 + k) / (k * k) * (2.0 * (1.0 + k) / (1.0 + 2.0 * k) - l / k);
        0.75 * (a + l / (2.0 * k) - (1.0 + 3.0 * k) / (1.0 + 2.0 * k).powi(2))
    };
    to_barn(thomson * ratio)
}

/// Low-energy coefficient of the double-Compton total cross section.
pub const C_DC_NR: f64 = 9.1;
/// Low-energy coefficient of the triple-Compton total cross section.
pub const C_TC_NR: f64 = 4.5;

/// C_DC (α³/m²)(ω₀/m)² in barn.
pub fn sigma_dc_nr(omega0: f64) -> f64 {
    let m = ELECTRON_MASS;
    to_barn(C_DC_NR * ALPHA.powi(3) / (m * m) * (omega0 / m).powi(2))
}

/// C_TC (α⁴/m²)(ω₀/m)⁴ in barn.
pub fn sigma_tc_nr(omega0: f64) -> f64 {
    let m = ELECTRON_MASS;
    to_barn(C_TC_NR * ALPHA.powi(4) / (m * m) * (omega0 / m).powi(4))
}

/// Leading-logarithm estimate for `n` additional soft photons with energies
/// between the thresholds ε_low and ε_up = `ratio`·ε_low (b).
pub fn sigma_er(omega0: f64, n: u32, ratio: f64) -> f64 {
    let l = ALPHA / std::f64::consts::PI * (2.0 * omega0 / ELECTRON_MASS).ln() * ratio.ln();
    let fact: f64 = (1..=n).map(f64::from).product();
    l.powi(n as i32) / fact * sigma_sc_total(omega0)
}

/// S = log₁₀ of the spin-averaged value; `None` (masked) when the cross
/// section vanishes.
pub fn s_value(point: &DifferentialPoint) -> Option<f64> {
    let v = match point.spin {
        SpinTreatment::Averaged => point.value,
        SpinTreatment::Summed => 0.5 * point.value,
        SpinTreatment::Fixed(..) => point.value,
    };
    (v > 0.0).then(|| v.log10())
}

/// S̄: log₁₀ of the spin-averaged value summed over all polarizations.
pub fn s_bar_value(config: &ScatterConfig, known: &[PhotonLeg], last: Direction) -> Result<Option<f64>> {
    let p = dsigma(config, known, last, &Channel::SummedAll, SpinTreatment::Averaged, FrameStrategy::Auto)?;
    Ok(s_value(&p))
}
