//! Photon and electron four-vectors, polarization bases, energy-momentum
//! closure, infrared-threshold geometry, and boosts along the collision axis.
//!
//! Geometry: the absorbed photon travels along +z, `k₀ = ω₀(1, 0, 0, 1)`, and
//! the electron comes in head-on, `p_i = (E_i, 0, 0, −√(E_i² − m²))`.

use num_complex::Complex64;

use crate::constants::ELECTRON_MASS;
use crate::dirac::{ComplexFourVector, FourVector};
use crate::error::{Error, Result};

/// Emission direction in radians: polar angle from +z and azimuth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Direction { theta, phi }
    }

    /// Null direction vector `n = (1, sinθcosφ, sinθsinφ, cosθ)`.
    pub fn null_vector(self) -> FourVector {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        FourVector::new(1.0, st * cp, st * sp, ct)
    }

    /// Builds a direction from `cos θ` and `φ` (the Monte Carlo variables).
    pub fn from_cos(cos_theta: f64, phi: f64) -> Self {
        Direction { theta: cos_theta.clamp(-1.0, 1.0).acos(), phi }
    }

    pub fn polarization_basis(self) -> [FourVector; 2] {
        let (e1, e2) = polarization_basis(self.theta, self.phi);
        [e1, e2]
    }
}

/// The three equal-polar-angle detectors at azimuths `2jπ/3`, j = 1, 2, 3.
pub fn mercedes(theta: f64, count: usize) -> Vec<Direction> {
    (1..=count)
        .map(|j| Direction::new(theta, 2.0 * j as f64 * std::f64::consts::PI / 3.0))
        .collect()
}

/// Photon four-momentum `ω (1, sinθcosφ, sinθsinφ, cosθ)`.
pub fn photon_four_vector(omega: f64, theta: f64, phi: f64) -> Result<FourVector> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!("photon energy must be positive, got {omega}")));
    }
    Ok(Direction::new(theta, phi).null_vector() * omega)
}

/// Linear polarization basis transverse to the direction `(θ, φ)`:
/// ε¹ = (0, cosθcosφ, cosθsinφ, −sinθ), ε² = (0, −sinφ, cosφ, 0).
pub fn polarization_basis(theta: f64, phi: f64) -> (FourVector, FourVector) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (FourVector::new(0.0, ct * cp, ct * sp, -st), FourVector::new(0.0, -sp, cp, 0.0))
}

/// Polarization state of a photon leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Polarization {
    /// Basis vector ε¹ (label 1) or ε² (label 2) of [`polarization_basis`].
    Basis(u8),
    /// Arbitrary (possibly complex) polarization four-vector.
    Explicit(ComplexFourVector),
}

impl Polarization {
    /// Expansion coefficients on the linear basis `(ε¹, ε²)`. Any component
    /// along the photon momentum is dropped; it does not couple.
    pub fn coefficients(&self, basis: &[FourVector; 2]) -> Result<[Complex64; 2]> {
        match *self {
            Polarization::Basis(1) => Ok([1.0.into(), 0.0.into()]),
            Polarization::Basis(2) => Ok([0.0.into(), 1.0.into()]),
            Polarization::Basis(l) => {
                Err(Error::InvalidInput(format!("polarization label must be 1 or 2, got {l}")))
            }
            Polarization::Explicit(v) => Ok([-v.dot(basis[0].into()), -v.dot(basis[1].into())]),
        }
    }
}

/// Frame in which a configuration is specified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Lab,
    ElectronRest,
}

/// Beam parameters of one scattering setup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterConfig {
    /// Incoming photon energy ω₀ (MeV).
    pub omega0: f64,
    /// Incoming electron energy E_i (MeV).
    pub e_i: f64,
    /// Detection threshold ε for emitted photons (MeV), fixed in the lab.
    pub cutoff: f64,
    pub incoming: Polarization,
    pub frame: Frame,
}

impl ScatterConfig {
    /// Electron at rest, photon polarized along x.
    pub fn at_rest(omega0: f64, cutoff: f64) -> Self {
        ScatterConfig {
            omega0,
            e_i: ELECTRON_MASS,
            cutoff,
            incoming: Polarization::Basis(1),
            frame: Frame::Lab,
        }
    }

    pub fn new(omega0: f64, e_i: f64, cutoff: f64) -> Self {
        ScatterConfig { omega0, e_i, cutoff, incoming: Polarization::Basis(1), frame: Frame::Lab }
    }

    pub fn with_incoming(mut self, pol: Polarization) -> Self {
        self.incoming = pol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::InvalidInput(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.e_i >= ELECTRON_MASS * (1.0 - 1e-12)) || !self.e_i.is_finite() {
            return Err(Error::OffShell { energy: self.e_i, mass: ELECTRON_MASS });
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff must be positive, got {}", self.cutoff)));
        }
        if !(self.cutoff < self.omega0 + self.e_i - ELECTRON_MASS) {
            return Err(Error::InvalidInput(format!(
                "cutoff {} MeV exceeds the available energy {} MeV",
                self.cutoff,
                self.omega0 + self.e_i - ELECTRON_MASS
            )));
        }
        Ok(())
    }

    pub fn p_i(&self) -> FourVector {
        let m = ELECTRON_MASS;
        let pz = ((self.e_i - m) * (self.e_i + m)).max(0.0).sqrt();
        FourVector::new(self.e_i, 0.0, 0.0, -pz)
    }

    pub fn k0(&self) -> FourVector {
        FourVector::new(self.omega0, 0.0, 0.0, self.omega0)
    }

    pub fn incoming_basis(&self) -> [FourVector; 2] {
        Direction::new(0.0, 0.0).polarization_basis()
    }

    pub fn boost(&self) -> Boost {
        Boost::from_energy(self.e_i)
    }
}

/// Energy-momentum closure for the last emitted photon, written as
/// `ω_last = num / den` with `den = n_last·(p_i + k₀ − K) > 0` in the
/// physical region (K = sum of the other emitted momenta).
#[derive(Clone, Copy, Debug)]
pub struct Closure {
    pub num: f64,
    pub den: f64,
}

fn pairwise_sum(ks: &[FourVector]) -> f64 {
    let mut s = 0.0;
    for i in 0..ks.len() {
        for j in i + 1..ks.len() {
            s += ks[i].dot(ks[j]);
        }
    }
    s
}

/// Closure of `(p_i + k₀ − Σ known − ω n_last)² = m²` for ω.
pub fn closure(config: &ScatterConfig, known: &[FourVector], last: Direction) -> Closure {
    let p_i = config.p_i();
    let k0 = config.k0();
    let total = p_i + k0;
    let big_k = known.iter().fold(FourVector::ZERO, |acc, &k| acc + k);
    let n = last.null_vector();
    Closure {
        num: p_i.dot(k0) - total.dot(big_k) + pairwise_sum(known),
        den: n.dot(total - big_k),
    }
}

/// Energy of the last emitted photon fixed by four-momentum conservation.
/// May be non-positive; the caller filters forbidden points.
pub fn solve_last_omega(config: &ScatterConfig, known: &[FourVector], last: Direction) -> Result<f64> {
    let c = closure(config, known, last);
    if c.den.abs() < 1e-12 * (config.e_i + config.omega0) {
        return Err(Error::DegenerateKinematics(format!(
            "closure denominator {:e} below tolerance",
            c.den
        )));
    }
    Ok(c.num / c.den)
}

/// ω₃ for the three-photon process given photons 1 and 2.
pub fn solve_omega3(
    config: &ScatterConfig,
    k1: FourVector,
    k2: FourVector,
    direction3: Direction,
) -> Result<f64> {
    solve_last_omega(config, &[k1, k2], direction3)
}

/// Outgoing electron `p_f = p_i + k₀ − Σ k_j`.
pub fn final_electron(config: &ScatterConfig, emitted: &[FourVector]) -> FourVector {
    emitted.iter().fold(config.p_i() + config.k0(), |acc, &k| acc - k)
}

/// d(E_f + ω_last)/dω_last = 1 + [n⃗_last·(Σk⃗_other − k⃗₀ − p⃗_i) + ω_last]/E_f,
/// with all emitted momenta (the last one included) in `emitted`.
pub fn energy_jacobian(config: &ScatterConfig, emitted: &[FourVector]) -> Result<f64> {
    let (last, others) = emitted
        .split_last()
        .ok_or_else(|| Error::InvalidInput("no emitted photons".into()))?;
    let p_f = final_electron(config, emitted);
    if !(p_f.t.abs() > 0.0) {
        return Err(Error::DegenerateKinematics("final electron energy vanishes".into()));
    }
    let omega = last.t;
    if !(omega > 0.0) {
        return Err(Error::DegenerateKinematics("last photon energy must be positive".into()));
    }
    let n = *last * (1.0 / omega);
    let sum = others.iter().fold(FourVector::ZERO, |acc, &k| acc + k) - config.k0() - config.p_i();
    Ok(1.0 + (n.spatial_dot(sum) + omega) / p_f.t)
}

/// Largest energy of a variable photon (direction `var`) for which the last
/// photon (direction `last`) still carries `threshold`, with the momenta in
/// `fixed` held constant. For the three-photon process, `fixed = [k_ℓ]`.
pub fn omega_max(
    config: &ScatterConfig,
    fixed: &[FourVector],
    var: Direction,
    last: Direction,
    threshold: f64,
) -> Result<f64> {
    let p_i = config.p_i();
    let total = p_i + config.k0();
    let k_last = last.null_vector() * threshold;
    let mut others: Vec<FourVector> = fixed.to_vec();
    others.push(k_last);
    let big = others.iter().fold(FourVector::ZERO, |acc, &k| acc + k);
    let num = p_i.dot(config.k0()) - total.dot(big) + pairwise_sum(&others);
    let den = var.null_vector().dot(total - big);
    if !(den > 1e-12 * (config.e_i + config.omega0)) {
        return Err(Error::DegenerateKinematics(format!(
            "threshold boundary unreachable (denominator {den:e})"
        )));
    }
    Ok(num / den)
}

/// ω_j^max for the three-photon process: spectator `k_l`, variable photon
/// direction `dir_j`, photon 3 direction `dir3` pinned at the threshold.
pub fn omega_j_max(
    config: &ScatterConfig,
    k_l: FourVector,
    dir_j: Direction,
    dir3: Direction,
    threshold: f64,
) -> Result<f64> {
    omega_max(config, &[k_l], dir_j, dir3, threshold)
}

/// Boost along z relating the lab to the incoming-electron rest frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boost {
    pub gamma: f64,
    pub beta: f64,
    /// 1 − β, kept separately to avoid cancellation at large γ.
    pub one_minus_beta: f64,
}

impl Boost {
    pub fn from_energy(e_i: f64) -> Self {
        let gamma = (e_i / ELECTRON_MASS).max(1.0);
        Self::from_gamma(gamma)
    }

    pub fn from_gamma(gamma: f64) -> Self {
        let inv2 = 1.0 / (gamma * gamma);
        let beta = (1.0 - inv2).max(0.0).sqrt();
        Boost { gamma, beta, one_minus_beta: inv2 / (1.0 + beta) }
    }

    pub fn from_beta(beta: f64) -> Self {
        let one_minus_beta = 1.0 - beta;
        let gamma = 1.0 / (one_minus_beta * (1.0 + beta)).sqrt();
        Boost { gamma, beta, one_minus_beta }
    }

    pub fn is_identity(&self) -> bool {
        self.beta == 0.0
    }

    /// `1 − β cos θ` without cancellation.
    pub fn one_minus_beta_cos(&self, theta: f64) -> f64 {
        let s = (0.5 * theta).sin();
        2.0 * s * s + self.one_minus_beta * theta.cos()
    }

    /// `1 + β cos θ` without cancellation.
    pub fn one_plus_beta_cos(&self, theta: f64) -> f64 {
        let c = (0.5 * theta).cos();
        2.0 * c * c - self.one_minus_beta * theta.cos()
    }

    /// Lab energy over rest-frame energy for a photon at rest-frame angle θ′.
    pub fn doppler_to_lab(&self, theta_rest: f64) -> f64 {
        self.gamma * self.one_minus_beta_cos(theta_rest)
    }

    /// Rest-frame energy over lab energy for a photon at lab angle θ.
    pub fn doppler_to_rest(&self, theta_lab: f64) -> f64 {
        self.gamma * self.one_plus_beta_cos(theta_lab)
    }

    fn aberration_factor(&self) -> f64 {
        // tan(θ/2) = γ(1+β) tan(θ′/2)
        self.gamma * (1.0 + self.beta)
    }

    pub fn angle_to_rest(&self, theta_lab: f64) -> f64 {
        let h = 0.5 * theta_lab;
        2.0 * h.sin().atan2(self.aberration_factor() * h.cos())
    }

    pub fn angle_to_lab(&self, theta_rest: f64) -> f64 {
        let h = 0.5 * theta_rest;
        2.0 * (self.aberration_factor() * h.sin()).atan2(h.cos())
    }

    /// Lorentz transform of a lab four-vector into the electron rest frame.
    pub fn vector_to_rest(&self, v: FourVector) -> FourVector {
        let (g, b) = (self.gamma, self.beta);
        FourVector::new(g * (v.t + b * v.z), v.x, v.y, g * (v.z + b * v.t))
    }

    /// Inverse of [`Boost::vector_to_rest`].
    pub fn vector_to_lab(&self, v: FourVector) -> FourVector {
        let (g, b) = (self.gamma, self.beta);
        FourVector::new(g * (v.t - b * v.z), v.x, v.y, g * (v.z - b * v.t))
    }

    /// Rest-frame energy below which a photon emitted at rest-frame angle θ′
    /// falls under the lab threshold.
    pub fn rest_threshold(&self, lab_threshold: f64, theta_rest: f64) -> f64 {
        lab_threshold / self.doppler_to_lab(theta_rest)
    }
}

/// A photon leg: energy and emission direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonLeg {
    pub omega: f64,
    pub direction: Direction,
}

impl PhotonLeg {
    pub fn new(omega: f64, theta: f64, phi: f64) -> Self {
        PhotonLeg { omega, direction: Direction::new(theta, phi) }
    }

    pub fn k(&self) -> FourVector {
        self.direction.null_vector() * self.omega
    }
}

/// Rest-frame image of a lab configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RestFrameImage {
    pub config: ScatterConfig,
    pub legs: Vec<PhotonLeg>,
    pub boost: Boost,
}

/// Maps a lab configuration and its emitted legs into the frame where the
/// incoming electron is at rest. Azimuths are unchanged; the lab threshold is
/// kept in `config.cutoff` and must be compared via [`lab_threshold_pass`].
pub fn boost_config_to_rest_frame(config: &ScatterConfig, legs: &[PhotonLeg]) -> RestFrameImage {
    let boost = config.boost();
    let mut rest = *config;
    rest.omega0 = config.omega0 * boost.doppler_to_rest(0.0);
    rest.e_i = ELECTRON_MASS;
    rest.frame = Frame::ElectronRest;
    let legs = legs
        .iter()
        .map(|l| PhotonLeg {
            omega: l.omega * boost.doppler_to_rest(l.direction.theta),
            direction: Direction::new(boost.angle_to_rest(l.direction.theta), l.direction.phi),
        })
        .collect();
    RestFrameImage { config: rest, legs, boost }
}

/// Inverse of [`boost_config_to_rest_frame`] for the emitted legs.
pub fn legs_to_lab(boost: &Boost, legs: &[PhotonLeg]) -> Vec<PhotonLeg> {
    legs.iter()
        .map(|l| PhotonLeg {
            omega: l.omega * boost.doppler_to_lab(l.direction.theta),
            direction: Direction::new(boost.angle_to_lab(l.direction.theta), l.direction.phi),
        })
        .collect()
}

/// Jacobian J between the rest-frame and lab five-fold cross sections
/// (dω₁dω₂dΩ₁dΩ₂dΩ₃); `dσ_lab = dσ′_rest / J`.
pub fn cross_section_jacobian_j(theta_rest: [f64; 3], beta: f64) -> f64 {
    jacobian_j(&Boost::from_beta(beta), theta_rest)
}

/// Jacobian J̃ for cross sections differential in the three solid angles only.
pub fn cross_section_jacobian_jtilde(theta_rest: [f64; 3], beta: f64) -> f64 {
    jacobian_jtilde(&Boost::from_beta(beta), theta_rest)
}

pub fn jacobian_j(boost: &Boost, theta_rest: [f64; 3]) -> f64 {
    let d: Vec<f64> = theta_rest.iter().map(|&t| boost.one_minus_beta_cos(t)).collect();
    let omb2 = boost.one_minus_beta * (1.0 + boost.beta);
    omb2 * omb2 / (d[0] * d[1] * d[2] * d[2])
}

pub fn jacobian_jtilde(boost: &Boost, theta_rest: [f64; 3]) -> f64 {
    let d: f64 = theta_rest.iter().map(|&t| boost.one_minus_beta_cos(t)).product();
    let omb2 = boost.one_minus_beta * (1.0 + boost.beta);
    omb2.powi(3) / (d * d)
}

/// General form of the five-fold / angular Jacobians for `n` emitted photons:
/// energies of all but the last photon are differential.
pub fn jacobian_general(boost: &Boost, theta_rest: &[f64], energy_differential: bool) -> f64 {
    // dσ_lab / dσ_rest = Π_j D_j^{-2} (angles) × Π_{j<n} D_j (energies), D = γ(1 − βcosθ′)
    let mut inv = 1.0;
    let n = theta_rest.len();
    for (j, &t) in theta_rest.iter().enumerate() {
        let d = boost.doppler_to_lab(t);
        inv *= d * d;
        if energy_differential && j + 1 < n {
            inv /= d;
        }
    }
    1.0 / inv
}

/// True iff the lab energy `γ(1 − βcosθ′)ω′` of a rest-frame photon exceeds ε.
pub fn lab_threshold_pass(omega_rest: f64, theta_rest: f64, beta: f64, gamma: f64, cutoff: f64) -> bool {
    let boost = if beta == 0.0 {
        Boost { gamma: 1.0, beta: 0.0, one_minus_beta: 1.0 }
    } else {
        Boost { gamma, beta, one_minus_beta: 1.0 / (gamma * gamma * (1.0 + beta)) }
    };
    boost.doppler_to_lab(theta_rest) * omega_rest > cutoff
}
