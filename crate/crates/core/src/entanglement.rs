//! Polarization density matrix of the three emitted photons, its von Neumann
//! entropy, and a genuine-tripartite-entanglement measure from an optimized
//! fully decomposable witness.
//!
//! Basis states are |λ₁λ₂λ₃⟩ with λ_j ∈ {1, 2}; the row index is
//! `4(λ₁−1) + 2(λ₂−1) + (λ₃−1)`, so photon 1 is the most significant bit.
//!
//! τ(ρ) = max −tr(Wρ) over W such that for every subset s of the photons
//! W = P_s + Q_s^{T_s} with 0 ≤ P_s ≤ 1 and 0 ≤ Q_s ≤ 1. The program is
//! solved by a primal-dual interior-point method (HKM direction) on the
//! block-diagonal inequality form with 24 blocks of size 8.

use nalgebra::{DMatrix, DVector, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitudes::AmplitudeTensor;
use crate::error::{Error, Result};
use crate::kinematics::{boost_config_to_rest_frame, Direction, PhotonLeg, ScatterConfig};
use crate::xsec::{kinematic_point, FrameStrategy, PointOutcome, SpinTreatment};

pub type Matrix8 = SMatrix<Complex64, 8, 8>;

const DIM: usize = 8;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A subset of the three photons for a partial transpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subset {
    S1,
    S2,
    S3,
    S12,
    S13,
    S23,
}

impl Subset {
    pub const ALL: [Subset; 6] = [Subset::S1, Subset::S2, Subset::S3, Subset::S12, Subset::S13, Subset::S23];

    /// Bit mask over the basis index (photon 1 = bit 2).
    pub fn mask(self) -> usize {
        match self {
            Subset::S1 => 0b100,
            Subset::S2 => 0b010,
            Subset::S3 => 0b001,
            Subset::S12 => 0b110,
            Subset::S13 => 0b101,
            Subset::S23 => 0b011,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Subset::S1 => "1",
            Subset::S2 => "2",
            Subset::S3 => "3",
            Subset::S12 => "12",
            Subset::S13 => "13",
            Subset::S23 => "23",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Subset::ALL
            .into_iter()
            .find(|x| x.label() == s)
            .ok_or_else(|| Error::InvalidSubset(s.to_string()))
    }
}

/// Image of the matrix unit (row, col) under T_s.
#[inline]
fn transpose_index(s: Subset, row: usize, col: usize) -> (usize, usize) {
    let m = s.mask();
    ((row & !m) | (col & m), (col & !m) | (row & m))
}

/// Partial transpose over the photons in `s`.
pub fn partial_transpose(rho: &Matrix8, s: Subset) -> Matrix8 {
    let mut out = Matrix8::zeros();
    for r in 0..DIM {
        for c in 0..DIM {
            let (r2, c2) = transpose_index(s, r, c);
            out[(r2, c2)] = rho[(r, c)];
        }
    }
    out
}

fn hermiticity_defect(m: &Matrix8) -> f64 {
    let mut d = 0.0f64;
    for r in 0..DIM {
        for c in r..DIM {
            d = d.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    d
}

fn max_abs(m: &Matrix8) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Spectral decomposition of a Hermitian matrix: ascending eigenvalues and
/// the eigenvectors as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigensystem {
    pub values: [f64; DIM],
    pub vectors: Matrix8,
}

impl Eigensystem {
    pub fn reconstruct(&self) -> Matrix8 {
        let d = Matrix8::from_diagonal(&nalgebra::SVector::<Complex64, 8>::from_fn(|i, _| self.values[i].into()));
        self.vectors * d * self.vectors.adjoint()
    }
}

/// Cyclic Jacobi diagonalization of an 8×8 Hermitian matrix.
pub fn hermitian_eigensystem(m: &Matrix8) -> Result<Eigensystem> {
    let scale = max_abs(m);
    let defect = hermiticity_defect(m);
    if defect > 1e-10 * scale.max(1e-300) {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = Matrix8::identity();
    for _sweep in 0..64 {
        let off: f64 = (0..DIM).flat_map(|p| (p + 1..DIM).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].norm_sqr()).sum();
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..DIM {
            for q in p + 1..DIM {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A ← J† A J with J = [[c, s e^{iφ}], [−s e^{−iφ}, c]] on (p, q)
                let jpq = phase * s;
                let jqp = -phase.conj() * s;
                for k in 0..DIM {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * c;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * c;
                }
                for k in 0..DIM {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c + aqk * jqp.conj();
                    a[(q, k)] = apk * jpq.conj() + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }
    let mut order: Vec<usize> = (0..DIM).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let mut values = [0.0; DIM];
    let mut vectors = Matrix8::zeros();
    for (j, &k) in order.iter().enumerate() {
        values[j] = a[(k, k)].re;
        vectors.set_column(j, &v.column(k));
    }
    Ok(Eigensystem { values, vectors })
}

/// Kinematic provenance of a density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointProvenance {
    pub omega0: f64,
    pub e_i: f64,
    pub cutoff: f64,
    pub omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub frame: String,
}

/// Normalized three-photon polarization density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub rho: Matrix8,
    /// Normalization constant: ρ = κ Σ M M*.
    pub kappa: f64,
    pub provenance: Option<PointProvenance>,
}

impl DensityMatrix {
    /// Validates a candidate density matrix: Hermitian to 1e-12, unit trace
    /// to 1e-12 and eigenvalues ≥ −1e-10.
    pub fn new(rho: Matrix8) -> Result<Self> {
        let d = hermiticity_defect(&rho);
        if d > 1e-12 {
            return Err(Error::NotHermitian(d));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let e = hermitian_eigensystem(&rho)?;
        if e.values[0] < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {}", e.values[0])));
        }
        Ok(DensityMatrix { rho, kappa: 1.0, provenance: None })
    }

    /// ρ = κ Σ_k |a_k⟩⟨a_k| normalized to unit trace.
    pub fn from_amplitudes(amplitudes: &[[Complex64; DIM]]) -> Result<Self> {
        let mut rho = Matrix8::zeros();
        for a in amplitudes {
            for r in 0..DIM {
                for c in 0..DIM {
                    rho[(r, c)] += a[r] * a[c].conj();
                }
            }
        }
        let tr = rho.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState("amplitudes vanish; density matrix cannot be normalized".into()));
        }
        let kappa = 1.0 / tr;
        rho *= Complex64::new(kappa, 0.0);
        // exact Hermitian symmetry
        let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(DensityMatrix { rho, kappa, provenance: None })
    }

    /// Pure state |ψ⟩⟨ψ| (normalized).
    pub fn pure(psi: [Complex64; DIM]) -> Result<Self> {
        Self::from_amplitudes(&[psi])
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix { rho: Matrix8::identity() * Complex64::new(0.125, 0.0), kappa: 1.0, provenance: None }
    }

    /// (|111⟩ + |222⟩)/√2.
    pub fn ghz() -> Self {
        let mut psi = [ZERO; DIM];
        psi[0] = ONE;
        psi[7] = ONE;
        Self::pure(psi).expect("nonzero state")
    }

    /// Density matrix of the emitted photons at a kinematic point, with the
    /// incoming photon in the configured polarization. Spins are summed for
    /// `Averaged`/`Summed`; `Fixed` gives the pure state of one spin channel.
    pub fn at_point(
        config: &ScatterConfig,
        legs: [PhotonLeg; 2],
        direction3: Direction,
        spin: SpinTreatment,
        strategy: FrameStrategy,
    ) -> Result<Self> {
        config.validate()?;
        let (cfg, known, last, frame) = if strategy.use_rest_frame(config) {
            let mut all = legs.to_vec();
            all.push(PhotonLeg { omega: 1.0, direction: direction3 });
            let img = boost_config_to_rest_frame(config, &all);
            (img.config, vec![img.legs[0], img.legs[1]], img.legs[2].direction, "electron-rest")
        } else {
            (*config, legs.to_vec(), direction3, "lab")
        };
        let point = match kinematic_point(&cfg, &known, last)? {
            PointOutcome::Allowed(p) => p,
            PointOutcome::Forbidden => {
                return Err(Error::Forbidden("no physical solution for the third photon".into()))
            }
        };
        let coef = cfg.incoming.coefficients(&cfg.incoming_basis())?;
        let amps = emitted_amplitudes(&point.tensor, coef, spin)?;
        let mut dm = Self::from_amplitudes(&amps)?;
        let omega3 = point.emitted[2].t;
        let mut all = known.clone();
        all.push(PhotonLeg { omega: omega3, direction: last });
        dm.provenance = Some(PointProvenance {
            omega0: cfg.omega0,
            e_i: cfg.e_i,
            cutoff: cfg.cutoff,
            omegas: all.iter().map(|l| l.omega).collect(),
            thetas: all.iter().map(|l| l.direction.theta).collect(),
            phis: all.iter().map(|l| l.direction.phi).collect(),
            frame: frame.to_string(),
        });
        Ok(dm)
    }

    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(self)
    }

    /// Serializable record: row-major (re, im) pairs.
    pub fn to_record(&self) -> DensityMatrixRecord {
        DensityMatrixRecord {
            format: DensityMatrixRecord::FORMAT.to_string(),
            version: 1,
            basis: "|l1 l2 l3>, l in {1,2}, index 4(l1-1)+2(l2-1)+(l3-1)".to_string(),
            entries: (0..DIM * DIM).map(|k| {
                let z = self.rho[(k / DIM, k % DIM)];
                [z.re, z.im]
            }).collect(),
            kappa: self.kappa,
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_record(rec: &DensityMatrixRecord) -> Result<Self> {
        if rec.entries.len() != DIM * DIM {
            return Err(Error::InvalidInput(format!("expected 64 entries, got {}", rec.entries.len())));
        }
        let rho = Matrix8::from_fn(|r, c| {
            let [re, im] = rec.entries[r * DIM + c];
            Complex64::new(re, im)
        });
        let mut dm = Self::new(rho)?;
        dm.kappa = rec.kappa;
        dm.provenance = rec.provenance.clone();
        Ok(dm)
    }
}

/// On-disk form of a density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMatrixRecord {
    pub format: String,
    pub version: u32,
    pub basis: String,
    /// 64 row-major entries as [re, im].
    pub entries: Vec<[f64; 2]>,
    pub kappa: f64,
    pub provenance: Option<PointProvenance>,
}

impl DensityMatrixRecord {
    pub const FORMAT: &'static str = "three-photon-density-matrix";
}

/// Emitted-photon amplitude vectors, one per electron-spin channel kept.
pub fn emitted_amplitudes(
    tensor: &AmplitudeTensor,
    incoming: [Complex64; 2],
    spin: SpinTreatment,
) -> Result<Vec<[Complex64; DIM]>> {
    if tensor.photons() != 4 {
        return Err(Error::InvalidInput("density matrices need three emitted photons".into()));
    }
    let contracted = tensor.contract_incoming(incoming);
    let to_arr = |v: &Vec<Complex64>| {
        let mut a = [ZERO; DIM];
        a.copy_from_slice(v);
        a
    };
    match spin {
        SpinTreatment::Averaged | SpinTreatment::Summed => Ok(contracted.iter().map(to_arr).collect()),
        SpinTreatment::Fixed(a, b) if (1..=2).contains(&a) && (1..=2).contains(&b) => {
            Ok(vec![to_arr(&contracted[2 * (a as usize - 1) + (b as usize - 1)])])
        }
        SpinTreatment::Fixed(..) => Err(Error::InvalidInput("spin labels must be 1 or 2".into())),
    }
}

/// −Σ u log₂ u over the eigenvalues of ρ (bits).
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let e = hermitian_eigensystem(&rho.rho)?;
    if e.values[0] < -1e-8 {
        return Err(Error::InvalidState(format!("negative eigenvalue {}", e.values[0])));
    }
    Ok(e.values.iter().filter(|&&u| u > 0.0).map(|&u| -u * u.log2()).sum::<f64>().max(0.0))
}

/// −tr(Wρ).
pub fn witness_expectation(rho: &DensityMatrix, w: &Matrix8) -> f64 {
    -(w * rho.rho).trace().re
}

/// Certificate returned by [`tau`].
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessDecomposition {
    pub w: Matrix8,
    /// P_s and Q_s in the order of [`Subset::ALL`].
    pub p: [Matrix8; 6],
    pub q: [Matrix8; 6],
    /// −tr(Wρ) for the state it was optimized for.
    pub objective: f64,
}

/// Independent check of a certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateCheck {
    /// Most negative eigenvalue and largest excess over 1 across all P_s, Q_s.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// max_s ‖W − P_s − Q_s^{T_s}‖ (entrywise).
    pub reconstruction: f64,
    pub valid: bool,
}

impl WitnessDecomposition {
    pub fn verify(&self, tol: f64) -> Result<CertificateCheck> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut rec = 0.0f64;
        for (k, s) in Subset::ALL.into_iter().enumerate() {
            for m in [&self.p[k], &self.q[k]] {
                let e = hermitian_eigensystem(m)?;
                lo = lo.min(e.values[0]);
                hi = hi.max(e.values[DIM - 1]);
            }
            rec = rec.max(max_abs(&(self.w - self.p[k] - partial_transpose(&self.q[k], s))));
        }
        Ok(CertificateCheck {
            min_eigenvalue: lo,
            max_eigenvalue: hi,
            reconstruction: rec,
            valid: lo >= -tol && hi <= 1.0 + tol && rec <= tol,
        })
    }

    /// W for the GHZ state: 1 − (3/2)|GHZ⟩⟨GHZ|.
    pub fn ghz_witness() -> Matrix8 {
        Matrix8::identity() - DensityMatrix::ghz().rho * Complex64::new(1.5, 0.0)
    }
}

/// Interior-point settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdpOptions {
    /// Target for the complementarity ⟨S, Z⟩ (the duality gap at a feasible pair).
    pub tol: f64,
    /// Target for the dual equality residual. The primal iterate is strictly
    /// feasible throughout, so this only bounds how well optimality is certified.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// When set, the optimum is re-solved with ±weight·tr(W)/8 added to the
    /// objective and the midpoint of the two witnesses is returned, provided
    /// it is as good as the plain optimum. This picks the centre of a flat
    /// optimal face in tr(W) (the textbook witness for GHZ) instead of
    /// whatever point the interior-point path lands on.
    pub tie_break: Option<f64>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { tol: 1e-10, feas_tol: 1e-8, max_iter: 200, tie_break: Some(1e-3) }
    }
}

/// Outcome of the witness optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct TauResult {
    /// max(objective, 0).
    pub tau: f64,
    /// −tr(Wρ) of the returned (strictly feasible) witness.
    pub raw_objective: f64,
    pub decomposition: WitnessDecomposition,
    pub iterations: usize,
    /// Primal minus dual objective at exit.
    pub gap: f64,
    /// Largest dual equality residual at exit.
    pub dual_residual: f64,
    pub converged: bool,
}

impl TauResult {
    /// τ > 0 certifies genuine tripartite entanglement; τ = 0 is inconclusive.
    pub fn certified(&self) -> bool {
        self.tau > 0.0
    }
}

/// One nonzero entry of a Hermitian basis matrix.
type Entry = (u8, u8, Complex64);

/// Entries of the k-th element of the real basis of 8×8 Hermitian matrices:
/// 8 diagonal units, 28 symmetric real pairs, 28 antisymmetric imaginary pairs.
fn hermitian_basis() -> Vec<Vec<Entry>> {
    let mut out: Vec<Vec<Entry>> = (0..DIM as u8).map(|a| vec![(a, a, ONE)]).collect();
    let pairs: Vec<(u8, u8)> = (0..DIM as u8).flat_map(|a| (a + 1..DIM as u8).map(move |b| (a, b))).collect();
    out.extend(pairs.iter().map(|&(a, b)| vec![(a, b, ONE), (b, a, ONE)]));
    out.extend(pairs.iter().map(|&(a, b)| vec![(a, b, I), (b, a, -I)]));
    out
}

fn matrix_from_coords(x: &[f64], basis: &[Vec<Entry>]) -> Matrix8 {
    let mut m = Matrix8::zeros();
    for (xi, e) in x.iter().zip(basis) {
        for &(r, c, v) in e {
            m[(r as usize, c as usize)] += v * *xi;
        }
    }
    m
}

/// One LMI block `constant·1 + Σ x_i F_i ⪰ 0`.
struct Block {
    constant: f64,
    terms: Vec<(usize, Vec<Entry>)>,
}

struct WitnessProgram {
    nvars: usize,
    blocks: Vec<Block>,
    cost: Vec<f64>,
    basis: Vec<Vec<Entry>>,
}

impl WitnessProgram {
    /// Variables: W (64 coordinates) followed by Q_s for each subset. Blocks
    /// per subset: P_s, 1 − P_s, Q_s, 1 − Q_s with P_s = W − Q_s^{T_s}.
    fn new(rho: &Matrix8) -> Self {
        let basis = hermitian_basis();
        let nb = basis.len();
        let mut blocks = Vec::new();
        for (k, s) in Subset::ALL.into_iter().enumerate() {
            let qoff = nb * (k + 1);
            let transposed: Vec<Vec<Entry>> = basis
                .iter()
                .map(|e| {
                    e.iter()
                        .map(|&(r, c, v)| {
                            let (r2, c2) = transpose_index(s, r as usize, c as usize);
                            (r2 as u8, c2 as u8, v)
                        })
                        .collect()
                })
                .collect();
            let neg = |e: &Vec<Entry>| e.iter().map(|&(r, c, v)| (r, c, -v)).collect::<Vec<_>>();
            let mut p: Vec<(usize, Vec<Entry>)> = basis.iter().cloned().enumerate().collect();
            p.extend(transposed.iter().enumerate().map(|(i, e)| (qoff + i, neg(e))));
            let one_minus_p = p.iter().map(|(i, e)| (*i, neg(e))).collect();
            let q: Vec<(usize, Vec<Entry>)> = basis.iter().cloned().enumerate().map(|(i, e)| (qoff + i, e)).collect();
            let one_minus_q = q.iter().map(|(i, e)| (*i, neg(e))).collect();
            blocks.push(Block { constant: 0.0, terms: p });
            blocks.push(Block { constant: 1.0, terms: one_minus_p });
            blocks.push(Block { constant: 0.0, terms: q });
            blocks.push(Block { constant: 1.0, terms: one_minus_q });
        }
        let nvars = nb * 7;
        let mut cost = vec![0.0; nvars];
        for (i, e) in basis.iter().enumerate() {
            cost[i] = e.iter().map(|&(r, c, v)| (v * rho[(c as usize, r as usize)]).re).sum();
        }
        WitnessProgram { nvars, blocks, cost, basis }
    }

    fn slack(&self, x: &[f64], linear_only: bool) -> Vec<Matrix8> {
        self.blocks
            .iter()
            .map(|b| {
                let mut m = if linear_only { Matrix8::zeros() } else { Matrix8::identity() * Complex64::new(b.constant, 0.0) };
                for (i, e) in &b.terms {
                    let xi = x[*i];
                    if xi != 0.0 {
                        for &(r, c, v) in e {
                            m[(r as usize, c as usize)] += v * xi;
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// Σ_b Re tr(F_i^b M_b) for every variable.
    fn adjoint(&self, ms: &[Matrix8]) -> Vec<f64> {
        let mut out = vec![0.0; self.nvars];
        for (b, m) in self.blocks.iter().zip(ms) {
            for (i, e) in &b.terms {
                out[*i] += e.iter().map(|&(r, c, v)| (v * m[(c as usize, r as usize)]).re).sum::<f64>();
            }
        }
        out
    }
}

fn inverse(m: &Matrix8) -> Option<Matrix8> {
    m.cholesky().map(|c| c.inverse())
}

/// Largest α ≤ 1 keeping `m + α d` positive definite, scaled by `fraction`.
fn step_length(m: &Matrix8, d: &Matrix8, fraction: f64) -> Result<f64> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::NotConverged { iterations: 0, gap: f64::NAN })?;
    let l = chol.l();
    let linv = l.try_inverse().ok_or_else(|| Error::NotConverged { iterations: 0, gap: f64::NAN })?;
    let t = linv * d * linv.adjoint();
    let t = (t + t.adjoint()) * Complex64::new(0.5, 0.0);
    let lmin = hermitian_eigensystem(&t)?.values[0];
    Ok(if lmin < 0.0 { (fraction * -1.0 / lmin).min(1.0) } else { 1.0 })
}

/// Computes τ(ρ) and the optimal witness decomposition.
pub fn tau(rho: &DensityMatrix, opts: &SdpOptions) -> Result<TauResult> {
    let plain = solve(rho, opts, 0.0)?;
    let Some(weight) = opts.tie_break else { return Ok(plain) };
    let hi = solve(rho, opts, weight)?;
    let lo = solve(rho, opts, -weight)?;
    // interior iterates are strictly feasible, so the midpoint is a valid
    // witness even if a tie-break run stopped short
    let half = Complex64::new(0.5, 0.0);
    let d = |a: &Matrix8, b: &Matrix8| (a + b) * half;
    let (a, b) = (&hi.decomposition, &lo.decomposition);
    let w = d(&a.w, &b.w);
    let p = std::array::from_fn(|k| d(&a.p[k], &b.p[k]));
    let q = std::array::from_fn(|k| d(&a.q[k], &b.q[k]));
    let objective = witness_expectation(rho, &w);
    if objective < plain.raw_objective - 10.0 * opts.tol {
        return Ok(plain);
    }
    Ok(TauResult {
        tau: objective.max(0.0),
        raw_objective: objective,
        decomposition: WitnessDecomposition { w, p, q, objective },
        iterations: plain.iterations + hi.iterations + lo.iterations,
        gap: plain.gap,
        dual_residual: plain.dual_residual,
        converged: plain.converged,
    })
}

fn solve(rho: &DensityMatrix, opts: &SdpOptions, trace_weight: f64) -> Result<TauResult> {
    let mut prog = WitnessProgram::new(&rho.rho);
    for k in 0..DIM {
        prog.cost[k] -= trace_weight / DIM as f64;
    }
    let nb = prog.basis.len();
    let n_total = (prog.blocks.len() * DIM) as f64;

    // strictly feasible start: W = 1/2, Q_s = 1/4 (P_s = 1/4)
    let mut x = vec![0.0; prog.nvars];
    for k in 0..DIM {
        x[k] = 0.5;
        for s in 0..6 {
            x[nb * (s + 1) + k] = 0.25;
        }
    }
    let mut z: Vec<Matrix8> = vec![Matrix8::identity(); prog.blocks.len()];
    let mut iterations = 0;
    let mut converged = false;
    let (mut gap, mut resid) = (f64::INFINITY, f64::INFINITY);

    for it in 0..opts.max_iter {
        iterations = it;
        let s = prog.slack(&x, false);
        let primal: f64 = prog.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        let dual: f64 = -prog.blocks.iter().zip(&z).map(|(b, zb)| b.constant * zb.trace().re).sum::<f64>();
        let fz = prog.adjoint(&z);
        resid = prog.cost.iter().zip(&fz).map(|(c, f)| (c - f).abs()).fold(0.0, f64::max);
        let sz: f64 = s.iter().zip(&z).map(|(a, b)| (a * b).trace().re).sum();
        gap = primal - dual;
        if sz <= opts.tol && resid <= opts.feas_tol {
            converged = true;
            break;
        }
        let mu = sz / n_total;
        // numerical breakdown near the boundary ends the run unconverged
        let Some(sinv) = s.iter().map(inverse).collect::<Option<Vec<Matrix8>>>() else { break };

        // Schur complement H_ij = Σ_b Re tr(F_i S⁻¹ F_j Z)
        let mut h = DMatrix::<f64>::zeros(prog.nvars, prog.nvars);
        for ((b, a), zb) in prog.blocks.iter().zip(&sinv).zip(&z) {
            let g: Vec<Matrix8> = b
                .terms
                .iter()
                .map(|(_, e)| {
                    let mut g = Matrix8::zeros();
                    for &(r, c, v) in e {
                        g += a.column(r as usize) * zb.row(c as usize) * v;
                    }
                    g
                })
                .collect();
            for (ti, (i, ei)) in b.terms.iter().enumerate() {
                let _ = ti;
                for (tj, (j, _)) in b.terms.iter().enumerate() {
                    if j < i {
                        continue;
                    }
                    let v: f64 = ei.iter().map(|&(r, c, w)| (w * g[tj][(c as usize, r as usize)]).re).sum();
                    h[(*i, *j)] += v;
                }
            }
        }
        for i in 0..prog.nvars {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        let chol = match h.clone().cholesky() {
            Some(c) => c,
            None => {
                let tr = h.trace() / prog.nvars as f64;
                for i in 0..prog.nvars {
                    h[(i, i)] += 1e-14 * tr;
                }
                match h.cholesky() {
                    Some(c) => c,
                    None => break,
                }
            }
        };
        let tr_sinv = prog.adjoint(&sinv);
        let direction = |target: f64| -> (Vec<f64>, Vec<Matrix8>, Vec<Matrix8>) {
            let rhs = DVector::from_iterator(prog.nvars, (0..prog.nvars).map(|i| target * tr_sinv[i] - prog.cost[i]));
            let dx = chol.solve(&rhs);
            let dx: Vec<f64> = dx.iter().copied().collect();
            let ds = prog.slack(&dx, true);
            let dz: Vec<Matrix8> = (0..prog.blocks.len())
                .map(|k| {
                    let t = sinv[k] * ds[k] * z[k];
                    sinv[k] * Complex64::new(target, 0.0) - z[k] - (t + t.adjoint()) * Complex64::new(0.5, 0.0)
                })
                .collect();
            (dx, ds, dz)
        };
        let steps = |ds: &[Matrix8], dz: &[Matrix8], fraction: f64| -> Result<(f64, f64)> {
            let mut ap = 1.0f64;
            let mut ad = 1.0f64;
            for k in 0..prog.blocks.len() {
                ap = ap.min(step_length(&s[k], &ds[k], fraction)?);
                ad = ad.min(step_length(&z[k], &dz[k], fraction)?);
            }
            Ok((ap, ad))
        };
        // predictor
        let (_, ds_a, dz_a) = direction(0.0);
        let Ok((ap, ad)) = steps(&ds_a, &dz_a, 1.0) else { break };
        let mu_aff: f64 = (0..prog.blocks.len())
            .map(|k| ((s[k] + ds_a[k] * Complex64::new(ap, 0.0)) * (z[k] + dz_a[k] * Complex64::new(ad, 0.0))).trace().re)
            .sum::<f64>()
            / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // corrector
        let (dx, ds, dz) = direction(sigma * mu);
        let Ok((ap, ad)) = steps(&ds, &dz, 0.98) else { break };
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += ap * d;
        }
        for (zk, d) in z.iter_mut().zip(&dz) {
            *zk += d * Complex64::new(ad, 0.0);
            *zk = (*zk + zk.adjoint()) * Complex64::new(0.5, 0.0);
        }
    }

    let w = matrix_from_coords(&x[..nb], &prog.basis);
    let mut p = [Matrix8::zeros(); 6];
    let mut q = [Matrix8::zeros(); 6];
    for (k, s) in Subset::ALL.into_iter().enumerate() {
        q[k] = matrix_from_coords(&x[nb * (k + 1)..nb * (k + 2)], &prog.basis);
        p[k] = w - partial_transpose(&q[k], s);
    }
    let objective = witness_expectation(rho, &w);
    Ok(TauResult {
        tau: objective.max(0.0),
        raw_objective: objective,
        decomposition: WitnessDecomposition { w, p, q, objective },
        iterations,
        gap,
        dual_residual: resid,
        converged,
    })
}
