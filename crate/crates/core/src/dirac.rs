//! Clifford-algebra kernel: four-vectors, γ-matrices in the Dirac
//! representation, Feynman slash, and free-electron bispinors.
//!
//! Metric signature is (+, −, −, −). Bispinors are normalized to ū u = 1.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::ELECTRON_MASS;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A real Minkowski four-vector `(t, x, y, z)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub const ZERO: FourVector = FourVector { t: 0.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector { t, x, y, z }
    }

    /// Minkowski product `a·b = a⁰b⁰ − a⃗·b⃗`.
    #[inline]
    pub fn dot(self, other: FourVector) -> f64 {
        self.t * other.t - self.x * other.x - self.y * other.y - self.z * other.z
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    /// Euclidean product of the spatial parts.
    #[inline]
    pub fn spatial_dot(self, other: FourVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Euclidean length of the spatial part.
    pub fn spatial_norm(self) -> f64 {
        self.spatial_dot(self).sqrt()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn complexify(self) -> ComplexFourVector {
        ComplexFourVector {
            t: self.t.into(),
            x: self.x.into(),
            y: self.y.into(),
            z: self.z.into(),
        }
    }
}

impl Add for FourVector {
    type Output = FourVector;
    #[inline]
    fn add(self, o: FourVector) -> FourVector {
        FourVector::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for FourVector {
    #[inline]
    fn add_assign(&mut self, o: FourVector) {
        *self = *self + o;
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    #[inline]
    fn sub(self, o: FourVector) -> FourVector {
        FourVector::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    #[inline]
    fn neg(self) -> FourVector {
        FourVector::new(-self.t, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    #[inline]
    fn mul(self, s: f64) -> FourVector {
        FourVector::new(self.t * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    #[inline]
    fn mul(self, v: FourVector) -> FourVector {
        v * self
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, mu: usize) -> &f64 {
        match mu {
            0 => &self.t,
            1 => &self.x,
            2 => &self.y,
            3 => &self.z,
            _ => panic!("four-vector index {mu} out of range"),
        }
    }
}

/// Minkowski scalar product `a⁰b⁰ − a⃗·b⃗`.
#[inline]
pub fn minkowski_dot(a: FourVector, b: FourVector) -> f64 {
    a.dot(b)
}

/// A four-vector with complex components, used for polarization vectors
/// (helicity bases, gauge-shifted vectors).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexFourVector {
    pub t: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl ComplexFourVector {
    pub fn dot(self, o: ComplexFourVector) -> Complex64 {
        self.t * o.t - self.x * o.x - self.y * o.y - self.z * o.z
    }

    /// Adds `a · k` for a complex coefficient `a` and a real vector `k`.
    pub fn shifted(self, a: Complex64, k: FourVector) -> ComplexFourVector {
        ComplexFourVector {
            t: self.t + a * k.t,
            x: self.x + a * k.x,
            y: self.y + a * k.y,
            z: self.z + a * k.z,
        }
    }

    pub fn conj(self) -> ComplexFourVector {
        ComplexFourVector { t: self.t.conj(), x: self.x.conj(), y: self.y.conj(), z: self.z.conj() }
    }
}

impl From<FourVector> for ComplexFourVector {
    fn from(v: FourVector) -> Self {
        v.complexify()
    }
}

/// 4×4 complex matrix acting on bispinors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracMatrix(pub [[Complex64; 4]; 4]);

impl DiracMatrix {
    pub const ZERO: DiracMatrix = DiracMatrix([[ZERO; 4]; 4]);

    pub fn identity() -> Self {
        let mut m = Self::ZERO;
        for i in 0..4 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    #[inline]
    pub fn apply(&self, v: &Bispinor) -> Bispinor {
        let m = &self.0;
        let u = &v.0;
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(m.iter()) {
            *o = row[0] * u[0] + row[1] * u[1] + row[2] * u[2] + row[3] * u[3];
        }
        Bispinor(out)
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DiracMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Self::ZERO)
    }
}

impl Add for DiracMatrix {
    type Output = DiracMatrix;
    fn add(self, o: DiracMatrix) -> DiracMatrix {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += o.0[i][j];
            }
        }
        out
    }
}

impl Sub for DiracMatrix {
    type Output = DiracMatrix;
    fn sub(self, o: DiracMatrix) -> DiracMatrix {
        self + o.scale(-ONE)
    }
}

impl Mul for DiracMatrix {
    type Output = DiracMatrix;
    fn mul(self, o: DiracMatrix) -> DiracMatrix {
        let mut out = DiracMatrix::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.0[i][k] * o.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

impl Mul<&Bispinor> for &DiracMatrix {
    type Output = Bispinor;
    fn mul(self, v: &Bispinor) -> Bispinor {
        self.apply(v)
    }
}

/// Column bispinor (four complex components).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bispinor(pub [Complex64; 4]);

impl Bispinor {
    pub const ZERO: Bispinor = Bispinor([ZERO; 4]);

    pub fn scale(&self, s: Complex64) -> Bispinor {
        Bispinor(self.0.map(|c| c * s))
    }
}

impl Add for Bispinor {
    type Output = Bispinor;
    fn add(self, o: Bispinor) -> Bispinor {
        Bispinor([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

/// Row spinor, e.g. the Dirac adjoint ū = u†γ⁰.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjointSpinor(pub [Complex64; 4]);

impl AdjointSpinor {
    #[inline]
    pub fn dot(&self, v: &Bispinor) -> Complex64 {
        self.0[0] * v.0[0] + self.0[1] * v.0[1] + self.0[2] * v.0[2] + self.0[3] * v.0[3]
    }

    /// Row-vector times matrix.
    pub fn times(&self, m: &DiracMatrix) -> AdjointSpinor {
        let mut out = [ZERO; 4];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| self.0[k] * m.0[k][j]).sum();
        }
        AdjointSpinor(out)
    }
}

/// Pauli matrix σ^i for i ∈ {1, 2, 3}.
pub fn pauli(i: usize) -> [[Complex64; 2]; 2] {
    match i {
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index {i} out of range"),
    }
}

/// Dirac matrix γ^μ in the Dirac representation.
pub fn gamma(mu: usize) -> DiracMatrix {
    let mut g = DiracMatrix::ZERO;
    match mu {
        0 => {
            g.0[0][0] = ONE;
            g.0[1][1] = ONE;
            g.0[2][2] = -ONE;
            g.0[3][3] = -ONE;
        }
        1..=3 => {
            let s = pauli(mu);
            for a in 0..2 {
                for b in 0..2 {
                    g.0[a][b + 2] = s[a][b];
                    g.0[a + 2][b] = -s[a][b];
                }
            }
        }
        _ => panic!("gamma index {mu} out of range"),
    }
    g
}

/// Feynman slash `â = a⁰γ⁰ − a⃗·γ⃗` of a complex four-vector.
pub fn feynman_slash_complex(a: ComplexFourVector) -> DiracMatrix {
    // a⃗·σ⃗ = [[a3, a1 - i a2], [a1 + i a2, -a3]]
    let s = [[a.z, a.x - I * a.y], [a.x + I * a.y, -a.z]];
    let mut m = DiracMatrix::ZERO;
    m.0[0][0] = a.t;
    m.0[1][1] = a.t;
    m.0[2][2] = -a.t;
    m.0[3][3] = -a.t;
    for r in 0..2 {
        for c in 0..2 {
            m.0[r][c + 2] = -s[r][c];
            m.0[r + 2][c] = s[r][c];
        }
    }
    m
}

/// Feynman slash `â = a⁰γ⁰ − a⃗·γ⃗`.
pub fn feynman_slash(a: FourVector) -> DiracMatrix {
    feynman_slash_complex(a.complexify())
}

/// Positive-energy bispinor `u_r(p)` with `r ∈ {1, 2}`, normalized to ū u = 1.
///
/// The energy is taken from `p.t` and the mass is the electron mass; inputs
/// below the mass shell (beyond rounding) are rejected.
pub fn bispinor(p: FourVector, r: u8) -> Result<Bispinor> {
    bispinor_with_mass(p, r, ELECTRON_MASS)
}

pub fn bispinor_with_mass(p: FourVector, r: u8, m: f64) -> Result<Bispinor> {
    if !(r == 1 || r == 2) {
        return Err(Error::InvalidInput(format!("spin label must be 1 or 2, got {r}")));
    }
    let e = p.t;
    if !(e >= m * (1.0 - 1e-12)) {
        return Err(Error::OffShell { energy: e, mass: m });
    }
    let norm = ((e + m) / (2.0 * m)).sqrt();
    let chi = if r == 1 { [ONE, ZERO] } else { [ZERO, ONE] };
    let k = 1.0 / (e + m);
    let px = Complex64::new(p.x, 0.0);
    let py = Complex64::new(p.y, 0.0);
    let pz = Complex64::new(p.z, 0.0);
    let lower0 = (pz * chi[0] + (px - I * py) * chi[1]) * k;
    let lower1 = ((px + I * py) * chi[0] - pz * chi[1]) * k;
    Ok(Bispinor([chi[0] * norm, chi[1] * norm, lower0 * norm, lower1 * norm]))
}

/// Dirac adjoint `ū = u†γ⁰`.
pub fn dirac_adjoint(u: &Bispinor) -> AdjointSpinor {
    let c = u.0.map(|v| v.conj());
    AdjointSpinor([c[0], c[1], -c[2], -c[3]])
}
