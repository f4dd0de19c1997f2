//! Reduced tree-level amplitudes N for one absorbed and n = 1, 2, 3 emitted
//! photons, evaluated by explicit Dirac-matrix chains.
//!
//! ```text
//! N = mⁿ Σ_ζ ū(p_f) ε̂_ζ(n) S(q_n) … ε̂_ζ(1) S(q_1) ε̂_ζ(0) u(p_i),
//! S(q) = (q̂ + m)/(q² − m²),  q_k = p_i + Σ_{j<k} ±k_ζ(j)
//! ```
//!
//! The sum runs over all (n+1)! orderings ζ of the photon vertices; the
//! absorbed photon (index 0) adds its momentum, emitted photons subtract
//! theirs. Chains act right to left on the incoming bispinor. Orderings that
//! share a prefix share the partial chain, so the orderings are walked as a
//! prefix tree in lexicographic order.

use num_complex::Complex64;

use crate::constants::ELECTRON_MASS;
use crate::dirac::{
    bispinor, dirac_adjoint, feynman_slash, feynman_slash_complex, AdjointSpinor, Bispinor,
    ComplexFourVector, DiracMatrix, FourVector,
};
use crate::error::{Error, Result};

/// An ordering of the photon vertices along the electron line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    /// All orderings of `0..len`, lexicographic.
    pub fn all(len: usize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<usize>, len: usize, out: &mut Vec<Permutation>) {
            if prefix.len() == len {
                out.push(Permutation(prefix.clone()));
                return;
            }
            for c in 0..len {
                if !prefix.contains(&c) {
                    prefix.push(c);
                    rec(prefix, len, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(len), len, &mut out);
        out
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        self.0.iter().all(|&c| c < seen.len() && !std::mem::replace(&mut seen[c], true))
    }
}

/// Momentum `q_n(ζ)` entering the n-th propagator; `photons[0]` is the
/// absorbed photon, the rest are emitted.
pub fn propagator_momentum(perm: &Permutation, n: usize, p_i: FourVector, photons: &[FourVector]) -> FourVector {
    perm.0[..n].iter().fold(p_i, |q, &c| if c == 0 { q + photons[c] } else { q - photons[c] })
}

/// One external photon with the two polarization vectors of its basis.
#[derive(Clone, Copy, Debug)]
pub struct PhotonInput {
    pub k: FourVector,
    pub pols: [ComplexFourVector; 2],
}

impl PhotonInput {
    pub fn new(k: FourVector, basis: [FourVector; 2]) -> Self {
        PhotonInput { k, pols: [basis[0].into(), basis[1].into()] }
    }

    /// A photon carrying a single polarization (both basis slots identical).
    pub fn single(k: FourVector, pol: ComplexFourVector) -> Self {
        PhotonInput { k, pols: [pol, pol] }
    }
}

/// Reduced amplitude N for every spin and polarization channel.
///
/// Channel labels are 0-based here: `labels[c] ∈ {0, 1}` selects `pols[c]` of
/// photon `c`; photon 0 is the absorbed photon.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeTensor {
    photons: usize,
    values: Vec<Complex64>,
}

impl AmplitudeTensor {
    /// Number of photons, absorbed one included.
    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn channels(&self) -> usize {
        1 << self.photons
    }

    /// Bit-packed channel index: photon 0 is the most significant bit.
    pub fn channel_index(labels: &[u8]) -> usize {
        labels.iter().fold(0, |acc, &l| (acc << 1) | (l as usize & 1))
    }

    pub fn channel_labels(&self, channel: usize) -> Vec<u8> {
        (0..self.photons).map(|c| ((channel >> (self.photons - 1 - c)) & 1) as u8).collect()
    }

    /// Amplitude for spins `r_i, r_f ∈ {0, 1}` and a packed channel index.
    #[inline]
    pub fn get(&self, r_i: usize, r_f: usize, channel: usize) -> Complex64 {
        self.values[((r_i << 1) | r_f) * self.channels() + channel]
    }

    /// Σ over both electron spins of |N|² for one channel.
    pub fn spin_summed(&self, channel: usize) -> f64 {
        (0..4).map(|s| self.values[s * self.channels() + channel].norm_sqr()).sum()
    }

    /// Σ over spins and every polarization channel of |N|².
    pub fn total_summed(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Spin-summed |N|² for each channel.
    pub fn spin_summed_all(&self) -> Vec<f64> {
        (0..self.channels()).map(|c| self.spin_summed(c)).collect()
    }

    /// Contracts the absorbed photon with polarization coefficients `coef`
    /// (on its basis) and returns the amplitudes of the emitted photons,
    /// indexed as `[(r_i, r_f)][emitted channel]`.
    pub fn contract_incoming(&self, coef: [Complex64; 2]) -> Vec<Vec<Complex64>> {
        let half = self.channels() / 2;
        (0..4)
            .map(|s| {
                (0..half)
                    .map(|c| {
                        coef[0] * self.values[s * self.channels() + c]
                            + coef[1] * self.values[s * self.channels() + half + c]
                    })
                    .collect()
            })
            .collect()
    }
}

/// Reduced amplitude for one spin/polarization assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeValue {
    pub value: Complex64,
    /// Incoming and outgoing electron spin labels (1 or 2).
    pub r_i: u8,
    pub r_f: u8,
}

struct Engine<'a> {
    n: usize,
    m: f64,
    p_i: FourVector,
    flow: Vec<FourVector>,
    slashes: Vec<[DiracMatrix; 2]>,
    // rows[rf][c][λ] = ū_rf(p_f) ε̂_c^λ
    rows: [Vec<[AdjointSpinor; 2]>; 2],
    props: Vec<Option<DiracMatrix>>,
    out: &'a mut [Complex64],
}

impl Engine<'_> {
    fn propagator(&mut self, mask: usize) -> Result<DiracMatrix> {
        if let Some(p) = self.props[mask] {
            return Ok(p);
        }
        let q = (0..self.n).filter(|c| mask & (1 << c) != 0).fold(self.p_i, |q, c| q + self.flow[c]);
        let m = self.m;
        let denom = q.norm_sqr() - m * m;
        if denom.abs() < 1e-12 * m * m {
            return Err(Error::OnResonance(denom));
        }
        let s = (feynman_slash(q) + DiracMatrix::identity().scale(m.into())).scale((m / denom).into());
        self.props[mask] = Some(s);
        Ok(s)
    }

    fn descend(&mut self, used: usize, states: &[(usize, Bispinor)]) -> Result<()> {
        let depth = used.count_ones() as usize;
        let n = self.n;
        let channels = 1 << n;
        for c in 0..n {
            if used & (1 << c) != 0 {
                continue;
            }
            let bit = 1 << (n - 1 - c);
            if depth + 1 == n {
                for &(idx, ref v) in states {
                    let r_i = idx >> n;
                    let chan = idx & (channels - 1);
                    for lam in 0..2 {
                        let ch = if lam == 1 { chan | bit } else { chan };
                        for r_f in 0..2 {
                            self.out[((r_i << 1) | r_f) * channels + ch] += self.rows[r_f][c][lam].dot(v);
                        }
                    }
                }
            } else {
                let mask = used | (1 << c);
                let prop = self.propagator(mask)?;
                let mut next = Vec::with_capacity(states.len() * 2);
                for &(idx, ref v) in states {
                    for lam in 0..2 {
                        let w = prop.apply(&self.slashes[c][lam].apply(v));
                        next.push((if lam == 1 { idx | bit } else { idx }, w));
                    }
                }
                self.descend(mask, &next)?;
            }
        }
        Ok(())
    }
}

/// Evaluates N for every electron-spin and polarization channel.
///
/// `photons[0]` is absorbed, `photons[1..]` are emitted (1 to 3 of them);
/// `p_i` and `p_f` must be on the electron mass shell.
pub fn amplitude_tensor(p_i: FourVector, p_f: FourVector, photons: &[PhotonInput]) -> Result<AmplitudeTensor> {
    let n = photons.len();
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidInput(format!("expected 2 to 4 photons, got {n}")));
    }
    let u = [bispinor(p_i, 1)?, bispinor(p_i, 2)?];
    let ub = [dirac_adjoint(&bispinor(p_f, 1)?), dirac_adjoint(&bispinor(p_f, 2)?)];
    let slashes: Vec<[DiracMatrix; 2]> = photons
        .iter()
        .map(|ph| [feynman_slash_complex(ph.pols[0]), feynman_slash_complex(ph.pols[1])])
        .collect();
    let rows = [0, 1].map(|rf| {
        slashes.iter().map(|s| [ub[rf].times(&s[0]), ub[rf].times(&s[1])]).collect::<Vec<_>>()
    });
    let flow = photons.iter().enumerate().map(|(c, ph)| if c == 0 { ph.k } else { -ph.k }).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); 4 << n];
    let mut engine = Engine {
        n,
        m: ELECTRON_MASS,
        p_i,
        flow,
        slashes,
        rows,
        props: vec![None; 1 << n],
        out: &mut values,
    };
    let start = [(0usize, u[0]), (1usize << n, u[1])];
    engine.descend(0, &start)?;
    Ok(AmplitudeTensor { photons: n, values })
}

fn single_channel(
    p_i: FourVector,
    r_i: u8,
    p_f: FourVector,
    r_f: u8,
    photons: &[(FourVector, ComplexFourVector)],
) -> Result<AmplitudeValue> {
    if !(1..=2).contains(&r_i) || !(1..=2).contains(&r_f) {
        return Err(Error::InvalidInput("spin labels must be 1 or 2".into()));
    }
    let inputs: Vec<PhotonInput> = photons.iter().map(|&(k, e)| PhotonInput::single(k, e)).collect();
    let t = amplitude_tensor(p_i, p_f, &inputs)?;
    Ok(AmplitudeValue { value: t.get(r_i as usize - 1, r_f as usize - 1, 0), r_i, r_f })
}

/// N_TC for one spin and polarization assignment; `photons[0]` is absorbed.
pub fn n_tc(
    p_i: FourVector,
    r_i: u8,
    p_f: FourVector,
    r_f: u8,
    photons: &[(FourVector, ComplexFourVector); 4],
) -> Result<AmplitudeValue> {
    single_channel(p_i, r_i, p_f, r_f, photons)
}

/// N_DC for one spin and polarization assignment.
pub fn n_dc(
    p_i: FourVector,
    r_i: u8,
    p_f: FourVector,
    r_f: u8,
    photons: &[(FourVector, ComplexFourVector); 3],
) -> Result<AmplitudeValue> {
    single_channel(p_i, r_i, p_f, r_f, photons)
}

/// N_SC (two vertices) for one spin and polarization assignment.
pub fn n_sc(
    p_i: FourVector,
    r_i: u8,
    p_f: FourVector,
    r_f: u8,
    photons: &[(FourVector, ComplexFourVector); 2],
) -> Result<AmplitudeValue> {
    single_channel(p_i, r_i, p_f, r_f, photons)
}
