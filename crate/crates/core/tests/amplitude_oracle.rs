//! Brute-force oracle for the reduced amplitudes.
//!
//! Every ordering is multiplied out as a full 4×4 matrix chain in the chiral
//! representation, and the electron spins are summed with the trace
//! Σ|N|² = tr[Λ(p_f) Γ Λ(p_i) Γ̄], Λ(p) = (p̂ + m)/2m, Γ̄ = γ⁰Γ†γ⁰.
//! No spinors, no shared prefixes, no code from the crate's Dirac module.

use compton_core::amplitudes::{amplitude_tensor, PhotonInput};
use compton_core::kinematics::{Direction, PhotonLeg, ScatterConfig};
use compton_core::xsec::{kinematic_point, PointOutcome};
use compton_core::{FourVector, ELECTRON_MASS};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;
type M4 = [[C; 4]; 4];

const Z: C = C::new(0.0, 0.0);

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn mul(a: &M4, b: &M4) -> M4 {
    let mut out = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn add(a: &M4, b: &M4) -> M4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

fn scale(a: &M4, s: C) -> M4 {
    a.map(|row| row.map(|v| v * s))
}

fn ident() -> M4 {
    let mut m = [[Z; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0);
    }
    m
}

/// Chiral-representation γ^μ: γ⁰ = [[0,1],[1,0]], γ^i = [[0,σ^i],[−σ^i,0]].
fn gammas() -> [M4; 4] {
    let i = C::new(0.0, 1.0);
    let sigma = [
        [[Z, c(1.0)], [c(1.0), Z]],
        [[Z, -i], [i, Z]],
        [[c(1.0), Z], [Z, c(-1.0)]],
    ];
    let mut g = [[[Z; 4]; 4]; 4];
    for a in 0..2 {
        g[0][a][a + 2] = c(1.0);
        g[0][a + 2][a] = c(1.0);
    }
    for (k, s) in sigma.iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                g[k + 1][a][b + 2] = s[a][b];
                g[k + 1][a + 2][b] = -s[a][b];
            }
        }
    }
    g
}

/// â = a⁰γ⁰ − a¹γ¹ − a²γ² − a³γ³ for a complex four-vector.
fn slash(a: [C; 4], g: &[M4; 4]) -> M4 {
    let mut m = scale(&g[0], a[0]);
    for k in 1..4 {
        m = add(&m, &scale(&g[k], -a[k]));
    }
    m
}

fn real4(v: FourVector) -> [C; 4] {
    [c(v.t), c(v.x), c(v.y), c(v.z)]
}

fn minkowski(a: [f64; 4], b: [f64; 4]) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Spin-summed |N|² for one polarization assignment. `pols[0]` and `ks[0]`
/// belong to the absorbed photon.
fn oracle_summed(p_i: FourVector, p_f: FourVector, ks: &[FourVector], pols: &[[C; 4]]) -> f64 {
    let g = gammas();
    let m = ELECTRON_MASS;
    let n = ks.len() - 1;
    let mut gamma_sum = [[Z; 4]; 4];
    for perm in permutations(n + 1) {
        // right to left: the first vertex in `perm` touches u(p_i)
        let mut chain = ident();
        let mut q = [p_i.t, p_i.x, p_i.y, p_i.z];
        for (step, &v) in perm.iter().enumerate() {
            chain = mul(&slash(pols[v], &g), &chain);
            let sign = if v == 0 { 1.0 } else { -1.0 };
            let k = ks[v];
            q = [q[0] + sign * k.t, q[1] + sign * k.x, q[2] + sign * k.y, q[3] + sign * k.z];
            if step + 1 < perm.len() {
                let denom = minkowski(q, q) - m * m;
                let qs = slash([c(q[0]), c(q[1]), c(q[2]), c(q[3])], &g);
                let prop = scale(&add(&qs, &scale(&ident(), c(m))), c(1.0 / denom));
                chain = mul(&prop, &chain);
            }
        }
        gamma_sum = add(&gamma_sum, &chain);
    }
    let gamma_sum = scale(&gamma_sum, c(m.powi(n as i32)));
    let mut bar = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            bar[i][j] = gamma_sum[j][i].conj();
        }
    }
    let bar = mul(&mul(&g[0], &bar), &g[0]);
    let proj = |p: FourVector| scale(&add(&slash(real4(p), &g), &scale(&ident(), c(m))), c(1.0 / (2.0 * m)));
    let t = mul(&mul(&mul(&proj(p_f), &gamma_sum), &proj(p_i)), &bar);
    let tr: C = (0..4).map(|i| t[i][i]).sum();
    assert!(tr.im.abs() <= 1e-9 * tr.re.abs().max(1e-300), "trace not real: {tr}");
    tr.re
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Option<(ScatterConfig, Vec<PhotonLeg>, Direction)> {
    let omega0 = 10f64.powf(rng.gen_range(-1.5..1.0));
    // amplitudes are always evaluated in the electron rest frame by the
    // cross-section layer; lab-frame chains with a moving electron lose
    // digits to cancellations between orderings
    let config = ScatterConfig::at_rest(omega0, 1e-3 * omega0);
    let mut legs = Vec::new();
    for _ in 0..n - 1 {
        let omega = omega0 * rng.gen_range(0.02..0.4);
        legs.push(PhotonLeg::new(omega, rng.gen_range(0.1..3.0), rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    let last = Direction::new(rng.gen_range(0.1..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
    match kinematic_point(&config, &legs, last).ok()? {
        PointOutcome::Allowed(_) => Some((config, legs, last)),
        PointOutcome::Forbidden => None,
    }
}

fn check_process(n: usize, points: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < points {
        let Some((config, legs, last)) = random_point(&mut rng, n) else { continue };
        let PointOutcome::Allowed(point) = kinematic_point(&config, &legs, last).unwrap() else { unreachable!() };
        let dirs: Vec<Direction> = legs.iter().map(|l| l.direction).chain([last]).collect();
        let mut ks = vec![config.k0()];
        ks.extend(point.emitted.iter().copied());
        let mut bases = vec![config.incoming_basis()];
        bases.extend(dirs.iter().map(|d| d.polarization_basis()));
        // suppressed channels can sit many decades below the dominant ones;
        // errors are measured against the point's polarization-summed scale
        let scale = point.tensor.total_summed();
        for ch in 0..point.tensor.channels() {
            let labels = point.tensor.channel_labels(ch);
            let pols: Vec<[C; 4]> = labels.iter().zip(&bases).map(|(&l, b)| real4(b[l as usize])).collect();
            let want = oracle_summed(config.p_i(), point.p_f, &ks, &pols);
            let got = point.tensor.spin_summed(ch);
            let rel = (got - want).abs() / scale;
            assert!(rel < 1e-10, "n={n} channel {labels:?}: engine {got:e} oracle {want:e} rel {rel:e}");
        }
        done += 1;
    }
}

#[test]
fn summed_triple_compton_at_180_kev_matches_oracle() {
    let config = ScatterConfig::at_rest(0.18, 0.18 / 50.0);
    let legs = [PhotonLeg::new(0.04, 0.5, 2.0 * std::f64::consts::PI / 3.0), PhotonLeg::new(0.03, 0.5, 4.0 * std::f64::consts::PI / 3.0)];
    let last = Direction::new(0.5, 2.0 * std::f64::consts::PI);
    let PointOutcome::Allowed(point) = kinematic_point(&config, &legs, last).unwrap() else { panic!("forbidden") };
    let dirs: Vec<Direction> = legs.iter().map(|l| l.direction).chain([last]).collect();
    let mut ks = vec![config.k0()];
    ks.extend(point.emitted.iter().copied());
    let mut bases = vec![config.incoming_basis()];
    bases.extend(dirs.iter().map(|d| d.polarization_basis()));
    let mut want = 0.0;
    for ch in 0..16 {
        let labels = point.tensor.channel_labels(ch);
        let pols: Vec<[C; 4]> = labels.iter().zip(&bases).map(|(&l, b)| real4(b[l as usize])).collect();
        want += oracle_summed(config.p_i(), point.p_f, &ks, &pols);
    }
    let got = point.tensor.total_summed();
    assert!((got - want).abs() < 1e-10 * want, "{got:e} vs {want:e}");
}

#[test]
fn single_compton_matches_trace_oracle() {
    check_process(1, 20, 11);
}

#[test]
fn double_compton_matches_trace_oracle() {
    check_process(2, 20, 12);
}

#[test]
fn triple_compton_matches_trace_oracle() {
    check_process(3, 20, 13);
}

#[test]
fn complex_polarizations_match_trace_oracle() {
    // circular polarization on every leg, through the single-polarization path
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (config, legs, last) = loop {
        if let Some(p) = random_point(&mut rng, 3) {
            break p;
        }
    };
    let PointOutcome::Allowed(point) = kinematic_point(&config, &legs, last).unwrap() else { unreachable!() };
    let dirs: Vec<Direction> = legs.iter().map(|l| l.direction).chain([last]).collect();
    let mut bases = vec![config.incoming_basis()];
    bases.extend(dirs.iter().map(|d| d.polarization_basis()));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let circ: Vec<[C; 4]> = bases
        .iter()
        .map(|b| {
            let (a, bb) = (real4(b[0]), real4(b[1]));
            std::array::from_fn(|i| (a[i] + C::new(0.0, 1.0) * bb[i]) * h)
        })
        .collect();
    let mut ks = vec![config.k0()];
    ks.extend(point.emitted.iter().copied());
    let inputs: Vec<PhotonInput> = ks
        .iter()
        .zip(&circ)
        .map(|(&k, e)| {
            let v = compton_core::dirac::ComplexFourVector { t: e[0], x: e[1], y: e[2], z: e[3] };
            PhotonInput::single(k, v)
        })
        .collect();
    let t = amplitude_tensor(config.p_i(), point.p_f, &inputs).unwrap();
    let got = t.spin_summed(0);
    let want = oracle_summed(config.p_i(), point.p_f, &ks, &circ);
    assert!((got - want).abs() < 1e-10 * want, "{got:e} vs {want:e}");
}

