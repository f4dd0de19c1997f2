//! Acceptance suite: one line per criterion, PASS or FAIL with the measured
//! numbers. Runs without the libtest harness so the criteria execute in
//! order and print as they finish.

use std::f64::consts::PI;
use std::time::Instant;

use compton_core::amplitudes::{amplitude_tensor, PhotonInput};
use compton_core::entanglement::{hermitian_eigensystem, tau, SdpOptions, WitnessDecomposition};
use compton_core::kinematics::{
    boost_config_to_rest_frame, final_electron, jacobian_general, mercedes, omega_j_max, omega_max,
    solve_last_omega, Direction, PhotonLeg, Polarization, ScatterConfig,
};
use compton_core::quadrature::{integrate_energies, total_cross_section, McOptions, RombergOptions};
use compton_core::xsec::{
    dsigma, dsigma_sc, dsigma_sc_analytic, kinematic_point, select_summed, sigma_sc_total, Channel, PointOutcome,
    Process,
};
use compton_core::{
    DensityMatrix, FourVector, FrameStrategy, IntegralEstimate, SpinTreatment, ALPHA, BARN_PER_INV_MEV2,
    ELECTRON_MASS,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: f64 = ELECTRON_MASS;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every certificate computed in this suite is re-verified; failures are
/// collected here and reported under criterion 8.
struct CertificateLog {
    checked: usize,
    failures: Vec<String>,
}

impl CertificateLog {
    fn record(&mut self, label: &str, d: &WitnessDecomposition) {
        self.checked += 1;
        match d.verify(1e-8) {
            Ok(c) if c.valid => {}
            Ok(c) => self.failures.push(format!(
                "{label}: spectra [{:.2e}, {:.2e}] reconstruction {:.2e}",
                c.min_eigenvalue, c.max_eigenvalue, c.reconstruction
            )),
            Err(e) => self.failures.push(format!("{label}: {e}")),
        }
    }
}

// 1 ─────────────────────────────────────────────────────────────────────────

fn klein_nishina() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let omega0 = 10f64.powf(r.gen_range(-3.0..1.5));
        let dir = Direction::new(r.gen_range(0.0..PI), r.gen_range(0.0..2.0 * PI));
        let l0 = r.gen_range(1..=2u8);
        let cfg = ScatterConfig::at_rest(omega0, 1e-9 * omega0).with_incoming(Polarization::Basis(l0));
        let numeric = dsigma_sc(&cfg, dir, &Channel::SummedEmitted, SpinTreatment::Averaged).unwrap().value;
        let analytic: f64 = (1..=2u8)
            .map(|l1| dsigma_sc_analytic(&cfg, dir, Polarization::Basis(l0), Polarization::Basis(l1)).unwrap().value)
            .sum();
        worst = worst.max(rel(numeric, analytic));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-9 && secs < 1.0, format!("max rel dev {worst:.2e} (< 1e-9), {secs:.3} s (< 1 s)"))
}

// 2 ─────────────────────────────────────────────────────────────────────────

fn gauge_invariance() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let mut points = 0;
    while points < 50 {
        let omega0 = 10f64.powf(r.gen_range(-1.5..1.0));
        let cfg = ScatterConfig::at_rest(omega0, 1e-3 * omega0);
        let legs: Vec<PhotonLeg> = (0..2)
            .map(|_| PhotonLeg::new(omega0 * r.gen_range(0.02..0.3), r.gen_range(0.1..3.0), r.gen_range(0.0..2.0 * PI)))
            .collect();
        let last = Direction::new(r.gen_range(0.1..3.0), r.gen_range(0.0..2.0 * PI));
        let Ok(PointOutcome::Allowed(p)) = kinematic_point(&cfg, &legs, last) else { continue };
        points += 1;
        let dirs: Vec<Direction> = legs.iter().map(|l| l.direction).chain([last]).collect();
        let mut base = vec![PhotonInput::new(cfg.k0(), cfg.incoming_basis())];
        base.extend(p.emitted.iter().zip(&dirs).map(|(k, d)| PhotonInput::new(*k, d.polarization_basis())));
        let reference: Vec<f64> = p.tensor.spin_summed_all();
        for leg in 1..=3 {
            let k = base[leg].k;
            for _ in 0..20 {
                let a = Complex64::from_polar(r.gen_range(0.0..10.0 / k.t), r.gen_range(0.0..2.0 * PI));
                let mut shifted = base.clone();
                for pol in shifted[leg].pols.iter_mut() {
                    *pol = pol.shifted(a, k);
                }
                let t = amplitude_tensor(cfg.p_i(), p.p_f, &shifted).unwrap();
                for (ch, want) in reference.iter().enumerate() {
                    worst = worst.max(rel(t.spin_summed(ch), *want));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && secs < 10.0,
        format!("50 points × 3 legs × 20 shifts, max rel change {worst:.2e} (< 1e-9), {secs:.2} s (< 10 s)"),
    )
}

// 3 ─────────────────────────────────────────────────────────────────────────

fn thomson_limit() -> Outcome {
    let omega0 = 1e-6;
    let analytic = sigma_sc_total(omega0);
    // angular integral of the numerical single-Compton pipeline
    let cfg = ScatterConfig::at_rest(omega0, 1e-9 * omega0);
    let opts = RombergOptions { rel_tol: 1e-10, max_level: 12, min_level: 3 };
    let inner = |phi: f64| {
        compton_core::quadrature::romberg(
            |c| {
                let d = Direction::from_cos(c, phi);
                dsigma_sc(&cfg, d, &Channel::SummedEmitted, SpinTreatment::Averaged).unwrap().value
            },
            -1.0,
            1.0,
            opts.rel_tol,
            opts.max_level,
        )
        .value[0]
    };
    let numeric = compton_core::quadrature::romberg(inner, 0.0, 2.0 * PI, opts.rel_tol, opts.max_level).value[0];
    let da = rel(analytic, 0.6652);
    let dn = rel(numeric, 0.6652);
    outcome(da < 5e-3 && dn < 5e-3, format!("analytic {analytic:.5} b, numerical {numeric:.5} b vs 0.6652 b ± 0.5%"))
}

// 4 ─────────────────────────────────────────────────────────────────────────

fn mc_options(samples: usize, seed: u64) -> McOptions {
    let mut o = McOptions::new(samples, seed);
    o.romberg = RombergOptions { rel_tol: 1e-3, max_level: 12, min_level: 2 };
    o
}

fn mc_totals() -> Outcome {
    let start = Instant::now();
    let samples = 20_000;
    let mut slowest = 0.0f64;
    let mut tc = |cfg: ScatterConfig, seed: u64| -> IntegralEstimate {
        let t = Instant::now();
        let e = total_cross_section(Process::Triple, &cfg, &mc_options(samples, seed)).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        e
    };
    let low = tc(ScatterConfig::at_rest(0.18, 0.18 / 50.0), 41);
    let high = tc(ScatterConfig::new(2.5e-6, 50_000.0, 500.0), 42);
    let rest = tc(ScatterConfig::at_rest(0.5, 0.5 / 50.0), 43);
    let secs = start.elapsed().as_secs_f64();
    let a = rel(low.value, 6e-8) <= 0.25;
    let b = rel(high.value, 6e-7) <= 0.25;
    let combined = (high.error.powi(2) + rest.error.powi(2)).sqrt();
    let c = (high.value - rest.value).abs() <= combined;
    let flagged = low.flagged() || high.flagged() || rest.flagged();
    outcome(
        a && b && c && slowest <= 1800.0,
        format!(
            "0.18 MeV: {:.3e} ± {:.1e} b ({}); 50 GeV: {:.3e} ± {:.1e} b ({}); 0.5 MeV at rest: {:.3e} ± {:.1e} b, \
             |Δ| = {:.1e} vs combined error {:.1e} ({}); {} samples each, slowest total {:.0} s (≤ 1800 s), all {:.0} s{}",
            low.value,
            low.error,
            if a { "within 25% of 6e-8" } else { "outside 25% of 6e-8" },
            high.value,
            high.error,
            if b { "within 25% of 6e-7" } else { "outside 25% of 6e-7" },
            rest.value,
            rest.error,
            (high.value - rest.value).abs(),
            combined,
            if c { "equal" } else { "NOT equal" },
            samples,
            slowest,
            secs,
            if flagged { ", some energy integrals unconverged" } else { "" },
        ),
    )
}

// 5 ─────────────────────────────────────────────────────────────────────────

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Peak of a parabola through the grid maximum and its neighbours in log-log.
fn log_peak(points: &[(f64, f64)]) -> (f64, f64) {
    let i = (0..points.len()).max_by(|&a, &b| points[a].1.total_cmp(&points[b].1)).unwrap();
    if i == 0 || i + 1 == points.len() {
        return points[i];
    }
    let (x0, x1, x2) = (points[i - 1].0.ln(), points[i].0.ln(), points[i + 1].0.ln());
    let (y0, y1, y2) = (points[i - 1].1.ln(), points[i].1.ln(), points[i + 1].1.ln());
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    let b = d01 - a * (x0 + x1);
    let c = y0 - a * x0 * x0 - b * x0;
    let xp = -b / (2.0 * a);
    (xp.exp(), (a * xp * xp + b * xp + c).exp())
}

fn totals_shape() -> Outcome {
    let start = Instant::now();
    let grid = [0.01, 0.03, 0.09, 0.5, 1.5, 3.2, 6.0, 10.0];
    let samples = 5_000;
    let mut dc = Vec::new();
    let mut tc = Vec::new();
    for (i, &w) in grid.iter().enumerate() {
        let cfg = ScatterConfig::at_rest(w, w / 50.0);
        let d = total_cross_section(Process::Double, &cfg, &mc_options(samples, 500 + i as u64)).unwrap();
        let t = total_cross_section(Process::Triple, &cfg, &mc_options(samples, 600 + i as u64)).unwrap();
        dc.push((w, d.value));
        tc.push((w, t.value));
    }
    let secs = start.elapsed().as_secs_f64();
    let (dc_pos, dc_peak) = log_peak(&dc);
    let (tc_pos, tc_peak) = log_peak(&tc);
    let low = |v: &[(f64, f64)]| v.iter().copied().filter(|p| p.0 < 0.1).collect::<Vec<_>>();
    let s_dc = slope(&low(&dc));
    let s_tc = slope(&low(&tc));
    let k = |w: f64| ALPHA.powi(3) / (M * M) * (w / M).powi(2) * BARN_PER_INV_MEV2;
    let c_dc = dc[0].1 / k(dc[0].0);
    let c_tc = tc[0].1 / (k(tc[0].0) * ALPHA * (tc[0].0 / M).powi(2));
    let in_pos = |p: f64| (p - 3.2).abs() <= 0.5 * 3.2;
    let factor = |v: f64, want: f64| v / want <= 1.5 && want / v <= 1.5;
    let checks = [
        in_pos(dc_pos),
        in_pos(tc_pos),
        factor(dc_peak, 1e-3),
        factor(tc_peak, 7e-6),
        (s_dc - 2.0).abs() <= 0.15,
        (s_tc - 3.6).abs() <= 0.3,
        rel(c_dc, 9.1) <= 0.15,
        rel(c_tc, 4.5) <= 0.25,
        secs <= 7200.0,
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "DC peak {dc_peak:.2e} b at {dc_pos:.2} MeV, TC peak {tc_peak:.2e} b at {tc_pos:.2} MeV; \
             slopes DC {s_dc:.3}, TC {s_tc:.3}; C_DC {c_dc:.2}, C_TC {c_tc:.2}; {:.0} s; checks {:?}",
            secs, checks
        ),
    )
}

// 6 ─────────────────────────────────────────────────────────────────────────

fn degeneracies() -> Outcome {
    let start = Instant::now();
    let cfg = ScatterConfig::at_rest(0.18, 0.18 / 50.0);
    let opts = RombergOptions { rel_tol: 1e-12, max_level: 16, min_level: 4 };
    let dc_pairs = [("121", "112"), ("221", "212")];
    let tc_pairs = [
        ("1111", "2111"),
        ("1212", "1122"),
        ("1211", "1121"),
        ("1222", "2222"),
        ("2211", "2121"),
        ("2212", "2122"),
    ];
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let mut unconverged = 0;
    for i in 0..10 {
        let theta = 0.15 + (PI - 0.3) * i as f64 / 9.0;
        for (process, pairs) in [(Process::Double, &dc_pairs[..]), (Process::Triple, &tc_pairs[..])] {
            let dirs = mercedes(theta, process.emitted());
            let e = integrate_energies(&cfg, &dirs, FrameStrategy::Auto, &opts).unwrap();
            unconverged += usize::from(!e.converged);
            let v = |l: &str| {
                let ch = Channel::parse(l, process.emitted()).unwrap();
                select_summed(&e.table, process, &ch, SpinTreatment::Averaged).unwrap()
            };
            for (a, b) in pairs {
                let (va, vb) = (v(a), v(b));
                if va == 0.0 && vb == 0.0 {
                    continue;
                }
                let d = rel(va, vb);
                if d > worst {
                    worst = d;
                    where_ = format!("{a}={b} at θ={theta:.3}");
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9,
        format!("max rel diff {worst:.2e} ({where_}), {unconverged} unconverged integrals, {secs:.0} s"),
    )
}

// 7 ─────────────────────────────────────────────────────────────────────────

fn closure() -> Outcome {
    let mut r = rng(7);
    let (mut shell, mut balance, mut round) = (0.0f64, 0.0f64, 0.0f64);
    let mut accepted = 0;
    let mut round_trips = 0;
    while accepted < 10_000 {
        let omega0 = 10f64.powf(r.gen_range(-2.0..1.0));
        let e_i = if r.gen_bool(0.5) { M } else { M * r.gen_range(1.0..10.0) };
        let eps = omega0 * r.gen_range(1e-3..0.05);
        let cfg = ScatterConfig::new(omega0, e_i, eps);
        let d: Vec<Direction> =
            (0..3).map(|_| Direction::from_cos(r.gen_range(-1.0..1.0), r.gen_range(0.0..2.0 * PI))).collect();
        let scale = (e_i + omega0).max(omega0 * 2.0);
        let k1 = d[0].null_vector() * (omega0 * r.gen_range(0.01..0.5));
        let k2 = d[1].null_vector() * (omega0 * r.gen_range(0.01..0.5));
        let Ok(w3) = solve_last_omega(&cfg, &[k1, k2], d[2]) else { continue };
        if !(w3 > eps) {
            continue;
        }
        let k3 = d[2].null_vector() * w3;
        let p_f = final_electron(&cfg, &[k1, k2, k3]);
        if !(p_f.t > 0.0) {
            continue;
        }
        accepted += 1;
        shell = shell.max((p_f.norm_sqr() - M * M).abs() / (M * M));
        let resid: FourVector = cfg.p_i() + cfg.k0() - k1 - k2 - k3 - p_f;
        balance = balance.max(resid.to_array().iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale);
        if let Ok(top) = omega_j_max(&cfg, k2, d[0], d[2], eps) {
            if top > eps {
                let back = solve_last_omega(&cfg, &[d[0].null_vector() * top, k2], d[2]).unwrap();
                round = round.max(rel(back, eps));
                round_trips += 1;
            }
        }
    }
    outcome(
        shell <= 1e-10 && balance <= 1e-10 && round <= 1e-10,
        format!(
            "10⁴ points: |p_f²−m²|/m² ≤ {shell:.1e}, balance ≤ {balance:.1e}·(E_i+ω₀), \
             ω_max round trip ≤ {round:.1e} over {round_trips} points"
        ),
    )
}

// 8 ─────────────────────────────────────────────────────────────────────────

fn spectrum_in(values: &[f64], allowed: &[f64], tol: f64) -> bool {
    values.iter().all(|v| allowed.iter().any(|a| (v - a).abs() <= tol))
}

fn anchors(log: &mut CertificateLog) -> Outcome {
    let opts = SdpOptions::default();
    let ghz = tau(&DensityMatrix::ghz(), &opts).unwrap();
    log.record("GHZ", &ghz.decomposition);
    let mut spectra = true;
    for k in 0..6 {
        let p = hermitian_eigensystem(&ghz.decomposition.p[k]).unwrap().values;
        let q = hermitian_eigensystem(&ghz.decomposition.q[k]).unwrap().values;
        spectra &= spectrum_in(&p, &[0.0, 0.5], 1e-6) && spectrum_in(&q, &[0.0, 0.5, 1.0], 1e-6);
    }
    let mut psi = [Complex64::new(0.0, 0.0); 8];
    psi[0] = Complex64::new(1.0, 0.0);
    let product = DensityMatrix::pure(psi).unwrap();
    let prod = tau(&product, &opts).unwrap();
    log.record("|111⟩", &prod.decomposition);
    let mixed = tau(&DensityMatrix::maximally_mixed(), &opts).unwrap();
    log.record("1/8", &mixed.decomposition);
    let q_mixed = DensityMatrix::maximally_mixed().entropy().unwrap();
    let q_pure = product.entropy().unwrap();
    let ok = (ghz.tau - 0.5).abs() <= 1e-6 && spectra && prod.tau <= 1e-6 && q_mixed == 3.0 && q_pure < 1e-10;
    outcome(
        ok,
        format!(
            "τ(GHZ) = {:.9}, certificate spectra {}; τ(|111⟩) = {:.1e}; τ(1/8) = {:.1e}; Q(1/8) = {q_mixed}; Q(pure) = {q_pure:.1e}",
            ghz.tau,
            if spectra { "{0,½}/{0,½,1}" } else { "off" },
            prod.tau,
            mixed.tau
        ),
    )
}

// 9 ─────────────────────────────────────────────────────────────────────────

struct Grid {
    tau: Vec<Vec<Option<f64>>>,
    mean_q: f64,
}

fn entanglement_grid(theta: f64, log: &mut CertificateLog) -> Grid {
    let cfg = ScatterConfig::at_rest(0.18, 0.18 / 50.0);
    let d = mercedes(theta, 3);
    let eps = cfg.cutoff;
    let top = omega_max(&cfg, &[d[1].null_vector() * eps], d[0], d[2], eps).unwrap();
    let n = 15;
    let opts = SdpOptions::default();
    let mut qs = Vec::new();
    let mut grid = vec![vec![None; n]; n];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let w1 = eps + (top - eps) * (i as f64 + 0.5) / n as f64;
            let w2 = eps + (top - eps) * (j as f64 + 0.5) / n as f64;
            let legs = [PhotonLeg::new(w1, theta, d[0].phi), PhotonLeg::new(w2, theta, d[1].phi)];
            match solve_last_omega(&cfg, &[legs[0].k(), legs[1].k()], d[2]) {
                Ok(w3) if w3 > eps => {}
                _ => continue,
            }
            let dm = DensityMatrix::at_point(&cfg, legs, d[2], SpinTreatment::Summed, FrameStrategy::Auto).unwrap();
            let t = tau(&dm, &opts).unwrap();
            log.record(&format!("θ={theta} cell ({i},{j})"), &t.decomposition);
            qs.push(dm.entropy().unwrap());
            *cell = Some(t.tau);
        }
    }
    Grid { tau: grid, mean_q: qs.iter().sum::<f64>() / qs.len() as f64 }
}

/// Cuts from the τ maximum toward the three soft boundaries; each must end
/// at its smallest value.
fn boundary_cuts(g: &Grid) -> (bool, String) {
    let n = g.tau.len();
    let mut best = (0, 0, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            if let Some(t) = g.tau[i][j] {
                if t > best.2 {
                    best = (i, j, t);
                }
            }
        }
    }
    let (bi, bj, _) = best;
    let toward_w1: Vec<f64> = (0..=bi).rev().filter_map(|i| g.tau[i][bj]).collect();
    let toward_w2: Vec<f64> = (0..=bj).rev().filter_map(|j| g.tau[bi][j]).collect();
    let toward_w3: Vec<f64> = (bj..n).filter_map(|j| g.tau[bi][j]).collect();
    let ends_low = |cut: &[f64]| {
        let last = *cut.last().unwrap();
        cut.iter().all(|&v| v >= last)
    };
    let ok = [&toward_w1, &toward_w2, &toward_w3].iter().all(|c| ends_low(c));
    let f = |c: &[f64]| format!("{:.3}→{:.3}", c[0], c[c.len() - 1]);
    (ok, format!("cuts ω₁→ε {}, ω₂→ε {}, ω₃→ε {}", f(&toward_w1), f(&toward_w2), f(&toward_w3)))
}

fn entanglement_physics(log: &mut CertificateLog) -> Outcome {
    let start = Instant::now();
    let fwd = entanglement_grid(0.5, log);
    let bwd = entanglement_grid(2.0, log);
    let secs = start.elapsed().as_secs_f64();
    let tau_max = fwd.tau.iter().flatten().flatten().fold(0.0f64, |a, &b| a.max(b));
    let (cuts_ok, cuts) = boundary_cuts(&fwd);
    let ok = tau_max >= 0.4 && cuts_ok && fwd.mean_q < bwd.mean_q && secs <= 1200.0;
    outcome(
        ok,
        format!(
            "max τ {tau_max:.3} (≥ 0.4); {cuts}; mean Q forward {:.3} < backward {:.3}; {secs:.0} s",
            fwd.mean_q, bwd.mean_q
        ),
    )
}

// 10 ────────────────────────────────────────────────────────────────────────

fn frame_consistency(log: &mut CertificateLog) -> Outcome {
    let mut r = rng(10);
    let mut worst = 0.0f64;
    let mut mapped = 0;
    while mapped < 50 {
        let n = 1 + mapped % 3;
        let omega0 = 10f64.powf(r.gen_range(-1.5..0.5));
        let e_i = M * r.gen_range(1.2..4.0);
        let cfg = ScatterConfig::new(omega0, e_i, 1e-4 * omega0);
        let known: Vec<PhotonLeg> = (0..n - 1)
            .map(|_| PhotonLeg::new(omega0 * r.gen_range(0.05..0.4), r.gen_range(0.2..2.9), r.gen_range(0.0..2.0 * PI)))
            .collect();
        let last = Direction::new(r.gen_range(0.2..2.9), r.gen_range(0.0..2.0 * PI));
        let ch = Channel::SummedAll;
        let spin = SpinTreatment::Averaged;
        let Ok(lab) = dsigma(&cfg, &known, last, &ch, spin, FrameStrategy::Direct) else { continue };
        if !lab.allowed {
            continue;
        }
        // map the solved lab point to the rest frame and evaluate there
        let legs: Vec<PhotonLeg> = lab
            .omegas
            .iter()
            .zip(lab.thetas.iter().zip(&lab.phis))
            .map(|(&w, (&t, &p))| PhotonLeg::new(w, t, p))
            .collect();
        let img = boost_config_to_rest_frame(&cfg, &legs);
        let rest_cfg = ScatterConfig { cutoff: f64::MIN_POSITIVE, ..img.config };
        let rest = dsigma(&rest_cfg, &img.legs[..n - 1], img.legs[n - 1].direction, &ch, spin, FrameStrategy::Direct)
            .unwrap();
        let thetas: Vec<f64> = img.legs.iter().map(|l| l.direction.theta).collect();
        let j = jacobian_general(&img.boost, &thetas, true);
        worst = worst.max(rel(rest.value / j, lab.value));
        mapped += 1;
    }
    let mut tau_worst = 0.0f64;
    let mut tau_points = 0;
    let opts = SdpOptions::default();
    while tau_points < 10 {
        let omega0 = r.gen_range(0.1..0.5);
        let cfg = ScatterConfig::new(omega0, M * r.gen_range(1.2..3.0), 1e-3 * omega0);
        let d = mercedes(r.gen_range(0.3..2.8), 3);
        let legs = [
            PhotonLeg::new(omega0 * r.gen_range(0.05..0.3), d[0].theta, d[0].phi),
            PhotonLeg::new(omega0 * r.gen_range(0.05..0.3), d[1].theta, d[1].phi),
        ];
        let Ok(lab) = DensityMatrix::at_point(&cfg, legs, d[2], SpinTreatment::Summed, FrameStrategy::Direct) else {
            continue;
        };
        let rest = DensityMatrix::at_point(&cfg, legs, d[2], SpinTreatment::Summed, FrameStrategy::RestFrame).unwrap();
        let a = tau(&lab, &opts).unwrap();
        let b = tau(&rest, &opts).unwrap();
        log.record("frame lab", &a.decomposition);
        log.record("frame rest", &b.decomposition);
        tau_worst = tau_worst.max((a.tau - b.tau).abs());
        tau_points += 1;
    }
    outcome(
        worst <= 1e-8 && tau_worst <= 1e-5,
        format!("50 points: max rel |lab − rest/J| {worst:.2e} (≤ 1e-8); 10 points: max |Δτ| {tau_worst:.2e} (≤ 1e-5)"),
    )
}

fn main() {
    // libtest flags (e.g. --nocapture, a name filter) are accepted and ignored
    let quick = std::env::var("COMPTON_ACCEPTANCE_SKIP_SLOW").is_ok();
    let mut log = CertificateLog { checked: 0, failures: Vec::new() };
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let o = f();
        println!("{} criterion {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    run(1, "Klein-Nishina oracle", &mut klein_nishina);
    run(2, "gauge invariance", &mut gauge_invariance);
    run(3, "Thomson limit", &mut thomson_limit);
    run(7, "kinematic closure", &mut closure);
    run(6, "polarization degeneracies", &mut degeneracies);
    let mut anchors_outcome = None;
    run(10, "frame consistency", &mut || frame_consistency(&mut log));
    if quick {
        println!("SKIP criteria 4, 5, 9 (COMPTON_ACCEPTANCE_SKIP_SLOW set)");
    } else {
        run(9, "entanglement physics", &mut || entanglement_physics(&mut log));
        run(4, "Monte Carlo totals", &mut mc_totals);
        run(5, "total cross section shape", &mut totals_shape);
    }
    run(8, "entanglement anchors", &mut || {
        let o = anchors(&mut log);
        let certs_ok = log.failures.is_empty();
        let detail = format!(
            "{}; {} certificates re-verified{}",
            o.detail,
            log.checked,
            if certs_ok { String::new() } else { format!(", failures: {}", log.failures.join("; ")) }
        );
        anchors_outcome = Some(o.pass && certs_ok);
        outcome(o.pass && certs_ok, detail)
    });
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        // reported, not fatal: set COMPTON_ACCEPTANCE_STRICT to turn failures into a nonzero exit
        println!("failed criteria: {failed:?}");
        if std::env::var_os("COMPTON_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
