//! Energy integration by Romberg's method and Monte Carlo integration over the
//! emission solid angles.
//!
//! With the directions fixed, the energy of the last photon is a
//! linear-fractional function of each free energy x, `ω_last = (a₀ + a₁x) /
//! (b₀ + b₁x)`. The free energy is integrated in `L = ln x − ln ω_last(x)`,
//! which stretches both ends of the interval where the soft-photon factors
//! 1/x and 1/ω_last live and has a closed-form inverse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dirac::FourVector;
use crate::error::{Error, Result};
use crate::kinematics::{
    boost_config_to_rest_frame, closure, jacobian_general, Boost, Direction, PhotonLeg, ScatterConfig,
};
use crate::xsec::{kinematic_point, table_len, FrameStrategy, KinematicPoint, PointOutcome, Process};

/// Romberg settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RombergOptions {
    pub rel_tol: f64,
    pub max_level: usize,
    /// Levels always computed before testing convergence.
    pub min_level: usize,
}

impl Default for RombergOptions {
    fn default() -> Self {
        RombergOptions { rel_tol: 1e-6, max_level: 12, min_level: 3 }
    }
}

impl RombergOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        RombergOptions { rel_tol, ..Default::default() }
    }
}

/// Result of a (vector-valued) Romberg integration.
#[derive(Clone, Debug, PartialEq)]
pub struct RombergResult {
    pub value: Vec<f64>,
    /// Level of the last extrapolation (2^level + 1 nodes).
    pub level: usize,
    /// Largest component-wise relative change between the last two diagonal
    /// estimates.
    pub achieved: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Romberg integration of a scalar function.
pub fn romberg(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, max_level: usize) -> RombergResult {
    let opts = RombergOptions { rel_tol, max_level, ..Default::default() };
    romberg_vec(|x, out| out[0] = f(x), 1, a, b, &opts)
}

/// Romberg integration of a vector-valued function; `f(x, out)` fills `out`.
/// Convergence is tested component-wise, relative to each component with a
/// floor of 1e-10 of the largest one.
pub fn romberg_vec(
    mut f: impl FnMut(f64, &mut [f64]),
    dim: usize,
    a: f64,
    b: f64,
    opts: &RombergOptions,
) -> RombergResult {
    let mut buf = vec![0.0; dim];
    let h0 = b - a;
    let mut evaluations = 2;
    f(a, &mut buf);
    let mut trap: Vec<f64> = buf.clone();
    f(b, &mut buf);
    for (t, v) in trap.iter_mut().zip(&buf) {
        *t = 0.5 * h0 * (*t + v);
    }
    if h0 == 0.0 {
        return RombergResult { value: vec![0.0; dim], level: 0, achieved: 0.0, converged: true, evaluations };
    }
    let mut prev_row = vec![trap.clone()];
    let mut achieved = f64::INFINITY;
    for level in 1..=opts.max_level {
        let count = 1usize << (level - 1);
        let h = h0 / (count as f64);
        let mut mid = vec![0.0; dim];
        for i in 0..count {
            f(a + (i as f64 + 0.5) * h, &mut buf);
            for (m, v) in mid.iter_mut().zip(&buf) {
                *m += v;
            }
        }
        evaluations += count;
        let mut row = Vec::with_capacity(level + 1);
        row.push(prev_row[0].iter().zip(&mid).map(|(t, m)| 0.5 * t + 0.5 * h * m).collect::<Vec<f64>>());
        let mut factor = 1.0;
        for k in 1..=level {
            factor *= 4.0;
            let r: Vec<f64> = row[k - 1]
                .iter()
                .zip(&prev_row[k - 1])
                .map(|(hi, lo)| hi + (hi - lo) / (factor - 1.0))
                .collect();
            row.push(r);
        }
        let best = &row[level];
        let last = &prev_row[level - 1];
        let scale = best.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        achieved = best
            .iter()
            .zip(last)
            .map(|(x, y)| {
                let d = (x - y).abs();
                let s = x.abs().max(1e-10 * scale);
                if d == 0.0 { 0.0 } else { d / s }
            })
            .fold(0.0, f64::max);
        if level >= opts.min_level && achieved <= opts.rel_tol {
            return RombergResult { value: best.clone(), level, achieved, converged: true, evaluations };
        }
        prev_row = row;
    }
    let value = prev_row.last().expect("nonempty Romberg row").clone();
    RombergResult { value, level: opts.max_level, achieved, converged: false, evaluations }
}

/// `(a₀ + a₁x) / (b₀ + b₁x)`.
#[derive(Clone, Copy, Debug)]
struct LinearFractional {
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
}

impl LinearFractional {
    /// Energy of the last photon as a function of the energy x of photon
    /// `var`, all other momenta fixed.
    fn of_closure(config: &ScatterConfig, fixed: &[FourVector], var: Direction, last: Direction) -> Self {
        let at = |x: f64| {
            let mut known = fixed.to_vec();
            known.push(var.null_vector() * x);
            closure(config, &known, last)
        };
        let (c0, c1) = (at(0.0), at(1.0));
        LinearFractional { a0: c0.num, a1: c1.num - c0.num, b0: c0.den, b1: c1.den - c0.den }
    }

    fn eval(&self, x: f64) -> f64 {
        (self.a0 + self.a1 * x) / (self.b0 + self.b1 * x)
    }

    /// Upper end of the range where `eval(x) ≥ threshold`.
    fn upper(&self, threshold: f64) -> f64 {
        (self.a0 - threshold * self.b0) / (threshold * self.b1 - self.a1)
    }

    fn log_ratio(&self, x: f64) -> f64 {
        x.ln() - self.eval(x).ln()
    }

    /// Solves `x / eval(x) = e^l` for x in `[lo, hi]`, returning `(x, dx/dl)`.
    fn invert(&self, l: f64, lo: f64, hi: f64) -> (f64, f64) {
        let r = l.exp();
        let (qa, qb, qc) = (self.b1, self.b0 - r * self.a1, -r * self.a0);
        let x = if qa.abs() <= 1e-14 * qb.abs() {
            -qc / qb
        } else {
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
            let q = -0.5 * (qb + qb.signum() * disc);
            let (r1, r2) = (q / qa, qc / q);
            let dist = |x: f64| if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 };
            if dist(r1) <= dist(r2) { r1 } else { r2 }
        };
        let x = x.clamp(lo, hi);
        let den = self.b0 + self.b1 * x;
        let deriv = (self.a1 * self.b0 - self.a0 * self.b1) / (den * den);
        (x, 1.0 / (1.0 / x - deriv / self.eval(x)))
    }
}

/// Energy-integrated, spin-summed channel table (see
/// [`crate::xsec::PointWeights::spin_summed`]) at fixed emission directions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyIntegral {
    pub process: Process,
    /// b·sr⁻ⁿ per channel, in the frame of the configuration.
    pub table: Vec<f64>,
    pub evaluations: usize,
    /// Deepest Romberg level reached and worst relative change achieved.
    pub max_level: usize,
    pub achieved: f64,
    pub converged: bool,
    /// Points skipped because the amplitude could not be evaluated.
    pub skipped: usize,
}

impl EnergyIntegral {
    fn empty(process: Process) -> Self {
        EnergyIntegral {
            process,
            table: vec![0.0; table_len(process)],
            evaluations: 0,
            max_level: 0,
            achieved: 0.0,
            converged: true,
            skipped: 0,
        }
    }

    fn absorb(&mut self, r: &RombergResult) {
        self.evaluations += r.evaluations;
        self.max_level = self.max_level.max(r.level);
        self.achieved = self.achieved.max(r.achieved);
        self.converged &= r.converged;
    }
}

/// Integrates the differential cross section over the energies of all but
/// the last photon, with every emitted photon above the lab threshold.
///
/// With a moving electron and a rest-frame strategy the integral runs in the
/// electron rest frame, with the lab threshold mapped leg by leg, and the
/// result is returned as the lab angular distribution.
pub fn integrate_energies(
    config: &ScatterConfig,
    directions: &[Direction],
    strategy: FrameStrategy,
    opts: &RombergOptions,
) -> Result<EnergyIntegral> {
    config.validate()?;
    Process::from_emitted(directions.len())?;
    if strategy.use_rest_frame(config) {
        let legs: Vec<PhotonLeg> = directions.iter().map(|&d| PhotonLeg { omega: 1.0, direction: d }).collect();
        let img = boost_config_to_rest_frame(config, &legs);
        let dirs: Vec<Direction> = img.legs.iter().map(|l| l.direction).collect();
        let mut out = integrate_rest_frame(&img.config, &dirs, &img.boost, opts)?;
        let thetas: Vec<f64> = dirs.iter().map(|d| d.theta).collect();
        let inv_j = 1.0 / jacobian_general(&img.boost, &thetas, false);
        out.table.iter_mut().for_each(|v| *v *= inv_j);
        Ok(out)
    } else {
        let thresholds = vec![config.cutoff; directions.len()];
        integrate_with_thresholds(config, directions, &thresholds, opts)
    }
}

/// Rest-frame energy integral of the rest-frame cross section, with the
/// lab threshold applied through `boost`.
pub fn integrate_rest_frame(
    rest: &ScatterConfig,
    directions: &[Direction],
    boost: &Boost,
    opts: &RombergOptions,
) -> Result<EnergyIntegral> {
    let thresholds: Vec<f64> = directions.iter().map(|d| boost.rest_threshold(rest.cutoff, d.theta)).collect();
    integrate_with_thresholds(rest, directions, &thresholds, opts)
}

/// Energy integral over `{ω_j > thresholds[j]}` in the frame of `config`.
pub fn integrate_with_thresholds(
    config: &ScatterConfig,
    directions: &[Direction],
    thresholds: &[f64],
    opts: &RombergOptions,
) -> Result<EnergyIntegral> {
    let process = Process::from_emitted(directions.len())?;
    if thresholds.len() != directions.len() {
        return Err(Error::InvalidInput("one threshold per emitted photon required".into()));
    }
    let dim = table_len(process);
    let mut out = EnergyIntegral::empty(process);
    let mut skipped = 0usize;
    let mut eval = |known: &[PhotonLeg], last: Direction, weight: f64, dst: &mut [f64]| {
        match kinematic_point(config, known, last) {
            Ok(PointOutcome::Allowed(p)) => {
                match point_table(config, &p) {
                    Ok(t) => dst.iter_mut().zip(t).for_each(|(d, v)| *d = weight * v),
                    Err(_) => {
                        skipped += 1;
                        dst.fill(0.0)
                    }
                }
            }
            _ => {
                skipped += 1;
                dst.fill(0.0)
            }
        }
    };
    match directions {
        [d1] => {
            // single photon: nothing to integrate
            if let PointOutcome::Allowed(p) = kinematic_point(config, &[], *d1)? {
                if p.emitted[0].t > thresholds[0] {
                    out.table = point_table(config, &p)?;
                }
            }
            out.evaluations = 1;
        }
        [d1, d2] => {
            let g = LinearFractional::of_closure(config, &[], *d1, *d2);
            let (lo, e_last) = (thresholds[0], thresholds[1]);
            if g.eval(lo) > e_last && g.b0 + g.b1 * lo > 0.0 {
                let hi = g.upper(e_last);
                let (l0, l1) = (g.log_ratio(lo), hi.ln() - e_last.ln());
                let r = romberg_vec(
                    |l, dst| {
                        let (x, jac) = g.invert(l, lo, hi);
                        eval(&[PhotonLeg { omega: x, direction: *d1 }], *d2, jac, dst);
                    },
                    dim,
                    l0,
                    l1,
                    opts,
                );
                out.absorb(&r);
                out.table = r.value;
            }
        }
        [d1, d2, d3] => {
            let (e1, e2, e3) = (thresholds[0], thresholds[1], thresholds[2]);
            // outer: ω₂, ω₃ taken at ω₁ = e₁
            let outer = LinearFractional::of_closure(config, &[d1.null_vector() * e1], *d2, *d3);
            if outer.eval(e2) > e3 && outer.b0 + outer.b1 * e2 > 0.0 {
                let hi2 = outer.upper(e3);
                let (l0, l1) = (outer.log_ratio(e2), hi2.ln() - e3.ln());
                let mut inner_stats: Vec<RombergResult> = Vec::new();
                let r = romberg_vec(
                    |l, dst| {
                        let (y, jac_y) = outer.invert(l, e2, hi2);
                        let k2 = d2.null_vector() * y;
                        let inner = LinearFractional::of_closure(config, &[k2], *d1, *d3);
                        if !(inner.eval(e1) > e3) {
                            dst.fill(0.0);
                            return;
                        }
                        let hi1 = inner.upper(e3).max(e1);
                        let (m0, m1) = (inner.log_ratio(e1), hi1.ln() - e3.ln());
                        let leg2 = PhotonLeg { omega: y, direction: *d2 };
                        let ri = romberg_vec(
                            |m, dd| {
                                let (x, jac_x) = inner.invert(m, e1, hi1);
                                eval(&[PhotonLeg { omega: x, direction: *d1 }, leg2], *d3, jac_x * jac_y, dd);
                            },
                            dim,
                            m0,
                            m1.max(m0),
                            opts,
                        );
                        dst.copy_from_slice(&ri.value);
                        inner_stats.push(RombergResult { value: Vec::new(), ..ri });
                    },
                    dim,
                    l0,
                    l1,
                    opts,
                );
                for s in &inner_stats {
                    out.absorb(s);
                }
                out.evaluations += r.evaluations;
                out.max_level = out.max_level.max(r.level);
                out.achieved = out.achieved.max(r.achieved);
                out.converged &= r.converged;
                out.table = r.value;
            }
        }
        _ => unreachable!("process checked above"),
    }
    out.skipped = skipped;
    Ok(out)
}

fn point_table(config: &ScatterConfig, p: &KinematicPoint) -> Result<Vec<f64>> {
    let t = &p.tensor;
    let f = p.phase_space;
    let mut table: Vec<f64> = (0..t.channels()).map(|c| f * t.spin_summed(c)).collect();
    let coef = config.incoming.coefficients(&config.incoming_basis())?;
    let contracted = t.contract_incoming(coef);
    let half = t.channels() / 2;
    table.extend((0..half).map(|c| f * contracted.iter().map(|s| s[c].norm_sqr()).sum::<f64>()));
    Ok(table)
}

/// Name and parameters of the Monte Carlo generator, for output metadata.
pub const RNG_DESCRIPTION: &str = "ChaCha8 (rand_chacha 0.3): seed_from_u64(seed), stream = shard index";

/// Reproducible stream of points in the unit hypercube of `dimension`.
#[derive(Clone, Debug)]
pub struct McStream {
    rng: ChaCha8Rng,
    dimension: usize,
}

impl Iterator for McStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some((0..self.dimension).map(|_| self.rng.gen::<f64>()).collect())
    }
}

/// Uniform stream for one shard; distinct shards use distinct ChaCha
/// streams of the same key.
pub fn mc_stream(seed: u64, shard: u64, dimension: usize) -> McStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    McStream { rng, dimension }
}

/// Maps a point of the unit hypercube to emission directions and a weight
/// (the inverse sampling density in (cosθ, φ) per photon).
pub trait AngularSampler: Sync {
    fn sample(&self, u: &[f64], n: usize) -> (Vec<Direction>, f64);
}

/// Uniform in cosθ and φ for every photon: weight (4π)ⁿ.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformSphere;

impl AngularSampler for UniformSphere {
    fn sample(&self, u: &[f64], n: usize) -> (Vec<Direction>, f64) {
        let tau = 2.0 * std::f64::consts::PI;
        let dirs = (0..n).map(|j| Direction::from_cos(2.0 * u[2 * j] - 1.0, tau * u[2 * j + 1])).collect();
        (dirs, (2.0 * tau).powi(n as i32))
    }
}

/// Mixture of a uniform part and a density ∝ 1/(1 + a − cosθ) peaked along
/// the incoming photon (+z), independently for every photon. At high energy
/// the emission concentrates in a cone of width ~√a around +z, which uniform
/// sampling almost never hits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardCone {
    /// Peak width parameter, > 0.
    pub a: f64,
    /// Fraction of samples drawn uniformly, in (0, 1].
    pub uniform: f64,
}

impl ForwardCone {
    /// Width m/ω₀′ from the rest-frame photon energy, 30% uniform.
    pub fn for_config(config: &ScatterConfig) -> Self {
        let w_rest = config.omega0 * config.boost().doppler_to_rest(0.0);
        ForwardCone { a: crate::constants::ELECTRON_MASS / w_rest, uniform: 0.3 }
    }

    /// Density in (cosθ, φ) of one photon.
    pub fn density(&self, cos_theta: f64) -> f64 {
        let a = self.a;
        let peak = 1.0 / ((1.0 + a - cos_theta) * ((2.0 + a) / a).ln());
        (0.5 * self.uniform + (1.0 - self.uniform) * peak) / (2.0 * std::f64::consts::PI)
    }
}

impl AngularSampler for ForwardCone {
    fn sample(&self, u: &[f64], n: usize) -> (Vec<Direction>, f64) {
        let tau = 2.0 * std::f64::consts::PI;
        let a = self.a;
        let mut weight = 1.0;
        let dirs = (0..n)
            .map(|j| {
                let x = u[2 * j];
                let c = if x < self.uniform {
                    2.0 * x / self.uniform - 1.0
                } else {
                    // 1 + a − c = a·((2 + a)/a)^v
                    let v = (x - self.uniform) / (1.0 - self.uniform);
                    (1.0 + a - a * ((2.0 + a) / a).powf(v)).clamp(-1.0, 1.0)
                };
                weight /= self.density(c);
                Direction::from_cos(c, tau * u[2 * j + 1])
            })
            .collect();
        (dirs, weight)
    }
}

/// Monte Carlo settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub shards: usize,
    pub romberg: RombergOptions,
    pub strategy: FrameStrategy,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        McOptions {
            samples,
            seed,
            shards: 16,
            romberg: RombergOptions::with_tol(1e-4),
            strategy: FrameStrategy::Auto,
        }
    }
}

/// Monte Carlo estimate with diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error: f64,
    pub samples: usize,
    /// Samples with a nonzero weight.
    pub accepted: usize,
    pub seed: u64,
    pub shards: usize,
    pub rng: &'static str,
    pub romberg_max_level: usize,
    pub romberg_achieved: f64,
    /// Energy integrals that hit the maximum Romberg level.
    pub unconverged: usize,
    pub skipped_points: usize,
}

impl IntegralEstimate {
    pub fn relative_error(&self) -> f64 {
        self.error / self.value.abs()
    }

    pub fn flagged(&self) -> bool {
        self.unconverged > 0
    }
}

/// Running sums of one shard.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShardSums {
    pub count: usize,
    pub accepted: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub max_level: usize,
    pub achieved: f64,
    pub unconverged: usize,
    pub skipped: usize,
}

impl ShardSums {
    fn merge(mut self, o: &ShardSums) -> Self {
        self.count += o.count;
        self.accepted += o.accepted;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.max_level = self.max_level.max(o.max_level);
        self.achieved = self.achieved.max(o.achieved);
        self.unconverged += o.unconverged;
        self.skipped += o.skipped;
        self
    }
}

fn shard_samples(total: usize, shards: usize, shard: usize) -> usize {
    total / shards + usize::from(shard < total % shards)
}

/// Scalar per-sample weight: averaged over initial spin and polarization,
/// summed over final ones, divided by n!.
fn total_weight(process: Process, table: &[f64]) -> f64 {
    let nf = 1 << (process.emitted() + 1);
    0.25 * table[..nf].iter().sum::<f64>() / process.symmetry_factor()
}

/// Runs one shard of a total-cross-section integration with an arbitrary
/// angular sampler. With a rest-frame strategy the sampled directions are
/// rest-frame directions.
pub fn run_shard(
    process: Process,
    config: &ScatterConfig,
    opts: &McOptions,
    sampler: &dyn AngularSampler,
    shard: usize,
) -> Result<ShardSums> {
    let n = process.emitted();
    let count = shard_samples(opts.samples, opts.shards, shard);
    let mut sums = ShardSums { count, ..Default::default() };
    // the total is invariant: sample directly in the rest frame when boosting
    let rest = opts.strategy.use_rest_frame(config).then(|| boost_config_to_rest_frame(config, &[]));
    for u in mc_stream(opts.seed, shard as u64, 2 * n).take(count) {
        let (dirs, w) = sampler.sample(&u, n);
        if w == 0.0 {
            continue;
        }
        let e = match &rest {
            Some(img) => integrate_rest_frame(&img.config, &dirs, &img.boost, &opts.romberg)?,
            None => integrate_energies(config, &dirs, FrameStrategy::Direct, &opts.romberg)?,
        };
        let v = w * total_weight(process, &e.table);
        if v != 0.0 {
            sums.accepted += 1;
        }
        sums.sum += v;
        sums.sum_sq += v * v;
        sums.max_level = sums.max_level.max(e.max_level);
        sums.achieved = sums.achieved.max(e.achieved);
        sums.unconverged += usize::from(!e.converged);
        sums.skipped += e.skipped;
    }
    Ok(sums)
}

/// Combines shard sums (in shard order) into an estimate.
pub fn combine_shards(shards: &[ShardSums], opts: &McOptions) -> Result<IntegralEstimate> {
    let s = shards.iter().fold(ShardSums::default(), |acc, x| acc.merge(x));
    if s.accepted == 0 {
        return Err(Error::NoAcceptedSamples);
    }
    let nf = s.count as f64;
    let mean = s.sum / nf;
    let var = ((s.sum_sq / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
    Ok(IntegralEstimate {
        value: mean,
        error: (var / nf).sqrt(),
        samples: s.count,
        accepted: s.accepted,
        seed: opts.seed,
        shards: opts.shards,
        rng: RNG_DESCRIPTION,
        romberg_max_level: s.max_level,
        romberg_achieved: s.achieved,
        unconverged: s.unconverged,
        skipped_points: s.skipped,
    })
}

/// Total cross section (b), sampling angles with [`ForwardCone::for_config`].
pub fn total_cross_section(process: Process, config: &ScatterConfig, opts: &McOptions) -> Result<IntegralEstimate> {
    total_cross_section_with(process, config, opts, &ForwardCone::for_config(config))
}

/// Total cross section (b) with a custom angular sampler. Shards run in
/// parallel; the result depends only on (seed, samples, shards).
pub fn total_cross_section_with(
    process: Process,
    config: &ScatterConfig,
    opts: &McOptions,
    sampler: &dyn AngularSampler,
) -> Result<IntegralEstimate> {
    config.validate()?;
    if opts.shards == 0 {
        return Err(Error::InvalidInput("at least one shard required".into()));
    }
    let shards: Vec<ShardSums> = (0..opts.shards)
        .into_par_iter()
        .map(|s| run_shard(process, config, opts, sampler, s))
        .collect::<Result<_>>()?;
    combine_shards(&shards, opts)
}
