use compton_core::kinematics::{mercedes, ScatterConfig};
use compton_core::quadrature::{integrate_energies, total_cross_section, McOptions, RombergOptions};
use compton_core::xsec::Process;
use compton_core::FrameStrategy;
use criterion::{criterion_group, criterion_main, Criterion};

fn energies(c: &mut Criterion) {
    let cfg = ScatterConfig::at_rest(0.18, 0.0036);
    let opts = RombergOptions { rel_tol: 1e-6, max_level: 12, min_level: 2 };
    let mut g = c.benchmark_group("integrate_energies");
    g.sample_size(10);
    for n in [2, 3] {
        let dirs = mercedes(0.5, n);
        g.bench_function(format!("{n}_photons"), |b| {
            b.iter(|| integrate_energies(&cfg, &dirs, FrameStrategy::Auto, &opts).unwrap())
        });
    }
    g.finish();
}

fn totals(c: &mut Criterion) {
    let cfg = ScatterConfig::at_rest(0.18, 0.0036);
    let mut g = c.benchmark_group("total_cross_section");
    g.sample_size(10);
    g.bench_function("dc_200_samples", |b| {
        b.iter(|| total_cross_section(Process::Double, &cfg, &McOptions::new(200, 1)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, energies, totals);
criterion_main!(benches);
