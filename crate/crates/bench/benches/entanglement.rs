use compton_core::entanglement::{tau, SdpOptions};
use compton_core::kinematics::{mercedes, PhotonLeg, ScatterConfig};
use compton_core::{DensityMatrix, FrameStrategy, SpinTreatment};
use criterion::{criterion_group, criterion_main, Criterion};

fn density(c: &mut Criterion) {
    let cfg = ScatterConfig::at_rest(0.18, 0.0036);
    let d = mercedes(0.5, 3);
    let legs = [PhotonLeg { omega: 0.045, direction: d[0] }, PhotonLeg { omega: 0.035, direction: d[1] }];
    let last = d[2];
    c.bench_function("density_matrix", |b| {
        b.iter(|| DensityMatrix::at_point(&cfg, legs, last, SpinTreatment::Summed, FrameStrategy::Auto).unwrap())
    });
    let rho = DensityMatrix::at_point(&cfg, legs, last, SpinTreatment::Summed, FrameStrategy::Auto).unwrap();
    let mut g = c.benchmark_group("tau");
    g.sample_size(10);
    g.bench_function("tie_break", |b| b.iter(|| tau(&rho, &SdpOptions::default()).unwrap()));
    g.bench_function("plain", |b| b.iter(|| tau(&rho, &SdpOptions { tie_break: None, ..SdpOptions::default() }).unwrap()));
    g.finish();
}

criterion_group!(benches, density);
criterion_main!(benches);
