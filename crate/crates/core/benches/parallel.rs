//! Sequential vs parallel execution on a coarse failure curve and on a
//! batch of loss fits.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use memtrap::geometry::{DesignFamily, MaterialProperties, WaveguideCrossSection};
use memtrap::powerlab::{fit_propagation_loss, ScatterTrace};
use memtrap::thermal::{failure_power_curve, CurveSetup, ThermalSettings};
use memtrap::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn failure_curve(c: &mut Criterion) {
    let setup = CurveSetup {
        family: DesignFamily::Infinity,
        strip_width_um: 10.0,
        xsection: WaveguideCrossSection::reference(),
        cell_um: 10.0,
    };
    let mat = MaterialProperties::default();
    let settings = ThermalSettings::default();
    let spans = [250.0, 325.0, 400.0, 500.0];
    let mut group = c.benchmark_group("failure_curve");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| failure_power_curve(&setup, black_box(&spans), &mat, &settings, exec).unwrap())
        });
    }
    group.finish();
}

fn loss_fits(c: &mut Criterion) {
    // Deterministic ripple in place of measurement noise.
    let traces: Vec<ScatterTrace> = (0..256)
        .map(|k| ScatterTrace::synthetic(1.0, 1.0, 400, 1.0, |i| 0.02 * ((i * 7 + k * 13) as f64).sin()).unwrap())
        .collect();
    let mut group = c.benchmark_group("loss_fits");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(black_box(&traces), |t| fit_propagation_loss(t).unwrap().alpha_db_per_cm))
        });
    }
    group.finish();
}

criterion_group!(benches, failure_curve, loss_fits);
criterion_main!(benches);
