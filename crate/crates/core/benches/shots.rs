//! Sequential against rayon-parallel execution of noisy exRec shots and of
//! exhaustive fault injection.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use pftconv::exrec::ExRec;
use pftconv::ft::verify_fault_tolerance;
use pftconv::noise::NoiseParams;
use pftconv::parallel::Execution;
use pftconv::pieceable::build_ccnot_a;
use pftconv::sampling::{BackendKind, ShotPlan};
use pftconv::threshold::simulate;

const SHOTS: u64 = 4096;

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn shots(c: &mut Criterion) {
    let rec = ExRec::new(build_ccnot_a());
    let noise = NoiseParams::quarter_eps(1e-3).unwrap();
    let mut g = c.benchmark_group("exrec_shots");
    g.throughput(Throughput::Elements(SHOTS));
    g.sample_size(10);
    for (name, exec) in modes() {
        let plan = ShotPlan { shots: SHOTS, seed: 1, stream: 0, backend: BackendKind::Frame, exec };
        g.bench_function(name, |b| b.iter(|| black_box(simulate(&rec, noise, &plan).unwrap())));
    }
    g.finish();
}

fn injection(c: &mut Criterion) {
    let rec = ExRec::new(build_ccnot_a());
    let mut g = c.benchmark_group("fault_injection");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(name, |b| b.iter(|| black_box(verify_fault_tolerance(&rec, exec).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, shots, injection);
criterion_main!(benches);
