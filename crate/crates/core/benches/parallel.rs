use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use subwalk::bernstein::BernsteinSpec;
use subwalk::capacity::{equilibrium, PointSet};
use subwalk::exec::Execution;
use subwalk::green::{GreenConfig, GreenEvaluator};
use subwalk::massiveness::{LatticeSetSpec, SetKind};
use subwalk::montecarlo::{hitting_probability, SimConfig, Stopping};
use subwalk::walk_kernel::{FundamentalDomain, TransitionStepper};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn stepper(c: &mut Criterion) {
    let domain = Arc::new(FundamentalDomain::new(3, 96).unwrap());
    let mut g = c.benchmark_group("transition_steps_64");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut s = TransitionStepper::new(domain.clone(), exec);
                for _ in 0..64 {
                    s.advance();
                }
                s.mass()
            })
        });
    }
    g.finish();
}

fn capacity(c: &mut Criterion) {
    let spec = BernsteinSpec::power(1.0).unwrap();
    let set = PointSet::ball(3, 6).unwrap();
    let mut g = c.benchmark_group("ball_capacity_r6");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = GreenConfig {
            k_exact: 128,
            radius: 48,
            exec,
            ..GreenConfig::default()
        };
        let eval = GreenEvaluator::new(&spec, 3, cfg).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| equilibrium(&eval, &set).unwrap().capacity)
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let set = LatticeSetSpec::new(3, SetKind::Cone(1.0)).unwrap();
    let mut g = c.benchmark_group("cone_hitting_10k");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = SimConfig::new(BernsteinSpec::power(1.0).unwrap(), vec![0, 0, -10], 10_000, Stopping::Horizon(1 << 12), 1);
        cfg.exec = exec;
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| hitting_probability(&cfg, &set).unwrap().hits)
        });
    }
    g.finish();
}

criterion_group!(benches, stepper, capacity, simulation);
criterion_main!(benches);
