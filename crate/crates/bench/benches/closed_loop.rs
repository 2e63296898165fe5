use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pct_core::cbf::{cbf_min_surge_force, filter_qp};
use pct_core::emo::solve_kappa;
use pct_core::integrator::rk4_step;
use pct_core::reference::ReferenceGenerator;
use pct_core::{
    run_scenario, ControlInput, Controller, Disturbance, Method, Preset, ScenarioConfig,
    VesselState,
};

fn full_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario");
    group.sample_size(20);
    for preset in Preset::ALL {
        for method in [Method::Method1, Method::Method2] {
            let cfg = ScenarioConfig {
                method,
                seed: 7,
                ..preset.config()
            };
            let id = BenchmarkId::new(preset.name(), method.label());
            group.bench_function(id, |b| b.iter(|| run_scenario(black_box(&cfg)).unwrap()));
        }
    }
    group.finish();
}

fn per_step(c: &mut Criterion) {
    let cfg = Preset::Fig2Nominal.config();
    let state = VesselState::new(3.0, -2.0, 0.4, 9.5, 0.1, 0.01);
    let rf = ReferenceGenerator::new(cfg.reference.clone())
        .sample()
        .unwrap();
    let tau = ControlInput::new(2.3e6, 1.0e6);

    c.bench_function("controller_step", |b| {
        let mut ctrl = Controller::new(
            cfg.vessel,
            cfg.effective_gains(),
            cfg.emo_params(),
            cfg.derivative_mode,
        );
        b.iter(|| {
            ctrl.step(0.0, black_box(&state), &rf, &tau, cfg.dt)
                .unwrap()
        })
    });
    c.bench_function("rk4_step", |b| {
        b.iter(|| {
            rk4_step(
                black_box(&state),
                &cfg.vessel,
                &tau,
                &Disturbance::default(),
                cfg.dt,
            )
        })
    });
    c.bench_function("cbf_filter", |b| {
        b.iter(|| {
            let lower = cbf_min_surge_force(black_box(0.7), -0.3, &cfg.vessel, &cfg.cbf);
            filter_qp(black_box(&tau), lower)
        })
    });
    c.bench_function("solve_kappa", |b| b.iter(solve_kappa));
}

criterion_group!(benches, full_runs, per_step);
criterion_main!(benches);
