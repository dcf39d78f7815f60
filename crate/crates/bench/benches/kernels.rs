use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qbattery::ergotropy::{global_ergotropy, local_ergotropy, max_work_fixed_entanglement, Extraction, WorkEvaluator};
use qbattery::fitting::{default_init, fit_curve};
use qbattery::model::battery_hamiltonian;
use qbattery::nonmarkov::{orthogonal_pair, DistinguishabilityProbe};
use qbattery::states::locally_passive_state;
use qbattery::{CollisionChannel, EntanglementValue, FitModel, FitSettings, ModelParams, OptimizerSettings, Quantity};

fn channel(c: &mut Criterion) {
    let p = ModelParams::default();
    let rho = locally_passive_state(EntanglementValue::new(0.6).unwrap()).density_matrix();
    c.bench_function("channel_setup", |b| b.iter(|| CollisionChannel::new(black_box(&p)).unwrap()));
    let ch = CollisionChannel::new(&p).unwrap();
    c.bench_function("collide_once", |b| b.iter(|| ch.collide_once(black_box(&rho)).unwrap()));
    c.bench_function("reduced_map_power_30", |b| b.iter(|| ch.reduced_map(p.delta_t).power(black_box(30))));
}

fn work(c: &mut Criterion) {
    let p = ModelParams::default();
    let rho = locally_passive_state(EntanglementValue::new(0.6).unwrap()).density_matrix();
    let h = battery_hamiltonian(&p);
    c.bench_function("global_ergotropy", |b| b.iter(|| global_ergotropy(black_box(&rho), &h).unwrap()));
    c.bench_function("local_ergotropy", |b| b.iter(|| local_ergotropy(black_box(&rho), &p).unwrap()));
    let eval = WorkEvaluator::after_collisions(&p, 7).unwrap();
    c.bench_function("work_evaluator_global", |b| b.iter(|| eval.work(black_box(&rho), Extraction::Global)));
    let opt = OptimizerSettings::default().with_seed(1);
    let e = EntanglementValue::new(0.6).unwrap();
    c.bench_function("max_work_G_n7", |b| {
        b.iter(|| max_work_fixed_entanglement(e, 7, &p, Quantity::G, &opt, false).unwrap())
    });
}

fn blp(c: &mut Criterion) {
    let p = ModelParams::default().with_delta_t(1.6);
    let probe = DistinguishabilityProbe::new(&p, 200).unwrap();
    let (s1, s2) = orthogonal_pair(&[0.3, 1.1, 0.7, 2.0, 0.4, 0.9, 1.5, 0.2, 2.4, 0.6]);
    c.bench_function("blp_functional_grid200", |b| b.iter(|| probe.functional(black_box(&s1), black_box(&s2))));
}

fn fitting(c: &mut Criterion) {
    let data: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let e = i as f64 / 20.0;
            let s = (2f64.powf(e + 1.0) - 2f64.powf(2.0 * e)).max(0.0).sqrt();
            (e, 6.0 * 0.7 * s - 0.1 * (0.2 * e).exp())
        })
        .collect();
    let init = default_init(FitModel::M4, &data).unwrap();
    let settings = FitSettings::default();
    c.bench_function("fit_m4", |b| b.iter(|| fit_curve(FitModel::M4, black_box(&data), &init, &settings).unwrap()));
}

criterion_group!(benches, channel, work, blp, fitting);
criterion_main!(benches);
