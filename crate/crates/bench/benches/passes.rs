use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use glyphlstm::network::forward_sequence;
use glyphlstm::oneshot::{infer_class, ClassInferConfig};
use glyphlstm::training::backprop_through_time;
use glyphlstm::one_hot;
use glyphlstm_bench::{desk_model, sample};

fn bench_forward_backward(c: &mut Criterion) {
    let params = desk_model(1);
    let s = sample('m');
    let target = s.targets();
    let input = one_hot(s.label());

    c.bench_function("forward_32x32_T48", |b| {
        b.iter(|| forward_sequence(black_box(&params), &input, target.len()).unwrap())
    });
    c.bench_function("forward_backward_32x32_T48", |b| {
        b.iter(|| {
            let (_, trace) = forward_sequence(black_box(&params), &input, target.len()).unwrap();
            backprop_through_time(&params, &trace, &target).unwrap()
        })
    });
}

fn bench_infer(c: &mut Criterion) {
    let params = desk_model(2);
    let s = sample('v');
    let cfg = ClassInferConfig { iterations: 20, ..Default::default() };
    c.bench_function("infer_class_20_iters", |b| {
        b.iter(|| infer_class(black_box(&params), &s, &cfg).unwrap())
    });
}

criterion_group!(benches, bench_forward_backward, bench_infer);
criterion_main!(benches);
