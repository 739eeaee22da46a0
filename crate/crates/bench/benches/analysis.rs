use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use triguard_core::chase::{chase_to_level, DEFAULT_MAX_ATOMS};
use triguard_core::extension::saturate;
use triguard_core::nullsets::NullAnalysis;
use triguard_core::rtc::{classify_tg, TgOptions};
use triguard_core::{parse_facts, parse_program, Database, Program};

fn load(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    std::fs::read_to_string(path).expect("corpus file")
}

fn program(name: &str) -> Program {
    parse_program(&load(name)).expect("corpus parses")
}

fn facts(name: &str) -> Database {
    parse_facts(&load(name)).expect("corpus parses")
}

fn bench_classify(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify_tg");
    for name in ["sigma1.dlg", "sigma2.dlg", "sigma3.dlg", "transitive.dlg", "sticky.dlg"] {
        let p = program(name);
        group.bench_function(name, |b| {
            b.iter(|| classify_tg(black_box(&p), TgOptions::default()))
        });
    }
    group.finish();
}

fn bench_null_analysis(c: &mut Criterion) {
    let p = program("sigma3.dlg");
    c.bench_function("null_analysis/sigma3", |b| b.iter(|| NullAnalysis::new(black_box(&p))));
}

fn bench_saturate(c: &mut Criterion) {
    let p = program("sigma3.dlg");
    c.bench_function("saturate/sigma3_2000", |b| b.iter(|| saturate(black_box(&p), 2_000)));
}

fn bench_chase(c: &mut Criterion) {
    let p = program("sigma2.dlg");
    let d = facts("d2.facts");
    let mut group = c.benchmark_group("chase/sigma2");
    for depth in [3, 5, 7] {
        group.bench_function(format!("depth_{depth}"), |b| {
            b.iter(|| chase_to_level(black_box(&d), &p, depth, DEFAULT_MAX_ATOMS))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_classify, bench_null_analysis, bench_saturate, bench_chase);
criterion_main!(benches);
