use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use subtrace::campaign::{check_pair, CampaignConfig};
use subtrace::ffield::FieldCtx;
use subtrace::oracle::{FreenessSpec, Oracle, RatFn};
use subtrace::par::{self, ExecMode};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn oracle_count(c: &mut Criterion) {
    let o = Oracle::new(FieldCtx::build(7, 1, 5).unwrap()).unwrap();
    let f = RatFn::from_fp(&o.ctx, &[1, 0, 1], &[1]);
    let spec = FreenessSpec::full(&o);
    let (a, b) = o.square_pairs()[0].clone();
    let mut g = c.benchmark_group("count_c F_7^5");
    for (name, mode) in MODES {
        par::set_mode(mode);
        g.bench_function(name, |bch| bch.iter(|| o.count_c(black_box(&f), &a, &b, &spec, 1).unwrap().count));
    }
    g.finish();
    par::set_mode(ExecMode::Parallel);
}

fn formula(c: &mut Criterion) {
    let o = Oracle::new(FieldCtx::build(3, 1, 5).unwrap()).unwrap();
    let f = RatFn::from_fp(&o.ctx, &[0, 1], &[1]);
    let spec = FreenessSpec::full(&o);
    let (a, b) = o.square_pairs()[0].clone();
    let mut g = c.benchmark_group("count formula F_3^5");
    g.sample_size(10);
    for (name, mode) in MODES {
        par::set_mode(mode);
        g.bench_function(name, |bch| bch.iter(|| o.eval_count_formula(black_box(&f), &a, &b, &spec).unwrap()));
    }
    g.finish();
    par::set_mode(ExecMode::Parallel);
}

fn sieve_search(c: &mut Criterion) {
    let cfg = CampaignConfig::new(7, 2);
    // warm the factorization cache so only the searches are timed
    check_pair(&cfg, 1, 18).unwrap();
    let mut g = c.benchmark_group("pipeline (7,18)");
    g.sample_size(10);
    for (name, mode) in MODES {
        par::set_mode(mode);
        g.bench_function(name, |bch| bch.iter(|| check_pair(&cfg, 1, black_box(18)).unwrap().status));
    }
    g.finish();
    par::set_mode(ExecMode::Parallel);
}

criterion_group!(benches, oracle_count, formula, sieve_search);
criterion_main!(benches);
