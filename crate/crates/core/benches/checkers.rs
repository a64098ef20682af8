use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use paramck::cycle::check_fsm_fsm;
use paramck::gen;
use paramck::pushdown::check_pdm_fsm;
use paramck::reduction::check_pdm_pdm;
use paramck::{Network, Options, Parallelism};

fn modes() -> [(&'static str, Options); 2] {
    [("sequential", Options::sequential()), ("parallel", Options { parallelism: Parallelism::Parallel, ..Options::default() })]
}

fn bench(c: &mut Criterion, group: &str, nets: &[Network], check: fn(&Network, &Options) -> bool) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for (name, opts) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| nets.iter().filter(|n| check(black_box(n), opts)).count())
        });
    }
    g.finish();
}

fn checkers(c: &mut Criterion) {
    let fig1 = vec![paramck::fixtures::fig1_network()];
    bench(c, "fsm-fsm/fig1", &fig1, |n, o| check_fsm_fsm(n, o).verdict.is_nonempty());

    let random: Vec<Network> = (0..40).map(|s| gen::fsm_net(s, 3).network()).collect();
    bench(c, "fsm-fsm/random", &random, |n, o| check_fsm_fsm(n, o).verdict.is_nonempty());

    let lifted: Vec<Network> = (0..40)
        .map(|s| {
            let parts = gen::fsm_net(s, 3);
            Network::from_parts(&parts.property, &parts.lifted().leader, &parts.contributor).unwrap()
        })
        .collect();
    bench(c, "pdm-fsm/random", &lifted, |n, o| check_pdm_fsm(n, o).verdict.is_nonempty());

    let pdms: Vec<Network> = (0..20).map(|s| gen::pdm_net(s).network()).collect();
    bench(c, "pdm-pdm/random", &pdms, |n, o| check_pdm_pdm(n, o).verdict.is_nonempty());
}

criterion_group!(benches, checkers);
criterion_main!(benches);
