use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use fluentkb::indexer::{self, IndexConfig};
use fluentkb::rdf_io::{parse_nquads, parse_turtle, serialize_nquads};
use fluentkb::rules::{self, DEFAULT_MAX_ROUNDS};
use fluentkb::Term;
use fluentkb_bench::{indexing_dataset, letter_rules, letters_dataset, letters_turtle};

fn saturation(c: &mut Criterion) {
    let rules = letter_rules();
    for letters in [100, 1000] {
        let ds = letters_dataset(letters, 40);
        c.bench_function(&format!("saturate/{letters}-letters"), |b| {
            b.iter_batched(
                || ds.clone(),
                |mut ds| rules::saturate(&mut ds, &rules, DEFAULT_MAX_ROUNDS).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
}

fn indexing(c: &mut Criterion) {
    let ds = indexing_dataset(200, 20, 200);
    let config = IndexConfig::default();
    c.bench_function("index/20-docs-200-words", |b| {
        b.iter_batched(
            || ds.clone(),
            |mut ds| indexer::index_all(&mut ds, &config).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn parsing(c: &mut Criterion) {
    let ttl = letters_turtle(2000, 40);
    let g = Term::iri("http://fluentkb.org/data/letters");
    c.bench_function("parse/turtle-2000-letters", |b| b.iter(|| parse_turtle(black_box(&ttl), &g)));
    let quads = parse_turtle(&ttl, &g).quads;
    let nq = serialize_nquads(quads.iter());
    c.bench_function("parse/nquads-2000-letters", |b| b.iter(|| parse_nquads(black_box(&nq)).unwrap()));
    c.bench_function("serialize/nquads-2000-letters", |b| b.iter(|| serialize_nquads(black_box(&quads))));
}

criterion_group!(benches, saturation, indexing, parsing);
criterion_main!(benches);
