//! Synthetic workloads shared by the benchmarks.

use fluentkb::indexer::{self, Transcription};
use fluentkb::kres::{self, ImportOptions, KresConfig, ResourceKind};
use fluentkb::rdf_io::parse_turtle;
use fluentkb::rules::{self, Rule};
use fluentkb::{Dataset, Term};

pub const LETTER_RULE: &str = "RULE knows-from-letter:
  WHEN ?m a :Letter . ?m :author ?a . ?m :to ?b .
       ?m :writingTime ?w . ?w time:hasBeginning ?t1 .
  THEN FLUENT ?a :knows ?b DURING [?t1, END] .
RULE letter-is-document: WHEN ?m a :Letter . THEN ?m a :Document .
";

/// Turtle for `letters` letters exchanged among `people` correspondents.
pub fn letters_turtle(letters: usize, people: usize) -> String {
    let mut out = String::from(
        "@prefix : <http://fluentkb.org/ns#> .\n@prefix time: <http://www.w3.org/2006/time#> .\n@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n",
    );
    for i in 0..letters {
        let from = i % people;
        let to = (i * 7 + 1) % people;
        let year = 1880 + (i % 20);
        let month = 1 + (i % 12);
        out += &format!(
            ":m{i} a :Letter ; :author :p{from} ; :to :p{to} ; :writingTime [ time:hasBeginning \"{year}-{month:02}-15\"^^xsd:date ] .\n"
        );
    }
    out
}

pub fn letters_dataset(letters: usize, people: usize) -> Dataset {
    let mut ds = Dataset::new();
    let out = parse_turtle(&letters_turtle(letters, people), &Term::iri("http://fluentkb.org/data/letters"));
    assert!(out.is_ok());
    for q in out.quads {
        ds.insert(q).unwrap();
    }
    ds
}

pub fn letter_rules() -> Vec<Rule> {
    rules::compile_rules(LETTER_RULE).unwrap()
}

const WORDS: [&str; 12] = [
    "phonation", "signe", "valeur", "langue", "parole", "son", "articulé", "acte", "système", "terme", "opposition", "forme",
];

/// A terminology with `terms` entries, each with two contexts of use.
pub fn terminology_turtle(id: &str, terms: usize) -> String {
    let mut out = format!(
        "@prefix sism: <http://fluentkb.org/sism#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n<{id}> rdfs:label \"{id}\" .\n"
    );
    for i in 0..terms {
        let w = WORDS[i % WORDS.len()];
        let a = WORDS[(i * 5 + 3) % WORDS.len()];
        let b = WORDS[(i * 7 + 1) % WORDS.len()];
        out += &format!(
            "[] a sism:TermEntry ; sism:lexicalForm \"{w} {i}\" ; sism:contextOfUse \"la {w} {i} et le {a}\" ; sism:contextOfUse \"{b} du {w} {i}\" .\n"
        );
    }
    out
}

/// Two terminologies plus `docs` transcriptions of `words` words each.
pub fn indexing_dataset(terms: usize, docs: usize, words: usize) -> Dataset {
    let mut ds = Dataset::new();
    for id in ["t:a", "t:b"] {
        let out = parse_turtle(&terminology_turtle(id, terms), &Term::iri(id));
        assert!(out.is_ok(), "{:?}", out.diagnostics);
        kres::import_resource(&mut ds, out.quads, ResourceKind::Terminology, id, &ImportOptions::default(), &KresConfig::default())
            .unwrap();
    }
    for d in 0..docs {
        let text: Vec<String> = (0..words)
            .map(|i| {
                let k = d * 31 + i * 13;
                if k % 3 == 0 {
                    format!("{} {}", WORDS[k % WORDS.len()], k % terms.max(1))
                } else {
                    WORDS[k % WORDS.len()].to_string()
                }
            })
            .collect();
        let t = Transcription {
            id: format!("http://fluentkb.org/ns#tr-{d}"),
            manuscript: format!("http://fluentkb.org/ns#ms-{d}"),
            surface: "1r".into(),
            zone: "a".into(),
            seq: 0,
            text: text.join(" "),
        };
        indexer::add_transcription(&mut ds, &t).unwrap();
    }
    ds
}
