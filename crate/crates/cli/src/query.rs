use std::collections::BTreeSet;
use std::io::Write;

use anyhow::{bail, Result};
use fluentkb::store::QuadPattern;
use fluentkb::temporal::{all_fluents, FluentRelation};
use fluentkb::vocab::{self, model};
use fluentkb::{Dataset, Term};

/// Splits on whitespace, keeping double-quoted strings (with `\"` escapes and
/// any `@lang` / `^^dt` suffix) together.
fn split(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut tok = String::new();
        let mut in_str = false;
        while let Some(&c) = chars.peek() {
            if !in_str && c.is_whitespace() {
                break;
            }
            chars.next();
            tok.push(c);
            if c == '\\' && in_str {
                if let Some(n) = chars.next() {
                    tok.push(n);
                }
            } else if c == '"' {
                in_str = !in_str;
            }
        }
        if in_str {
            bail!("unterminated string in pattern");
        }
        out.push(tok);
    }
    Ok(out)
}

fn expand(name: &str) -> Result<String> {
    let Some((prefix, local)) = name.split_once(':') else {
        bail!("cannot read {name:?} as a term");
    };
    match vocab::default_prefixes().into_iter().find(|(p, _)| *p == prefix) {
        Some((_, ns)) => Ok(format!("{ns}{local}")),
        None => bail!("unknown prefix {prefix:?} in {name:?}"),
    }
}

fn parse_term(tok: &str) -> Result<Option<Term>> {
    if tok.starts_with('?') {
        return Ok(None);
    }
    if tok == "a" {
        return Ok(Some(Term::iri(vocab::rdf::TYPE)));
    }
    if let Some(iri) = tok.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        return Ok(Some(fluentkb::store::node_from_str(iri)));
    }
    if let Some(rest) = tok.strip_prefix('"') {
        let end = rest.rfind('"').expect("split keeps quotes balanced");
        let lexical = rest[..end].replace("\\\"", "\"").replace("\\\\", "\\");
        let suffix = &rest[end + 1..];
        return Ok(Some(if let Some(lang) = suffix.strip_prefix('@') {
            Term::lang_string(lexical, lang)
        } else if let Some(dt) = suffix.strip_prefix("^^") {
            let dt = match dt.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
                Some(iri) => iri.to_string(),
                None => expand(dt)?,
            };
            Term::literal(lexical, dt)
        } else {
            Term::string(lexical)
        }));
    }
    Ok(Some(Term::iri(expand(tok)?)))
}

/// Reads `"S P O G"`; a missing graph position matches any graph.
pub fn parse_pattern(text: &str) -> Result<QuadPattern> {
    let toks = split(text)?;
    if !(3..=4).contains(&toks.len()) {
        bail!("expected \"S P O G\" (3 or 4 terms), got {} term(s)", toks.len());
    }
    let mut terms = toks.iter().map(|t| parse_term(t)).collect::<Result<Vec<_>>>()?;
    terms.resize(4, None);
    let mut it = terms.into_iter();
    Ok(QuadPattern {
        subject: it.next().unwrap(),
        predicate: it.next().unwrap(),
        object: it.next().unwrap(),
        graph: it.next().unwrap(),
    })
}

fn print_fluent(f: &FluentRelation, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "fluent {} {} {}", f.subject, f.property, f.object)?;
    writeln!(out, "  during {}", f.during)?;
    match &f.provenance {
        fluentkb::temporal::Provenance::Asserted => writeln!(out, "  provenance asserted")?,
        fluentkb::temporal::Provenance::Rule(id) => writeln!(out, "  provenance rule {id}")?,
    }
    if let Some(e) = &f.initiated_by {
        writeln!(out, "  initiated by {e}")?;
    }
    if let Some(e) = &f.terminated_by {
        writeln!(out, "  terminated by {e}")?;
    }
    writeln!(out, "  node {}", f.node)
}

/// Prints matching quads as N-Quads lines, except that a quad linking a
/// subject to a reified fluent is printed as one fluent block, and the
/// fluent's own structure is not repeated.
pub fn print_matches(ds: &Dataset, pattern: &QuadPattern, out: &mut impl Write) -> Result<()> {
    let fluents = all_fluents(ds);
    let fluent_nodes: BTreeSet<&Term> = fluents.iter().map(|f| &f.node).collect();
    let interval_nodes: BTreeSet<Term> = fluent_nodes
        .iter()
        .filter_map(|n| ds.object(n, model::DURING))
        .collect();
    let mut printed = 0;
    for q in ds.iter_matching(pattern) {
        if fluent_nodes.contains(&q.subject) || interval_nodes.contains(&q.subject) {
            continue;
        }
        if fluent_nodes.contains(&q.object) {
            if let Some(f) = fluents
                .iter()
                .find(|f| f.node == q.object && f.subject == q.subject && f.property == q.predicate)
            {
                print_fluent(f, out)?;
                printed += 1;
                continue;
            }
        }
        writeln!(out, "{}", q.canonical_line())?;
        printed += 1;
    }
    if printed == 0 {
        writeln!(out, "no matches")?;
    }
    Ok(())
}
