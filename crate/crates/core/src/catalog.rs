//! Built-in links with known invariants.

use serde::Serialize;

use crate::braid::BraidWord;
use crate::error::{Error, Result};
use crate::labels::gcd;

/// A known value `|h_{N,a}| = abs_h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expectation {
    #[serde(rename = "N")]
    pub n: u32,
    pub labels: Vec<u32>,
    pub abs_h: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub braid: BraidWord,
    pub components: usize,
    pub expected: Vec<Expectation>,
    pub note: String,
}

pub fn hopf() -> BraidWord {
    torus2(1)
}

/// `σ_1² σ_2² ⋯ σ_{n-1}²` in `B_n`.
pub fn chain(n: usize) -> BraidWord {
    let letters = (1..n as i32).flat_map(|g| [g, g]).collect();
    BraidWord::new(n, letters).expect("valid generators")
}

/// `σ_1^{2q}` in `B_2`, the torus link `T(2, 2q)`.
pub fn torus2(q: usize) -> BraidWord {
    BraidWord::new(2, vec![1; 2 * q]).expect("valid generators")
}

pub fn unlink(n: usize) -> BraidWord {
    BraidWord::identity(n)
}

/// Side-by-side juxtaposition of two braids.
pub fn split(left: &BraidWord, right: &BraidWord) -> BraidWord {
    left.juxtapose(right)
}

fn entry(name: String, braid: BraidWord, expected: Vec<Expectation>, note: &str) -> CatalogEntry {
    CatalogEntry { name, components: braid.component_count(), braid, expected, note: note.to_string() }
}

fn hopf_expectations() -> Vec<Expectation> {
    (2..=5u32)
        .flat_map(|n| (1..n).filter(move |&d| gcd(d as u64, n as u64) == 1).map(move |d| (n, d)))
        .map(|(n, d)| Expectation { n, labels: vec![d, n - d], abs_h: 1 })
        .collect()
}

fn build(name: &str) -> Option<CatalogEntry> {
    let name = name.trim();
    if name == "hopf" {
        return Some(entry("hopf".into(), hopf(), hopf_expectations(), "unique clock/shift class"));
    }
    if let Some(arg) = call_arg(name, "chain") {
        let n: usize = arg.parse().ok().filter(|&n| n >= 2)?;
        let expected = if n > 2 {
            vec![Expectation { n: n as u32, labels: vec![1; n], abs_h: 0 }]
        } else {
            hopf_expectations()
        };
        return Some(entry(format!("chain({n})"), chain(n), expected, "torus families of fixed points"));
    }
    if let Some(arg) = call_arg(name, "torus2") {
        let q: usize = arg.parse().ok().filter(|&q| q >= 1)?;
        let expected = vec![Expectation { n: 2, labels: vec![1, 1], abs_h: q as i64 }];
        return Some(entry(format!("torus2({q})"), torus2(q), expected, "T(2,2q), linking number q"));
    }
    if let Some(arg) = call_arg(name, "unlink") {
        let n: usize = arg.parse().ok().filter(|&n| n >= 1)?;
        let expected = if n >= 2 {
            let mut labels = vec![0; n];
            labels[0] = 1;
            labels[1] = 1;
            vec![Expectation { n: 2, labels, abs_h: 0 }]
        } else {
            Vec::new()
        };
        return Some(entry(format!("unlink({n})"), unlink(n), expected, "no twisted fixed points"));
    }
    if let Some(arg) = call_arg(name, "split") {
        let (a, b) = split_args(arg)?;
        let (left, right) = (build(a)?, build(b)?);
        let braid = split(&left.braid, &right.braid);
        let mut labels = vec![0u32; braid.component_count()];
        // odd label sum on the left block
        labels[0] = 1;
        labels[left.components] = 1;
        let expected = vec![Expectation { n: 2, labels, abs_h: 0 }];
        return Some(entry(format!("split({},{})", left.name, right.name), braid, expected, "split link"));
    }
    None
}

/// `"chain(3)"` or `"chain3"` → `"3"`.
fn call_arg<'a>(name: &'a str, head: &str) -> Option<&'a str> {
    let rest = name.strip_prefix(head)?;
    if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        return Some(inner.trim());
    }
    (!rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())).then_some(rest)
}

/// Splits `"a,b"` at the top-level comma.
fn split_args(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

/// Looks up a catalog entry by name, e.g. `hopf`, `chain(4)`, `torus2(3)`,
/// `unlink(2)`, `split(hopf,hopf)`.
pub fn lookup(name: &str) -> Result<CatalogEntry> {
    build(name).ok_or_else(|| Error::UnknownCatalog(name.to_string()))
}

/// The standard entries.
pub fn catalog() -> Vec<CatalogEntry> {
    ["hopf", "chain(3)", "chain(4)", "torus2(1)", "torus2(2)", "torus2(3)", "torus2(4)", "unlink(2)", "unlink(3)", "split(hopf,hopf)"]
        .iter()
        .map(|n| build(n).expect("catalog names parse"))
        .collect()
}
