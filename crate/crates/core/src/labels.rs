//! Allowable labels, compatible central twists `ε`, and the recalibration
//! vector relating two compatible twists.
//!
//! Twists are stored as integer exponents mod `N`: `ε_i = ω^{e_i}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::braid::{CycleDecomposition, Permutation};
use crate::error::{Error, Result};

/// Rank `N` together with one label per link component.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSpec {
    #[serde(rename = "N")]
    pub n: u32,
    pub labels: Vec<u32>,
}

/// One of the three allowability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// Some `a_i` outside `0..N`.
    Range,
    /// `gcd(a)` shares a factor with `N`.
    Gcd,
    /// `Σ a_i` not divisible by `N`.
    Sum,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range => write!(f, "condition (i): labels must lie in 0..N"),
            Violation::Gcd => write!(f, "condition (ii): gcd of labels must be coprime to N"),
            Violation::Sum => write!(f, "condition (iii): sum of labels must be a multiple of N"),
        }
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl LabelSpec {
    pub fn new(n: u32, labels: Vec<u32>) -> Self {
        LabelSpec { n, labels }
    }

    /// Every violated condition, in order; empty iff the labels are allowable.
    pub fn violations(&self) -> Vec<Violation> {
        let n = self.n as u64;
        let mut out = Vec::new();
        if self.labels.iter().any(|&a| a as u64 >= n) {
            out.push(Violation::Range);
        }
        let g = self.labels.iter().fold(0u64, |g, &a| gcd(g, a as u64));
        if gcd(g, n) != 1 {
            out.push(Violation::Gcd);
        }
        if self.labels.iter().map(|&a| a as u64).sum::<u64>() % n != 0 {
            out.push(Violation::Sum);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("rank N must be at least 2, got {}", self.n)));
        }
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLabels(v))
        }
    }

    pub fn is_allowable(&self) -> bool {
        self.n >= 2 && self.violations().is_empty()
    }

    /// True iff every label is coprime to `N`, the case in which fixed points
    /// automatically have all coordinates in `C_A`.
    pub fn all_coprime(&self) -> bool {
        self.labels.iter().all(|&a| gcd(a as u64, self.n as u64) == 1)
    }
}

impl fmt::Display for LabelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.labels.iter().map(u32::to_string).collect();
        write!(f, "N={} a={}", self.n, a.join(","))
    }
}

impl FromStr for LabelSpec {
    type Err = Error;

    /// Parses `"N=3 a=1,1,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut labels = None;
        for tok in s.split_whitespace() {
            if let Some(v) = tok.strip_prefix("N=") {
                n = Some(v.parse().map_err(|_| Error::Parse(format!("bad rank `{v}`")))?);
            } else if let Some(v) = tok.strip_prefix("a=") {
                labels = Some(parse_list(v)?);
            } else {
                return Err(Error::Parse(format!("unexpected token `{tok}`")));
            }
        }
        match (n, labels) {
            (Some(n), Some(labels)) => Ok(LabelSpec { n, labels }),
            _ => Err(Error::Parse(format!("expected `N=<rank> a=<labels>`, got `{s}`"))),
        }
    }
}

pub(crate) fn parse_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad integer `{t}`"))))
        .collect()
}

/// Exponents `e_i` of the twists `ε_i = ω^{e_i}`, all in `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EpsilonVector {
    n: u32,
    exponents: Vec<u32>,
}

impl EpsilonVector {
    pub fn new(n: u32, exponents: Vec<u32>) -> Self {
        let exponents = exponents.into_iter().map(|e| e % n).collect();
        EpsilonVector { n, exponents }
    }

    pub fn trivial(n: u32, k: usize) -> Self {
        EpsilonVector { n, exponents: vec![0; k] }
    }

    pub fn rank(&self) -> u32 {
        self.n
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Parses `"0,0,1"` (or `"eps=0,0,1"`).
    pub fn parse(n: u32, s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("eps=").unwrap_or(s);
        Ok(EpsilonVector::new(n, parse_list(s)?))
    }
}

fn check_counts(cycles: &CycleDecomposition, spec: &LabelSpec) -> Result<()> {
    if cycles.len() != spec.labels.len() {
        return Err(Error::ComponentMismatch { labels: spec.labels.len(), components: cycles.len() });
    }
    Ok(())
}

/// Canonical compatible twist: the whole label `a_j` sits on the last strand of
/// cycle `I_j`.
pub fn compatible_epsilon(cycles: &CycleDecomposition, spec: &LabelSpec) -> Result<EpsilonVector> {
    spec.validate()?;
    check_counts(cycles, spec)?;
    let mut e = vec![0u32; cycles.strand_count()];
    for (cycle, &a) in cycles.cycles().iter().zip(&spec.labels) {
        let last = *cycle.last().expect("cycles are nonempty");
        e[last - 1] = a % spec.n;
    }
    Ok(EpsilonVector { n: spec.n, exponents: e })
}

/// All compatible twists for the given cycles (for small enumerations).
pub fn all_compatible_epsilons(cycles: &CycleDecomposition, spec: &LabelSpec) -> Result<Vec<EpsilonVector>> {
    spec.validate()?;
    check_counts(cycles, spec)?;
    let n = spec.n;
    let k = cycles.strand_count();
    let mut out = vec![vec![0u32; k]];
    for (cycle, &a) in cycles.cycles().iter().zip(&spec.labels) {
        let (last, free) = cycle.split_last().expect("cycles are nonempty");
        let mut next = Vec::new();
        for base in &out {
            let mut counters = vec![0u32; free.len()];
            loop {
                let mut e = base.clone();
                let mut s = 0u32;
                for (&i, &c) in free.iter().zip(&counters) {
                    e[i - 1] = c;
                    s += c;
                }
                e[*last - 1] = (a + n * (free.len() as u32 + 1) - s % n) % n;
                next.push(e);
                // odometer over the free strands
                let mut pos = 0;
                while pos < counters.len() {
                    counters[pos] += 1;
                    if counters[pos] < n {
                        break;
                    }
                    counters[pos] = 0;
                    pos += 1;
                }
                if pos == counters.len() {
                    break;
                }
            }
        }
        out = next;
    }
    Ok(out.into_iter().map(|e| EpsilonVector { n, exponents: e }).collect())
}

/// `Σ_{i ∈ I_j} e_i ≡ a_j (mod N)` for every cycle.
pub fn verify_epsilon(eps: &EpsilonVector, cycles: &CycleDecomposition, spec: &LabelSpec) -> Result<bool> {
    check_counts(cycles, spec)?;
    if eps.len() != cycles.strand_count() {
        return Err(Error::EpsilonLength { found: eps.len(), expected: cycles.strand_count() });
    }
    if eps.n != spec.n {
        return Ok(false);
    }
    let n = spec.n;
    Ok(cycles.cycles().iter().zip(&spec.labels).all(|(cycle, &a)| {
        cycle.iter().map(|&i| eps.exponents[i - 1]).sum::<u32>() % n == a % n
    }))
}

/// Exponents `d_i` of `δ_i = ω^{d_i}`, zero at the first strand of each cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaVector {
    n: u32,
    exponents: Vec<u32>,
}

impl DeltaVector {
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn is_zero(&self) -> bool {
        self.exponents.iter().all(|&d| d == 0)
    }
}

/// The vector `δ` with `δ_{σ̄(j)} = δ_j ε_j ε'_j⁻¹`, `δ = 1` at cycle starts.
/// Multiplying a fixed point of `εσ` by `δ` gives a fixed point of `ε'σ`.
pub fn recalibration_delta(
    eps: &EpsilonVector,
    eps2: &EpsilonVector,
    perm: &Permutation,
    cycles: &CycleDecomposition,
) -> Result<DeltaVector> {
    let k = perm.size();
    for e in [eps, eps2] {
        if e.len() != k {
            return Err(Error::EpsilonLength { found: e.len(), expected: k });
        }
    }
    if eps.n != eps2.n {
        return Err(Error::IncompatibleEpsilon);
    }
    let n = eps.n;
    let step = |j: usize, d: u32| (d + eps.exponents[j - 1] + n - eps2.exponents[j - 1]) % n;
    let mut d = vec![0u32; k];
    for cycle in cycles.cycles() {
        let start = cycle[0];
        let mut j = start;
        loop {
            let next = perm.image(j);
            let val = step(j, d[j - 1]);
            if next == start {
                if val != 0 {
                    return Err(Error::InconsistentRecalibration(start));
                }
                break;
            }
            d[next - 1] = val;
            j = next;
        }
    }
    Ok(DeltaVector { n, exponents: d })
}

/// True iff the label sum over `first_block` (1-based component indices) is
/// not a multiple of `N`; in that case a split braid with that block on one
/// side has no twisted fixed points.
pub fn split_obstruction(spec: &LabelSpec, first_block: &[usize]) -> bool {
    let s: u64 = first_block.iter().map(|&j| spec.labels[j - 1] as u64).sum();
    !s.is_multiple_of(spec.n as u64)
}
