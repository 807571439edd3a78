//! Braid words, their permutations, and the Artin action on free groups.
//!
//! Strands, free generators and cycle indices are 1-based throughout, matching
//! the usual `σ_i`/`x_i` notation. A braid `b` acts on the right on `F_k`; for a
//! word `b = l_1 l_2 ⋯ l_m` the image `x_i^b` is obtained by applying the
//! substitution of `l_m` first and then substituting the images of the shorter
//! prefix, so that `x_3^{σ1σ2} = x_3⁻¹x_2⁻¹x_1x_2x_3`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A word in the Artin generators of `B_k`. Positive letters are `σ_i`,
/// negative letters `σ_i⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BraidRepr", into = "BraidRepr")]
pub struct BraidWord {
    strands: usize,
    letters: Vec<i32>,
}

#[derive(Serialize, Deserialize)]
struct BraidRepr {
    strands: usize,
    letters: Vec<i32>,
}

impl TryFrom<BraidRepr> for BraidWord {
    type Error = Error;
    fn try_from(r: BraidRepr) -> Result<Self> {
        BraidWord::new(r.strands, r.letters)
    }
}

impl From<BraidWord> for BraidRepr {
    fn from(b: BraidWord) -> Self {
        BraidRepr { strands: b.strands, letters: b.letters }
    }
}

/// Sign of a stabilization letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// A split braid: every letter lies strictly left or strictly right of strand
/// boundary `k1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub k1: usize,
    pub left: BraidWord,
    pub right: BraidWord,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<i32>) -> Result<Self> {
        if strands == 0 {
            return Err(Error::Parse("a braid needs at least one strand".into()));
        }
        for &l in &letters {
            let g = l.unsigned_abs() as usize;
            if l == 0 || g >= strands {
                return Err(Error::GeneratorOutOfRange { index: l as i64, strands });
            }
        }
        Ok(BraidWord { strands, letters })
    }

    pub fn identity(strands: usize) -> Self {
        assert!(strands > 0);
        BraidWord { strands, letters: Vec::new() }
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn compose(&self, other: &BraidWord) -> Result<BraidWord> {
        self.check_same_strands(other)?;
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(BraidWord { strands: self.strands, letters })
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    fn check_same_strands(&self, other: &BraidWord) -> Result<()> {
        if self.strands != other.strands {
            return Err(Error::StrandMismatch { left: self.strands, right: other.strands });
        }
        Ok(())
    }

    /// The permutation `σ̄` with `x_i^σ` conjugate to `x_{σ̄(i)}`.
    pub fn induced_permutation(&self) -> Permutation {
        // p_{P·l} = p_P ∘ p_l, so the rightmost transposition acts first.
        let mut images: Vec<usize> = (1..=self.strands).collect();
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            // new[i] = old[t(i)] where t swaps g, g+1
            images.swap(g - 1, g);
        }
        Permutation { images }
    }

    pub fn cycles(&self) -> CycleDecomposition {
        self.induced_permutation().cycle_decomposition()
    }

    /// Number of components of the closure.
    pub fn component_count(&self) -> usize {
        self.cycles().len()
    }

    /// Images `x_1^b, …, x_k^b` of all free generators.
    pub fn generator_images(&self) -> Vec<FreeWord> {
        let k = self.strands;
        let mut images: Vec<FreeWord> = (1..=k).map(|i| FreeWord::generator(k, i)).collect();
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            let (a, b) = (images[g - 1].clone(), images[g].clone());
            if l > 0 {
                // x_g ↦ x_{g+1},  x_{g+1} ↦ x_{g+1}⁻¹ x_g x_{g+1}
                images[g] = b.inverse().concat(&a).concat(&b);
                images[g - 1] = b;
            } else {
                // x_g ↦ x_g x_{g+1} x_g⁻¹,  x_{g+1} ↦ x_g
                images[g - 1] = a.concat(&b).concat(&a.inverse());
                images[g] = a;
            }
        }
        images
    }

    pub fn act_on_generator(&self, i: usize) -> Result<FreeWord> {
        self.check_strand(i)?;
        Ok(self.generator_images().swap_remove(i - 1))
    }

    /// Homomorphic extension of the generator action.
    pub fn act_on_word(&self, w: &FreeWord) -> Result<FreeWord> {
        if w.rank() != self.strands {
            return Err(Error::AlphabetMismatch { found: w.rank(), expected: self.strands });
        }
        Ok(w.substitute(&self.generator_images()))
    }

    fn check_strand(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.strands {
            return Err(Error::StrandOutOfRange { index: i, strands: self.strands });
        }
        Ok(())
    }

    /// The word `w` with `x_i^b = w · x_{σ̄(i)} · w⁻¹`.
    pub fn conjugator_word(&self, i: usize) -> Result<FreeWord> {
        self.check_strand(i)?;
        let image = self.act_on_generator(i)?;
        let target = self.induced_permutation().image(i) as i32;
        conjugator_of(&image, target).ok_or_else(|| Error::NotConjugateForm {
            index: i,
            word: image.to_string(),
        })
    }

    /// Product of the conjugator words along cycle `j`, starting at the cycle's
    /// first strand. At a fixed point of `εσ` this satisfies
    /// `X_{i₁} = ω^{a_j} W X_{i₁} W⁻¹`.
    pub fn longitude_word(&self, j: usize) -> Result<FreeWord> {
        let cycles = self.cycles();
        let cycle = cycles
            .cycle(j)
            .ok_or(Error::ComponentMismatch { labels: j, components: cycles.len() })?;
        let mut w = FreeWord::identity(self.strands);
        for &i in cycle {
            w = w.concat(&self.conjugator_word(i)?);
        }
        Ok(w)
    }

    /// Type 1 Markov move: `g⁻¹ · b · g`.
    pub fn markov_conjugate(&self, g: &BraidWord) -> Result<BraidWord> {
        self.check_same_strands(g)?;
        g.inverse().compose(self)?.compose(g)
    }

    /// Type 2 Markov move: `b · σ_k^{±1}` in `B_{k+1}`.
    pub fn markov_stabilize(&self, sign: Sign) -> BraidWord {
        let mut letters = self.letters.clone();
        letters.push(sign.as_i32() * self.strands as i32);
        BraidWord { strands: self.strands + 1, letters }
    }

    /// All strand boundaries `k1` (1 ≤ k1 < k) at which the word splits.
    pub fn split_points(&self) -> Vec<usize> {
        (1..self.strands)
            .filter(|&k1| {
                self.letters.iter().all(|&l| {
                    let g = l.unsigned_abs() as usize;
                    g != k1
                })
            })
            .collect()
    }

    /// The first syntactic split, if any.
    pub fn split_decomposition(&self) -> Option<Split> {
        let k1 = *self.split_points().first()?;
        let left = self.letters.iter().copied().filter(|l| (l.unsigned_abs() as usize) < k1).collect();
        let right = self
            .letters
            .iter()
            .filter(|l| (l.unsigned_abs() as usize) > k1)
            .map(|&l| l.signum() * (l.abs() - k1 as i32))
            .collect();
        Some(Split {
            k1,
            left: BraidWord { strands: k1, letters: left },
            right: BraidWord { strands: self.strands - k1, letters: right },
        })
    }

    /// Juxtapose two braids side by side.
    pub fn juxtapose(&self, right: &BraidWord) -> BraidWord {
        let shift = self.strands as i32;
        let mut letters = self.letters.clone();
        letters.extend(right.letters.iter().map(|&l| l.signum() * (l.abs() + shift)));
        BraidWord { strands: self.strands + right.strands, letters }
    }
}

fn conjugator_of(image: &FreeWord, target: i32) -> Option<FreeWord> {
    let letters = image.letters();
    if letters.len().is_multiple_of(2) {
        return None;
    }
    let half = letters.len() / 2;
    if letters[half] != target {
        return None;
    }
    let prefix = &letters[..half];
    let suffix = &letters[half + 1..];
    if prefix.iter().rev().map(|l| -l).ne(suffix.iter().copied()) {
        return None;
    }
    Some(FreeWord { rank: image.rank(), letters: prefix.to_vec() })
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}:", self.strands)?;
        for l in &self.letters {
            write!(f, " {l}")?;
        }
        Ok(())
    }
}

impl FromStr for BraidWord {
    type Err = Error;

    /// Parses `"B3: 1 1 2 2"`. Negative integers are inverse generators.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing `B<k>:` header in `{s}`")))?;
        let k: usize = head
            .trim()
            .strip_prefix('B')
            .and_then(|k| k.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header `{head}`")))?;
        let letters = body
            .split_whitespace()
            .map(|t| t.parse::<i32>().map_err(|_| Error::Parse(format!("bad letter `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        BraidWord::new(k, letters)
    }
}

/// A permutation of `{1..k}`, stored as its image table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Permutation { images: (1..=k).collect() }
    }

    /// Builds a permutation from a 1-based image table.
    pub fn from_images(images: Vec<usize>) -> Option<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &i in &images {
            if i == 0 || i > k || std::mem::replace(&mut seen[i - 1], true) {
                return None;
            }
        }
        Some(Permutation { images })
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &Permutation) -> Permutation {
        Permutation { images: other.images.iter().map(|&i| self.image(i)).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j - 1] = i + 1;
        }
        Permutation { images: inv }
    }

    /// Cycles ordered by smallest element, each started at its smallest
    /// element and followed along the permutation.
    pub fn cycle_decomposition(&self) -> CycleDecomposition {
        let k = self.images.len();
        let mut seen = vec![false; k];
        let mut cycles = Vec::new();
        for start in 1..=k {
            if seen[start - 1] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start - 1] = true;
            let mut i = self.image(start);
            while i != start {
                seen[i - 1] = true;
                cycle.push(i);
                i = self.image(i);
            }
            cycles.push(cycle);
        }
        CycleDecomposition { cycles }
    }
}

/// The cycles `I_1, …, I_n` of a permutation; one per link component.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CycleDecomposition {
    cycles: Vec<Vec<usize>>,
}

impl CycleDecomposition {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// The 1-based cycle `j`.
    pub fn cycle(&self, j: usize) -> Option<&[usize]> {
        j.checked_sub(1).and_then(|j| self.cycles.get(j)).map(Vec::as_slice)
    }

    pub fn strand_count(&self) -> usize {
        self.cycles.iter().map(Vec::len).sum()
    }

    /// 1-based component containing `strand`.
    pub fn component_of(&self, strand: usize) -> Option<usize> {
        self.cycles.iter().position(|c| c.contains(&strand)).map(|j| j + 1)
    }
}

/// A reduced word in the free generators `x_1..x_rank`. Letters are `±i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeWord {
    rank: usize,
    letters: Vec<i32>,
}

impl FreeWord {
    pub fn new(rank: usize, letters: Vec<i32>) -> Result<Self> {
        for &l in &letters {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(Error::GeneratorOutOfRange { index: l as i64, strands: rank });
            }
        }
        Ok(FreeWord { rank, letters: reduce(letters) })
    }

    pub fn identity(rank: usize) -> Self {
        FreeWord { rank, letters: Vec::new() }
    }

    pub fn generator(rank: usize, i: usize) -> Self {
        assert!(i >= 1 && i <= rank);
        FreeWord { rank, letters: vec![i as i32] }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord { rank: self.rank, letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    pub fn concat(&self, other: &FreeWord) -> FreeWord {
        debug_assert_eq!(self.rank, other.rank);
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            if letters.last() == Some(&-l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        FreeWord { rank: self.rank, letters }
    }

    /// Commutator `a b a⁻¹ b⁻¹`.
    pub fn commutator(a: &FreeWord, b: &FreeWord) -> FreeWord {
        a.concat(b).concat(&a.inverse()).concat(&b.inverse())
    }

    /// Replace each generator `x_j` by `images[j-1]`.
    pub fn substitute(&self, images: &[FreeWord]) -> FreeWord {
        let rank = images.first().map_or(self.rank, FreeWord::rank);
        let mut out = FreeWord::identity(rank);
        for &l in &self.letters {
            let img = &images[l.unsigned_abs() as usize - 1];
            out = if l > 0 { out.concat(img) } else { out.concat(&img.inverse()) };
        }
        out
    }
}

fn reduce(letters: Vec<i32>) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|&l| if l > 0 { format!("x{l}") } else { format!("x{}^-1", -l) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}
