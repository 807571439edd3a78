//! The twisted braid action `εσ` on `Q_k = C_A^k`, its residual, and a
//! Levenberg–Marquardt search for fixed points with random restarts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::braid::{BraidWord, FreeWord};
use crate::error::{Error, Result};
use crate::labels::EpsilonVector;
use crate::sun::{
    canonical_words, fingerprint, frobenius_sq, identity, omega_pow, project_to_sun, random_class_point_rng,
    random_su, sup_distance, ClassPoint, CMat, SkewTracelessFrame,
};

/// A point of `Q_k`: one class point per strand.
#[derive(Debug, Clone, PartialEq)]
pub struct RepTuple {
    points: Vec<ClassPoint>,
    matrices: Vec<CMat>,
}

impl RepTuple {
    pub fn new(points: Vec<ClassPoint>) -> Self {
        let matrices = points.iter().map(|p| p.matrix().clone()).collect();
        RepTuple { points, matrices }
    }

    /// Wraps matrices that are already in `C_A`.
    pub fn from_matrices(ms: &[CMat], tol: f64) -> Result<Self> {
        let points = ms
            .iter()
            .map(|m| ClassPoint::from_matrix(m, tol).ok_or_else(|| Error::Config("coordinate is not in C_A".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(RepTuple::new(points))
    }

    pub fn random<R: rand::Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Self {
        RepTuple::new((0..k).map(|_| random_class_point_rng(n, rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn points(&self) -> &[ClassPoint] {
        &self.points
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    /// Simultaneous conjugation `g X_i g†`.
    pub fn conjugate(&self, g: &CMat) -> RepTuple {
        RepTuple::new(self.points.iter().map(|p| p.conjugate(g)).collect())
    }

    /// Orthonormal tangent frame of `Q_k`, as generators per coordinate.
    pub fn tangent_generators(&self) -> Vec<Vec<CMat>> {
        self.points.iter().map(ClassPoint::tangent_generators).collect()
    }

    /// Moves along `Σ c_{j,b} u_{j,b}` by conjugation in each coordinate.
    pub fn displace(&self, gens: &[Vec<CMat>], coeffs: &[f64]) -> RepTuple {
        let mut offset = 0;
        let points = self
            .points
            .iter()
            .zip(gens)
            .map(|(p, g)| {
                let n = p.rank();
                let mut u = CMat::zeros(n, n);
                for (b, gen) in g.iter().enumerate() {
                    u += gen * Complex64::new(coeffs[offset + b], 0.0);
                }
                offset += g.len();
                p.retract(&u)
            })
            .collect();
        RepTuple::new(points)
    }
}

/// How a tangent direction `u` perturbs a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    /// `δX = [u, X]` (motion inside a conjugacy class).
    Conjugation,
    /// `δX = u X` (motion in `SU(N)`).
    LeftTranslation,
}

/// The map `X ↦ (ω^{e_i} · x_i^b(X))_i`.
#[derive(Debug, Clone)]
pub struct TwistedMap {
    n: usize,
    images: Vec<FreeWord>,
    phases: Vec<Complex64>,
}

impl TwistedMap {
    pub fn new(b: &BraidWord, eps: &EpsilonVector) -> Result<Self> {
        if eps.len() != b.strands() {
            return Err(Error::EpsilonLength { found: eps.len(), expected: b.strands() });
        }
        let n = eps.rank();
        Ok(TwistedMap {
            n: n as usize,
            images: b.generator_images(),
            phases: eps.exponents().iter().map(|&e| omega_pow(n, e as i64)).collect(),
        })
    }

    pub fn strands(&self) -> usize {
        self.images.len()
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn images(&self) -> &[FreeWord] {
        &self.images
    }

    fn check(&self, x: &[CMat]) -> Result<()> {
        if x.len() != self.strands() {
            return Err(Error::TupleLength { found: x.len(), expected: self.strands() });
        }
        if let Some(m) = x.iter().find(|m| m.nrows() != self.n || m.ncols() != self.n) {
            return Err(Error::Config(format!("expected {0}x{0} matrices, got {1}x{2}", self.n, m.nrows(), m.ncols())));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[CMat]) -> Result<Vec<CMat>> {
        self.check(x)?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &[CMat]) -> Vec<CMat> {
        self.images
            .iter()
            .zip(&self.phases)
            .map(|(w, &ph)| crate::sun::eval_word(x, w) * ph)
            .collect()
    }

    /// `Σ_i ‖X_i − (εσ)(X)_i‖²`.
    pub fn residual(&self, x: &[CMat]) -> Result<f64> {
        self.check(x)?;
        Ok(self.residual_unchecked(x))
    }

    fn residual_unchecked(&self, x: &[CMat]) -> f64 {
        self.apply_unchecked(x).iter().zip(x).map(|(f, xi)| frobenius_sq(&(xi - f))).sum()
    }

    /// First variations of every output coordinate along every generator:
    /// `out[c][i] = δ(εσ)(X)_i` for column `c` enumerating `(j, b)` in order.
    pub fn variations(&self, x: &[CMat], gens: &[Vec<CMat>], mode: Variation) -> Vec<Vec<CMat>> {
        let n = self.n;
        let k = self.strands();
        let mut offsets = Vec::with_capacity(k);
        let mut cols = 0;
        for g in gens {
            offsets.push(cols);
            cols += g.len();
        }
        let mut out = vec![vec![CMat::zeros(n, n); k]; cols];
        for (i, (w, &ph)) in self.images.iter().zip(&self.phases).enumerate() {
            let mut pre = Vec::with_capacity(w.len() + 1);
            pre.push(identity(n));
            for &l in w.letters() {
                let m = &x[l.unsigned_abs() as usize - 1];
                let next = if l > 0 { pre.last().unwrap() * m } else { pre.last().unwrap() * m.adjoint() };
                pre.push(next);
            }
            let whole = pre.last().unwrap().clone() * ph;
            let mut acc = vec![CMat::zeros(n, n); cols];
            for (p, &l) in w.letters().iter().enumerate() {
                let j = l.unsigned_abs() as usize - 1;
                let (before, after) = (&pre[p], &pre[p + 1]);
                for (b, u) in gens[j].iter().enumerate() {
                    let c = &mut acc[offsets[j] + b];
                    match mode {
                        Variation::Conjugation => {
                            *c += before * u * before.adjoint() - after * u * after.adjoint();
                        }
                        Variation::LeftTranslation if l > 0 => *c += before * u * before.adjoint(),
                        Variation::LeftTranslation => *c -= after * u * after.adjoint(),
                    }
                }
            }
            for (col, a) in acc.into_iter().enumerate() {
                out[col][i] = a * &whole;
            }
        }
        out
    }

    /// Real residual vector `(X_i − f_i)` and its Jacobian with respect to
    /// the generator coordinates.
    pub fn residual_jacobian(
        &self,
        x: &[CMat],
        gens: &[Vec<CMat>],
        mode: Variation,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let k = self.strands();
        let fx = self.apply_unchecked(x);
        let mut r = DVector::zeros(2 * k * n * n);
        for i in 0..k {
            write_real(&(&x[i] - &fx[i]), &mut r.as_mut_slice()[i * 2 * n * n..(i + 1) * 2 * n * n]);
        }
        let vars = self.variations(x, gens, mode);
        let mut jac = DMatrix::zeros(2 * k * n * n, vars.len());
        let mut col = 0;
        for (j, g) in gens.iter().enumerate() {
            for u in g {
                let own = match mode {
                    Variation::Conjugation => u * &x[j] - &x[j] * u,
                    Variation::LeftTranslation => u * &x[j],
                };
                let mut column = jac.column_mut(col);
                let slice = column.as_mut_slice();
                for i in 0..k {
                    let block = &mut slice[i * 2 * n * n..(i + 1) * 2 * n * n];
                    let d = if i == j { &own - &vars[col][i] } else { -&vars[col][i] };
                    write_real(&d, block);
                }
                col += 1;
            }
        }
        (r, jac)
    }
}

/// Row-major `(re, im)` pairs of a matrix.
pub(crate) fn write_real(m: &CMat, out: &mut [f64]) {
    let n = m.ncols();
    for r in 0..m.nrows() {
        for c in 0..n {
            let z = m[(r, c)];
            out[2 * (r * n + c)] = z.re;
            out[2 * (r * n + c) + 1] = z.im;
        }
    }
}

pub fn apply_twisted_action(b: &BraidWord, eps: &EpsilonVector, x: &[CMat]) -> Result<Vec<CMat>> {
    TwistedMap::new(b, eps)?.apply(x)
}

pub fn residual(b: &BraidWord, eps: &EpsilonVector, x: &[CMat]) -> Result<f64> {
    TwistedMap::new(b, eps)?.residual(x)
}

/// Tangent-frame gradient `∇_{(j,b)} residual` on `Q_k`.
pub fn residual_gradient(map: &TwistedMap, x: &RepTuple) -> DVector<f64> {
    let (r, jac) = map.residual_jacobian(x.matrices(), &x.tangent_generators(), Variation::Conjugation);
    jac.transpose() * r * 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol_converge: f64,
    pub tol_reject: f64,
    pub seed: u64,
    pub dedup_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::for_strands(2)
    }
}

impl SolverConfig {
    /// Defaults with `200·k` restarts.
    pub fn for_strands(k: usize) -> Self {
        SolverConfig {
            restarts: 200 * k.max(1),
            max_iters: 500,
            tol_converge: 1e-18,
            tol_reject: 1e-6,
            seed: 0,
            dedup_tol: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.tol_converge > 0.0 && self.tol_reject > 0.0 && self.dedup_tol > 0.0;
        if !positive || self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::Config("solver counts and tolerances must be positive".into()));
        }
        if self.tol_converge >= self.tol_reject {
            return Err(Error::Config("tol_converge must be below tol_reject".into()));
        }
        Ok(())
    }

    /// Sets one field from a `key = value` pair; returns `false` for keys
    /// that are not solver fields.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
        match key {
            "restarts" => self.restarts = value.parse().map_err(|_| bad())?,
            "max_iters" => self.max_iters = value.parse().map_err(|_| bad())?,
            "tol_converge" => self.tol_converge = value.parse().map_err(|_| bad())?,
            "tol_reject" => self.tol_reject = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "dedup_tol" => self.dedup_tol = value.parse().map_err(|_| bad())?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Converged,
    /// Residual above `tol_reject`.
    Stalled,
    /// Residual between the two thresholds.
    Unresolved,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RestartStats {
    pub restarts: usize,
    pub converged: usize,
    pub stalled: usize,
    pub unresolved: usize,
    /// Smallest final residual among restarts that did not converge.
    pub min_unconverged_residual: Option<f64>,
}

impl RestartStats {
    fn record(&mut self, outcome: Outcome, res: f64) {
        self.restarts += 1;
        match outcome {
            Outcome::Converged => self.converged += 1,
            Outcome::Stalled => self.stalled += 1,
            Outcome::Unresolved => self.unresolved += 1,
        }
        if outcome != Outcome::Converged {
            let m = self.min_unconverged_residual.get_or_insert(res);
            *m = m.min(res);
        }
    }
}

/// One conjugacy class of fixed points.
#[derive(Debug, Clone)]
pub struct Solution {
    pub tuple: RepTuple,
    pub residual: f64,
    pub fingerprint: Vec<f64>,
    /// Number of converged restarts that landed in this class.
    pub hits: usize,
}

#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub solutions: Vec<Solution>,
    pub stats: RestartStats,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

/// A point in a search space the Gauss–Newton loop can move through.
trait Chart: Clone {
    const MODE: Variation;
    fn matrices(&self) -> &[CMat];
    fn generators(&self) -> Vec<Vec<CMat>>;
    fn displace(&self, gens: &[Vec<CMat>], coeffs: &[f64]) -> Self;
}

impl Chart for RepTuple {
    const MODE: Variation = Variation::Conjugation;
    fn matrices(&self) -> &[CMat] {
        RepTuple::matrices(self)
    }
    fn generators(&self) -> Vec<Vec<CMat>> {
        self.tangent_generators()
    }
    fn displace(&self, gens: &[Vec<CMat>], coeffs: &[f64]) -> Self {
        RepTuple::displace(self, gens, coeffs)
    }
}

/// A tuple in `SU(N)^k` without the class constraint.
#[derive(Debug, Clone)]
struct GroupTuple(Vec<CMat>);

impl Chart for GroupTuple {
    const MODE: Variation = Variation::LeftTranslation;
    fn matrices(&self) -> &[CMat] {
        &self.0
    }
    fn generators(&self) -> Vec<Vec<CMat>> {
        let n = self.0[0].nrows();
        vec![SkewTracelessFrame::new(n).elements().to_vec(); self.0.len()]
    }
    fn displace(&self, gens: &[Vec<CMat>], coeffs: &[f64]) -> Self {
        let mut offset = 0;
        let out = self
            .0
            .iter()
            .zip(gens)
            .map(|(x, g)| {
                let mut u = CMat::zeros(x.nrows(), x.nrows());
                for (b, gen) in g.iter().enumerate() {
                    u += gen * Complex64::new(coeffs[offset + b], 0.0);
                }
                offset += g.len();
                let y = crate::sun::exp_skew(&u) * x;
                project_to_sun(&y).unwrap_or(y)
            })
            .collect();
        GroupTuple(out)
    }
}

/// Extra accepted steps taken after convergence to tighten the residual.
const POLISH_STEPS: usize = 6;

fn levenberg_marquardt<C: Chart>(map: &TwistedMap, start: C, cfg: &SolverConfig) -> (C, f64, Outcome) {
    let mut x = start;
    let mut cost = map.residual_unchecked(x.matrices());
    let mut lambda = 1e-3;
    let mut polish = 0;
    let mut history: Vec<f64> = Vec::new();
    for _ in 0..cfg.max_iters {
        if cost < cfg.tol_converge {
            if polish >= POLISH_STEPS || cost < 1e-30 {
                break;
            }
            polish += 1;
        }
        let gens = x.generators();
        let (r, jac) = map.residual_jacobian(x.matrices(), &gens, C::MODE);
        let g = jac.transpose() * &r;
        let h = jac.transpose() * &jac;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = h.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -chol.solve(&g);
            let cand = x.displace(&gens, step.as_slice());
            let c = map.residual_unchecked(cand.matrices());
            if c < cost {
                x = cand;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
        history.push(cost);
        // stagnation above the convergence threshold: give up early
        let len = history.len();
        if cost >= cfg.tol_converge && len > 40 && history[len - 30] - cost < 1e-9 * history[len - 30] {
            break;
        }
    }
    let outcome = if cost < cfg.tol_converge {
        Outcome::Converged
    } else if cost > cfg.tol_reject {
        Outcome::Stalled
    } else {
        Outcome::Unresolved
    };
    (x, cost, outcome)
}

fn restart_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Runs Gauss–Newton from `start` until converged or stalled.
pub fn polish(map: &TwistedMap, start: RepTuple, cfg: &SolverConfig) -> (RepTuple, f64, Outcome) {
    levenberg_marquardt(map, start, cfg)
}

/// Random-restart search for `Fix(εσ) ∩ Q_k`, deduplicated modulo conjugation.
pub fn solve(map: &TwistedMap, cfg: &SolverConfig) -> Result<SolutionSet> {
    cfg.validate()?;
    let (k, n) = (map.strands(), map.rank());
    let runs: Vec<(RepTuple, f64, Outcome)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            levenberg_marquardt(map, RepTuple::random(k, n, &mut rng), cfg)
        })
        .collect();
    let mut stats = RestartStats::default();
    let mut converged = Vec::new();
    for (x, res, outcome) in runs {
        stats.record(outcome, res);
        if outcome == Outcome::Converged {
            converged.push((x, res));
        }
    }
    log::debug!("solve: {stats:?}");
    Ok(SolutionSet { solutions: deduplicate(converged, cfg.dedup_tol), stats })
}

/// Greedy clustering by trace fingerprint; the first member of each cluster
/// is kept as its representative.
pub fn deduplicate(sols: Vec<(RepTuple, f64)>, dedup_tol: f64) -> Vec<Solution> {
    let mut out: Vec<Solution> = Vec::new();
    let Some(k) = sols.first().map(|(x, _)| x.len()) else {
        return out;
    };
    let words = canonical_words(k);
    for (tuple, residual) in sols {
        let fp = fingerprint(tuple.matrices(), &words).expect("word ranks match the tuple");
        match out.iter_mut().find(|s| sup_distance(&s.fingerprint, &fp) < dedup_tol) {
            Some(s) => s.hits += 1,
            None => out.push(Solution { tuple, residual, fingerprint: fp, hits: 1 }),
        }
    }
    out
}

/// Real matrix of `u ↦ ([u, X_1], …, [u, X_k])` over the `su(N)` frame.
pub fn commutant_operator(x: &[CMat]) -> DMatrix<f64> {
    let n = x[0].nrows();
    let frame = SkewTracelessFrame::new(n);
    let block = 2 * n * n;
    let mut op = DMatrix::zeros(block * x.len(), frame.dim());
    for (a, u) in frame.elements().iter().enumerate() {
        let mut column = op.column_mut(a);
        let slice = column.as_mut_slice();
        for (i, xi) in x.iter().enumerate() {
            write_real(&(u * xi - xi * u), &mut slice[i * block..(i + 1) * block]);
        }
    }
    op
}

/// Dimension of the common commutant of the tuple inside `su(N)`;
/// the tuple is irreducible iff it is zero.
pub fn verify_irreducible(x: &[CMat], tol_kernel: f64) -> (bool, usize) {
    let svd = commutant_operator(x).svd(false, false);
    let dim = svd.singular_values.iter().filter(|&&s| s < tol_kernel).count();
    (dim == 0, dim)
}

/// Largest `N^k` the lift search will enumerate.
pub const LIFT_GUARD: u128 = 10_000_000;

/// Searches `η ∈ (Z_N)^k` with `ηX` fixed by the untwisted action; returns
/// the exponents of the first witness.
pub fn lift_obstruction_search(b: &BraidWord, x: &[CMat], tol_converge: f64) -> Result<Option<Vec<u32>>> {
    let k = b.strands();
    if x.len() != k {
        return Err(Error::TupleLength { found: x.len(), expected: k });
    }
    let n = x[0].nrows();
    let total = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > LIFT_GUARD {
        return Err(Error::GuardExceeded(total));
    }
    let images = b.generator_images();
    // central scalars factor out: σ(ηX)_i = ω^{c_i·η} σ(X)_i with c_i the
    // exponent sums of x_i^b
    let exps: Vec<Vec<i64>> = images
        .iter()
        .map(|w| {
            let mut c = vec![0i64; k];
            for &l in w.letters() {
                c[l.unsigned_abs() as usize - 1] += l.signum() as i64;
            }
            c
        })
        .collect();
    let s: Vec<CMat> = images.iter().map(|w| crate::sun::eval_word(x, w)).collect();
    let overlap: Vec<Complex64> = x.iter().zip(&s).map(|(xi, si)| (xi.adjoint() * si).trace()).collect();
    let norms: Vec<f64> = x.iter().zip(&s).map(|(xi, si)| frobenius_sq(xi) + frobenius_sq(si)).collect();
    let nu = n as u32;
    let mut eta = vec![0u32; k];
    loop {
        let mut res = 0.0;
        for i in 0..k {
            let e: i64 = exps[i].iter().zip(&eta).map(|(c, &t)| c * t as i64).sum::<i64>() - eta[i] as i64;
            res += norms[i] - 2.0 * (omega_pow(nu, e) * overlap[i]).re;
        }
        if res.abs() < tol_converge.sqrt().max(1e-12) {
            return Ok(Some(eta));
        }
        let mut pos = 0;
        while pos < k {
            eta[pos] += 1;
            if eta[pos] < nu {
                break;
            }
            eta[pos] = 0;
            pos += 1;
        }
        if pos == k {
            return Ok(None);
        }
    }
}

/// Converged results of a search over `SU(N)^k` with no class constraint.
#[derive(Debug, Clone)]
pub struct UnconstrainedSolutions {
    pub tuples: Vec<Vec<CMat>>,
    pub stats: RestartStats,
}

/// The same search as [`solve`] but over all of `SU(N)^k`.
pub fn solve_unconstrained(map: &TwistedMap, cfg: &SolverConfig) -> Result<UnconstrainedSolutions> {
    cfg.validate()?;
    let (k, n) = (map.strands(), map.rank());
    let runs: Vec<(GroupTuple, f64, Outcome)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            let start = GroupTuple((0..k).map(|_| random_su(n, &mut rng)).collect());
            levenberg_marquardt(map, start, cfg)
        })
        .collect();
    let mut stats = RestartStats::default();
    let mut tuples = Vec::new();
    for (x, res, outcome) in runs {
        stats.record(outcome, res);
        if outcome == Outcome::Converged {
            tuples.push(x.0);
        }
    }
    Ok(UnconstrainedSolutions { tuples, stats })
}
