//! Linearization of `εσ` at fixed points, fixed-point signs, and the
//! assembled invariant with its Markov and `ε` cross-checks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::braid::{BraidWord, Sign};
use crate::error::{Error, Result};
use crate::fixed_points::{polish, solve, Outcome, RepTuple, RestartStats, SolverConfig, TwistedMap, Variation};
use crate::labels::{all_compatible_epsilons, compatible_epsilon, split_obstruction, verify_epsilon, EpsilonVector, LabelSpec};
use crate::sun::{canonical_words, fingerprint, identity, inner, sup_distance, CMat, SkewTracelessFrame, Tolerances};

/// Tangent vectors `τ_{j,b} = [u_{j,b}, X_j]` together with their generators.
struct Frame {
    gens: Vec<Vec<CMat>>,
    tangents: Vec<Vec<CMat>>,
}

impl Frame {
    fn at(x: &RepTuple) -> Self {
        let gens = x.tangent_generators();
        let tangents = gens
            .iter()
            .zip(x.matrices())
            .map(|(g, xj)| g.iter().map(|u| u * xj - xj * u).collect())
            .collect();
        Frame { gens, tangents }
    }

    fn dim(&self) -> usize {
        self.gens.iter().map(Vec::len).sum()
    }

    /// Frame coordinates of a tangent tuple `(v_1, …, v_k)`.
    fn coordinates(&self, v: &[CMat], out: &mut [f64]) {
        let mut row = 0;
        for (taus, vi) in self.tangents.iter().zip(v) {
            for tau in taus {
                out[row] = inner(tau, vi);
                row += 1;
            }
        }
    }
}

/// Matrix of `d(εσ)` at a fixed point in the orthonormal frame of `T Q_k`.
pub fn linearize(map: &TwistedMap, x: &RepTuple) -> DMatrix<f64> {
    let frame = Frame::at(x);
    let m = frame.dim();
    let vars = map.variations(x.matrices(), &frame.gens, Variation::Conjugation);
    let mut d = DMatrix::zeros(m, m);
    for (c, v) in vars.iter().enumerate() {
        frame.coordinates(v, d.column_mut(c).as_mut_slice());
    }
    d
}

/// Central-difference approximation of [`linearize`].
pub fn linearize_fd(map: &TwistedMap, x: &RepTuple, h: f64) -> DMatrix<f64> {
    let frame = Frame::at(x);
    let m = frame.dim();
    let mut d = DMatrix::zeros(m, m);
    for c in 0..m {
        let mut e = vec![0.0; m];
        e[c] = h;
        let plus = map.apply(x.displace(&frame.gens, &e).matrices()).expect("sizes match");
        e[c] = -h;
        let minus = map.apply(x.displace(&frame.gens, &e).matrices()).expect("sizes match");
        let diff: Vec<CMat> = plus.iter().zip(&minus).map(|(p, q)| (p - q) / num_complex::Complex64::new(2.0 * h, 0.0)).collect();
        frame.coordinates(&diff, d.column_mut(c).as_mut_slice());
    }
    d
}

/// Columns are the frame coordinates of `([e_a, X_1], …, [e_a, X_k])`.
pub fn gauge_matrix(x: &RepTuple) -> DMatrix<f64> {
    let frame = Frame::at(x);
    let su = SkewTracelessFrame::new(x.rank());
    let mut g = DMatrix::zeros(frame.dim(), su.dim());
    for (a, e) in su.elements().iter().enumerate() {
        let v: Vec<CMat> = x.matrices().iter().map(|xj| e * xj - xj * e).collect();
        frame.coordinates(&v, g.column_mut(a).as_mut_slice());
    }
    g
}

/// Derivative of `X ↦ X_1 ⋯ X_k`, right-translated to `su(N)`.
pub fn product_derivative(x: &RepTuple) -> DMatrix<f64> {
    let frame = Frame::at(x);
    let n = x.rank();
    let su = SkewTracelessFrame::new(n);
    let mut pre = vec![identity(n)];
    for xj in x.matrices() {
        let next = pre.last().unwrap() * xj;
        pre.push(next);
    }
    let mut pi = DMatrix::zeros(su.dim(), frame.dim());
    let mut col = 0;
    for (j, g) in frame.gens.iter().enumerate() {
        for u in g {
            let v = &pre[j] * u * pre[j].adjoint() - &pre[j + 1] * u * pre[j + 1].adjoint();
            for (a, e) in su.elements().iter().enumerate() {
                pi[(a, col)] = inner(e, &v);
            }
            col += 1;
        }
    }
    pi
}

/// Orthonormal basis of the column span and its rank.
fn column_basis(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    (u.select_columns(&keep), keep.len())
}

/// Orthonormal basis of the orthogonal complement of an orthonormal set.
fn complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let m = q.nrows();
    let proj = DMatrix::identity(m, m) - q * q.transpose();
    let eig = proj.symmetric_eigen();
    let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    eig.eigenvectors.select_columns(&keep)
}

/// Orthonormal basis of the conjugation directions.
pub fn gauge_subspace(x: &RepTuple, tol_kernel: f64) -> Result<DMatrix<f64>> {
    let g = gauge_matrix(x);
    let expected = g.ncols();
    let (basis, rank) = column_basis(&g, tol_kernel);
    if rank < expected {
        return Err(Error::Reducible(expected - rank));
    }
    Ok(basis)
}

/// Orthonormal basis of the kernel of the product derivative.
pub fn constrained_subspace(x: &RepTuple, tol_kernel: f64) -> Result<DMatrix<f64>> {
    let pi = product_derivative(x);
    let (row_space, rank) = column_basis(&pi.transpose(), tol_kernel);
    if rank < pi.nrows() {
        return Err(Error::RankDeficient { rank, expected: pi.nrows() });
    }
    Ok(complement(&row_space))
}

/// Spectral data of `I − D` at one fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointAnalysis {
    pub kernel_dim: usize,
    pub gauge_dim: usize,
    pub excess: i64,
    /// `±1` when nondegenerate; absent otherwise.
    pub sign: Option<i32>,
    pub degenerate: bool,
    /// Smallest uncounted singular value over the largest counted one.
    pub spectral_gap: f64,
    pub gap_ok: bool,
    /// `max_a ‖(I − D) c(e_a)‖`.
    pub equivariance_defect: f64,
}

/// Required ratio between the singular values on either side of the
/// kernel threshold.
pub const GAP_RATIO: f64 = 1e3;

/// Counts the kernel of `L = I − D` on `T Q_k` and, when it is exactly the
/// gauge, returns the determinant sign of the endomorphism of `T Q_k` equal
/// to `L` on the orthogonal complement of the gauge and sending each gauge
/// vector `c(e_a)` to `Πᵀ(ΠΠᵀ)⁻¹ e_a`. `L` already annihilates the gauge and
/// maps into `ker Π`, so this determinant is that of the induced isomorphism
/// `T/gauge → ker Π` with orientations transported from `T Q_k` and `su(N)`;
/// it depends on no choice of basis.
pub fn lefschetz_sign(
    d: &DMatrix<f64>,
    gauge: &DMatrix<f64>,
    product: &DMatrix<f64>,
    tol_kernel: f64,
) -> Result<FixedPointAnalysis> {
    let m = d.nrows();
    let g_dim = gauge.ncols();
    let l = DMatrix::identity(m, m) - d;

    let equivariance_defect = (&l * gauge).column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if equivariance_defect > tol_kernel {
        return Err(Error::EquivarianceViolation(equivariance_defect));
    }

    let sv = l.clone().svd(false, false).singular_values;
    let kernel_dim = sv.iter().filter(|&&s| s < tol_kernel).count();
    let counted = sv.iter().copied().filter(|&s| s < tol_kernel).fold(0.0, f64::max);
    let uncounted = sv.iter().copied().filter(|&s| s >= tol_kernel).fold(f64::INFINITY, f64::min);
    let spectral_gap = if counted == 0.0 { f64::INFINITY } else { uncounted / counted };
    let gap_ok = spectral_gap >= GAP_RATIO;
    let excess = kernel_dim as i64 - g_dim as i64;

    let mut sign = None;
    if excess == 0 && gap_ok {
        let ppt = product * product.transpose();
        let inv = ppt.clone().try_inverse().ok_or(Error::RankDeficient { rank: 0, expected: g_dim })?;
        let r = product.transpose() * inv;
        let (q, rank) = column_basis(gauge, tol_kernel);
        if rank < g_dim {
            return Err(Error::Reducible(g_dim - rank));
        }
        let s = complement(&q);
        let image = concat_columns(&(&l * &s), &r);
        let domain = concat_columns(&s, gauge);
        let det = image.determinant() * domain.determinant();
        sign = Some(if det > 0.0 { 1 } else { -1 });
    }
    Ok(FixedPointAnalysis {
        kernel_dim,
        gauge_dim: g_dim,
        excess,
        sign,
        degenerate: excess != 0,
        spectral_gap,
        gap_ok,
        equivariance_defect,
    })
}

fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Full analysis of one fixed point.
pub fn analyze(map: &TwistedMap, x: &RepTuple, tol_kernel: f64) -> Result<FixedPointAnalysis> {
    let d = linearize(map, x);
    lefschetz_sign(&d, &gauge_matrix(x), &product_derivative(x), tol_kernel)
}

/// Non-gauge directions in the kernel of `I − D`, orthonormalized.
pub fn excess_directions(map: &TwistedMap, x: &RepTuple, tol_kernel: f64) -> DMatrix<f64> {
    let m = linearize(map, x);
    let l = DMatrix::identity(m.nrows(), m.ncols()) - m;
    let svd = l.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let ker: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] < tol_kernel).collect();
    let kernel = vt.select_rows(&ker).transpose();
    let (q, _) = column_basis(&gauge_matrix(x), tol_kernel);
    let off = &kernel - &q * (q.transpose() * &kernel);
    column_basis(&off, 0.5).0
}

/// Tangent vectors of the partial conjugations
/// `(X_1, …, X_i, P X_{i+1} P⁻¹, …, P X_k P⁻¹)` with `P ∈ Stab(X_i)`.
pub fn stabilizer_torus_directions(x: &RepTuple) -> DMatrix<f64> {
    let frame = Frame::at(x);
    let n = x.rank();
    let k = x.len();
    let su = SkewTracelessFrame::new(n);
    let diagonal = &su.elements()[n * (n - 1)..];
    let mut cols = Vec::new();
    for i in 0..k.saturating_sub(1) {
        let p = x.points()[i].diagonalizer();
        for h in diagonal {
            let t = p * h * p.adjoint();
            let v: Vec<CMat> = x
                .matrices()
                .iter()
                .enumerate()
                .map(|(j, xj)| if j > i { &t * xj - xj * &t } else { CMat::zeros(n, n) })
                .collect();
            let mut c = vec![0.0; frame.dim()];
            frame.coordinates(&v, &mut c);
            cols.push(nalgebra::DVector::from_vec(c));
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(frame.dim(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// Whether every kernel direction of `I − D` is generated by conjugation and
/// partial conjugation by stabilizer tori, i.e. the degenerate directions
/// are tangent to a torus orbit.
pub fn kernel_is_torus_orbit(map: &TwistedMap, x: &RepTuple, tol_kernel: f64) -> bool {
    let dirs = excess_directions(map, x, tol_kernel);
    if dirs.ncols() == 0 {
        return false;
    }
    let span = concat_columns(&gauge_matrix(x), &stabilizer_torus_directions(x));
    let (q, _) = column_basis(&span, tol_kernel);
    let outside = &dirs - &q * (q.transpose() * &dirs);
    outside.norm() < tol_kernel.sqrt()
}

/// Outcome of moving along the excess kernel and re-solving.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyProbe {
    /// A distinct converged fixed point was reached.
    pub detected: bool,
    /// Largest fingerprint distance to a converged neighbour.
    pub spread: f64,
    /// Per fingerprint coordinate: stationary along every excess direction.
    pub rigid: Vec<bool>,
}

/// Step length along the excess kernel.
const PROBE_STEP: f64 = 0.05;

pub fn probe_family(map: &TwistedMap, x: &RepTuple, cfg: &SolverConfig, tol_kernel: f64) -> FamilyProbe {
    let words = canonical_words(x.len());
    let fp = |t: &RepTuple| fingerprint(t.matrices(), &words).expect("ranks match");
    let base = fp(x);
    let dirs = excess_directions(map, x, tol_kernel);
    let gens = x.tangent_generators();
    let mut rigid = vec![true; base.len()];
    let mut spread: f64 = 0.0;
    for v in dirs.column_iter() {
        let v: Vec<f64> = v.iter().copied().collect();
        let step = |t: f64| x.displace(&gens, &v.iter().map(|c| c * t).collect::<Vec<_>>());
        let h = 1e-5;
        let (fp_plus, fp_minus) = (fp(&step(h)), fp(&step(-h)));
        for (c, r) in rigid.iter_mut().enumerate() {
            if ((fp_plus[c] - fp_minus[c]) / (2.0 * h)).abs() > 1e-4 {
                *r = false;
            }
        }
        for t in [PROBE_STEP, -PROBE_STEP] {
            let (y, _, outcome) = polish(map, step(t), cfg);
            if outcome == Outcome::Converged {
                spread = spread.max(sup_distance(&fp(&y), &base));
            }
        }
        if spread > 10.0 * cfg.dedup_tol {
            break;
        }
    }
    FamilyProbe { detected: spread > 10.0 * cfg.dedup_tol, spread, rigid }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantOptions {
    pub solver: SolverConfig,
    /// Overrides the canonical compatible twist.
    pub epsilon: Option<EpsilonVector>,
    pub tolerances: Tolerances,
    /// Return `h = 0` at once when a split obstruction applies.
    pub split_shortcut: bool,
}

impl InvariantOptions {
    pub fn for_braid(b: &BraidWord) -> Self {
        InvariantOptions {
            solver: SolverConfig::for_strands(b.strands()),
            epsilon: None,
            tolerances: Tolerances::default(),
            split_shortcut: true,
        }
    }
}

/// One conjugacy class of fixed points, or one positive-dimensional family
/// represented by its first member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub fingerprint: Vec<f64>,
    pub residual: f64,
    pub kernel_dim: usize,
    pub excess: i64,
    pub sign: Option<i32>,
    pub spectral_gap: f64,
    pub hits: usize,
    /// Number of solver classes merged into this family (1 for isolated).
    pub family_members: usize,
    /// Recognized as a stabilizer-torus family contributing zero.
    pub torus_family: bool,
    #[serde(skip)]
    pub tuple: Option<RepTuple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SolverConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub tool: String,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(opts: &InvariantOptions) -> Self {
        Provenance {
            config: opts.solver.clone(),
            tolerances: opts.tolerances,
            seed: opts.solver.seed,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub const FLAG_SPLIT: &str = "split obstruction shortcut";
pub const FLAG_TORUS: &str = "torus family, χ = 0";
pub const FLAG_EMPTY: &str = "no fixed points found";
pub const FLAG_UNRECOGNIZED: &str = "degenerate class not of torus-family type";
pub const FLAG_GAP: &str = "spectral gap audit failed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub braid: String,
    #[serde(rename = "N")]
    pub n: u32,
    pub labels: Vec<u32>,
    pub epsilon: Vec<u32>,
    pub classes: Vec<ClassReport>,
    pub h: Option<i64>,
    pub h_defined: bool,
    pub global_sign_ambiguous: bool,
    pub flags: Vec<String>,
    pub stats: RestartStats,
    pub provenance: Provenance,
}

impl InvariantReport {
    pub fn abs_h(&self) -> Option<i64> {
        self.h.map(i64::abs)
    }

    /// Sorted excesses of the reported classes.
    pub fn excess_multiset(&self) -> Vec<i64> {
        let mut e: Vec<i64> = self.classes.iter().map(|c| c.excess).collect();
        e.sort_unstable();
        e
    }

    fn push_flag(&mut self, flag: &str) {
        if !self.flags.iter().any(|f| f == flag) {
            self.flags.push(flag.to_string());
        }
    }
}

/// Components lying in strands `1..=k1` for every split point that separates
/// the closure, paired with `k1`.
pub fn split_blocks(b: &BraidWord) -> Vec<(usize, Vec<usize>)> {
    let cycles = b.cycles();
    b.split_points()
        .into_iter()
        .map(|k1| {
            let block = cycles
                .cycles()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.iter().all(|&s| s <= k1))
                .map(|(j, _)| j + 1)
                .collect();
            (k1, block)
        })
        .collect()
}

fn check_inputs(b: &BraidWord, spec: &LabelSpec) -> Result<()> {
    spec.validate()?;
    let comps = b.component_count();
    if comps != spec.labels.len() {
        return Err(Error::ComponentMismatch { labels: spec.labels.len(), components: comps });
    }
    Ok(())
}

/// The twist used for a run: the override if given (after verification),
/// else the canonical one.
pub fn resolve_epsilon(b: &BraidWord, spec: &LabelSpec, eps: Option<&EpsilonVector>) -> Result<EpsilonVector> {
    let cycles = b.cycles();
    match eps {
        Some(e) => {
            if !verify_epsilon(e, &cycles, spec)? {
                return Err(Error::IncompatibleEpsilon);
            }
            Ok(e.clone())
        }
        None => compatible_epsilon(&cycles, spec),
    }
}

/// The invariant `h_{N,a}` of the closure of `b`, as a signed count of
/// fixed points modulo conjugation.
pub fn casson_lin(b: &BraidWord, spec: &LabelSpec, opts: &InvariantOptions) -> Result<InvariantReport> {
    check_inputs(b, spec)?;
    let eps = resolve_epsilon(b, spec, opts.epsilon.as_ref())?;
    let mut report = InvariantReport {
        braid: b.to_string(),
        n: spec.n,
        labels: spec.labels.clone(),
        epsilon: eps.exponents().to_vec(),
        classes: Vec::new(),
        h: None,
        h_defined: false,
        global_sign_ambiguous: true,
        flags: Vec::new(),
        stats: RestartStats::default(),
        provenance: Provenance::new(opts),
    };

    if opts.split_shortcut && split_blocks(b).iter().any(|(_, block)| split_obstruction(spec, block)) {
        report.h = Some(0);
        report.h_defined = true;
        report.push_flag(FLAG_SPLIT);
        return Ok(report);
    }

    let map = TwistedMap::new(b, &eps)?;
    let sols = solve(&map, &opts.solver)?;
    report.stats = sols.stats.clone();
    if sols.is_empty() {
        report.push_flag(FLAG_EMPTY);
    }

    let tol = opts.tolerances.kernel;
    let n = spec.n as i64;
    // rigid fingerprint coordinates of each recognized family
    let mut families: Vec<(usize, Vec<bool>)> = Vec::new();
    let mut defined = true;
    for sol in sols.solutions {
        let a = analyze(&map, &sol.tuple, tol)?;
        let mut class = ClassReport {
            fingerprint: sol.fingerprint.clone(),
            residual: sol.residual,
            kernel_dim: a.kernel_dim,
            excess: a.excess,
            sign: a.sign,
            spectral_gap: a.spectral_gap,
            hits: sol.hits,
            family_members: 1,
            torus_family: false,
            tuple: Some(sol.tuple.clone()),
        };
        if !a.gap_ok {
            report.push_flag(FLAG_GAP);
            defined = false;
            report.classes.push(class);
            continue;
        }
        if !a.degenerate {
            report.classes.push(class);
            continue;
        }
        let member_of = families.iter().position(|(idx, rigid)| {
            let rep = &report.classes[*idx];
            rep.excess == a.excess
                && rigid
                    .iter()
                    .zip(rep.fingerprint.iter().zip(&sol.fingerprint))
                    .all(|(&r, (p, q))| !r || (p - q).abs() < 10.0 * opts.solver.dedup_tol)
        });
        if let Some(f) = member_of {
            let idx = families[f].0;
            report.classes[idx].family_members += 1;
            report.classes[idx].hits += sol.hits;
            continue;
        }
        let probe = probe_family(&map, &sol.tuple, &opts.solver, tol);
        // families whose excess is a multiple of N − 1, or whose kernel is
        // swept out by stabilizer tori, have Euler characteristic zero
        let torus = probe.detected
            && a.excess > 0
            && (a.excess % (n - 1) == 0 || kernel_is_torus_orbit(&map, &sol.tuple, tol));
        class.torus_family = torus;
        if torus {
            report.push_flag(FLAG_TORUS);
            families.push((report.classes.len(), probe.rigid));
        } else {
            report.push_flag(FLAG_UNRECOGNIZED);
            defined = false;
        }
        report.classes.push(class);
    }

    if defined {
        let flip = report.classes.iter().find_map(|c| c.sign).unwrap_or(1);
        let mut h = 0i64;
        for c in &mut report.classes {
            if let Some(s) = c.sign.as_mut() {
                *s *= flip;
                h += *s as i64;
            }
        }
        report.h = Some(h);
        report.h_defined = true;
    }
    Ok(report)
}

/// Compact comparison data of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub abs_h: Option<i64>,
    pub classes: usize,
    pub excesses: Vec<i64>,
}

impl From<&InvariantReport> for InvariantSummary {
    fn from(r: &InvariantReport) -> Self {
        InvariantSummary { abs_h: r.abs_h(), classes: r.classes.len(), excesses: r.excess_multiset() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkovMove {
    /// `g⁻¹ b g` for the single letter `g`.
    Conjugate(i32),
    /// `b σ_k^{±1}`.
    Stabilize(Sign),
}

impl std::fmt::Display for MarkovMove {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MarkovMove::Conjugate(g) => write!(f, "conjugate by {g}"),
            MarkovMove::Stabilize(Sign::Positive) => write!(f, "stabilize +"),
            MarkovMove::Stabilize(Sign::Negative) => write!(f, "stabilize -"),
        }
    }
}

/// Applies a move and transports the labels to the components of the new
/// closure.
pub fn apply_move(b: &BraidWord, spec: &LabelSpec, mv: MarkovMove) -> Result<(BraidWord, LabelSpec)> {
    let k = b.strands();
    let (nb, strand_map): (BraidWord, Box<dyn Fn(usize) -> usize>) = match mv {
        MarkovMove::Conjugate(g) => {
            let gw = BraidWord::new(k, vec![g])?;
            let perm = gw.induced_permutation();
            (b.markov_conjugate(&gw)?, Box::new(move |s| perm.image(s)))
        }
        MarkovMove::Stabilize(sign) => (b.markov_stabilize(sign), Box::new(move |s| s.min(k))),
    };
    let old = b.cycles();
    let new = nb.cycles();
    let mut labels = Vec::with_capacity(new.len());
    for cycle in new.cycles() {
        let comps: Vec<usize> = cycle.iter().map(|&s| old.component_of(strand_map(s)).expect("strand in range")).collect();
        if comps.iter().any(|&c| c != comps[0]) {
            return Err(Error::ComponentMismatch { labels: spec.labels.len(), components: new.len() });
        }
        labels.push(spec.labels[comps[0] - 1]);
    }
    Ok((nb, LabelSpec::new(spec.n, labels)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovVariant {
    pub mv: MarkovMove,
    pub braid: String,
    pub labels: Vec<u32>,
    pub summary: InvariantSummary,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovComparison {
    pub base: InvariantSummary,
    pub variants: Vec<MarkovVariant>,
    pub all_agree: bool,
}

fn agrees(a: &InvariantSummary, b: &InvariantSummary) -> bool {
    a.abs_h == b.abs_h && a.excesses == b.excesses
}

/// Compares `|h|` and the excess multiset across Markov moves. Solver restarts
/// follow each braid's strand count unless `restarts` is given.
pub fn markov_invariance_check(
    b: &BraidWord,
    spec: &LabelSpec,
    moves: &[MarkovMove],
    base_opts: &InvariantOptions,
) -> Result<MarkovComparison> {
    let base = InvariantSummary::from(&casson_lin(b, spec, base_opts)?);
    let mut variants = Vec::new();
    for &mv in moves {
        let (nb, nspec) = apply_move(b, spec, mv)?;
        let mut opts = base_opts.clone();
        opts.epsilon = None;
        opts.solver.restarts = base_opts.solver.restarts / b.strands() * nb.strands();
        let summary = InvariantSummary::from(&casson_lin(&nb, &nspec, &opts)?);
        variants.push(MarkovVariant {
            mv,
            braid: nb.to_string(),
            labels: nspec.labels.clone(),
            agrees: agrees(&base, &summary),
            summary,
        });
    }
    let all_agree = variants.iter().all(|v| v.agrees);
    Ok(MarkovComparison { base, variants, all_agree })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonComparison {
    pub runs: Vec<(Vec<u32>, InvariantSummary)>,
    pub all_agree: bool,
}

/// Runs the pipeline for every compatible twist (up to `limit` of them).
pub fn epsilon_independence_check(
    b: &BraidWord,
    spec: &LabelSpec,
    opts: &InvariantOptions,
    limit: usize,
) -> Result<EpsilonComparison> {
    check_inputs(b, spec)?;
    let mut runs = Vec::new();
    for eps in all_compatible_epsilons(&b.cycles(), spec)?.into_iter().take(limit) {
        let o = InvariantOptions { epsilon: Some(eps.clone()), ..opts.clone() };
        let r = casson_lin(b, spec, &o)?;
        runs.push((eps.exponents().to_vec(), InvariantSummary::from(&r)));
    }
    let all_agree = runs.windows(2).all(|w| agrees(&w[0].1, &w[1].1) && w[0].1.classes == w[1].1.classes);
    Ok(EpsilonComparison { runs, all_agree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sun::{base_matrix_a, random_su, shift_matrix_y};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hopf() -> BraidWord {
        BraidWord::new(2, vec![1, 1]).unwrap()
    }

    fn hopf_point(n: usize) -> (TwistedMap, RepTuple) {
        // (A, Y) is fixed for ε = (ω^{N-1}, ω)
        let eps = EpsilonVector::new(n as u32, vec![n as u32 - 1, 1]);
        let map = TwistedMap::new(&hopf(), &eps).unwrap();
        let x = RepTuple::from_matrices(&[base_matrix_a(n), shift_matrix_y(n)], 1e-8).unwrap();
        (map, x)
    }

    #[test]
    fn identity_braid_linearizes_to_identity() {
        let id = BraidWord::identity(3);
        let map = TwistedMap::new(&id, &EpsilonVector::trivial(3, 3)).unwrap();
        let x = RepTuple::random(3, 3, &mut ChaCha8Rng::seed_from_u64(1));
        let d = linearize(&map, &x);
        assert!((d - DMatrix::identity(18, 18)).norm() < 1e-12);
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let s1 = BraidWord::new(2, vec![1]).unwrap();
        let map = TwistedMap::new(&s1, &EpsilonVector::trivial(3, 2)).unwrap();
        // σ1 has fixed points (X, X); linearize there
        let p = crate::sun::random_class_point(3, 5);
        let x = RepTuple::new(vec![p.clone(), p]);
        let d = linearize(&map, &x);
        let fd = linearize_fd(&map, &x, 1e-6);
        assert!((&d - &fd).norm() / d.norm() < 1e-5);

        let (map, x) = hopf_point(3);
        let d = linearize(&map, &x);
        let fd = linearize_fd(&map, &x, 1e-6);
        assert!((&d - &fd).norm() / d.norm() < 1e-5);
    }

    #[test]
    fn hopf_kernel_is_gauge() {
        for n in 2..=4 {
            let (map, x) = hopf_point(n);
            let a = analyze(&map, &x, 1e-6).unwrap();
            assert_eq!(a.kernel_dim, n * n - 1, "N={n}");
            assert_eq!(a.excess, 0);
            assert!(a.sign.is_some());
            assert!(a.gap_ok);
        }
    }

    #[test]
    fn subspace_dimensions() {
        let (_, x2) = hopf_point(2);
        assert_eq!(gauge_subspace(&x2, 1e-6).unwrap().ncols(), 3);
        assert_eq!(constrained_subspace(&x2, 1e-6).unwrap().ncols(), 1);
        let (_, x3) = hopf_point(3);
        assert_eq!(gauge_subspace(&x3, 1e-6).unwrap().ncols(), 8);
        assert_eq!(constrained_subspace(&x3, 1e-6).unwrap().ncols(), 4);
        let x = RepTuple::random(3, 2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(constrained_subspace(&x, 1e-6).unwrap().ncols(), 3);
        let a = base_matrix_a(3);
        let red = RepTuple::from_matrices(&[a.clone(), a], 1e-8).unwrap();
        assert!(matches!(gauge_subspace(&red, 1e-6), Err(Error::Reducible(_))));
    }

    #[test]
    fn linearization_preserves_product_constraint() {
        let (map, x) = hopf_point(3);
        let d = linearize(&map, &x);
        let pi = product_derivative(&x);
        // Π ∘ D = Π because εσ preserves the product
        assert!((&pi * &d - &pi).norm() < 1e-10);
    }

    fn random_orthogonal(m: usize, seed: u64) -> DMatrix<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(m, m, |_, _| rng.random::<f64>() - 0.5);
        g.qr().q()
    }

    #[test]
    fn sign_is_frame_independent() {
        let (map, x) = hopf_point(3);
        let d = linearize(&map, &x);
        let (g, pi) = (gauge_matrix(&x), product_derivative(&x));
        let s0 = lefschetz_sign(&d, &g, &pi, 1e-6).unwrap().sign;
        let m = d.nrows();
        for seed in 0..4 {
            let q = random_orthogonal(m, seed);
            let o = random_orthogonal(g.ncols(), seed + 100);
            let d2 = q.transpose() * &d * &q;
            let g2 = q.transpose() * &g * &o;
            let pi2 = o.transpose() * &pi * &q;
            assert_eq!(lefschetz_sign(&d2, &g2, &pi2, 1e-6).unwrap().sign, s0);
        }
    }

    #[test]
    fn sign_is_conjugation_independent() {
        let (map, x) = hopf_point(3);
        let a0 = analyze(&map, &x, 1e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let u = random_su(3, &mut rng);
            let a1 = analyze(&map, &x.conjugate(&u), 1e-6).unwrap();
            assert_eq!((a0.kernel_dim, a0.excess, a0.sign), (a1.kernel_dim, a1.excess, a1.sign));
        }
    }

    #[test]
    fn equivariance_violation_is_reported() {
        let (map, x) = hopf_point(2);
        let d = linearize(&map, &x) * 0.5;
        let r = lefschetz_sign(&d, &gauge_matrix(&x), &product_derivative(&x), 1e-6);
        assert!(matches!(r, Err(Error::EquivarianceViolation(_))));
    }

    #[test]
    fn move_label_transport() {
        let spec = LabelSpec::new(3, vec![1, 2]);
        let (nb, ns) = apply_move(&hopf(), &spec, MarkovMove::Stabilize(Sign::Positive)).unwrap();
        assert_eq!(nb.to_string(), "B3: 1 1 2");
        assert_eq!(ns.labels, vec![1, 2]);
        let (nb, ns) = apply_move(&hopf(), &spec, MarkovMove::Conjugate(1)).unwrap();
        assert_eq!(nb.letters(), &[-1, 1, 1, 1]);
        assert_eq!(ns.labels.len(), 2);
        let t = BraidWord::new(3, vec![1, 2]).unwrap();
        let (_, ns) = apply_move(&t, &LabelSpec::new(2, vec![1]), MarkovMove::Stabilize(Sign::Negative)).unwrap();
        assert_eq!(ns.labels, vec![1]);
    }

    #[test]
    fn split_blocks_examples() {
        let b = BraidWord::new(4, vec![1, 1, 3, 3]).unwrap();
        assert_eq!(split_blocks(&b), vec![(2, vec![1, 2])]);
        assert!(split_blocks(&hopf()).is_empty());
    }

    #[test]
    fn hopf_pipeline_n2() {
        let spec = LabelSpec::new(2, vec![1, 1]);
        let mut opts = InvariantOptions::for_braid(&hopf());
        opts.solver.restarts = 30;
        let r = casson_lin(&hopf(), &spec, &opts).unwrap();
        assert_eq!(r.classes.len(), 1);
        assert_eq!(r.h, Some(1));
        assert!(r.h_defined && r.global_sign_ambiguous);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"N\":2"));
    }

    #[test]
    fn pipeline_rejects_bad_input() {
        let opts = InvariantOptions::for_braid(&hopf());
        assert!(matches!(
            casson_lin(&hopf(), &LabelSpec::new(3, vec![1, 1]), &opts),
            Err(Error::InvalidLabels(_))
        ));
        assert!(matches!(
            casson_lin(&hopf(), &LabelSpec::new(3, vec![1, 1, 1]), &opts),
            Err(Error::ComponentMismatch { .. })
        ));
        let bad_eps = InvariantOptions { epsilon: Some(EpsilonVector::new(2, vec![0, 0])), ..opts };
        assert!(matches!(
            casson_lin(&hopf(), &LabelSpec::new(2, vec![1, 1]), &bad_eps),
            Err(Error::IncompatibleEpsilon)
        ));
    }
}
