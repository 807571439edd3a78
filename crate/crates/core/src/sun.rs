//! Dense complex linear algebra on `SU(N)` and the conjugacy class `C_A`.
//!
//! `C_A` is the class of `A = diag(λ, λω, …, λω^{N-1})` with `λ = 1` for odd
//! `N` and `λ = e^{iπ/N}` for even `N`; it is the only class stable under
//! multiplication by the central element `ω = e^{2πi/N}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::braid::FreeWord;
use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Numerical tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub unitary: f64,
    pub class: f64,
    pub kernel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { unitary: 1e-10, class: 1e-8, kernel: 1e-6 }
    }
}

/// `ω^e` with `ω = e^{2πi/N}`.
pub fn omega_pow(n: u32, e: i64) -> Complex64 {
    let e = e.rem_euclid(n as i64);
    Complex64::from_polar(1.0, 2.0 * PI * e as f64 / n as f64)
}

pub fn omega(n: u32) -> Complex64 {
    omega_pow(n, 1)
}

/// Eigenvalues of `A` in diagonal order.
pub fn class_spectrum(n: usize) -> Vec<Complex64> {
    let lead = if n % 2 == 1 { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, PI / n as f64) };
    (0..n).map(|j| lead * omega_pow(n as u32, j as i64)).collect()
}

/// The base point `A` of `C_A`.
pub fn base_matrix_a(n: usize) -> CMat {
    assert!(n >= 2);
    CMat::from_diagonal(&nalgebra::DVector::from_vec(class_spectrum(n)))
}

/// Cyclic shift with ones on the subdiagonal and `(-1)^{N-1}` in the top-right
/// corner; `[A, Y] = ω I`.
pub fn shift_matrix_y(n: usize) -> CMat {
    assert!(n >= 2);
    let mut y = CMat::zeros(n, n);
    for i in 1..n {
        y[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    y[(0, n - 1)] = Complex64::new(if n.is_multiple_of(2) { -1.0 } else { 1.0 }, 0.0);
    y
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Group commutator `x y x⁻¹ y⁻¹` of unitaries.
pub fn group_commutator(x: &CMat, y: &CMat) -> CMat {
    x * y * x.adjoint() * y.adjoint()
}

/// `Re tr(a† b)`.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_special_unitary(m: &CMat, tol: f64) -> bool {
    let n = m.nrows();
    let defect = (m.adjoint() * m - identity(n)).norm();
    defect < tol && (m.determinant() - Complex64::new(1.0, 0.0)).norm() < tol
}

/// Unitary polar factor of `m`.
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1e-13 * svd.singular_values.max().max(1.0) {
        return Err(Error::Singular(smin));
    }
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    Ok(u * vt)
}

/// Nearest point of `SU(N)` along the polar factor: the unitary polar factor
/// rescaled by an `N`-th root of its inverse determinant. Among the `N`
/// candidate roots the one closest to the polar factor is used, which makes
/// the map idempotent on `SU(N)`.
pub fn project_to_sun(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let u = polar_unitary(m)?;
    let det = u.determinant();
    let phase = det.arg() / n as f64;
    let root = Complex64::from_polar(1.0, -phase);
    Ok(u * root)
}

/// Orthonormal basis of `su(N)` under `Re tr(u†v)`.
#[derive(Debug, Clone)]
pub struct SkewTracelessFrame {
    elements: Vec<CMat>,
}

impl SkewTracelessFrame {
    pub fn new(n: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elements = Vec::with_capacity(n * n - 1);
        for p in 0..n {
            for q in p + 1..n {
                let mut re = CMat::zeros(n, n);
                re[(p, q)] = Complex64::new(s, 0.0);
                re[(q, p)] = Complex64::new(-s, 0.0);
                elements.push(re);
                let mut im = CMat::zeros(n, n);
                im[(p, q)] = Complex64::new(0.0, s);
                im[(q, p)] = Complex64::new(0.0, s);
                elements.push(im);
            }
        }
        // generalized Gell-Mann diagonals: diag(1, …, 1, -m, 0, …)/√(m(m+1))
        for m in 1..n {
            let scale = 1.0 / ((m * (m + 1)) as f64).sqrt();
            let mut d = CMat::zeros(n, n);
            for j in 0..m {
                d[(j, j)] = Complex64::new(0.0, scale);
            }
            d[(m, m)] = Complex64::new(0.0, -(m as f64) * scale);
            elements.push(d);
        }
        SkewTracelessFrame { elements }
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Coordinates of an anti-Hermitian traceless matrix.
    pub fn coordinates(&self, u: &CMat) -> Vec<f64> {
        self.elements.iter().map(|e| inner(e, u)).collect()
    }

    pub fn combine(&self, coords: &[f64]) -> CMat {
        let n = self.elements[0].nrows();
        let mut out = CMat::zeros(n, n);
        for (e, &c) in self.elements.iter().zip(coords) {
            out += e * Complex64::new(c, 0.0);
        }
        out
    }
}

/// Anti-Hermitian traceless part of `m`.
pub fn skew_traceless_part(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut s = (m - m.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = s.trace() / Complex64::new(n as f64, 0.0);
    for i in 0..n {
        s[(i, i)] -= tr;
    }
    s
}

/// `exp(u)` for anti-Hermitian `u`, computed through the Hermitian
/// eigendecomposition of `i·u` so the result is unitary to working precision.
pub fn exp_skew(u: &CMat) -> CMat {
    let h = u * Complex64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|lam| Complex64::from_polar(1.0, -lam));
    v * CMat::from_diagonal(&phases) * v.adjoint()
}

/// A point of `C_A` stored through a unitary diagonalizer `P` with
/// `X = P A P†`; membership in the class is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPoint {
    diagonalizer: CMat,
    matrix: CMat,
}

impl ClassPoint {
    pub fn from_diagonalizer(p: CMat) -> Self {
        let n = p.nrows();
        let matrix = &p * base_matrix_a(n) * p.adjoint();
        ClassPoint { diagonalizer: p, matrix }
    }

    pub fn base(n: usize) -> Self {
        ClassPoint::from_diagonalizer(identity(n))
    }

    /// Attempts to write a given unitary as a class point by diagonalizing it
    /// and matching its spectrum against that of `A`.
    pub fn from_matrix(x: &CMat, tol: f64) -> Option<Self> {
        let n = x.nrows();
        if !in_class_a(x, tol) {
            return None;
        }
        // X is normal with simple spectrum: eigenvectors of the Hermitian
        // part of a generic rotation separate the eigenvalues.
        let spectrum = class_spectrum(n);
        let theta = Complex64::from_polar(1.0, 0.377);
        let h = (x * theta + x.adjoint() * theta.conj()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let mut p = CMat::zeros(n, n);
        let mut used = vec![false; n];
        for c in 0..n {
            let v = eig.eigenvectors.column(c).into_owned();
            let lam = (v.adjoint() * x * &v)[(0, 0)];
            let (j, _) = spectrum
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .min_by(|a, b| (a.1 - lam).norm().total_cmp(&(b.1 - lam).norm()))?;
            used[j] = true;
            p.set_column(j, &v);
        }
        let p = polar_unitary(&p).ok()?;
        let cp = ClassPoint::from_diagonalizer(p);
        ((&cp.matrix - x).norm() < tol.sqrt()).then_some(cp)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn diagonalizer(&self) -> &CMat {
        &self.diagonalizer
    }

    pub fn rank(&self) -> usize {
        self.matrix.nrows()
    }

    /// Component of `u` orthogonal to the Lie algebra of `Stab(X)`.
    pub fn project_off_torus(&self, u: &CMat) -> CMat {
        let p = &self.diagonalizer;
        let mut w = p.adjoint() * u * p;
        for i in 0..w.nrows() {
            w[(i, i)] = Complex64::new(0.0, 0.0);
        }
        p * w * p.adjoint()
    }

    /// `exp(u) X exp(-u)` for the off-torus part of `u`.
    pub fn retract(&self, u: &CMat) -> ClassPoint {
        let u = self.project_off_torus(u);
        let p = exp_skew(&u) * &self.diagonalizer;
        let p = polar_unitary(&p).unwrap_or(p);
        ClassPoint::from_diagonalizer(p)
    }

    /// Conjugate by a unitary `g`: `g X g†`.
    pub fn conjugate(&self, g: &CMat) -> ClassPoint {
        ClassPoint::from_diagonalizer(g * &self.diagonalizer)
    }

    /// Generators `u_b ∈ 𝔱_X^⊥` whose tangent vectors `[u_b, X]` are an
    /// orthonormal basis of `T_X C_A`.
    pub fn tangent_generators(&self) -> Vec<CMat> {
        let n = self.rank();
        let spectrum = class_spectrum(n);
        let p = &self.diagonalizer;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(n * n - n);
        for a in 0..n {
            for b in a + 1..n {
                let gap = (spectrum[b] - spectrum[a]).norm();
                let mut re = CMat::zeros(n, n);
                re[(a, b)] = Complex64::new(s / gap, 0.0);
                re[(b, a)] = Complex64::new(-s / gap, 0.0);
                out.push(p * re * p.adjoint());
                let mut im = CMat::zeros(n, n);
                im[(a, b)] = Complex64::new(0.0, s / gap);
                im[(b, a)] = Complex64::new(0.0, s / gap);
                out.push(p * im * p.adjoint());
            }
        }
        out
    }
}

/// Membership in `C_A`: all power sums `tr X^m`, `m = 1..N-1`, vanish and
/// `det X = 1`.
pub fn in_class_a(x: &CMat, tol: f64) -> bool {
    let n = x.nrows();
    let mut pow = x.clone();
    for m in 1..n {
        if pow.trace().norm() >= tol {
            return false;
        }
        if m + 1 < n {
            pow = &pow * x;
        }
    }
    (x.determinant() - Complex64::new(1.0, 0.0)).norm() < tol
}

/// Approximately Haar-distributed element of `SU(N)`.
pub fn random_su<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    let det = q.determinant();
    q * Complex64::from_polar(1.0, -det.arg() / n as f64)
}

pub fn random_class_point_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ClassPoint {
    ClassPoint::from_diagonalizer(random_su(n, rng))
}

/// `U A U†` for a seeded random `U`; identical seeds give identical output.
pub fn random_class_point(n: usize, seed: u64) -> ClassPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_class_point_rng(n, &mut rng)
}

/// Evaluate a free word on a tuple of unitaries (inverse = adjoint).
pub fn eval_word(tuple: &[CMat], word: &FreeWord) -> CMat {
    let n = tuple[0].nrows();
    let mut out = identity(n);
    for &l in word.letters() {
        let m = &tuple[l.unsigned_abs() as usize - 1];
        out = if l > 0 { out * m } else { out * m.adjoint() };
    }
    out
}

/// Words whose traces separate the conjugacy classes we meet: every `x_i`,
/// every `x_i x_j` and `[x_i, x_j]` with `i < j`, and `x_1 ⋯ x_k`.
pub fn canonical_words(k: usize) -> Vec<FreeWord> {
    let g = |i| FreeWord::generator(k, i);
    let mut words: Vec<FreeWord> = (1..=k).map(g).collect();
    for i in 1..=k {
        for j in i + 1..=k {
            words.push(g(i).concat(&g(j)));
        }
    }
    for i in 1..=k {
        for j in i + 1..=k {
            words.push(FreeWord::commutator(&g(i), &g(j)));
        }
    }
    words.push((1..=k).fold(FreeWord::identity(k), |w, i| w.concat(&g(i))));
    words
}

/// Concatenated `(Re, Im)` of `tr ρ(w)` for each word.
pub fn fingerprint(tuple: &[CMat], words: &[FreeWord]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * words.len());
    for w in words {
        if w.rank() != tuple.len() {
            return Err(Error::AlphabetMismatch { found: w.rank(), expected: tuple.len() });
        }
        let t = eval_word(tuple, w).trace();
        out.push(t.re);
        out.push(t.im);
    }
    Ok(out)
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// JSON form of a matrix: `N` plus row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson { n, data }
    }
}

impl TryFrom<&MatrixJson> for CMat {
    type Error = Error;
    fn try_from(j: &MatrixJson) -> Result<CMat> {
        if j.data.len() != j.n * j.n {
            return Err(Error::Config(format!("matrix of size {} has {} entries", j.n, j.data.len())));
        }
        Ok(CMat::from_fn(j.n, j.n, |r, c| {
            let [re, im] = j.data[r * j.n + c];
            Complex64::new(re, im)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn base_matrix_examples() {
        let a2 = base_matrix_a(2);
        assert!((a2[(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((a2[(1, 1)] - c(0.0, -1.0)).norm() < 1e-15);
        let a3 = base_matrix_a(3);
        let w = omega(3);
        for (j, z) in [c(1.0, 0.0), w, w * w].iter().enumerate() {
            assert!((a3[(j, j)] - z).norm() < 1e-15);
        }
        for n in 2..=6 {
            assert!((base_matrix_a(n).determinant() - c(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn shift_matrix_examples() {
        assert_eq!(shift_matrix_y(3)[(0, 2)], c(1.0, 0.0));
        assert_eq!(shift_matrix_y(4)[(0, 3)], c(-1.0, 0.0));
        for n in 2..=8 {
            let y = shift_matrix_y(n);
            assert!(is_special_unitary(&y, 1e-12));
            let comm = group_commutator(&base_matrix_a(n), &y);
            let target = identity(n) * omega(n as u32);
            assert!((comm - target).norm() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        for n in 2..=5 {
            let f = SkewTracelessFrame::new(n);
            assert_eq!(f.dim(), n * n - 1);
            for (i, a) in f.elements().iter().enumerate() {
                assert!((a + a.adjoint()).norm() < 1e-15);
                assert!(a.trace().norm() < 1e-15);
                for (j, b) in f.elements().iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((inner(a, b) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_su(3, &mut rng);
        assert!((project_to_sun(&u).unwrap() - &u).norm() < 1e-14);
        let two = identity(2) * c(2.0, 0.0);
        assert!((project_to_sun(&two).unwrap() - identity(2)).norm() < 1e-14);
        assert!(project_to_sun(&CMat::zeros(2, 2)).is_err());
    }

    /// Independent polar factor `M (M†M)^{-1/2}` through the Hermitian
    /// eigendecomposition of `M†M`.
    fn polar_via_gram(m: &CMat) -> CMat {
        let g = m.adjoint() * m;
        let eig = g.symmetric_eigen();
        let inv_sqrt = eig.eigenvalues.map(|l| c(1.0 / l.sqrt(), 0.0));
        let v = &eig.eigenvectors;
        m * (v * CMat::from_diagonal(&inv_sqrt) * v.adjoint())
    }

    #[test]
    fn projection_of_perturbed_matrix_matches_gram_polar() {
        let a = base_matrix_a(2);
        let pert = CMat::from_fn(2, 2, |i, j| c(1e-9 * (i as f64 + 0.3), -1e-9 * (j as f64 - 0.7)));
        let m = &a + pert;
        let p = project_to_sun(&m).unwrap();
        assert!((&p - &a).norm() < 1e-8);
        let oracle = polar_via_gram(&m);
        let oracle = &oracle * Complex64::from_polar(1.0, -oracle.determinant().arg() / 2.0);
        assert!((p - oracle).norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=5 {
            let m = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let once = project_to_sun(&m).unwrap();
            let twice = project_to_sun(&once).unwrap();
            assert!(is_special_unitary(&once, 1e-12));
            assert!((once - twice).norm() < 1e-12);
        }
    }

    #[test]
    fn class_membership_examples() {
        for n in 2..=6 {
            assert!(in_class_a(&base_matrix_a(n), 1e-10));
            assert!(!in_class_a(&identity(n), 1e-10));
            assert!(in_class_a(&shift_matrix_y(n), 1e-10), "shift N={n}");
        }
    }

    /// Characteristic polynomial of the shift matrix via the Faddeev–LeVerrier
    /// recursion; expected `t^N - (-1)^{N-1}`.
    #[test]
    fn shift_characteristic_polynomial() {
        for n in 2..=6 {
            let y = shift_matrix_y(n);
            let mut m = identity(n);
            let mut coeffs = vec![c(1.0, 0.0)];
            for k in 1..=n {
                let ym = &y * &m;
                let ck = -ym.trace() / c(k as f64, 0.0);
                coeffs.push(ck);
                m = ym + identity(n) * ck;
            }
            for (k, ck) in coeffs.iter().enumerate().skip(1).take(n - 1) {
                assert!(ck.norm() < 1e-12, "N={n} k={k}");
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((coeffs[n] - c(sign, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn class_is_closed_under_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            let x = random_class_point_rng(n, &mut rng).matrix().clone();
            let wx = &x * omega(n as u32);
            assert_eq!(in_class_a(&x, 1e-9), in_class_a(&wx, 1e-9));
            let u = random_su(n, &mut rng);
            let wu = &u * omega(n as u32);
            assert_eq!(in_class_a(&u, 1e-9), in_class_a(&wu, 1e-9));
        }
    }

    #[test]
    fn retraction_examples() {
        let x = ClassPoint::base(3);
        assert_eq!(x.retract(&CMat::zeros(3, 3)).matrix(), x.matrix());
        let f = SkewTracelessFrame::new(3);
        let torus = f.elements()[6].clone() * c(0.4, 0.0) + &f.elements()[7] * c(-1.1, 0.0);
        assert!((x.retract(&torus).matrix() - x.matrix()).norm() < 1e-14);
    }

    #[test]
    fn retraction_first_order_matches_commutator() {
        let x = random_class_point(3, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coords: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
        let u = x.project_off_torus(&SkewTracelessFrame::new(3).combine(&coords));
        let t = 1e-7;
        let fd = (x.retract(&(&u * c(t, 0.0))).matrix() - x.matrix()) / c(t, 0.0);
        let exact = &u * x.matrix() - x.matrix() * &u;
        assert!((fd - &exact).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn many_retractions_stay_in_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = SkewTracelessFrame::new(4);
        let mut x = random_class_point(4, 2);
        for _ in 0..10_000 {
            let coords: Vec<f64> = (0..f.dim()).map(|_| rng.random::<f64>() - 0.5).collect();
            x = x.retract(&f.combine(&coords));
        }
        assert!(in_class_a(x.matrix(), 1e-9));
        assert!(is_special_unitary(x.matrix(), 1e-10));
    }

    #[test]
    fn tangent_generators_are_orthonormal() {
        let x = random_class_point(4, 17);
        let gens = x.tangent_generators();
        assert_eq!(gens.len(), 12);
        let tangents: Vec<CMat> = gens.iter().map(|u| u * x.matrix() - x.matrix() * u).collect();
        for (i, a) in tangents.iter().enumerate() {
            for (j, b) in tangents.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((inner(a, b) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_points_are_deterministic() {
        let a = random_class_point(3, 42);
        let b = random_class_point(3, 42);
        assert_eq!(a.matrix(), b.matrix());
        assert!(in_class_a(a.matrix(), 1e-10));
        let other = random_class_point(3, 43);
        let words = canonical_words(2);
        let fa = fingerprint(&[a.matrix().clone(), shift_matrix_y(3)], &words).unwrap();
        let fo = fingerprint(&[other.matrix().clone(), shift_matrix_y(3)], &words).unwrap();
        assert!(sup_distance(&fa, &fo) > 1e-6);
    }

    #[test]
    fn fingerprint_examples() {
        let n = 3;
        let (a, y) = (base_matrix_a(n), shift_matrix_y(n));
        let words = canonical_words(2);
        let f = fingerprint(&[a.clone(), y.clone()], &words).unwrap();
        let u = random_su(n, &mut ChaCha8Rng::seed_from_u64(8));
        let conj = |m: &CMat| &u * m * u.adjoint();
        let g = fingerprint(&[conj(&a), conj(&y)], &words).unwrap();
        assert!(sup_distance(&f, &g) < 1e-10);
        // tr x_1 ≈ 0 on C_A
        assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
        // commutator word is the 4th word for k = 2: x1, x2, x1x2, [x1,x2], x1x2
        let tr = c(f[6], f[7]);
        assert!((tr - omega(3) * c(3.0, 0.0)).norm() < 1e-12);
        assert!(fingerprint(&[a], &words).is_err());
    }

    #[test]
    fn class_point_recovered_from_matrix() {
        let x = random_class_point(4, 77);
        let back = ClassPoint::from_matrix(x.matrix(), 1e-8).unwrap();
        assert!((back.matrix() - x.matrix()).norm() < 1e-10);
        assert!(ClassPoint::from_matrix(&identity(4), 1e-8).is_none());
    }

    #[test]
    fn matrix_json_shape() {
        let y = shift_matrix_y(3);
        let j = MatrixJson::from(&y);
        assert_eq!(j.n, 3);
        assert_eq!(j.data[2], [1.0, 0.0]);
        let back = CMat::try_from(&j).unwrap();
        assert_eq!(back, y);
    }
}
