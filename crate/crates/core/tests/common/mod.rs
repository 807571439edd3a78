//! Property checks shared by the integration and acceptance targets. Each
//! returns `Err` with a description of the first failure.

#![allow(dead_code)]

use casson_lin::braid::{BraidWord, FreeWord};
use casson_lin::fixed_points::{
    lift_obstruction_search, residual_gradient, solve, solve_unconstrained, verify_irreducible, RepTuple,
    SolverConfig, TwistedMap,
};
use casson_lin::invariant::analyze;
use casson_lin::labels::{compatible_epsilon, EpsilonVector, LabelSpec};
use casson_lin::sun::{canonical_words, eval_word, fingerprint, in_class_a, omega_pow, random_su, sup_distance, CMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn braid(k: usize, letters: &[i32]) -> BraidWord {
    BraidWord::new(k, letters.to_vec()).unwrap()
}

pub fn random_braid<R: Rng>(k: usize, len: usize, g: &mut R) -> BraidWord {
    let letters = (0..len)
        .map(|_| {
            let s = g.random_range(1..k as i32);
            if g.random_bool(0.5) { s } else { -s }
        })
        .collect();
    BraidWord::new(k, letters).unwrap()
}

fn product_word(k: usize) -> FreeWord {
    FreeWord::new(k, (1..=k as i32).collect()).unwrap()
}

/// Far commutativity, the braid relation, and `b b⁻¹ = 1`, compared on the
/// free-group images.
pub fn braid_relations() -> Check {
    for k in 2..=5usize {
        let id = BraidWord::identity(k).generator_images();
        for i in 1..k as i32 {
            for j in 1..k as i32 {
                let (l, r) = if (i - j).abs() >= 2 {
                    (braid(k, &[i, j]), braid(k, &[j, i]))
                } else if j == i + 1 {
                    (braid(k, &[i, j, i]), braid(k, &[j, i, j]))
                } else {
                    continue;
                };
                if l.generator_images() != r.generator_images() {
                    return Err(format!("relation fails for {l} vs {r}"));
                }
            }
        }
        let mut g = rng(k as u64);
        for _ in 0..20 {
            let b = random_braid(k, 10, &mut g);
            if b.compose(&b.inverse()).unwrap().generator_images() != id {
                return Err(format!("{b} times its inverse is not trivial"));
            }
            // action on words is a homomorphism whose inverse is b⁻¹
            let w = FreeWord::new(k, vec![1, -2, 1]).unwrap();
            let back = b.inverse().compose(&b).unwrap().act_on_word(&w).unwrap();
            if back != w {
                return Err(format!("{b} does not act invertibly"));
            }
        }
    }
    Ok(())
}

/// `(x_1⋯x_k)^b = x_1⋯x_k` on random braids.
pub fn product_preserved(count: usize) -> Check {
    let mut g = rng(200);
    for _ in 0..count {
        let k = g.random_range(2..=6);
        let len = g.random_range(0..=16);
        let b = random_braid(k, len, &mut g);
        let p = product_word(k);
        if b.act_on_word(&p).unwrap() != p {
            return Err(format!("{b} moves the product"));
        }
    }
    Ok(())
}

/// `x_i^b = w x_{σ̄(i)} w⁻¹` with `w` the reported conjugator.
pub fn conjugate_form(count: usize) -> Check {
    let mut g = rng(300);
    for _ in 0..count {
        let k = g.random_range(2..=5);
        let b = random_braid(k, g.random_range(0..=12), &mut g);
        let perm = b.induced_permutation();
        for i in 1..=k {
            let w = b.conjugator_word(i).map_err(|e| e.to_string())?;
            let expect = w.concat(&FreeWord::generator(k, perm.image(i))).concat(&w.inverse());
            if b.act_on_generator(i).unwrap() != expect {
                return Err(format!("{b}: image of x_{i} is not conjugate to x_{}", perm.image(i)));
            }
        }
    }
    Ok(())
}

fn random_map<R: Rng>(g: &mut R) -> TwistedMap {
    let k = g.random_range(2..=4);
    let n = g.random_range(2..=4u32);
    // a braid acting trivially has a constant residual, which no relative
    // error can test
    let b = loop {
        let b = random_braid(k, g.random_range(1..=8), g);
        if b.generator_images() != BraidWord::identity(k).generator_images() {
            break b;
        }
    };
    let eps = EpsilonVector::new(n, (0..k).map(|_| g.random_range(0..n)).collect());
    TwistedMap::new(&b, &eps).unwrap()
}

/// Analytic gradient against central differences along the tangent frame,
/// at `points` random points whose gradient clears the difference noise.
pub fn gradient_matches_fd(points: usize) -> Check {
    let mut g = rng(400);
    let h = 1e-5;
    let mut tested = 0;
    while tested < points {
        let map = random_map(&mut g);
        let x = RepTuple::random(map.strands(), map.rank(), &mut g);
        let grad = residual_gradient(&map, &x);
        // some braids act by a single conjugation, leaving isolated critical
        // points where both sides are pure rounding
        if grad.norm() < 1e-6 {
            continue;
        }
        let gens = x.tangent_generators();
        let mut fd = grad.clone();
        for c in 0..grad.len() {
            let mut e = vec![0.0; grad.len()];
            e[c] = h;
            let plus = map.residual(x.displace(&gens, &e).matrices()).unwrap();
            e[c] = -h;
            let minus = map.residual(x.displace(&gens, &e).matrices()).unwrap();
            fd[c] = (plus - minus) / (2.0 * h);
        }
        let rel = (&grad - &fd).norm() / grad.norm();
        if rel > 1e-5 {
            return Err(format!("point {tested}: relative gradient error {rel:.2e}"));
        }
        tested += 1;
    }
    Ok(())
}

pub fn small_cfg(k: usize, restarts: usize, seed: u64) -> SolverConfig {
    SolverConfig { restarts, seed, ..SolverConfig::for_strands(k) }
}

/// Fixed points of a few nondegenerate cases, used by the checks below.
pub fn sample_solutions() -> Vec<(BraidWord, LabelSpec, TwistedMap, Vec<RepTuple>)> {
    let cases = [
        (braid(2, &[1, 1]), LabelSpec::new(2, vec![1, 1])),
        (braid(2, &[1, 1]), LabelSpec::new(3, vec![1, 2])),
        (braid(2, &[1, 1]), LabelSpec::new(4, vec![3, 1])),
        (braid(2, &[1, 1, 1, 1]), LabelSpec::new(2, vec![1, 1])),
        (braid(2, &[1, 1, 1, 1]), LabelSpec::new(3, vec![1, 2])),
        (braid(3, &[1, 1, 2]), LabelSpec::new(3, vec![1, 2])),
    ];
    cases
        .into_iter()
        .map(|(b, spec)| {
            let eps = compatible_epsilon(&b.cycles(), &spec).unwrap();
            let map = TwistedMap::new(&b, &eps).unwrap();
            let sols = solve(&map, &small_cfg(b.strands(), 40 * b.strands(), 11)).unwrap();
            let tuples = sols.solutions.into_iter().map(|s| s.tuple).collect();
            (b, spec, map, tuples)
        })
        .collect()
}

type Samples = [(BraidWord, LabelSpec, TwistedMap, Vec<RepTuple>)];

fn nonempty(samples: &Samples) -> Check {
    match samples.iter().find(|s| s.3.is_empty()) {
        Some((b, spec, ..)) => Err(format!("no solutions for {b} at {spec}")),
        None => Ok(()),
    }
}

/// Residual, fingerprint, and Lefschetz data are unchanged by `X ↦ U X U†`.
pub fn conjugation_invariance(samples: &Samples) -> Check {
    nonempty(samples)?;
    let mut g = rng(500);
    for (b, spec, map, tuples) in samples {
        let words = canonical_words(b.strands());
        for x in tuples {
            let u = random_su(map.rank(), &mut g);
            let y = x.conjugate(&u);
            let (rx, ry) = (map.residual(x.matrices()).unwrap(), map.residual(y.matrices()).unwrap());
            if (rx - ry).abs() > 1e-12 {
                return Err(format!("{b} {spec}: residual {rx:.2e} vs {ry:.2e}"));
            }
            let fx = fingerprint(x.matrices(), &words).unwrap();
            let fy = fingerprint(y.matrices(), &words).unwrap();
            if sup_distance(&fx, &fy) > 1e-9 {
                return Err(format!("{b} {spec}: fingerprint moved"));
            }
            let (ax, ay) = (analyze(map, x, 1e-6).unwrap(), analyze(map, &y, 1e-6).unwrap());
            if (ax.kernel_dim, ax.excess, ax.sign) != (ay.kernel_dim, ay.excess, ay.sign) {
                return Err(format!("{b} {spec}: analysis {ax:?} vs {ay:?}"));
            }
        }
    }
    Ok(())
}

/// Conjugation by the longitude of component `j` multiplies its first
/// meridian by `ω^{a_j}`.
pub fn commutator_pairing(samples: &Samples) -> Check {
    nonempty(samples)?;
    for (b, spec, map, tuples) in samples {
        let cycles = b.cycles();
        for x in tuples {
            let m = x.matrices();
            for (j, cycle) in cycles.cycles().iter().enumerate() {
                let w: CMat = eval_word(m, &b.longitude_word(j + 1).unwrap());
                let xi = &m[cycle[0] - 1];
                let twisted = &w * xi * w.adjoint() * omega_pow(spec.n, spec.labels[j] as i64);
                let err = (xi - twisted).norm();
                if err > 1e-8 {
                    return Err(format!("{b} {spec} N={}: pairing defect {err:.2e} on component {}", map.rank(), j + 1));
                }
            }
        }
    }
    Ok(())
}

/// Every accepted solution has trivial commutant.
pub fn irreducible(samples: &Samples) -> Check {
    nonempty(samples)?;
    for (b, spec, _, tuples) in samples {
        for x in tuples {
            let (ok, dim) = verify_irreducible(x.matrices(), 1e-6);
            if !ok {
                return Err(format!("{b} {spec}: commutant of dimension {dim}"));
            }
        }
    }
    Ok(())
}

/// No Hopf fixed point at `N = 2, 3` lifts to an honest representation.
pub fn hopf_does_not_lift() -> Check {
    let b = braid(2, &[1, 1]);
    for (n, a) in [(2u32, vec![1, 1]), (3, vec![1, 2]), (3, vec![2, 1])] {
        let spec = LabelSpec::new(n, a);
        let eps = compatible_epsilon(&b.cycles(), &spec).unwrap();
        let map = TwistedMap::new(&b, &eps).unwrap();
        let sols = solve(&map, &small_cfg(2, 60, 3)).unwrap();
        if sols.is_empty() {
            return Err(format!("no Hopf solutions at {spec}"));
        }
        for s in &sols.solutions {
            if let Some(w) = lift_obstruction_search(&b, s.tuple.matrices(), 1e-18).unwrap() {
                return Err(format!("Hopf {spec} lifts with η = {w:?}"));
            }
        }
    }
    Ok(())
}

/// Searching all of `SU(N)^k` on the Hopf braid only finds tuples in `C_A`.
pub fn unconstrained_hopf_in_class() -> Check {
    let b = braid(2, &[1, 1]);
    for (n, a) in [(2u32, vec![1, 1]), (3, vec![1, 2])] {
        let spec = LabelSpec::new(n, a);
        let eps = compatible_epsilon(&b.cycles(), &spec).unwrap();
        let map = TwistedMap::new(&b, &eps).unwrap();
        let sols = solve_unconstrained(&map, &small_cfg(2, 60, 5)).unwrap();
        if sols.tuples.is_empty() {
            return Err(format!("unconstrained search found nothing at {spec}"));
        }
        for t in &sols.tuples {
            if !t.iter().all(|x| in_class_a(x, 1e-6)) {
                return Err(format!("unconstrained solution outside C_A at {spec}"));
            }
        }
    }
    Ok(())
}
