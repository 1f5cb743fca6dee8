use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultrastab::filtration::{split_section_repair, FiltDist, FiltrationGroup, FiltrationRep, TreeAut, TriMatrix};
use ultrastab::involution::involution_repair;
use ultrastab::monomial::monomial_commutant;
use ultrastab::suites::{norm_law_suite, random_gl, random_matrix, random_monomial};
use ultrastab::witness::wreath::WreathMatrixMap;
use ultrastab::witness::{InnerElem, WreathElem};
use ultrastab::{Presentation, RingSpec, Scalar, UMatrix, Word};

fn ring_strategy() -> impl Strategy<Value = RingSpec> {
    (prop_oneof![Just(2u64), Just(3), Just(5)], 1u32..7, any::<bool>()).prop_map(|(p, k, equal)| {
        if equal {
            RingSpec::fpx(p, k).unwrap()
        } else {
            RingSpec::zp(p, k).unwrap()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norm_laws_hold(ring in ring_strategy(), n in 1usize..4, seed in any::<u64>()) {
        let rep = norm_law_suite(ring, n, 25, seed).unwrap();
        prop_assert_eq!(rep.total_violations(), 0, "{:?}", rep.violations);
    }

    /// `I + ω̄^k M` round-trips through its congruence coordinates and stays
    /// in GL.
    #[test]
    fn congruence_round_trip(ring in ring_strategy(), n in 1usize..4, seed in any::<u64>()) {
        let kk = ring.precision();
        prop_assume!(kk >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..kk);
        let m = random_matrix(ring, n, &mut rng).reduce(kk - k).unwrap();
        let a = UMatrix::congruence_lift(&m, k, ring).unwrap();
        prop_assert!(a.is_gl());
        prop_assert!(a.dist_val(&UMatrix::identity(ring, n)).unwrap() >= k);
        prop_assert_eq!(a.congruence_coords(k).unwrap(), m);
        // the ball is a subgroup
        let b = UMatrix::congruence_lift(&random_matrix(ring, n, &mut rng).reduce(kk - k).unwrap(), k, ring).unwrap();
        let c = a.mul(&b.inverse().unwrap()).unwrap();
        prop_assert!(c.dist_val(&UMatrix::identity(ring, n)).unwrap() >= k);
    }
}

fn random_inner(q: u64, rng: &mut impl Rng) -> InnerElem {
    InnerElem { base: (0..q).map(|_| rng.gen_range(0..q)).collect(), shift: rng.gen_range(0..q) }
}

fn random_wreath(p: u64, i: u32, rng: &mut impl Rng) -> WreathElem {
    let mut e = WreathElem::identity(p, i);
    let q = e.q();
    for b in &mut e.blocks {
        *b = random_inner(q, rng);
    }
    e.shift = rng.gen_range(0..e.r());
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wreath_group_axioms(p in prop_oneof![Just(2u64), Just(3)], i in 1u32..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_wreath(p, i, &mut rng), random_wreath(p, i, &mut rng), random_wreath(p, i, &mut rng));
        let id = WreathElem::identity(p, i);
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&id), a.clone());
        prop_assert_eq!(id.mul(&a), a.clone());
        prop_assert!(a.mul(&a.inv()).is_identity());
        prop_assert!(a.inv().mul(&a).is_identity());
        prop_assert_eq!(a.mul(&b).inv(), b.inv().mul(&a.inv()));
        // the diagonal is central in the base group
        let d = WreathElem::diagonal_one(p, i);
        let mut base = b.clone();
        base.shift = 0;
        prop_assert_eq!(d.mul(&base), base.mul(&d));
    }

    /// Monomial images multiply like the matrices they stand for.
    #[test]
    fn wreath_monomials_match_matrices(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = RingSpec::zp(2, 6).unwrap();
        let map = WreathMatrixMap::new(2, 1, &Scalar::from_int(ring, 2));
        let (g, h) = (random_wreath(2, 1, &mut rng), random_wreath(2, 1, &mut rng));
        let (mg, mh) = (map.outer(&g), map.outer(&h));
        prop_assert_eq!(mg.mul(&mh, &ring).to_matrix(ring), mg.to_matrix(ring).mul(&mh.to_matrix(ring)).unwrap());
        let prod = map.outer(&g.mul(&h));
        prop_assert_eq!(prod.dist_val(&mg.mul(&mh, &ring), &ring), prod.to_matrix(ring).dist_val(&mg.mul(&mh, &ring).to_matrix(ring)).unwrap());
    }
}

/// Random element of `T_n(o/p^K)`.
fn random_tri(ring: RingSpec, n: usize, rng: &mut impl Rng) -> TriMatrix {
    let mut m = UMatrix::zeros(ring, n, n);
    for i in 0..n {
        for j in i..n {
            let x = loop {
                let x = rng.gen_range(0..ring.size());
                if i != j || ring.is_unit(x) {
                    break x;
                }
            };
            m.set(i, j, x);
        }
    }
    TriMatrix::new(m).unwrap()
}

fn random_tree(arity: usize, depth: u32, rng: &mut impl Rng) -> TreeAut {
    let perms = (0..TreeAut::node_count(arity, depth))
        .map(|_| {
            let mut p: Vec<usize> = (0..arity).collect();
            for i in (1..arity).rev() {
                p.swap(i, rng.gen_range(0..=i));
            }
            p
        })
        .collect();
    TreeAut::new(arity, depth, perms).unwrap()
}

fn check_filtration_metric<G: FiltrationGroup + std::fmt::Debug>(a: &G, b: &G, c: &G) -> Result<(), TestCaseError> {
    let (ab, bc, ac) = (a.filt_dist(b), b.filt_dist(c), a.filt_dist(c));
    prop_assert!(ac.le(ab.max(bc)));
    prop_assert_eq!(ab, b.filt_dist(a));
    prop_assert_eq!(a.filt_dist(a), FiltDist::Zero);
    // bi-invariance
    prop_assert_eq!(c.mul(a).filt_dist(&c.mul(b)), ab);
    prop_assert_eq!(a.mul(c).filt_dist(&b.mul(c)), ab);
    // the split section is a homomorphism that fixes the quotient
    for k in 0..=a.top() {
        prop_assert_eq!(a.mul(b).split(k), a.split(k).mul(&b.split(k)));
        prop_assert!(a.split(k).agreement(a) >= k);
    }
    Ok(())
}

fn z2() -> Presentation {
    Presentation::new(vec!["a".into(), "b".into()], vec![Word::from_powers(&[(0, 1), (1, 1), (0, -1), (1, -1)])]).unwrap()
}

/// Two elements whose first `k` columns (or levels) come from powers of one
/// common element, so they commute there; the rest is random.
fn tri_pair(ring: RingSpec, n: usize, k: usize, rng: &mut impl Rng) -> (TriMatrix, TriMatrix) {
    let c = random_tri(ring, n, rng);
    let (e1, e2) = (rng.gen_range(0..4u32), rng.gen_range(0..4u32));
    let pow = |e: u32| (0..e).fold(c.identity_like(), |acc, _| acc.mul(&c));
    let graft = |top: TriMatrix, rng: &mut ChaCha8Rng| {
        let mut m = random_tri(ring, n, rng).matrix().clone();
        m.set_block(0, 0, &top.matrix().block(0, 0, n, k));
        TriMatrix::new(m).unwrap()
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
    (graft(pow(e1), &mut r), graft(pow(e2), &mut r))
}

fn tree_pair(depth: u32, k: u32, rng: &mut impl Rng) -> (TreeAut, TreeAut) {
    let c = random_tree(2, depth, rng);
    let pow = |e: u32| (0..e).fold(TreeAut::identity(2, depth), |acc, _| acc.mul(&c));
    let cut = TreeAut::node_count(2, k);
    let (e1, e2) = (rng.gen_range(0..4u32), rng.gen_range(0..4u32));
    let mut graft = |top: TreeAut| {
        let mut perms = random_tree(2, depth, rng).perms().to_vec();
        perms[..cut].clone_from_slice(&top.perms()[..cut]);
        TreeAut::new(2, depth, perms).unwrap()
    };
    (graft(pow(e1)), graft(pow(e2)))
}

fn check_split<G: FiltrationGroup + std::fmt::Debug>(a: G, b: G, k: u32) -> Result<(), TestCaseError> {
    let rep = FiltrationRep::new(z2(), vec![a, b]).unwrap();
    let defect = rep.defect();
    prop_assert!(!matches!(defect, FiltDist::Scale(d) if d < k), "defect {defect:?} above level {k}");
    match split_section_repair(&rep) {
        Ok((out, report)) => {
            prop_assert_eq!(out.defect(), FiltDist::Zero);
            prop_assert!(rep.dist(&out).le(defect));
            prop_assert_eq!(report.distance, rep.dist(&out));
        }
        Err(e) => prop_assert!(k == 0, "unexpected {e:?}"),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangular_filtration_is_ultrametric(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = RingSpec::zp(2, 2).unwrap();
        let (a, b, c) = (random_tri(ring, n, &mut rng), random_tri(ring, n, &mut rng), random_tri(ring, n, &mut rng));
        check_filtration_metric(&a, &b, &c)?;
    }

    #[test]
    fn tree_filtration_is_ultrametric(seed in any::<u64>(), depth in 1u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_tree(2, depth, &mut rng), random_tree(2, depth, &mut rng), random_tree(2, depth, &mut rng));
        check_filtration_metric(&a, &b, &c)?;
        for w in TreeAut::words(2, depth) {
            prop_assert_eq!(a.mul(&b).apply(&w), a.apply(&b.apply(&w)));
        }
    }

    #[test]
    fn split_section_triangular(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = tri_pair(RingSpec::zp(2, 2).unwrap(), 4, k, &mut rng);
        check_split(a, b, k as u32)?;
    }

    #[test]
    fn split_section_tree(seed in any::<u64>(), k in 1u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = tree_pair(4, k, &mut rng);
        check_split(a, b, k)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn monomial_commutant_postconditions(ring in ring_strategy(), n in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_monomial(ring, n, &mut rng);
        let d = random_matrix(ring, n, &mut rng);
        let rep = monomial_commutant(&p, &d).unwrap();
        prop_assert_eq!(p.mul(&rep.d_prime).unwrap(), rep.d_prime.mul(&p).unwrap());
        prop_assert!(rep.distance_val >= rep.bound_val);
        if rep.orbits.iter().all(|o| !o.obstructed) {
            prop_assert!(rep.commutator_bound_holds);
        }
        // a commuting input is a fixed point
        let again = monomial_commutant(&p, &rep.d_prime).unwrap();
        prop_assert_eq!(again.d_prime, rep.d_prime);
    }

    /// `A = S + X^k R` with `S` an exact involution over `F_2[X]/(X^10)`.
    #[test]
    fn involution_repair_is_quadratic(n in 1usize..5, k in 1u32..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ring = RingSpec::fpx(2, 10).unwrap();
        let q = random_gl(ring, n, &mut rng);
        let mut j = UMatrix::identity(ring, n);
        let swaps = rng.gen_range(0..=n / 2);
        for s in 0..swaps {
            let (x, y) = (2 * s, 2 * s + 1);
            j.set(x, x, 0);
            j.set(y, y, 0);
            j.set(x, y, 1);
            j.set(y, x, 1);
        }
        let s = q.mul(&j).unwrap().mul(&q.inverse().unwrap()).unwrap();
        let a = s.add(&random_matrix(ring, n, &mut rng).shift_up(k)).unwrap();
        let id = UMatrix::identity(ring, n);
        let defect = a.mul(&a).unwrap().dist_val(&id).unwrap();
        let out = involution_repair(&a).unwrap();
        prop_assert!(out.mul(&out).unwrap().is_identity());
        prop_assert!(2 * a.dist_val(&out).unwrap() >= defect);
    }
}

/// Smallest `val(D - D')` over all `D'` with `PD' = D'P`, by enumeration of
/// 2×2 matrices over `Z/p^k` in plain integers.
fn brute_nearest_commutant(p: u64, k: u32, pm: [u64; 4], dm: [u64; 4]) -> u32 {
    let m = p.pow(k);
    let val = |x: u64| {
        let mut x = x % m;
        if x == 0 {
            return k;
        }
        let mut v = 0;
        while x % p == 0 {
            x /= p;
            v += 1;
        }
        v
    };
    let mul = |a: [u64; 4], b: [u64; 4]| {
        [
            (a[0] * b[0] + a[1] * b[2]) % m,
            (a[0] * b[1] + a[1] * b[3]) % m,
            (a[2] * b[0] + a[3] * b[2]) % m,
            (a[2] * b[1] + a[3] * b[3]) % m,
        ]
    };
    let mut best = 0;
    for code in 0..m.pow(4) {
        let e = [code % m, code / m % m, code / m / m % m, code / m / m / m];
        if mul(pm, e) == mul(e, pm) {
            let d = (0..4).map(|i| val(dm[i] + m - e[i])).min().unwrap();
            best = best.max(d);
        }
    }
    best
}

/// `P = diag(1, 1 + p)`, `D = E_12`: the ratio product on the orbit of
/// `(0, 1)` is `1 + p`, so the nearest commuting matrix is at distance 1
/// while `‖PD − DP‖ = |p|`.
#[test]
fn monomial_ratio_counterexample_frozen() {
    let ring = RingSpec::zp(3, 2).unwrap();
    let p = UMatrix::from_ints(ring, 2, &[1, 0, 0, 4]);
    let d = UMatrix::from_ints(ring, 2, &[0, 1, 0, 0]);
    let rep = monomial_commutant(&p, &d).unwrap();
    assert_eq!(rep.commutator_val, 1);
    assert_eq!(rep.distance_val, 0);
    assert!(!rep.commutator_bound_holds);
    assert_eq!(rep.bound_val, 0);
    assert_eq!(brute_nearest_commutant(3, 2, [1, 0, 0, 4], [0, 1, 0, 0]), 0);

    // the swap example agrees with enumeration
    assert_eq!(brute_nearest_commutant(3, 2, [0, 1, 1, 0], [4, 0, 0, 1]), 1);
    let swap = UMatrix::from_ints(ring, 2, &[0, 1, 1, 0]);
    let rep = monomial_commutant(&swap, &UMatrix::from_ints(ring, 2, &[4, 0, 0, 1])).unwrap();
    assert_eq!(rep.distance_val, 1);
}
