use ultrastab::witness::*;
use ultrastab::{ApproxRep, Presentation, RingSpec, Scalar, UMatrix};

/// ν_p(a^e − 1) by plain u128 arithmetic mod p^k.
fn val_pow_minus_one(p: u128, k: u32, a: u128, e: u128) -> u32 {
    let m = p.pow(k);
    let (mut b, mut acc, mut e) = (a % m, 1u128, e);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    let mut d = (acc + m - 1) % m;
    if d == 0 {
        return k;
    }
    let mut v = 0;
    while d % p == 0 {
        d /= p;
        v += 1;
    }
    v
}

/// Square/cube roots of unity and the distance to `k ↦ a^k`, with no use of
/// the ring layer.
fn brute_hdist(p: u64, k: u32, n: u64, a: u64) -> (u32, Vec<u64>) {
    let m = p.pow(k);
    let val = |mut d: u64| {
        if d == 0 {
            return k;
        }
        let mut v = 0;
        while d % p == 0 {
            d /= p;
            v += 1;
        }
        v
    };
    let pw = |b: u64, e: u64| (0..e).fold(1u64, |acc, _| acc * b % m);
    let mut best = 0;
    let mut mins = vec![];
    for u in (0..m).filter(|u| u % p != 0 && pw(*u, n) == 1) {
        let d = (0..n).map(|e| val((pw(a, e) + m - pw(u, e)) % m)).min().unwrap();
        if d > best {
            best = d;
            mins.clear();
        }
        if d == best {
            mins.push(u);
        }
    }
    (best, mins)
}

#[test]
fn badestimate_defects_match_lte() {
    let r6 = RingSpec::zp(3, 6).unwrap();
    let rep = make_badestimate_rep(1, &Scalar::from_int(r6, 3)).unwrap();
    assert_eq!(rep.defect_val(), val_pow_minus_one(3, 6, 4, 3));
    assert_eq!(rep.defect_val(), 2);
    let r12 = RingSpec::zp(3, 12).unwrap();
    let rep = make_badestimate_rep(4, &Scalar::from_int(r12, 3)).unwrap();
    assert_eq!(rep.defect_val(), val_pow_minus_one(3, 12, 4, 81));
    assert_eq!(rep.defect_val(), 5);
}

#[test]
fn badestimate_equal_char() {
    let r = RingSpec::fpx(2, 10).unwrap();
    let x = Scalar::from_digits(r, &[0, 1]).unwrap();
    // (1 + X)^4 = 1 + X^4
    assert_eq!(make_badestimate_rep(2, &x).unwrap().defect_val(), 4);
}

#[test]
fn badestimate_rejects_low_precision() {
    let r = RingSpec::zp(3, 3).unwrap();
    assert!(make_badestimate_rep(2, &Scalar::from_int(r, 3)).is_err());
}

fn minimizer_codes(c: &HdistCertificate, r: RingSpec) -> Vec<u64> {
    match &c.witness {
        HdistWitness::Enumerated { minimizers, .. } => minimizers.iter().map(|v| r.decode(v).unwrap()).collect(),
        _ => panic!("expected enumeration"),
    }
}

#[test]
fn hdist_cube_roots_mod_729() {
    let r = RingSpec::zp(3, 6).unwrap();
    let rep = make_badestimate_rep(1, &Scalar::from_int(r, 3)).unwrap();
    let c = hdist_gl1_cyclic(&rep, 1 << 24).unwrap();
    let (v, mins) = brute_hdist(3, 6, 3, 4);
    assert_eq!(c.value.val(), Some(v));
    assert_eq!(v, 1);
    assert_eq!(minimizer_codes(&c, r), mins);
    assert_eq!(mins, vec![1, 244, 487]);
}

#[test]
fn hdist_square_roots_mod_64() {
    let r = RingSpec::zp(2, 6).unwrap();
    let rep = make_badestimate_rep(1, &Scalar::from_int(r, 2)).unwrap();
    let c = hdist_gl1_cyclic(&rep, 1 << 24).unwrap();
    let (v, mins) = brute_hdist(2, 6, 2, 3);
    assert_eq!((c.value.val(), v), (Some(2), 2));
    assert_eq!(minimizer_codes(&c, r), mins);
    assert!(mins.contains(&63));
}

#[test]
fn hdist_of_homomorphism_is_saturated() {
    let r = RingSpec::zp(3, 4).unwrap();
    let rep = ApproxRep::new(Presentation::cyclic(3), vec![UMatrix::diag(r, &[1])]).unwrap();
    assert!(hdist_gl1_cyclic(&rep, 1 << 24).unwrap().value.is_saturated());
}

#[test]
fn hdist_cap() {
    let r = RingSpec::zp(3, 12).unwrap();
    let rep = make_badestimate_rep(1, &Scalar::from_int(r, 3)).unwrap();
    assert!(hdist_gl1_cyclic(&rep, 1000).is_err());
}

#[test]
fn diag_lower_bounds() {
    let e = RingSpec::fpx(2, 8).unwrap();
    let c = hdist_lowerbound_diag(3, &Scalar::from_digits(e, &[0, 1]).unwrap()).unwrap();
    assert_eq!(c.value.val(), Some(1));
    let r = RingSpec::zp(3, 8).unwrap();
    assert_eq!(hdist_lowerbound_diag(1, &Scalar::from_int(r, 3)).unwrap().value.val(), Some(1));
    assert_eq!(hdist_lowerbound_diag(2, &Scalar::from_int(r, 9)).unwrap().value.val(), Some(2));
    let r2 = RingSpec::zp(2, 8).unwrap();
    assert!(hdist_lowerbound_diag(1, &Scalar::from_int(r2, 2)).is_err());
}

#[test]
fn cyclotomic_degrees() {
    for (p, j) in [(3, 1), (3, 2), (5, 1), (5, 2), (3, 4)] {
        let s = cyclotomic_slopes(p, j).unwrap();
        let d = (p - 1) * p.pow(j - 1);
        assert_eq!(s.degree, d);
        assert_eq!(s.multiplicity, d);
        assert_eq!(s.root_valuation, format!("1/{d}"));
    }
}

#[test]
fn wreath_claims_and_generators() {
    let rep = verify_claims(2, 3, 1 << 12).unwrap();
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    // r_1 = 4 cannot separate t_1 = 1 from -t_i = 1 mod 4 for i >= 2
    assert_eq!(
        failed,
        vec![
            "distinct 0, t_1, -t_2, t_1-t_2 mod r_1",
            "distinct 0, t_1, -t_3, t_1-t_3 mod r_1",
            "pr_1 of commutator for i = 2",
            "pr_1 of commutator for i = 3",
        ]
    );
    assert!(verify_claims_range(2, 2, 4, 1 << 12).unwrap().all_passed);
    assert!(verify_claims_range(3, 2, 3, 1 << 12).unwrap().all_passed);
    for i in 1..=3 {
        build_unstable_generators(2, i, 1 << 12).unwrap();
    }
    let one = verify_claims(2, 1, 128).unwrap();
    assert!(one.all_passed);
    build_unstable_generators(3, 1, 128).unwrap();
}

#[test]
fn wreath_rep_p3() {
    let r = RingSpec::zp(3, 12).unwrap();
    let rep = make_wreath_rep(1, &Scalar::from_int(r, 3), 128).unwrap();
    assert_eq!(rep.n(), 12);
    assert_eq!(rep.defect_val(), 2);
}

#[test]
fn wreath_i2_sampled() {
    let r = RingSpec::zp(2, 12).unwrap();
    let opts = WreathCheckOptions { samples: 500, ..Default::default() };
    let c = wreath_rep_defect_certificate(2, &Scalar::from_int(r, 2), &opts).unwrap();
    assert_eq!(c.dimension, 64);
    assert!(c.sampled.unwrap().min_val >= c.structural_defect_val);
}

#[test]
fn wreath_dimension_cap() {
    let r = RingSpec::zp(2, 12).unwrap();
    assert!(make_wreath_rep(3, &Scalar::from_int(r, 2), 128).is_err());
}
