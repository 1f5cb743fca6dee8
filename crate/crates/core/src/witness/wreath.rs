//! Iterated wreath products `(C_q ≀ C_q) ≀ C_r` with `q = p^i`, `r = 4^i`,
//! the elements `γ, ζ, κ, ϱ, η, δ` and their monomial matrix images.
//!
//! Conventions: an element `(x, c)` of `B ≀ C_m` stands for `x · z^c` where
//! `z` shifts coordinates left, so `(x, c)(y, d) = (x_j · y_{j+c}, c + d)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::presentation::{ApproxRep, Presentation, Word};
use crate::ring::{Mode, RingSpec, Scalar};

use super::badestimate::{hdist_lowerbound_diag, hdist_lowerbound_sign, make_badestimate_rep, HdistCertificate};

/// `r_i = 4^i`.
pub fn r_param(i: u32) -> u64 {
    1u64 << (2 * i)
}

/// `t_i = 2^i - 1`.
pub fn t_param(i: u32) -> u64 {
    (1u64 << i) - 1
}

/// Element of `C_q ≀ C_q`: a `q`-tuple over `Z/q` and a shift.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InnerElem {
    pub base: Vec<u64>,
    pub shift: u64,
}

impl InnerElem {
    pub fn identity(q: u64) -> Self {
        InnerElem { base: vec![0; q as usize], shift: 0 }
    }

    fn q(&self) -> u64 {
        self.base.len() as u64
    }

    /// `Δ¹(1)`: all coordinates 1, no shift.
    pub fn diagonal_one(q: u64) -> Self {
        InnerElem { base: vec![1 % q; q as usize], shift: 0 }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let q = self.q();
        let base = (0..q).map(|j| (self.base[j as usize] + o.base[((j + self.shift) % q) as usize]) % q).collect();
        InnerElem { base, shift: (self.shift + o.shift) % q }
    }

    pub fn inv(&self) -> Self {
        let q = self.q();
        let base = (0..q).map(|m| (q - self.base[((m + q - self.shift) % q) as usize]) % q).collect();
        InnerElem { base, shift: (q - self.shift) % q }
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.base.iter().all(|&x| x == 0)
    }
}

/// Element of `(C_q ≀ C_q) ≀ C_r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WreathElem {
    pub p: u64,
    pub i: u32,
    pub blocks: Vec<InnerElem>,
    pub shift: u64,
}

impl WreathElem {
    pub fn identity(p: u64, i: u32) -> Self {
        let q = p.pow(i);
        WreathElem { p, i, blocks: vec![InnerElem::identity(q); r_param(i) as usize], shift: 0 }
    }

    pub fn q(&self) -> u64 {
        self.p.pow(self.i)
    }
    pub fn r(&self) -> u64 {
        self.blocks.len() as u64
    }

    /// The inner element `a` placed at outer coordinate `at`.
    pub fn embed(p: u64, i: u32, a: &InnerElem, at: u64) -> Self {
        let mut e = Self::identity(p, i);
        e.blocks[at as usize] = a.clone();
        e
    }

    pub fn mul(&self, o: &Self) -> Self {
        let r = self.r();
        let blocks = (0..r).map(|j| self.blocks[j as usize].mul(&o.blocks[((j + self.shift) % r) as usize])).collect();
        WreathElem { p: self.p, i: self.i, blocks, shift: (self.shift + o.shift) % r }
    }

    pub fn inv(&self) -> Self {
        let r = self.r();
        let blocks = (0..r).map(|m| self.blocks[((m + r - self.shift) % r) as usize].inv()).collect();
        WreathElem { p: self.p, i: self.i, blocks, shift: (r - self.shift) % r }
    }

    pub fn pow(&self, e: i64) -> Self {
        let b = if e < 0 { self.inv() } else { self.clone() };
        let mut acc = Self::identity(self.p, self.i);
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&b);
        }
        acc
    }

    /// `a b a^{-1} b^{-1}`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.mul(b).mul(&a.inv()).mul(&b.inv())
    }

    /// `a b a^{-1}`.
    pub fn conjugate(a: &Self, b: &Self) -> Self {
        a.mul(b).mul(&a.inv())
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.blocks.iter().all(InnerElem::is_identity)
    }

    /// `Δ²(1)`: every block `Δ¹(1)`.
    pub fn diagonal_one(p: u64, i: u32) -> Self {
        let q = p.pow(i);
        WreathElem { p, i, blocks: vec![InnerElem::diagonal_one(q); r_param(i) as usize], shift: 0 }
    }
}

/// `γ = (−(0, 1, …, q−1), 0)`.
pub fn gamma(p: u64, i: u32) -> InnerElem {
    let q = p.pow(i);
    InnerElem { base: (0..q).map(|j| (q - j) % q).collect(), shift: 0 }
}

/// `ζ = (0, 1)`.
pub fn zeta(p: u64, i: u32) -> InnerElem {
    let q = p.pow(i);
    InnerElem { base: vec![0; q as usize], shift: 1 % q }
}

/// The `j`-th coordinate of `ϱ`: `ζ_j` at 0 and `γ_j` at `t_j`.
pub fn rho(p: u64, j: u32) -> WreathElem {
    let mut e = WreathElem::embed(p, j, &zeta(p, j), 0);
    e.blocks[t_param(j) as usize] = gamma(p, j);
    e
}

/// The `j`-th coordinate of `η`: outer shift 1.
pub fn eta(p: u64, j: u32) -> WreathElem {
    let mut e = WreathElem::identity(p, j);
    e.shift = 1;
    e
}

/// The `j`-th coordinate of `[η^{t_i} ϱ η^{-t_i}, ϱ]`.
pub fn kappa_commutator(p: u64, i: u32, j: u32) -> WreathElem {
    let (r, e) = (rho(p, j), eta(p, j));
    let conj = WreathElem::conjugate(&e.pow(t_param(i) as i64), &r);
    WreathElem::commutator(&conj, &r)
}

/// The `j`-th coordinate of `δ_i = Π_{m < r_i} η^m κ_i η^{-m}`, with `κ_i`
/// taken as the commutator word so that every coordinate is meaningful.
pub fn delta_coordinate(p: u64, i: u32, j: u32) -> WreathElem {
    let k = kappa_commutator(p, i, j);
    let e = eta(p, j);
    let mut acc = WreathElem::identity(p, j);
    for m in 0..r_param(i) as i64 {
        acc = acc.mul(&WreathElem::conjugate(&e.pow(m), &k));
    }
    acc
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnstableGenerators {
    pub p: u64,
    pub i: u32,
    pub gamma: InnerElem,
    pub zeta: InnerElem,
    pub kappa: InnerElem,
    pub rho: WreathElem,
    pub eta: WreathElem,
    pub delta: WreathElem,
}

fn wreath_size_check(p: u64, i: u32, cap: u64) -> Result<()> {
    let size = p.checked_pow(i).and_then(|q| q.checked_mul(r_param(i)));
    match size {
        Some(s) if s <= cap => Ok(()),
        _ => Err(Error::CapExceeded { what: format!("wreath tuple size p^i r_i for p = {p}, i = {i}"), cap }),
    }
}

/// Build `γ_i, ζ_i, κ_i, ϱ_i, η_i, δ_i` and re-check their defining
/// identities by direct arithmetic. `cap` bounds `p^i r_i`.
pub fn build_unstable_generators(p: u64, i: u32, cap: u64) -> Result<UnstableGenerators> {
    if i == 0 {
        return Err(Error::PreconditionViolated("index i must be at least 1".into()));
    }
    wreath_size_check(p, i, cap)?;
    let q = p.pow(i);
    let (g, z) = (gamma(p, i), zeta(p, i));
    let kappa = g.mul(&z).mul(&g.inv()).mul(&z.inv());
    if kappa != InnerElem::diagonal_one(q) {
        return Err(Error::VerificationFailed("[γ, ζ] differs from Δ¹(1)".into()));
    }
    let (r, e) = (rho(p, i), eta(p, i));
    let kappa_hat = WreathElem::embed(p, i, &kappa, 0);
    if kappa_commutator(p, i, i) != kappa_hat {
        return Err(Error::VerificationFailed("[η^t ϱ η^-t, ϱ] differs from κ".into()));
    }
    let mut delta = WreathElem::identity(p, i);
    for m in 0..r_param(i) as i64 {
        delta = delta.mul(&WreathElem::conjugate(&e.pow(m), &kappa_hat));
    }
    if delta != WreathElem::diagonal_one(p, i) {
        return Err(Error::VerificationFailed("δ differs from Δ²(1)".into()));
    }
    if !WreathElem::commutator(&r, &r).is_identity() {
        return Err(Error::VerificationFailed("[ϱ, ϱ] is not trivial".into()));
    }
    Ok(UnstableGenerators { p, i, gamma: g, zeta: z, kappa, rho: r, eta: e, delta })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClaimsReport {
    pub p: u64,
    pub min_i: u32,
    pub max_i: u32,
    pub checks: Vec<ClaimCheck>,
    pub all_passed: bool,
}

fn distinct_mod(vals: &[i64], m: u64) -> bool {
    let mut rs: Vec<i64> = vals.iter().map(|v| v.rem_euclid(m as i64)).collect();
    rs.sort_unstable();
    rs.windows(2).all(|w| w[0] != w[1])
}

/// Residue distinctness of `0, ±t_i` and `0, t_j, −t_i, t_j − t_i`, and the
/// coordinatewise commutator and `δ` identities, for all `1 ≤ i, j ≤ max_i`.
///
/// Failed checks are reported, not raised: with `r_1 = 4`, `t_1 = 1` the
/// pairs `j = 1 < i` collide (`−t_i ≡ 1 mod 4`).
pub fn verify_claims(p: u64, max_i: u32, cap: u64) -> Result<ClaimsReport> {
    verify_claims_range(p, 1, max_i, cap)
}

/// [`verify_claims`] over the indices `min_i ≤ i, j ≤ max_i`.
pub fn verify_claims_range(p: u64, min_i: u32, max_i: u32, cap: u64) -> Result<ClaimsReport> {
    if min_i == 0 || min_i > max_i {
        return Err(Error::PreconditionViolated(format!("bad index range {min_i}..={max_i}")));
    }
    for j in min_i..=max_i {
        wreath_size_check(p, j, cap)?;
    }
    let mut checks = Vec::new();
    for i in min_i..=max_i {
        let (ti, ri) = (t_param(i) as i64, r_param(i));
        checks.push(ClaimCheck { name: format!("distinct 0, t_{i}, -t_{i} mod r_{i}"), passed: distinct_mod(&[0, ti, -ti], ri) });
        for j in min_i..=max_i {
            if i == j {
                continue;
            }
            let (tj, rj) = (t_param(j) as i64, r_param(j));
            checks.push(ClaimCheck {
                name: format!("distinct 0, t_{j}, -t_{i}, t_{j}-t_{i} mod r_{j}"),
                passed: distinct_mod(&[0, tj, -ti, tj - ti], rj),
            });
        }
    }
    for i in min_i..=max_i {
        for j in min_i..=max_i {
            let q = p.pow(j);
            let expected_kappa = if i == j {
                WreathElem::embed(p, j, &InnerElem::diagonal_one(q), 0)
            } else {
                WreathElem::identity(p, j)
            };
            checks.push(ClaimCheck {
                name: format!("pr_{j} of commutator for i = {i}"),
                passed: kappa_commutator(p, i, j) == expected_kappa,
            });
            let expected_delta = if i == j { WreathElem::diagonal_one(p, j) } else { WreathElem::identity(p, j) };
            checks.push(ClaimCheck { name: format!("pr_{j} of delta_{i}"), passed: delta_coordinate(p, i, j) == expected_delta });
        }
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(ClaimsReport { p, min_i, max_i, checks, all_passed })
}

/// A monomial matrix: column `c` is `diag[c] · e_{perm[c]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub perm: Vec<usize>,
    pub diag: Vec<u64>,
}

impl Monomial {
    pub fn mul(&self, o: &Monomial, ring: &RingSpec) -> Monomial {
        let perm = o.perm.iter().map(|&c| self.perm[c]).collect();
        let diag = o.perm.iter().zip(&o.diag).map(|(&c, &d)| ring.mul(self.diag[c], d)).collect();
        Monomial { perm, diag }
    }

    pub fn dist_val(&self, o: &Monomial, ring: &RingSpec) -> u32 {
        if self.perm != o.perm {
            return 0;
        }
        self.diag.iter().zip(&o.diag).map(|(&a, &b)| ring.val(ring.sub(a, b))).min().unwrap_or(ring.precision())
    }

    pub fn to_matrix(&self, ring: RingSpec) -> UMatrix {
        let n = self.perm.len();
        let mut m = UMatrix::zeros(ring, n, n);
        for (c, (&r, &d)) in self.perm.iter().zip(&self.diag).enumerate() {
            m.set(r, c, d);
        }
        m
    }
}

/// The block maps `φ¹` (inner) and `φ²` (outer) built from `k ↦ a^k`.
pub struct WreathMatrixMap {
    ring: RingSpec,
    powers: Vec<u64>,
}

impl WreathMatrixMap {
    pub fn new(p: u64, i: u32, x: &Scalar) -> Self {
        let ring = x.ring();
        let a = ring.add(1, x.code());
        let q = p.pow(i);
        let mut powers = Vec::with_capacity(q as usize);
        let mut acc = 1;
        for _ in 0..q {
            powers.push(acc);
            acc = ring.mul(acc, a);
        }
        WreathMatrixMap { ring, powers }
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    /// `φ¹(x, c) = diag(a^{x_j}) · P^c` with `P e_j = e_{j−1}`.
    pub fn inner(&self, e: &InnerElem) -> Monomial {
        let q = e.base.len();
        let c = e.shift as usize;
        let perm = (0..q).map(|j| (j + q - c) % q).collect::<Vec<_>>();
        let diag = perm.iter().map(|&m| self.powers[e.base[m] as usize]).collect();
        Monomial { perm, diag }
    }

    /// `φ²(X, c) = blockdiag(φ¹(X_b)) · Q^c` with `Q` moving block `b` to `b − 1`.
    pub fn outer(&self, e: &WreathElem) -> Monomial {
        let (q, r) = (e.q() as usize, e.r() as usize);
        let c = e.shift as usize;
        let mut perm = vec![0; q * r];
        let mut diag = vec![0; q * r];
        let inner: Vec<Monomial> = e.blocks.iter().map(|b| self.inner(b)).collect();
        for b in 0..r {
            let bt = (b + r - c) % r;
            for j in 0..q {
                perm[b * q + j] = bt * q + inner[bt].perm[j];
                diag[b * q + j] = inner[bt].diag[j];
            }
        }
        Monomial { perm, diag }
    }
}

/// Word for `[η^{t_j} ϱ η^{-t_j}, ϱ]` on generators `ϱ = 0`, `η = 1`.
pub fn kappa_word(j: u32) -> Word {
    let (r, e) = (Word::gen(0), Word::gen(1));
    let conj = Word::conjugate(&e.pow(t_param(j) as i64), &r);
    Word::commutator(&conj, &r)
}

/// The two-generator map `ϱ ↦ φ²(ϱ_i)`, `η ↦ φ²(η_i)` into
/// `GL_{p^i r_i}`, on a presentation whose relators `κ_j^{p^j}` (`j ≤ i`)
/// hold in the group generated by `ϱ` and `η`.
pub fn make_wreath_rep(i: u32, x: &Scalar, dim_cap: u64) -> Result<ApproxRep> {
    let ring = x.ring();
    let p = ring.p();
    if i == 0 {
        return Err(Error::PreconditionViolated("index i must be at least 1".into()));
    }
    wreath_size_check(p, i, dim_cap)?;
    make_badestimate_rep(i, x)?;
    let map = WreathMatrixMap::new(p, i, x);
    let images = vec![map.outer(&rho(p, i)).to_matrix(ring), map.outer(&eta(p, i)).to_matrix(ring)];
    let relators = (1..=i).map(|j| kappa_word(j).pow(p.pow(j) as i64)).collect();
    let pres = Presentation::new(vec!["rho".into(), "eta".into()], relators)?;
    ApproxRep::new(pres, images)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledDefect {
    pub samples: u64,
    pub seed: u64,
    pub min_val: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WreathDefectCertificate {
    pub p: u64,
    pub i: u32,
    pub ring: RingSpec,
    pub x: serde_json::Value,
    pub dimension: u64,
    /// `def(φ²) ≤ def(φ¹) ≤ def(φ_i)`: valuation of the cyclic defect.
    pub structural_defect_val: u32,
    pub presentation_defect_val: u32,
    /// Defect of `φ²` over the whole finite group, when enumerated.
    pub exact_defect_val: Option<u32>,
    pub exact_group_order: Option<u64>,
    pub sampled: Option<SampledDefect>,
    /// `φ²(δ_i)` equals `(1 + x) I`.
    pub delta_image_scalar: bool,
    pub hdist_lower_bound: HdistCertificate,
}

#[derive(Clone, Copy, Debug)]
pub struct WreathCheckOptions {
    /// Largest group order enumerated exactly.
    pub group_cap: u64,
    pub samples: u64,
    pub seed: u64,
    pub dim_cap: u64,
}

impl Default for WreathCheckOptions {
    fn default() -> Self {
        WreathCheckOptions { group_cap: 1 << 16, samples: 10_000, seed: 0, dim_cap: 128 }
    }
}

fn inner_from_index(q: u64, mut idx: u64) -> InnerElem {
    let shift = idx % q;
    idx /= q;
    let base = (0..q)
        .map(|_| {
            let d = idx % q;
            idx /= q;
            d
        })
        .collect();
    InnerElem { base, shift }
}

/// Order of `(C_q ≀ C_q) ≀ C_r`, if it fits in a `u64`.
pub fn wreath_group_order(p: u64, i: u32) -> Option<u64> {
    let q = p.checked_pow(i)?;
    let inner = q.checked_pow(q as u32)?.checked_mul(q)?;
    inner.checked_pow(r_param(i) as u32)?.checked_mul(r_param(i))
}

/// Minimum over all `g` and generators `s` of `val(φ²(gs) − φ²(g)φ²(s))`.
/// Because the norm is ultrametric and bi-invariant and `φ²(1) = I`, this
/// equals the defect over all pairs.
pub fn exact_wreath_defect(p: u64, i: u32, x: &Scalar, cap: u64) -> Result<(u32, u64)> {
    let order = wreath_group_order(p, i).filter(|&o| o <= cap).ok_or(Error::CapExceeded {
        what: format!("wreath group order for p = {p}, i = {i}"),
        cap,
    })?;
    let ring = x.ring();
    let map = WreathMatrixMap::new(p, i, x);
    let q = p.pow(i);
    let r = r_param(i);
    let inner_order = q.pow(q as u32) * q;
    let mut e0 = InnerElem::identity(q);
    e0.base[0] = 1 % q;
    let gens = [WreathElem::embed(p, i, &e0, 0), WreathElem::embed(p, i, &zeta(p, i), 0), eta(p, i)];
    let gen_images: Vec<Monomial> = gens.iter().map(|g| map.outer(g)).collect();
    let id = WreathElem::identity(p, i);
    let mut best = map.outer(&id).dist_val(&Monomial { perm: (0..(q * r) as usize).collect(), diag: vec![1; (q * r) as usize] }, &ring);
    for idx in 0..order {
        let mut rest = idx;
        let shift = rest % r;
        rest /= r;
        let blocks = (0..r)
            .map(|_| {
                let b = inner_from_index(q, rest % inner_order);
                rest /= inner_order;
                b
            })
            .collect();
        let g = WreathElem { p, i, blocks, shift };
        let pg = map.outer(&g);
        for (s, ps) in gens.iter().zip(&gen_images) {
            best = best.min(map.outer(&g.mul(s)).dist_val(&pg.mul(ps, &ring), &ring));
        }
    }
    Ok((best, order))
}

fn random_elem(p: u64, i: u32, rng: &mut ChaCha8Rng) -> WreathElem {
    let q = p.pow(i);
    let r = r_param(i);
    let blocks = (0..r)
        .map(|_| InnerElem { base: (0..q).map(|_| rng.gen_range(0..q)).collect(), shift: rng.gen_range(0..q) })
        .collect();
    WreathElem { p, i, blocks, shift: rng.gen_range(0..r) }
}

/// Minimum of `val(φ²(gh) − φ²(g)φ²(h))` over random pairs.
pub fn sampled_wreath_defect(p: u64, i: u32, x: &Scalar, samples: u64, seed: u64) -> u32 {
    let ring = x.ring();
    let map = WreathMatrixMap::new(p, i, x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = ring.precision();
    for _ in 0..samples {
        let g = random_elem(p, i, &mut rng);
        let h = random_elem(p, i, &mut rng);
        best = best.min(map.outer(&g.mul(&h)).dist_val(&map.outer(&g).mul(&map.outer(&h), &ring), &ring));
    }
    best
}

/// Defect and distance data for the wreath map at index `i`.
pub fn wreath_rep_defect_certificate(i: u32, x: &Scalar, opts: &WreathCheckOptions) -> Result<WreathDefectCertificate> {
    let ring = x.ring();
    let p = ring.p();
    let rep = make_wreath_rep(i, x, opts.dim_cap)?;
    let structural = make_badestimate_rep(i, x)?.defect_val();
    let presentation_defect_val = rep.defect_val();
    if presentation_defect_val < structural {
        return Err(Error::VerificationFailed(format!(
            "relator defect valuation {presentation_defect_val} below structural bound {structural}"
        )));
    }
    let (exact, order, sampled) = match wreath_group_order(p, i) {
        Some(o) if o <= opts.group_cap => {
            let (v, o) = exact_wreath_defect(p, i, x, opts.group_cap)?;
            (Some(v), Some(o), None)
        }
        _ => {
            let v = sampled_wreath_defect(p, i, x, opts.samples, opts.seed);
            (None, None, Some(SampledDefect { samples: opts.samples, seed: opts.seed, min_val: v }))
        }
    };
    let observed = exact.or(sampled.as_ref().map(|s| s.min_val)).unwrap_or(ring.precision());
    if observed < structural {
        return Err(Error::VerificationFailed(format!("observed defect valuation {observed} below structural bound {structural}")));
    }
    let map = WreathMatrixMap::new(p, i, x);
    let dimg = map.outer(&WreathElem::diagonal_one(p, i));
    let a = ring.add(1, x.code());
    let delta_image_scalar = dimg.perm.iter().enumerate().all(|(c, &r)| c == r) && dimg.diag.iter().all(|&d| d == a);
    if !delta_image_scalar {
        return Err(Error::VerificationFailed("image of δ is not (1 + x) I".into()));
    }
    let hdist_lower_bound = match (ring.mode(), p) {
        (Mode::MixedChar, 2) => hdist_lowerbound_sign(x)?,
        _ => hdist_lowerbound_diag(i, x)?,
    };
    Ok(WreathDefectCertificate {
        p,
        i,
        ring,
        x: ring.encode(x.code()),
        dimension: p.pow(i) * r_param(i),
        structural_defect_val: structural,
        presentation_defect_val,
        exact_defect_val: exact,
        exact_group_order: order,
        sampled,
        delta_image_scalar,
        hdist_lower_bound,
    })
}
