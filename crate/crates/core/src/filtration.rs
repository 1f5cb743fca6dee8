//! Groups with a filtration metric `d(g, h) = ε_k`, `k` maximal with `g` and
//! `h` agreeing on `Ω_k`, and repair by a split section of `G → G/G(ε_k)`.
//!
//! Two families: upper triangular `T_n(R)` (`Ω_k` = first `k` columns) and
//! automorphisms of the `d`-ary rooted tree truncated at depth `D`
//! (`Ω_k` = level `k`).

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::presentation::{Presentation, Word};
use crate::ring::RingSpec;

/// Strictly decreasing scales `ε_0 = 1 > ε_1 > …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleSequence(Vec<Ratio<u64>>);

impl ScaleSequence {
    pub fn new(eps: Vec<Ratio<u64>>) -> Result<Self> {
        if eps.first() != Some(&Ratio::from_integer(1)) {
            return Err(Error::PreconditionViolated("scale sequence must start at 1".into()));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) || eps.last().is_some_and(|e| *e.numer() == 0) {
            return Err(Error::PreconditionViolated("scales must decrease strictly and stay positive".into()));
        }
        Ok(ScaleSequence(eps))
    }

    /// `ε_k = 2^{-k}` for `k ≤ len`.
    pub fn dyadic(len: u32) -> Self {
        ScaleSequence((0..=len).map(|k| Ratio::new(1, 1u64 << k)).collect())
    }

    pub fn eps(&self, k: u32) -> Option<Ratio<u64>> {
        self.0.get(k as usize).copied()
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() <= 1
    }
}

impl Serialize for ScaleSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.iter().map(|r| r.to_string()).collect::<Vec<_>>().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScaleSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        let eps = raw
            .iter()
            .map(|s| match s.split_once('/') {
                Some((a, b)) => Ok(Ratio::new(a.parse()?, b.parse()?)),
                None => s.parse().map(Ratio::from_integer),
            })
            .collect::<std::result::Result<Vec<_>, std::num::ParseIntError>>()
            .map_err(serde::de::Error::custom)?;
        ScaleSequence::new(eps).map_err(serde::de::Error::custom)
    }
}

/// Distance in a filtration metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiltDist {
    /// `ε_k`.
    Scale(u32),
    /// Equal at every level.
    Zero,
}

impl FiltDist {
    /// Larger level means smaller distance.
    fn level(self) -> u32 {
        match self {
            FiltDist::Scale(k) => k,
            FiltDist::Zero => u32::MAX,
        }
    }

    pub fn max(self, o: Self) -> Self {
        if self.level() <= o.level() {
            self
        } else {
            o
        }
    }

    pub fn le(self, o: Self) -> bool {
        self.level() >= o.level()
    }
}

/// A group whose elements carry the filtration `Ω_0 ⊂ Ω_1 ⊂ … ⊂ Ω_top`.
pub trait FiltrationGroup: Clone + PartialEq {
    fn mul(&self, o: &Self) -> Self;
    fn inv(&self) -> Self;
    fn identity_like(&self) -> Self;
    /// Number of filtration levels; agreement on `Ω_top` means equality.
    fn top(&self) -> u32;
    /// Largest `k` with `self` and `o` agreeing on `Ω_k`.
    fn agreement(&self, o: &Self) -> u32;
    /// Section of the quotient map at level `k`: keep what `Ω_k` sees,
    /// trivial elsewhere.
    fn split(&self, k: u32) -> Self;

    fn filt_dist(&self, o: &Self) -> FiltDist {
        let k = self.agreement(o);
        if k >= self.top() {
            FiltDist::Zero
        } else {
            FiltDist::Scale(k)
        }
    }
}

/// Invertible upper triangular matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriMatrix(UMatrix);

impl TriMatrix {
    pub fn new(m: UMatrix) -> Result<Self> {
        let n = m.rows();
        if !m.is_square() {
            return Err(Error::ShapeMismatch("triangular matrix must be square".into()));
        }
        let ring = m.ring();
        for i in 0..n {
            if !ring.is_unit(m.get(i, i)) {
                return Err(Error::NonInvertible(ring.val(m.get(i, i))));
            }
            for j in 0..i {
                if m.get(i, j) != 0 {
                    return Err(Error::PreconditionViolated(format!("entry ({i}, {j}) below the diagonal")));
                }
            }
        }
        Ok(TriMatrix(m))
    }

    pub fn matrix(&self) -> &UMatrix {
        &self.0
    }
}

impl FiltrationGroup for TriMatrix {
    fn mul(&self, o: &Self) -> Self {
        TriMatrix(self.0.mul(&o.0).expect("same shape"))
    }
    fn inv(&self) -> Self {
        TriMatrix(self.0.inverse().expect("unit diagonal"))
    }
    fn identity_like(&self) -> Self {
        TriMatrix(UMatrix::identity(self.0.ring(), self.0.rows()))
    }
    fn top(&self) -> u32 {
        self.0.rows() as u32
    }
    fn agreement(&self, o: &Self) -> u32 {
        let n = self.0.rows();
        (0..n).find(|&j| self.0.column(j) != o.0.column(j)).unwrap_or(n) as u32
    }
    /// `diag(A_k, I)` with `A_k` the top-left `k × k` block.
    fn split(&self, k: u32) -> Self {
        let k = (k as usize).min(self.0.rows());
        let mut m = UMatrix::identity(self.0.ring(), self.0.rows());
        m.set_block(0, 0, &self.0.block(0, 0, k, k));
        TriMatrix(m)
    }
}

/// Automorphism of the `d`-ary rooted tree to depth `D`, stored as its
/// portrait: one permutation of the alphabet per vertex of level `< D`,
/// vertices listed level by level in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeAut {
    arity: usize,
    depth: u32,
    perms: Vec<Vec<usize>>,
}

impl TreeAut {
    fn level_offset(arity: usize, level: u32) -> usize {
        (0..level).map(|l| arity.pow(l)).sum()
    }

    pub fn node_count(arity: usize, depth: u32) -> usize {
        Self::level_offset(arity, depth)
    }

    pub fn new(arity: usize, depth: u32, perms: Vec<Vec<usize>>) -> Result<Self> {
        if arity < 2 {
            return Err(Error::PreconditionViolated("tree arity must be at least 2".into()));
        }
        if perms.len() != Self::node_count(arity, depth) {
            return Err(Error::ShapeMismatch(format!(
                "portrait has {} vertices, depth {depth} needs {}",
                perms.len(),
                Self::node_count(arity, depth)
            )));
        }
        for (v, p) in perms.iter().enumerate() {
            let mut seen = vec![false; arity];
            if p.len() != arity || p.iter().any(|&x| x >= arity || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::PreconditionViolated(format!("vertex {v} does not carry a permutation")));
            }
        }
        Ok(TreeAut { arity, depth, perms })
    }

    pub fn identity(arity: usize, depth: u32) -> Self {
        TreeAut { arity, depth, perms: vec![(0..arity).collect(); Self::node_count(arity, depth)] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
    pub fn depth(&self) -> u32 {
        self.depth
    }
    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// Index of the vertex `w` (a word of length `< D`) in the portrait.
    fn index(&self, w: &[usize]) -> usize {
        Self::level_offset(self.arity, w.len() as u32) + w.iter().fold(0, |acc, &x| acc * self.arity + x)
    }

    /// Image of the word `w` (length `≤ D`).
    pub fn apply(&self, w: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(w.len());
        for l in 0..w.len() {
            let v = self.index(&w[..l]);
            out.push(self.perms[v][w[l]]);
        }
        out
    }

    /// All words of the given length, lexicographically.
    pub fn words(arity: usize, len: u32) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out.into_iter().flat_map(|w| (0..arity).map(move |x| [w.clone(), vec![x]].concat())).collect();
        }
        out
    }

    fn all_vertices(&self) -> Vec<Vec<usize>> {
        (0..self.depth).flat_map(|l| Self::words(self.arity, l)).collect()
    }
}

impl FiltrationGroup for TreeAut {
    /// `(gh)(w) = g(h(w))`, so the permutation at `v` is `σ_g[h(v)] ∘ σ_h[v]`.
    fn mul(&self, o: &Self) -> Self {
        let mut perms = vec![vec![]; self.perms.len()];
        for v in self.all_vertices() {
            let hv = o.apply(&v);
            let (sg, sh) = (&self.perms[self.index(&hv)], &o.perms[o.index(&v)]);
            perms[self.index(&v)] = sh.iter().map(|&x| sg[x]).collect();
        }
        TreeAut { arity: self.arity, depth: self.depth, perms }
    }

    fn inv(&self) -> Self {
        let mut perms = vec![vec![]; self.perms.len()];
        for u in self.all_vertices() {
            let s = &self.perms[self.index(&u)];
            let mut inv = vec![0; self.arity];
            for (x, &y) in s.iter().enumerate() {
                inv[y] = x;
            }
            perms[self.index(&self.apply(&u))] = inv;
        }
        TreeAut { arity: self.arity, depth: self.depth, perms }
    }

    fn identity_like(&self) -> Self {
        Self::identity(self.arity, self.depth)
    }

    fn top(&self) -> u32 {
        self.depth
    }

    fn agreement(&self, o: &Self) -> u32 {
        (0..self.depth)
            .find(|&l| {
                let (a, b) = (Self::level_offset(self.arity, l), Self::level_offset(self.arity, l + 1));
                self.perms[a..b] != o.perms[a..b]
            })
            .unwrap_or(self.depth)
    }

    /// Same action on the first `k` levels, trivial below.
    fn split(&self, k: u32) -> Self {
        let cut = Self::level_offset(self.arity, k.min(self.depth));
        let mut perms = self.perms.clone();
        for p in &mut perms[cut..] {
            *p = (0..self.arity).collect();
        }
        TreeAut { arity: self.arity, depth: self.depth, perms }
    }
}

/// A map from a presented group into a filtration group.
#[derive(Clone, Debug)]
pub struct FiltrationRep<G> {
    pub presentation: Presentation,
    pub images: Vec<G>,
}

impl<G: FiltrationGroup> FiltrationRep<G> {
    pub fn new(presentation: Presentation, images: Vec<G>) -> Result<Self> {
        if images.len() != presentation.num_generators() || images.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for {} generators",
                images.len(),
                presentation.num_generators()
            )));
        }
        Ok(FiltrationRep { presentation, images })
    }

    pub fn eval_word(&self, w: &Word) -> G {
        let mut acc = self.images[0].identity_like();
        for l in w.letters() {
            let g = &self.images[l.gen];
            acc = acc.mul(&if l.inv { g.inv() } else { g.clone() });
        }
        acc
    }

    /// Largest relator distance from the identity.
    pub fn defect(&self) -> FiltDist {
        let id = self.images[0].identity_like();
        self.presentation.relators.iter().fold(FiltDist::Zero, |acc, r| acc.max(self.eval_word(r).filt_dist(&id)))
    }

    pub fn dist(&self, o: &Self) -> FiltDist {
        self.images.iter().zip(&o.images).fold(FiltDist::Zero, |acc, (a, b)| acc.max(a.filt_dist(b)))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitRepairReport {
    pub defect: FiltDist,
    pub distance: FiltDist,
    /// Level `k` of the quotient used.
    pub level: u32,
}

/// Project every generator to `G/G(ε_k)` for the defect level `k` and lift
/// back along the split section; relators are re-checked exactly.
pub fn split_section_repair<G: FiltrationGroup>(rep: &FiltrationRep<G>) -> Result<(FiltrationRep<G>, SplitRepairReport)> {
    let defect = rep.defect();
    let level = match defect {
        FiltDist::Zero => {
            let report = SplitRepairReport { defect, distance: FiltDist::Zero, level: rep.images[0].top() };
            return Ok((rep.clone(), report));
        }
        FiltDist::Scale(0) => return Err(Error::DefectTooLarge { required: 1, actual: 0 }),
        FiltDist::Scale(k) => k,
    };
    let images = rep.images.iter().map(|g| g.split(level)).collect();
    let out = FiltrationRep { presentation: rep.presentation.clone(), images };
    if out.defect() != FiltDist::Zero {
        return Err(Error::VerificationFailed("split section did not produce a homomorphism".into()));
    }
    let distance = rep.dist(&out);
    if !distance.le(defect) {
        return Err(Error::VerificationFailed(format!("distance {distance:?} exceeds defect {defect:?}")));
    }
    Ok((out, SplitRepairReport { defect, distance, level }))
}

/// Triangular matrices over `ring` from integer rows.
pub fn tri_from_ints(ring: RingSpec, n: usize, ints: &[i64]) -> Result<TriMatrix> {
    TriMatrix::new(UMatrix::from_ints(ring, n, ints))
}
