//! Words, finite presentations, approximate representations and their
//! finite images.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::norm::NormValue;
use crate::ring::{nu_p, RingSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// A freely reduced word in the generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn identity() -> Word {
        Word(Vec::new())
    }

    pub fn gen(g: usize) -> Word {
        Word(vec![Letter { gen: g, inv: false }])
    }

    /// Word from signed exponents: `(g, e)` means generator `g` to the power `e`.
    pub fn from_powers(powers: &[(usize, i64)]) -> Word {
        Word::new(powers.iter().flat_map(|&(g, e)| {
            std::iter::repeat(Letter { gen: g, inv: e < 0 }).take(e.unsigned_abs() as usize)
        }))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, o: &Word) -> Word {
        Word::new(self.0.iter().chain(o.0.iter()).copied())
    }

    pub fn pow(&self, e: i64) -> Word {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        Word::new((0..e.unsigned_abs()).flat_map(|_| base.0.clone()))
    }

    /// `[a, b] = a b a^{-1} b^{-1}`.
    pub fn commutator(a: &Word, b: &Word) -> Word {
        a.concat(b).concat(&a.inverse()).concat(&b.inverse())
    }

    /// `a b a^{-1}`.
    pub fn conjugate(a: &Word, b: &Word) -> Word {
        a.concat(b).concat(&a.inverse())
    }

    pub fn max_gen(&self) -> Option<usize> {
        self.0.iter().map(|l| l.gen).max()
    }

    pub fn to_strings(&self, names: &[String]) -> Vec<String> {
        self.0
            .iter()
            .map(|l| if l.inv { format!("{}^-1", names[l.gen]) } else { names[l.gen].clone() })
            .collect()
    }

    /// Parse letters like `"s"`, `"s^-1"` or `"s^3"`.
    pub fn parse(tokens: &[String], names: &[String]) -> Result<Word> {
        let mut powers = Vec::new();
        for t in tokens {
            let (name, exp) = match t.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e.parse().map_err(|_| Error::Parse(format!("bad exponent in letter {t:?}")))?;
                    (n, e)
                }
                None => (t.as_str(), 1),
            };
            let g = names
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::Parse(format!("unknown generator {name:?}")))?;
            powers.push((g, exp));
        }
        Ok(Word::from_powers(&powers))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PresentationRepr {
    pub generators: Vec<String>,
    pub relators: Vec<Vec<String>>,
}

impl Presentation {
    pub fn new(generators: Vec<String>, relators: Vec<Word>) -> Result<Self> {
        for r in &relators {
            if let Some(g) = r.max_gen() {
                if g >= generators.len() {
                    return Err(Error::Parse(format!("relator uses undeclared generator {g}")));
                }
            }
        }
        Ok(Presentation { generators, relators })
    }

    pub fn free(names: &[&str]) -> Self {
        Presentation { generators: names.iter().map(|s| s.to_string()).collect(), relators: vec![] }
    }

    /// `⟨s | s^n⟩`.
    pub fn cyclic(n: u64) -> Self {
        Presentation { generators: vec!["s".into()], relators: vec![Word::gen(0).pow(n as i64)] }
    }

    /// `⟨s, t | t s^n t^{-1} s^{-m}⟩`.
    pub fn baumslag_solitar(m: i64, n: i64) -> Self {
        let s = Word::gen(0);
        let t = Word::gen(1);
        let rel = Word::conjugate(&t, &s.pow(n)).concat(&s.pow(-m));
        Presentation { generators: vec!["s".into(), "t".into()], relators: vec![rel] }
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub(crate) fn to_repr(&self) -> PresentationRepr {
        PresentationRepr {
            generators: self.generators.clone(),
            relators: self.relators.iter().map(|r| r.to_strings(&self.generators)).collect(),
        }
    }

    pub(crate) fn from_repr(r: PresentationRepr) -> Result<Self> {
        let relators =
            r.relators.iter().map(|w| Word::parse(w, &r.generators)).collect::<Result<Vec<_>>>()?;
        Presentation::new(r.generators, relators)
    }
}

impl Serialize for Presentation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Presentation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Presentation::from_repr(PresentationRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct ApproxRepRepr {
    presentation: Presentation,
    ring: RingSpec,
    n: usize,
    /// Row-major entries per generator.
    images: Vec<Vec<serde_json::Value>>,
}

impl Serialize for ApproxRep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ApproxRepRepr {
            presentation: self.presentation.clone(),
            ring: self.ring,
            n: self.n,
            images: self.images.iter().map(|m| m.encode_entries()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ApproxRep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ApproxRepRepr::deserialize(d)?;
        let images = r
            .images
            .iter()
            .enumerate()
            .map(|(g, e)| {
                UMatrix::decode_entries(r.ring, r.n, r.n, e).map_err(|err| Error::Parse(format!("image {g}: {err}")))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        ApproxRep::new(r.presentation, images).map_err(serde::de::Error::custom)
    }
}

/// Generator images of a free-group homomorphism `F_S -> GL_n(o/p^K)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxRep {
    presentation: Presentation,
    ring: RingSpec,
    n: usize,
    images: Vec<UMatrix>,
    inverses: Vec<UMatrix>,
}

impl ApproxRep {
    pub fn new(presentation: Presentation, images: Vec<UMatrix>) -> Result<Self> {
        if images.len() != presentation.num_generators() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for {} generators",
                images.len(),
                presentation.num_generators()
            )));
        }
        let first = images
            .first()
            .ok_or_else(|| Error::ShapeMismatch("a representation needs at least one generator".into()))?;
        let (ring, n) = (first.ring(), first.rows());
        for m in &images {
            m.ring().check_same(&ring)?;
            if !m.is_square() || m.rows() != n {
                return Err(Error::ShapeMismatch("generator images must be square of equal size".into()));
            }
        }
        let inverses = images.iter().map(|m| m.inverse()).collect::<Result<Vec<_>>>()?;
        Ok(ApproxRep { presentation, ring, n, images, inverses })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }
    pub fn ring(&self) -> RingSpec {
        self.ring
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn images(&self) -> &[UMatrix] {
        &self.images
    }
    pub fn image(&self, g: usize) -> &UMatrix {
        &self.images[g]
    }

    /// Same presentation, new images.
    pub fn with_images(&self, images: Vec<UMatrix>) -> Result<Self> {
        ApproxRep::new(self.presentation.clone(), images)
    }

    pub fn eval_word(&self, w: &Word) -> UMatrix {
        let mut acc = UMatrix::identity(self.ring, self.n);
        for l in w.letters() {
            let m = if l.inv { &self.inverses[l.gen] } else { &self.images[l.gen] };
            acc = acc.mul(m).expect("shapes checked at construction");
        }
        acc
    }

    /// Evaluate a word on bare generator images.
    pub fn eval_on(images: &[UMatrix], w: &Word) -> Result<UMatrix> {
        let mut acc = UMatrix::identity(images[0].ring(), images[0].rows());
        for l in w.letters() {
            let m = &images[l.gen];
            acc = if l.inv { acc.mul(&m.inverse()?)? } else { acc.mul(m)? };
        }
        Ok(acc)
    }

    /// Minimal valuation of `φ(r) - I` over relators; `K` if there are none.
    pub fn defect_val(&self) -> u32 {
        let id = UMatrix::identity(self.ring, self.n);
        self.presentation
            .relators
            .iter()
            .map(|r| self.eval_word(r).dist_val(&id).expect("same shape"))
            .min()
            .unwrap_or(self.ring.precision())
    }

    pub fn defect(&self) -> NormValue {
        NormValue::from_val(self.ring.p(), self.defect_val(), self.ring.precision())
    }

    fn check_compatible(&self, o: &ApproxRep) -> Result<()> {
        self.ring.check_same(&o.ring)?;
        if self.n != o.n || self.presentation != o.presentation {
            return Err(Error::ShapeMismatch("representations differ in presentation or dimension".into()));
        }
        Ok(())
    }

    /// Minimal valuation of the differences of generator images.
    pub fn rep_dist_val(&self, o: &ApproxRep) -> Result<u32> {
        self.check_compatible(o)?;
        Ok(self
            .images
            .iter()
            .zip(&o.images)
            .map(|(a, b)| a.dist_val(b).expect("same shape"))
            .min()
            .unwrap_or(self.ring.precision()))
    }

    pub fn rep_dist(&self, o: &ApproxRep) -> Result<NormValue> {
        Ok(NormValue::from_val(self.ring.p(), self.rep_dist_val(o)?, self.ring.precision()))
    }

    /// The image of the presented group in `GL_n(o/p^m)`.
    pub fn finite_image(&self, m: u32, cap: u64) -> Result<FiniteImage> {
        let actual = self.defect_val();
        if actual < m {
            return Err(Error::DefectTooLarge { required: m, actual });
        }
        let reduced = self.images.iter().map(|a| a.reduce(m)).collect::<Result<Vec<_>>>()?;
        FiniteImage::generate(&reduced, cap)
    }
}

/// Above this order the multiplication table is not stored.
const TABLE_LIMIT: usize = 2048;

/// A finite matrix group given by generators, enumerated breadth first.
#[derive(Clone, Debug)]
pub struct FiniteImage {
    ring: RingSpec,
    n: usize,
    elements: Vec<UMatrix>,
    index: HashMap<Vec<u64>, usize>,
    gens: Vec<usize>,
    /// BFS tree: `(parent, generator)`; the identity has no parent.
    parents: Vec<Option<(usize, usize)>>,
    table: Option<Vec<u32>>,
    p_part: u32,
}

impl FiniteImage {
    /// Closure of `gens` under multiplication. Elements are discovered in BFS
    /// order from the identity, trying generators in index order.
    pub fn generate(gens: &[UMatrix], cap: u64) -> Result<FiniteImage> {
        let first = gens.first().ok_or_else(|| Error::ShapeMismatch("no generators".into()))?;
        let (ring, n) = (first.ring(), first.rows());
        let id = UMatrix::identity(ring, n);
        let mut elements = vec![id.clone()];
        let mut index = HashMap::new();
        index.insert(id.codes().to_vec(), 0usize);
        let mut parents = vec![None];
        let mut head = 0;
        while head < elements.len() {
            for (s, g) in gens.iter().enumerate() {
                let child = elements[head].mul(g)?;
                if !index.contains_key(child.codes()) {
                    if elements.len() as u64 >= cap {
                        return Err(Error::CapExceeded { what: "finite image closure".into(), cap });
                    }
                    index.insert(child.codes().to_vec(), elements.len());
                    elements.push(child);
                    parents.push(Some((head, s)));
                }
            }
            head += 1;
        }
        let gen_idx = gens.iter().map(|g| index[g.codes()]).collect();
        let order = elements.len();
        let p_part = nu_p(ring.p(), order as u64);
        let mut fi = FiniteImage { ring, n, elements, index, gens: gen_idx, parents, table: None, p_part };
        if order <= TABLE_LIMIT {
            let mut table = Vec::with_capacity(order * order);
            for a in 0..order {
                for b in 0..order {
                    table.push(fi.lookup(&fi.elements[a].mul(&fi.elements[b])?)? as u32);
                }
            }
            fi.table = Some(table);
        }
        Ok(fi)
    }

    fn lookup(&self, m: &UMatrix) -> Result<usize> {
        self.index
            .get(m.codes())
            .copied()
            .ok_or_else(|| Error::VerificationFailed("product left the enumerated group".into()))
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }
    /// The level `m` of the quotient `GL_n(o/p^m)`.
    pub fn level(&self) -> u32 {
        self.ring.precision()
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn order(&self) -> usize {
        self.elements.len()
    }
    pub fn p_part(&self) -> u32 {
        self.p_part
    }
    pub fn elements(&self) -> &[UMatrix] {
        &self.elements
    }
    pub fn element(&self, i: usize) -> &UMatrix {
        &self.elements[i]
    }
    pub fn generator_indices(&self) -> &[usize] {
        &self.gens
    }
    pub fn parent(&self, i: usize) -> Option<(usize, usize)> {
        self.parents[i]
    }
    pub fn index_of(&self, m: &UMatrix) -> Option<usize> {
        self.index.get(m.codes()).copied()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        match &self.table {
            Some(t) => t[a * self.order() + b] as usize,
            None => self
                .lookup(&self.elements[a].mul(&self.elements[b]).expect("same shape"))
                .expect("group is closed"),
        }
    }

    pub fn inv(&self, a: usize) -> usize {
        self.lookup(&self.elements[a].inverse().expect("group elements are invertible"))
            .expect("group is closed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order3(ring: RingSpec) -> UMatrix {
        UMatrix::from_ints(ring, 2, &[0, -1, 1, -1])
    }

    #[test]
    fn free_reduction() {
        let s = Letter { gen: 0, inv: false };
        assert!(Word::new([s, s.inverse()]).is_empty());
        let r = RingSpec::zp(2, 4).unwrap();
        let rep = ApproxRep::new(Presentation::free(&["s"]), vec![order3(r)]).unwrap();
        assert!(rep.eval_word(&Word::identity()).is_identity());
        assert!(rep.defect().is_saturated());
    }

    #[test]
    fn parse_roundtrip() {
        let pres = Presentation::baumslag_solitar(2, 3);
        let json = serde_json::to_string(&pres).unwrap();
        assert_eq!(json, r#"{"generators":["s","t"],"relators":[["t","s","s","s","t^-1","s^-1","s^-1"]]}"#);
        let back: Presentation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pres);
    }

    #[test]
    fn perturbed_order_three() {
        let r = RingSpec::zp(2, 8).unwrap();
        let pert = UMatrix::identity(r, 2).add(&UMatrix::unit(r, 2, 0, 1).shift_up(3)).unwrap();
        let a = order3(r).mul(&pert).unwrap();
        let rep = ApproxRep::new(Presentation::cyclic(3), vec![a]).unwrap();
        // (M(I + 8E))^3 - I: computed by hand to have valuation exactly 3.
        assert_eq!(rep.defect_val(), 3);
        let c = rep.finite_image(3, 1_000_000).unwrap();
        assert_eq!(c.order(), 3);
        assert_eq!(c.p_part(), 0);
        assert!(matches!(rep.finite_image(4, 100), Err(Error::DefectTooLarge { .. })));
    }

    #[test]
    fn gl1_sign_image() {
        let r = RingSpec::zp(2, 10).unwrap();
        for k in 3..=8u32 {
            let a = UMatrix::from_ints(r, 1, &[-1 + (1 << k)]);
            let rep = ApproxRep::new(Presentation::cyclic(2), vec![a]).unwrap();
            let c = rep.finite_image(k, 100).unwrap();
            assert_eq!((c.order(), c.p_part()), (2, 1));
        }
    }
}
