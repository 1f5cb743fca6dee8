//! Precision-doubling repair of maps with finite image modulo `p^k`.
//!
//! At level `h` the images generate a finite group `C ⊂ GL_n(o/p^h)` with
//! `l = ν_p(|C|)`. A set-section of `C` built from products of the images has
//! a defect cocycle at level `j = h - l`; solving it moves the images by at
//! most `p^{-j}` and makes them a homomorphism of `C` modulo `p^{2j}`.

use serde::Serialize;

use crate::cocycle::{average_solve_h2, build_defect_cocycle, solve_h1_conjugator, Action, Cochain1, Solver};
use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::norm::NormValue;
use crate::presentation::{ApproxRep, FiniteImage};
use crate::ring::Mode;

#[derive(Clone, Copy, Debug)]
pub struct RepairOptions {
    pub closure_cap: u64,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions { closure_cap: 1_000_000 }
    }
}

/// One lifting or conjugation step.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerStep {
    pub stage: String,
    /// Level before the step.
    pub level: u32,
    pub image_order: usize,
    pub p_part: u32,
    /// Coordinates were taken at this level; the step moves images by at most `p^{-j}`.
    pub j: u32,
    /// Measured level after the step.
    pub new_level: u32,
    /// Measured valuation of the move.
    pub distance_val: u32,
    pub solver: Solver,
    pub averaging_loss: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrecisionLedger {
    pub initial_defect_val: u32,
    pub p_part: u32,
    pub steps: Vec<LedgerStep>,
    /// `k - l`: the guaranteed distance valuation.
    pub bound_val: u32,
    /// Measured distance valuation between input and output.
    pub final_distance_val: u32,
}

impl PrecisionLedger {
    pub fn bound(&self, p: u64, k: u32) -> NormValue {
        NormValue::from_val(p, self.bound_val, k)
    }
}

/// `σ(g)` for every element of `C`, as the product of the images along the
/// BFS path from the identity.
pub fn section(images: &[UMatrix], c: &FiniteImage) -> Result<Vec<UMatrix>> {
    let ring = images[0].ring();
    let n = images[0].rows();
    let mut out: Vec<UMatrix> = Vec::with_capacity(c.order());
    for g in 0..c.order() {
        out.push(match c.parent(g) {
            None => UMatrix::identity(ring, n),
            Some((par, s)) => out[par].mul(&images[s])?,
        });
    }
    Ok(out)
}

fn measured_level(images: &[UMatrix], c: &FiniteImage) -> Result<u32> {
    // The images define a homomorphism of C modulo p^m iff the BFS section is
    // multiplicative against generators.
    let secs = section(images, c)?;
    let k = images[0].ring().precision();
    let mut m = k;
    for g in 0..c.order() {
        for (s, &si) in c.generator_indices().iter().enumerate() {
            let lhs = secs[g].mul(&images[s])?;
            m = m.min(lhs.dist_val(&secs[c.mul(g, si)])?);
        }
    }
    Ok(m)
}

fn images_dist_val(a: &[UMatrix], b: &[UMatrix]) -> Result<u32> {
    let k = a[0].ring().precision();
    a.iter().zip(b).try_fold(k, |m, (x, y)| Ok(m.min(x.dist_val(y)?)))
}

/// One step at level `h`: returns new images that form a homomorphism of
/// the image group modulo a strictly higher level.
pub fn lift_images_step(images: &[UMatrix], h: u32, opts: &RepairOptions, stage: &str) -> Result<(Vec<UMatrix>, LedgerStep)> {
    let ring = images[0].ring();
    let kk = ring.precision();
    let reduced = images.iter().map(|a| a.reduce(h)).collect::<Result<Vec<_>>>()?;
    let c = FiniteImage::generate(&reduced, opts.closure_cap)?;
    let l = c.p_part();
    if ring.mode() == Mode::EqualChar && l > 0 {
        return Err(Error::CharPUnsupported(l));
    }
    if h <= 2 * l {
        return Err(Error::HypothesisViolated { k: h, l });
    }
    let j = h - l;
    let t = (2 * j).min(kk);
    let secs = section(images, &c)?;
    let z = build_defect_cocycle(&secs, &c, j, t)?;
    let (sol, report) = average_solve_h2(&z, &c)?;
    let mut new_images = Vec::with_capacity(images.len());
    for &g in c.generator_indices() {
        let corr = UMatrix::congruence_lift(&sol.values[g].neg(), j, ring)?;
        new_images.push(corr.mul(&secs[g])?);
    }
    // Measured against C itself: the new images may generate a proper
    // quotient of C modulo p^h, which would hide the gain.
    let new_level = measured_level(&new_images, &c)?;
    let distance_val = images_dist_val(images, &new_images)?;
    if new_level <= h {
        return Err(Error::VerificationFailed(format!("lift at level {h} did not improve (got {new_level})")));
    }
    let step = LedgerStep {
        stage: stage.to_string(),
        level: h,
        image_order: c.order(),
        p_part: l,
        j,
        new_level,
        distance_val,
        solver: report.solver,
        averaging_loss: report.averaging_loss,
    };
    Ok((new_images, step))
}

/// Iterate lifting steps from level `h0` until the images form a homomorphism
/// of their image group at full precision.
pub fn lift_images(images: &[UMatrix], h0: u32, opts: &RepairOptions, stage: &str) -> Result<(Vec<UMatrix>, Vec<LedgerStep>)> {
    let kk = images[0].ring().precision();
    let mut cur = images.to_vec();
    let mut steps = Vec::new();
    let mut h = h0;
    for _ in 0..kk {
        if h >= kk {
            break;
        }
        let (next, step) = lift_images_step(&cur, h, opts, stage)?;
        h = step.new_level;
        steps.push(step);
        cur = next;
    }
    Ok((cur, steps))
}

/// A single lifting step on a representation at defect level `k`.
pub fn lift_step(rep: &ApproxRep, k: u32, opts: &RepairOptions) -> Result<(ApproxRep, LedgerStep)> {
    let actual = rep.defect_val();
    if actual < k {
        return Err(Error::DefectTooLarge { required: k, actual });
    }
    if k >= rep.ring().precision() {
        let step = LedgerStep {
            stage: "rep".into(),
            level: k,
            image_order: 0,
            p_part: 0,
            j: k,
            new_level: k,
            distance_val: k,
            solver: Solver::Averaging,
            averaging_loss: 0,
        };
        return Ok((rep.clone(), step));
    }
    let (imgs, step) = lift_images_step(rep.images(), k, opts, "rep")?;
    Ok((rep.with_images(imgs)?, step))
}

/// Repair a map with finite image into an exact homomorphism at precision
/// `K`, moving generator images by at most `p^l p^{-k}`.
pub fn repair_finite_image(rep: &ApproxRep, opts: &RepairOptions) -> Result<(ApproxRep, PrecisionLedger)> {
    let kk = rep.ring().precision();
    let k = rep.defect_val();
    if k >= kk {
        let ledger =
            PrecisionLedger { initial_defect_val: k, p_part: 0, steps: vec![], bound_val: kk, final_distance_val: kk };
        return Ok((rep.clone(), ledger));
    }
    if k == 0 {
        return Err(Error::DefectTooLarge { required: 1, actual: 0 });
    }
    let (imgs, steps) = lift_images(rep.images(), k, opts, "rep")?;
    let out = rep.with_images(imgs)?;
    if !out.defect().is_saturated() {
        return Err(Error::VerificationFailed(format!("repaired defect valuation {}", out.defect_val())));
    }
    let l = steps.first().map_or(0, |s| s.p_part);
    let ledger = PrecisionLedger {
        initial_defect_val: k,
        p_part: l,
        steps,
        bound_val: k.saturating_sub(l),
        final_distance_val: rep.rep_dist_val(&out)?,
    };
    Ok((out, ledger))
}

/// Discrepancy of two homomorphisms of the same finite group given on
/// generators: `c(g) = coords(ψ2(g) ψ1(g)^{-1}, j)`.
pub fn discrepancy_cocycle(psi1: &[UMatrix], psi2: &[UMatrix], j: u32, t: u32, opts: &RepairOptions) -> Result<(Cochain1, FiniteImage)> {
    let ring = psi1[0].ring();
    let pairs = psi1
        .iter()
        .zip(psi2)
        .map(|(a, b)| Ok(UMatrix::block_diag(ring, &[a.clone(), b.clone()]).reduce(t)?))
        .collect::<Result<Vec<_>>>()?;
    let e = FiniteImage::generate(&pairs, opts.closure_cap)?;
    let n = psi1[0].rows();
    let q = t - j;
    let mut values = Vec::with_capacity(e.order());
    let mut acts = Vec::with_capacity(e.order());
    for g in e.elements() {
        let a = g.block(0, 0, n, n);
        let b = g.block(n, n, n, n);
        let d = b.mul(&a.inverse()?)?;
        let coords = d.congruence_coords(j).map_err(|err| match err {
            Error::NotInBall { actual, .. } => Error::DefectTooLarge { required: j, actual },
            other => other,
        })?;
        values.push(coords.reduce(q)?);
        acts.push(b);
    }
    Ok((Cochain1 { level: j, values, action: Action::new(&acts, q)? }, e))
}

/// Find `τ ≡ I` with `τ ψ1(x) τ^{-1} = ψ2(x)` at full precision, given
/// homomorphisms of a common finite group that agree modulo `p^h`.
pub fn conjugate_homs(psi1: &[UMatrix], psi2: &[UMatrix], h0: u32, opts: &RepairOptions, stage: &str) -> Result<(UMatrix, Vec<LedgerStep>)> {
    let ring = psi1[0].ring();
    let kk = ring.precision();
    let n = psi1[0].rows();
    let mut tau = UMatrix::identity(ring, n);
    let mut cur: Vec<UMatrix> = psi1.to_vec();
    let mut steps = Vec::new();
    let agreement = |x: &[UMatrix]| images_dist_val(x, psi2);
    let mut h = h0.min(agreement(&cur)?);
    for _ in 0..kk {
        if h >= kk {
            break;
        }
        // The group of pairs at full precision; its p-part sets the loss.
        let pairs = cur
            .iter()
            .zip(psi2)
            .map(|(a, b)| UMatrix::block_diag(ring, &[a.clone(), b.clone()]))
            .collect::<Vec<_>>();
        let e_full = FiniteImage::generate(&pairs, opts.closure_cap)?;
        let l = e_full.p_part();
        if ring.mode() == Mode::EqualChar && l > 0 {
            return Err(Error::CharPUnsupported(l));
        }
        if h <= 2 * l {
            return Err(Error::HypothesisViolated { k: h, l });
        }
        let j = h - l;
        let t = (2 * j).min(kk);
        let (cc, e) = discrepancy_cocycle(&cur, psi2, j, t, opts)?;
        let (tt, report) = solve_h1_conjugator(&cc, &e)?;
        let step_t = UMatrix::congruence_lift(&tt, j, ring)?;
        let next = cur.iter().map(|a| a.conj(&step_t)).collect::<Result<Vec<_>>>()?;
        let new_level = agreement(&next)?;
        if new_level <= h {
            return Err(Error::VerificationFailed(format!("conjugation at level {h} did not improve (got {new_level})")));
        }
        steps.push(LedgerStep {
            stage: stage.to_string(),
            level: h,
            image_order: e.order(),
            p_part: l,
            j,
            new_level,
            distance_val: step_t.dist_val(&UMatrix::identity(ring, n))?,
            solver: report.solver,
            averaging_loss: report.averaging_loss,
        });
        tau = step_t.mul(&tau)?;
        cur = next;
        h = new_level;
    }
    Ok((tau, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::Presentation;
    use crate::ring::RingSpec;

    fn order3(ring: RingSpec) -> UMatrix {
        UMatrix::from_ints(ring, 2, &[0, -1, 1, -1])
    }

    #[test]
    fn z3_repair_is_optimal() {
        let r = RingSpec::zp(2, 8).unwrap();
        let pert = UMatrix::identity(r, 2).add(&UMatrix::from_ints(r, 2, &[8, 8, 0, 24])).unwrap();
        let rep = ApproxRep::new(Presentation::cyclic(3), vec![order3(r).mul(&pert).unwrap()]).unwrap();
        let k = rep.defect_val();
        assert!(k >= 3);
        let (out, ledger) = repair_finite_image(&rep, &RepairOptions::default()).unwrap();
        assert!(out.image(0).pow(3).is_identity());
        assert!(ledger.final_distance_val >= k);
        assert_eq!(ledger.p_part, 0);
    }

    #[test]
    fn sign_repair_linear_loss() {
        let r = RingSpec::zp(2, 10).unwrap();
        for k in 3..=8u32 {
            let a = UMatrix::from_ints(r, 1, &[-1 + (1 << k)]);
            let rep = ApproxRep::new(Presentation::cyclic(2), vec![a]).unwrap();
            assert_eq!(rep.defect_val(), k + 1);
            let (out, ledger) = repair_finite_image(&rep, &RepairOptions::default()).unwrap();
            assert!(out.defect().is_saturated());
            assert_eq!(ledger.final_distance_val, k);
            assert_eq!(ledger.p_part, 1);
        }
    }

    #[test]
    fn conjugate_order3() {
        let r = RingSpec::zp(2, 6).unwrap();
        let m = order3(r);
        let u = UMatrix::identity(r, 2).add(&UMatrix::from_ints(r, 2, &[0, 8, 16, 8])).unwrap();
        let m2 = m.conj(&u).unwrap();
        let (tau, _) = conjugate_homs(&[m.clone()], &[m2.clone()], 3, &RepairOptions::default(), "t").unwrap();
        assert_eq!(m.conj(&tau).unwrap(), m2);
        assert!(tau.dist_val(&UMatrix::identity(r, 2)).unwrap() >= 3);
    }

    #[test]
    fn exact_input_unchanged() {
        let r = RingSpec::zp(3, 5).unwrap();
        let rep = ApproxRep::new(Presentation::cyclic(3), vec![order3(r)]).unwrap();
        let (out, ledger) = repair_finite_image(&rep, &RepairOptions::default()).unwrap();
        assert_eq!(out, rep);
        assert!(ledger.steps.is_empty());
    }
}
