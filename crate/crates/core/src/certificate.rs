//! Certificates: exact valuations and witnessing data for every repair and
//! witness run, re-derivable from the inputs alone.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Caps;
use crate::error::{Error, Result};
use crate::filtration::{split_section_repair, FiltDist, FiltrationGroup, FiltrationRep, TreeAut, TriMatrix};
use crate::gbs::{EstimateClass, GBSGraph};
use crate::graph::{graph_repair, GraphOfGroups};
use crate::involution::involution_repair;
use crate::lifting::{repair_finite_image, RepairOptions};
use crate::matrix::UMatrix;
use crate::monomial::monomial_commutant;
use crate::presentation::{ApproxRep, Presentation};
use crate::ring::{RingSpec, Scalar};
use crate::witness::{
    commutator_witness_oracle, hdist_gl1_cyclic, hdist_lowerbound_diag, make_badestimate_rep, make_commutator_witness,
    make_wreath_rep, wreath_rep_defect_certificate, WreathCheckOptions,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub operation: String,
    pub params: Value,
    pub inputs_digest: String,
    pub output_digest: Option<String>,
    pub defect_before_val: Option<u32>,
    pub defect_after_val: Option<u32>,
    pub distance_val: Option<u32>,
    /// Guaranteed distance valuation for the estimate class.
    pub bound_val: Option<u32>,
    pub estimate_class: EstimateClass,
    pub ledger: Value,
    pub witness: Value,
    pub verified: bool,
}

/// A certificate and the artifact it describes.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub certificate: Certificate,
    pub output: Option<Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairMode {
    FiniteImage,
    Graph,
    Involution,
    Monomial,
    SplitSection,
}

impl RepairMode {
    pub fn name(self) -> &'static str {
        match self {
            RepairMode::FiniteImage => "finite-image",
            RepairMode::Graph => "graph",
            RepairMode::Involution => "involution",
            RepairMode::Monomial => "monomial",
            RepairMode::SplitSection => "split-section",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Self::FiniteImage, Self::Graph, Self::Involution, Self::Monomial, Self::SplitSection]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown repair mode {s:?}")))
    }

    fn arity(self) -> usize {
        match self {
            RepairMode::Graph | RepairMode::Monomial => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    Badestimate,
    Wreath,
    Commutator,
}

impl WitnessKind {
    pub fn name(self) -> &'static str {
        match self {
            WitnessKind::Badestimate => "badestimate",
            WitnessKind::Wreath => "wreath",
            WitnessKind::Commutator => "commutator",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Self::Badestimate, Self::Wreath, Self::Commutator]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown witness kind {s:?}")))
    }
}

/// SHA-256 of the canonical (key-sorted) JSON of each input, in order.
pub fn digest(values: &[&Value]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(serde_json::to_vec(v).expect("json values serialize"));
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

pub fn parse<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T> {
    // the error carries the JSON path of the offending field
    serde_path_to_error::deserialize(v.clone()).map_err(|e| Error::Parse(format!("{what} at {}: {}", e.path(), e.inner())))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn base(operation: String, params: Value, inputs: &[&Value]) -> Certificate {
    Certificate {
        schema_version: SCHEMA_VERSION,
        operation,
        params,
        inputs_digest: digest(inputs),
        output_digest: None,
        defect_before_val: None,
        defect_after_val: None,
        distance_val: None,
        bound_val: None,
        estimate_class: EstimateClass::None,
        ledger: Value::Null,
        witness: Value::Null,
        verified: false,
    }
}

fn finish(mut c: Certificate, output: Option<Value>) -> Outcome {
    c.output_digest = output.as_ref().map(|o| digest(&[o]));
    Outcome { certificate: c, output }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectReport {
    pub ring: RingSpec,
    pub n: usize,
    pub defect_val: u32,
    pub saturated: bool,
    pub relator_vals: Vec<u32>,
}

pub fn defect_report(rep: &ApproxRep) -> DefectReport {
    let id = UMatrix::identity(rep.ring(), rep.n());
    let relator_vals = rep
        .presentation()
        .relators
        .iter()
        .map(|r| rep.eval_word(r).dist_val(&id).expect("same shape"))
        .collect();
    DefectReport {
        ring: rep.ring(),
        n: rep.n(),
        defect_val: rep.defect_val(),
        saturated: rep.defect().is_saturated(),
        relator_vals,
    }
}

/// Filtration-group rep file: a triangular matrix rep or a tree rep.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FiltrationRepFile {
    Triangular { presentation: Presentation, ring: RingSpec, n: usize, images: Vec<Vec<Value>> },
    Tree { presentation: Presentation, arity: usize, depth: u32, images: Vec<Vec<Vec<usize>>> },
}

fn filt_level(d: FiltDist, top: u32) -> u32 {
    match d {
        FiltDist::Scale(k) => k,
        FiltDist::Zero => top,
    }
}

fn split_generic<G: FiltrationGroup>(rep: &FiltrationRep<G>, c: &mut Certificate) -> Result<Vec<G>> {
    let top = rep.images[0].top();
    let (out, report) = split_section_repair(rep)?;
    c.defect_before_val = Some(filt_level(report.defect, top));
    c.defect_after_val = Some(filt_level(out.defect(), top));
    c.distance_val = Some(filt_level(report.distance, top));
    c.bound_val = Some(filt_level(report.defect, top));
    c.estimate_class = EstimateClass::Optimal;
    c.ledger = json!({ "quotient_level": report.level, "top_level": top });
    Ok(out.images)
}

/// Run a repair on parsed JSON inputs.
pub fn run_repair(mode: RepairMode, inputs: &[Value], caps: &Caps) -> Result<Outcome> {
    if inputs.len() != mode.arity() {
        return Err(Error::ShapeMismatch(format!("{} expects {} input files", mode.name(), mode.arity())));
    }
    let refs: Vec<&Value> = inputs.iter().collect();
    let mut c = base(format!("repair:{}", mode.name()), Value::Null, &refs);
    let opts = RepairOptions { closure_cap: caps.closure };
    let output = match mode {
        RepairMode::FiniteImage => {
            let rep: ApproxRep = parse(&inputs[0], "representation")?;
            let (out, ledger) = repair_finite_image(&rep, &opts)?;
            fill_lift(&mut c, &rep, &out, ledger.bound_val, ledger.p_part, to_value(&ledger))?;
            to_value(&out)
        }
        RepairMode::Graph => {
            let gog: GraphOfGroups = match parse::<GraphOfGroups>(&inputs[0], "graph of groups") {
                Ok(g) => g,
                Err(e) => match parse::<GBSGraph>(&inputs[0], "GBS graph") {
                    Ok(g) => GraphOfGroups::from_gbs(&g)?,
                    Err(_) => return Err(e),
                },
            };
            let rep: ApproxRep = parse(&inputs[1], "representation")?;
            let (out, ledger) = graph_repair(&gog, &rep, &opts)?;
            fill_lift(&mut c, &rep, &out, ledger.bound_val, ledger.p_part, to_value(&ledger))?;
            to_value(&out)
        }
        RepairMode::Involution => {
            let a: UMatrix = parse(&inputs[0], "matrix")?;
            let out = involution_repair(&a)?;
            c.params = json!({ "precision": a.ring().precision() });
            let id = UMatrix::identity(a.ring(), a.rows());
            let d = a.mul(&a)?.dist_val(&id)?;
            c.defect_before_val = Some(d);
            c.defect_after_val = Some(out.mul(&out)?.dist_val(&id)?);
            c.distance_val = Some(a.dist_val(&out)?);
            c.bound_val = Some(d.div_ceil(2));
            c.estimate_class = EstimateClass::Quadratic;
            to_value(&out)
        }
        RepairMode::Monomial => {
            let p: UMatrix = parse(&inputs[0], "monomial matrix P")?;
            let d: UMatrix = parse(&inputs[1], "matrix D")?;
            c.params = json!({ "precision": p.ring().precision() });
            let rep = monomial_commutant(&p, &d)?;
            c.defect_before_val = Some(rep.commutator_val);
            c.defect_after_val = Some(rep.d_prime.ring().precision());
            c.distance_val = Some(rep.distance_val);
            c.bound_val = Some(rep.bound_val);
            c.estimate_class = if rep.orbits.iter().any(|o| o.obstructed) { EstimateClass::Linear } else { EstimateClass::Optimal };
            c.witness = json!({ "orbits": rep.orbits, "commutator_bound_holds": rep.commutator_bound_holds });
            to_value(&rep.d_prime)
        }
        RepairMode::SplitSection => match parse::<FiltrationRepFile>(&inputs[0], "filtration representation")? {
            FiltrationRepFile::Triangular { presentation, ring, n, images } => {
                let imgs = images
                    .iter()
                    .map(|e| TriMatrix::new(UMatrix::decode_entries(ring, n, n, e)?))
                    .collect::<Result<Vec<_>>>()?;
                let out = split_generic(&FiltrationRep::new(presentation.clone(), imgs)?, &mut c)?;
                let images = out.iter().map(|m| m.matrix().encode_entries()).collect();
                to_value(&FiltrationRepFile::Triangular { presentation, ring, n, images })
            }
            FiltrationRepFile::Tree { presentation, arity, depth, images } => {
                let imgs =
                    images.into_iter().map(|perms| TreeAut::new(arity, depth, perms)).collect::<Result<Vec<_>>>()?;
                let out = split_generic(&FiltrationRep::new(presentation.clone(), imgs)?, &mut c)?;
                let images = out.iter().map(|t| t.perms().to_vec()).collect();
                to_value(&FiltrationRepFile::Tree { presentation, arity, depth, images })
            }
        },
    };
    c.verified = c.defect_after_val.is_some_and(|v| v >= after_target(&c))
        && c.distance_val.zip(c.bound_val).is_some_and(|(d, b)| d >= b);
    Ok(finish(c, Some(output)))
}

/// Valuation meaning "exact" for the certificate's repaired object.
fn after_target(c: &Certificate) -> u32 {
    c.ledger.get("top_level").and_then(Value::as_u64).map(|t| t as u32).unwrap_or_else(|| {
        c.params.get("precision").and_then(Value::as_u64).map(|t| t as u32).unwrap_or(c.defect_after_val.unwrap_or(0))
    })
}

fn fill_lift(c: &mut Certificate, rep: &ApproxRep, out: &ApproxRep, bound: u32, l: u32, ledger: Value) -> Result<()> {
    let k = rep.ring().precision();
    c.params = json!({ "precision": k });
    c.defect_before_val = Some(rep.defect_val());
    c.defect_after_val = Some(out.defect_val());
    c.distance_val = Some(rep.rep_dist_val(out)?);
    c.bound_val = Some(bound);
    c.estimate_class = if l == 0 { EstimateClass::Optimal } else { EstimateClass::Linear };
    c.ledger = ledger;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BadestimateParams {
    pub ring: RingSpec,
    pub i: u32,
    pub x: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WreathParams {
    pub ring: RingSpec,
    pub i: u32,
    pub x: Value,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> u64 {
    10_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorParams {
    pub ring: RingSpec,
    pub n: usize,
    pub a: u32,
}

/// Build a witness from its parameters.
pub fn run_witness(kind: WitnessKind, params: &Value, caps: &Caps) -> Result<Outcome> {
    let mut c = base(format!("witness:{}", kind.name()), params.clone(), &[params]);
    let output = match kind {
        WitnessKind::Badestimate => {
            let bp: BadestimateParams = parse(params, "badestimate parameters")?;
            let x = Scalar::new(bp.ring, bp.ring.decode(&bp.x)?)?;
            let rep = make_badestimate_rep(bp.i, &x)?;
            c.defect_before_val = Some(rep.defect_val());
            let exact = hdist_gl1_cyclic(&rep, caps.enumeration)?;
            c.distance_val = exact.value.val();
            let lower = hdist_lowerbound_diag(bp.i, &x).ok();
            c.witness = json!({ "hdist_exact_truncated": exact, "hdist_extension_lower_bound": lower });
            c.verified = true;
            to_value(&rep)
        }
        WitnessKind::Wreath => {
            let wp: WreathParams = parse(params, "wreath parameters")?;
            if wp.i > caps.wreath_index {
                return Err(Error::CapExceeded { what: format!("wreath index {}", wp.i), cap: caps.wreath_index as u64 });
            }
            let x = Scalar::new(wp.ring, wp.ring.decode(&wp.x)?)?;
            let rep = make_wreath_rep(wp.i, &x, caps.matrix_dim)?;
            let opts = WreathCheckOptions { group_cap: 1 << 16, samples: wp.samples, seed: wp.seed, dim_cap: caps.matrix_dim };
            let cert = wreath_rep_defect_certificate(wp.i, &x, &opts)?;
            c.defect_before_val = Some(cert.exact_defect_val.unwrap_or(cert.structural_defect_val));
            c.distance_val = cert.hdist_lower_bound.value.val();
            c.witness = to_value(&cert);
            c.verified = cert.delta_image_scalar;
            to_value(&rep)
        }
        WitnessKind::Commutator => {
            let cp: CommutatorParams = parse(params, "commutator parameters")?;
            let (a, b) = make_commutator_witness(cp.ring, cp.n, cp.a)?;
            let comm = a.mul(&b)?.sub(&b.mul(&a)?)?;
            c.defect_before_val = Some(comm.val());
            match commutator_witness_oracle(cp.ring, cp.n, cp.a, caps.enumeration) {
                Ok(rep) => {
                    c.distance_val = Some(rep.nearest_distance.val().unwrap_or(cp.ring.precision()));
                    c.witness = to_value(&rep);
                }
                Err(Error::CapExceeded { .. }) => c.witness = json!({ "oracle": "skipped: enumeration cap" }),
                Err(e) => return Err(e),
            }
            c.verified = comm.val() == (2 * cp.a).min(cp.ring.precision());
            json!({ "A": a, "B": b })
        }
    };
    Ok(finish(c, Some(output)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub mismatches: Vec<String>,
}

/// Recompute the certificate from `inputs` (the parameter object for
/// witnesses) and compare every field.
pub fn verify_certificate(cert: &Certificate, inputs: &[Value], caps: &Caps) -> Result<VerifyReport> {
    if cert.schema_version != SCHEMA_VERSION {
        return Ok(VerifyReport { passed: false, mismatches: vec![format!("schema version {}", cert.schema_version)] });
    }
    let fresh = match cert.operation.split_once(':') {
        Some(("repair", m)) => run_repair(RepairMode::parse(m)?, inputs, caps)?,
        Some(("witness", k)) => {
            let params = if inputs.is_empty() { &cert.params } else { &inputs[0] };
            run_witness(WitnessKind::parse(k)?, params, caps)?
        }
        _ => return Err(Error::Parse(format!("unknown operation {:?}", cert.operation))),
    }
    .certificate;
    let (a, b) = (to_value(cert), to_value(&fresh));
    let mut mismatches = Vec::new();
    if let (Value::Object(a), Value::Object(b)) = (&a, &b) {
        for (key, va) in a {
            if b.get(key) != Some(va) {
                mismatches.push(key.clone());
            }
        }
    }
    Ok(VerifyReport { passed: mismatches.is_empty(), mismatches })
}
