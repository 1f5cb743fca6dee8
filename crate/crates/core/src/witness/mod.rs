//! Instability witnesses: cyclic maps far from homomorphisms, the wreath
//! construction, and almost-commuting pairs.

pub mod badestimate;
pub mod commutator;
pub mod wreath;

pub use badestimate::{
    cyclotomic_slopes, hdist_gl1_cyclic, hdist_lowerbound_diag, hdist_lowerbound_sign, make_badestimate_rep,
    HdistCertificate, HdistMode, HdistWitness,
};
pub use commutator::{commutator_witness_oracle, make_commutator_witness, CommutatorOracleReport};
pub use wreath::{
    build_unstable_generators, make_wreath_rep, verify_claims, verify_claims_range, wreath_rep_defect_certificate, ClaimsReport,
    InnerElem, UnstableGenerators, WreathCheckOptions, WreathDefectCertificate, WreathElem,
};
