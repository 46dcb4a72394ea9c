//! Loss-function axioms: transforms, auditors, and the likelihood-ratio
//! quantile function `c[P, Q]`.

pub mod audit;
pub mod cfunction;
pub mod transforms;

pub use audit::{
    audit_loss, check_iia, check_irp, check_iro, check_isi, iia_witness, sample_pairs, AuditRecord, AuditReport,
    AuditSuite, Axiom, Deviation, Verdict,
};
pub use cfunction::{c_eval, c_function, canonical_rearrangement_1d, canonical_rearrangement_1d_with, CFunction, Rearrangement};
pub use transforms::{MonotoneMap, Noise, ObsTransform, ParamTransform};
