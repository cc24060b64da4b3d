//! Exact simulation of adaptive single-qubit measurement cascades on shared
//! GHZ states.
//!
//! * [`amplitude`]: `sign · √rational` numbers, closed under products.
//! * [`engine`]: two-amplitude GHZ-span states and projective measurement.
//! * [`plans`]: CPM/SPM/table plans, cascade constants, branch enumeration.
//! * [`protocol`]: seeded Monte-Carlo runs, the W ratio, the decision rule.
//! * [`oracle`]: exact marginals and the reference-value report.

pub mod amplitude;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod output;
pub mod plans;
pub mod protocol;
pub mod stats;

pub use amplitude::{parse_rational, ExactAmplitude, Rational, Sign};
pub use engine::{bob_distribution, ghz_state, measure_next, Basis, BranchPair, ChainState};
pub use error::{Error, Result};
pub use plans::{
    enumerate_branches, eta_state, spm_basis, BranchRecord, Constants, CpmPlan, LeafClass,
    MeasurementPlan, Outcome, PlanParams, SpmPlan, TablePlan,
};
pub use protocol::{run_protocol, sample_state, w_statistic, ProtocolConfig, Strategy};
