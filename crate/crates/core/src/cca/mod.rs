//! Canonical correlation analysis: exact solver, definition oracle and coherence.

mod coherence;
mod exact;
mod oracle;

pub use coherence::{coherence, concat_coherence, leverage_scores, ConcatCoherence};
pub use exact::{exact_cca, exact_cca_with, BasisMethod, CcaResult, ExactOptions, Method};
pub use oracle::cca_definition_oracle;
