//! Generation-space-size (GSS) measurement toolkit.
//!
//! * [`metrics`]: proxy metrics over K sampled responses (EigenScore
//!   variants, leave-one-out EigenScore, semantic entropy, perplexity, …).
//! * [`bench`]: seeded synthesis of the six prompt-pair datasets.
//! * [`eval`]: pairwise accuracy, best-metric/best-model selection and the
//!   supporting statistics.
//! * [`io`]: line-delimited JSON record files.

pub mod bench;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod metrics;
