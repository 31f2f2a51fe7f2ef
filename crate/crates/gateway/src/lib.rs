//! Everything that talks to model providers: the `/v1` wire protocol, a
//! retrying HTTP client, bounded-concurrency sample collection, and the
//! on-disk sample archive that all downstream stages read.

pub mod archive;
pub mod client;
pub mod collect;
pub mod protocol;
pub mod validate;

pub use archive::{read_archive, write_archive, ArchiveError, ArchiveRecord, SamplingParams};
pub use client::{ClientConfig, GatewayError, HttpEntailmentOracle, ProviderClient, SampleOptions};
pub use collect::{collect_samples, CollectConfig, CollectReport, PromptError, PromptErrorKind, PromptJob};
pub use validate::{validate_record, Requirements, Violation};

#[cfg(feature = "mock-provider")]
pub mod mock;
