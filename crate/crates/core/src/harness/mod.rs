//! Campaign orchestration: experiment documents, seeded batch execution,
//! measured-shot ingestion and table emission.
//!
//! A campaign is one JSON document. Every random draw derives from its
//! `seed`, instance and noise-point indices, so rows do not depend on thread
//! scheduling. Rows are written as JSON Lines, tables as CSV.

mod campaign;
mod ingest;
mod tables;

pub use campaign::{
    derive_seed, load_campaign, read_rows, run_campaign, run_to_dir, write_rows, Campaign,
    EmbeddedSpec, InstanceRef, KRule, Method, Mode, NoiseGrid, ResolvedInstance, ResultRow,
    RunMetadata, SCHEMA_VERSION,
};
pub use ingest::{
    ingest_measurements, parse_vendor_export, read_shot_source, IngestReport, VendorExport,
};
pub use tables::{emit_tables, Table, TableKind};
