//! Star-schema analytics for the Global Superstore retail dataset.
//!
//! The crate is layered bottom-up:
//!
//! - [`ingest`] parses the source CSV and builds a [`model::StarSchema`];
//! - [`snapshot`] persists that schema in the `SBRD` binary columnar format;
//! - [`measure`] parses and evaluates the DAX-subset measure language;
//! - [`query`] runs grouped, binned and top-N measure queries;
//! - [`analytics`] reproduces the profitability diagnostics as a findings report;
//! - [`dashboard`] models dashboard specs and scores their narrative structure.

pub mod analytics;
pub mod dashboard;
pub mod ingest;
pub mod measure;
pub mod model;
pub mod query;
pub mod snapshot;
pub mod synth;
pub mod value;

pub use value::Value;
