//! Core of the participatory-AI project atlas: the record schema and its
//! validation, harmonization, offline geocoding, completeness metrics,
//! release snapshots and governance workflows.

pub mod atlas;
pub mod changelog;
pub mod csvio;
pub mod geocode;
pub mod governance;
pub mod harmonize;
pub mod metrics;
pub mod projection;
pub mod record;
pub mod release;
pub mod schema;

#[cfg(any(test, feature = "fixtures"))]
pub mod fixtures;

pub use atlas::{Atlas, AtlasError, ExportFormat, Tables};
pub use changelog::{Change, ChangeLog, ChangeLogEntry};
pub use record::{validate_record, ProjectRecord, RawRecord, ValidationError, ValidationErrors};
pub use release::{ReleaseManifest, ReleaseStore, ReleaseVersion};
