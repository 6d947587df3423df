//! Static tax-benefit microsimulation of an income shock, the automatic
//! stabilizers of the benefit system, and three emergency measures.
//!
//! The pipeline runs bottom-up: a validated [`population::Population`] is
//! shocked by [`shock`], re-assessed by [`policy`], extended by
//! [`measures`], summarized by [`metrics`] and composed into report columns
//! by [`scenario`].

pub mod config;
pub mod error;
pub mod measures;
pub mod metrics;
pub mod money;
pub mod policy;
pub mod population;
pub mod report;
pub mod scenario;
pub mod shock;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use measures::{MeasureConfig, SectorGroup, SectorGroups};
pub use metrics::{MetricsReport, PovertyLine, StabilizationRecord};
pub use money::{Mkd, Weight, WeightedMkd};
pub use policy::{BenefitAward, IncomeDecomposition, PolicyParameters, Program};
pub use population::{Household, Individual, LaborStatus, Population};
pub use scenario::{ColumnLabel, ColumnSpec, Inputs, RunConfig};
pub use shock::{SectorImpactTable, Severity, ShockScenario, ShockedIncome};
