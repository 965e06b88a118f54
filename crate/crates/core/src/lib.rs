//! Age- and space-structured model of neuroepithelial proliferation along
//! the cephalic-caudal axis of the chick optic tectum.
//!
//! Two proliferative compartments (interphase and mitosis) move through a
//! normalised phase age while diffusing along the axis; dividing cells
//! re-enter interphase, doubled unless they differentiate. The crate
//! contains:
//!
//! * [`params`] — stage calibration and CFL-driven mesh selection,
//! * [`fdm`] — the explicit upwind/centred solver,
//! * [`aggregate`] and [`pipeline`] — the reduced section-total model that
//!   produces expanded-domain profiles,
//! * [`data`] — embedded annexe tables and all file formats,
//! * [`validation`] — convergence studies and comparison reports.

pub mod aggregate;
pub mod data;
mod error;
pub mod fdm;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod validation;

pub use error::{Error, Result};
pub use model::{ComparisonReport, Mesh, Phase, PhaseField, SectionDelta, SectionProfile, StageParameters};
