//! Jet arithmetic for holomorphic map germs and vector fields, with
//! Poincare-Dulac normalization, Lie-series flow maps, executable theorem
//! checks and an independent numeric orbit integrator.

pub mod basis;
pub mod flow;
pub mod jet;
pub mod map;
pub mod normal_form;
pub mod sim;
pub mod theorems;
pub mod tol;

pub use basis::MultiIndex;
pub use jet::{Coeff, Jet};
pub use map::{JetError, MapJet};
pub use tol::ToleranceProfile;
