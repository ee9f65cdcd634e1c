//! Petal unfoldings of prismatoids.
//!
//! Builds prismatoids from coordinates, enumerates and develops their petal
//! unfoldings, checks the unfoldings for overlap, and evaluates the wedge and
//! diamond certificate, the tallness bound, and a feasible-descent search for
//! certificate counterexamples.

pub mod certificate;
pub mod exact;
pub mod geom;
pub mod instances;
pub mod io;
pub mod model;
pub mod overlap;
pub mod petal;
pub mod region;
pub mod search;
pub mod tall;

pub use geom::{ArithmeticMode, Point2, Point3, TolerancePolicy};
pub use model::{Band, FaceId, Prismatoid, VertexId};
pub use petal::{Layout, PetalChoice};
