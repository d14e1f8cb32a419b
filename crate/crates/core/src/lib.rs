pub mod counterexample;
pub mod faults;
pub mod functor_a;
pub mod functor_f;
pub mod invariants;
pub mod klein_gordon;
pub mod lattice;
pub mod linalg;
pub mod poly;
pub mod scenario;
pub mod suites;
pub mod theory;
pub mod time_order;

pub use lattice::{CauchySurfaceGraph, LatticeError, LatticeSpacetime, Point, PointSet, Region, Topology};
pub use poly::{FinVec, Gen, Monomial, Poly, SampleConfig, C64};
pub use scenario::Scenario;
pub use suites::Suite;
pub use theory::{Aqft, CheckEntry, CheckReport, TheoryError, TheoryRef, Topfa};
pub use time_order::{DisjointTuple, Perm};
