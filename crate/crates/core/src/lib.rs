//! Exact finite-dimensional models of groupoid C*-algebras.
//!
//! Every object in this crate is finite: groupoids have finitely many
//! arrows, Haar systems are positive weights, Hilbert modules over
//! commutative coefficient algebras `C(W)` are doubly graded families of
//! inner-product spaces. The constructions follow the correspondence
//! picture of representations: a representation of `(G, α)` is a grading
//! of a module by `G⁰` together with a unitary
//! `U: L²(G¹, s, α̃) ⊗ F → L²(G¹, r, α) ⊗ F` satisfying the cocycle
//! identity `d₁*(U) = d₂*(U) ∘ d₀*(U)`.
//!
//! Module map:
//!
//! * [`fingroupoid`]: groupoids, Haar systems, nerves, presets.
//! * [`measures`]: measure families along maps, composition, fibre products.
//! * [`hilbmod`]: correspondences, tensor products, canonical unitaries.
//! * [`convalg`]: the convolution `*`-algebra and its norms.
//! * [`reps`]: representations `(φ, U)`, cocycles, induction, intertwiners.
//! * [`intdis`]: integration, disintegration and round trips.
//! * [`crossed`]: bisections, germ groupoids, crossed products.
//! * [`suite`]: the verification battery used by the CLI and the
//!   acceptance tests.

pub mod convalg;
pub mod crossed;
pub mod fingroupoid;
pub mod fixtures;
pub mod formats;
pub mod hilbmod;
pub mod intdis;
pub mod linalg;
pub mod measures;
pub mod random;
pub mod report;
pub mod reps;
pub mod suite;

pub use convalg::ConvElement;
pub use fingroupoid::{FiniteGroupoid, HaarSystem, MeasuredGroupoid, Nerve};
pub use hilbmod::{Correspondence, ModuleMap};
pub use linalg::{CMat, C64};
pub use measures::{FiniteMap, MeasureFamily, TopologicalCorrespondence};
pub use report::{Check, Report};
pub use reps::{CocycleFamily, Representation};
