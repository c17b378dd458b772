//! Cross-sections (multiplicative tiling sets) for the dilation actions
//! `γ ↦ γAᵗ` and `γ ↦ γAᵏ` on ℝⁿ, and the multi-wavelet sets built from them.
//!
//! Module map:
//!
//! * [`linalg`]: dense matrices, eigenvalues, real Jordan form, `e^{tB}`, `Aᵏ`.
//! * [`classify`]: existence decisions for cross-sections and order-∞ wavelets.
//! * [`sections`]: the eight explicit cross-section constructions, membership
//!   and closed-form orbit solving.
//! * [`shaping`]: finite-measure and bounded re-arrangements of a section.
//! * [`verify`]: seeded tiling checks, Calderón sums, Jacobians and orbit
//!   integration.
//! * [`wavelet`]: lattices, region sets, the multi-wavelet tiling equations,
//!   partitioning, dimension functions and order-∞ constructions.
//!
//! Points are row vectors and matrices act on the right (`γA`).

pub mod classify;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod sampling;
pub mod sections;
pub mod shaping;
pub mod verify;
pub mod wavelet;

pub use classify::{
    classify_continuous, classify_discrete, is_similar_to_unitary, ContinuousCase,
    ContinuousVerdict, DiscreteCase, DiscreteVerdict,
};
pub use error::{Result, XsectError};
pub use linalg::{Matrix, RealJordanForm, DEFAULT_TOL};
pub use sections::{CrossSection, Mode, OrbitSolution, SectionCase};
pub use shaping::{ShapedSection, ShapeTarget};
pub use verify::TilingReport;
pub use wavelet::{Lattice, Order, RegionSet};
