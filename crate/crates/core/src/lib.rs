//! Weighted Sasakian geometry of the odd-dimensional sphere.
//!
//! The crate evaluates the Sasakian structures attached to Reeb fields
//! `xi_w = sum w_k H_k` on S^{2n+1}, checks their curvature, volume and
//! Futaki-invariant formulas against independent numerical routes, and runs
//! a descent of the Calabi-type energy `E(g) = int s_g^2 dmu_g` over
//! torus-invariant transverse Kähler deformations (n = 1).

pub mod conventions;
pub mod curvature;
pub mod error;
pub mod extremal;
pub mod futaki;
pub mod quadrature;
pub mod sphere;
pub mod structure;
pub mod verify;

pub use conventions::{ConventionLedger, CONVENTIONS, KAPPA};
pub use curvature::{curvature_fd, einstein_residuals, mean_scalar, scalar_closed, CurvatureData, ScalarReport};
pub use error::{Error, Result};
pub use extremal::{
    deformed_structure, energy, energy_fd, first_variation_check, futaki_via_potential, lichnerowicz_apply,
    ricci_potential, run_flow, sigma_coordinate, BasicProfile, DeformedFrame, FlowConfig, FlowReport, GridFunction,
    RicciPotentialGrid,
};
pub use futaki::{classify, futaki_closed, futaki_numeric, ClassifyReport, FutakiInput, FutakiMethod};
pub use quadrature::{integrate_invariant, integrate_mc, integrate_orthant, volume, QuadratureSpec};
pub use sphere::{graph_chart, random_sphere_point, ChartCoords, SpherePoint, TangentVector, Weight};
pub use verify::{run_criterion, run_suite, CriterionResult, Suite};
pub use structure::{
    contact_form, homothety_frame, is_positive_reeb, phi_tensor, reeb_field, sasaki_metric, ContactFrame,
};
