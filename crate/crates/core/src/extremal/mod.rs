//! Torus-invariant transverse Kähler deformations of weighted structures on
//! S^3 and the Calabi-type energy `E = int s^2 dmu`.
//!
//! Deformations are `eta~ = eta_w + d^c phi` with `phi` a basic function of
//! `sigma`; the gauge term and the class term are both zero.

pub mod chebyshev;
pub mod deformed;
pub mod flow;
pub mod jet;
pub mod potential;
pub mod profile;
pub mod reduced;
pub mod variational;

pub use deformed::{deformed_structure, energy_fd, sigma_coordinate, DeformedFrame};
pub use flow::{profile_csv, run_flow, FlowConfig, FlowReport, GradientMethod, StopReason};
pub use potential::{futaki_direct, futaki_via_potential, ricci_potential, RicciPotentialGrid};
pub use profile::{BasicFunction, BasicProfile, MomentCoordinate};
pub use reduced::Reduced;
pub use variational::{
    energy, expansion_check, first_variation_check, lichnerowicz_apply, lichnerowicz_kernel, ExpansionReport,
    FirstVariation, GridFunction, KernelReport,
};
