//! Change of endomorphism for twisted operators, and the confluence of a
//! usual connection into a q-difference module with the same solutions.

mod confluence;
mod module;
mod plan;

pub use confluence::{
    confluence_transform, confluence_transform_certified, connection_power_matrices, default_eta_prime,
    deformed_derivation, h_complex_sample_check, log_derivative_form, sigma_structure_identity_check,
    strong_map, strong_predicate, DecayCertificate, H0Report, StructureReport, TailBound,
};
pub use module::{
    mat_add, mat_apply, mat_det, mat_distance, mat_identity, mat_mul, mat_norm, mat_scale, mat_sub, mat_zero,
    vec_norm, ConnectionModule, Matrix, SigmaModule,
};
pub use plan::{basis_change_matrix, deform_operator, deform_order1_closed, DeformationPlan};
