//! Calculus and gauge theory on the q-grid sp = {0} U { q^(2n) : n >= 0 }.
//!
//! The crate works with real-valued functions on that grid, the scaled
//! q-derivative and q-integral acting on them, gauge transforms between
//! connection forms, kernels of twisted derivations, and finite truncations
//! of the one-sided shift representation. Every quantity that depends on an
//! infinite tail is either computed with a certified error bound or refused
//! with an error; nothing silently truncates.

pub mod gauge;
pub mod param;
pub mod product;
pub mod rep;
pub mod sections;
pub mod spectral;

pub use gauge::{
    defect_connection, defective_spots, exp_series_g, is_standard_class, solve_gauge_between,
    solve_gauge_to_standard, BetweenOutcome, ConnectionForm, DefectSet, GaugeError, GaugeResult,
    Side,
};
pub use param::{NumericPolicy, ParamError, QParam};
pub use sections::{
    kernel_dim_lower_bound, kernel_sections, section_residual, HolomorphicSection, KernelReport,
};
pub use product::{certified_product, CertifiedProduct, CertifiedValue, DecayCertificate, ProductError};
pub use rep::{
    boundary_defect, independence_rank, rep_function, rep_generators, relation_residuals,
    BoundaryDefect, RelationResiduals, RepError, TruncatedOperator,
};
pub use spectral::{SpectralError, SpectralFunction, SpectrumPoint};
