//! Hermite polynomials, multi-indices, Gaussian quadrature and expansions.

pub mod expansion;
pub mod multi_index;
pub mod poly;
pub mod quadrature;

pub use expansion::{
    build_expansion, chaos_component, generalized_rank, hermite_coefficient, hermite_rank, mc_cross_check,
    product_hermite, pullback_expansion, ChaosComponent, Coefficient, FlaggedCoefficient, HermiteExpansion,
    RankReport, RANK_TOLERANCE,
};
pub use multi_index::MultiIndex;
pub use poly::{factorial, hermite_poly};
pub use quadrature::{QuadSpec, QuadratureRule};
