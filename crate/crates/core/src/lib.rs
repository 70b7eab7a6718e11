//! Tropical-geometric skeleton of attention mechanisms.
//!
//! What lives here:
//!
//! * [`trop`] — max-plus arithmetic, temperature-deformed (LogSumExp)
//!   arithmetic, tropical polynomials and their Newton-polytope term data.
//! * [`polytope`] — convex hulls (general-dimension QuickHull with
//!   tolerance-based degeneracy handling), Minkowski sums by pointwise-sum
//!   enumeration, and canonical vertex sets.
//! * [`bounds`] — exact big-integer complexity formulas: arrangement region
//!   counts, Minkowski vertex bounds, and linear-region bounds.
//! * [`attention`] — hard and soft attention routing, the power-diagram
//!   formulation of dot-product routing, log-lifted outputs, and an
//!   empty-cell census.
//! * [`census`] — toy transformer block stacks, routing/activation
//!   signatures, Monte Carlo region censuses, and the explicit
//!   sawtooth-folding construction with its exact breakpoint oracle.
//! * [`stability`] — finite-temperature stability certificates for the
//!   LogSumExp potential.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the `*64` aliases below are the reference instantiation used by the CLI
//! and the experiments.

pub mod attention;
pub mod bounds;
pub mod census;
pub mod error;
mod hull;
pub mod linalg;
pub mod polytope;
pub mod rng;
pub mod scalar;
pub mod stability;
pub mod trop;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use attention::{
    empty_cell_census, hard_routing, key_norm_weights, log_lifted_output, power_voronoi_membership,
    soft_attention, HeadData, RoutingResult,
};
pub use bounds::{
    bound_report, constructed_region_count, minkowski_vertex_upper_bound, region_lower_bound,
    region_upper_bound, zaslavsky_regions, BoundReport, Regime,
};
pub use census::{
    breakpoints_1d, build_lower_bound_net, census_vs_theory, exact_region_count, forward,
    monte_carlo_census, sawtooth, BlockLayer, BlockNetwork, CensusReport, CensusVsTheory,
    FeedForward, Signature,
};
pub use polytope::{convex_hull, minkowski_sum, Polytope};
pub use stability::{certify, hessian_spectral_norm, lse_potential, softmax_gradient, StabilityReport};
pub use trop::{eval_trop_poly, lse_add, Temperature, TropScalar, TropicalPolynomial};

/// Concrete `f64` aliases (the reference precision).
pub type Trop64 = TropScalar<f64>;
pub type TropPoly64 = TropicalPolynomial<f64>;
pub type Temp64 = Temperature<f64>;
pub type Polytope64 = Polytope<f64>;
pub type Routing64 = RoutingResult<f64>;
pub type Head64 = HeadData<f64>;
pub type Net64 = BlockNetwork<f64>;
pub type Census64 = CensusReport<f64>;
pub type Stability64 = StabilityReport<f64>;

/// Concrete `f32` aliases.
pub type Trop32 = TropScalar<f32>;
pub type TropPoly32 = TropicalPolynomial<f32>;
pub type Temp32 = Temperature<f32>;
pub type Polytope32 = Polytope<f32>;
pub type Routing32 = RoutingResult<f32>;
pub type Head32 = HeadData<f32>;
pub type Net32 = BlockNetwork<f32>;
