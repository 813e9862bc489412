//! Equilibria, bid bounds and revenue-maximizing exponents for
//! quasi-proportional auctions with weight function `f(x) = x^p`.
//!
//! Each bidder `i` bidding `b_i` receives the share `b_i^p / Σ_j b_j^p` of the
//! item and pays its bid per unit received.
//!
//! - [`auction`]: weights, allocations, utilities and their derivatives
//! - [`response`]: best responses and bid lower bounds
//! - [`equilibrium`]: fixed-point solver for general valuations and a
//!   brute-force equilibrium check
//! - [`olos`]: exact solution when one bidder values the item at `alpha > 1`
//!   and the other `n - 1` at 1
//! - [`design`]: revenue-maximizing and worst-case-robust exponents, sweeps
//! - [`cli`]: the `qprop` command-line front end

pub mod auction;
pub mod cli;
pub mod design;
pub mod equilibrium;
pub mod error;
pub mod olos;
pub mod response;
pub mod search;

pub use auction::{
    allocate, utility, utility_derivatives, weight, AllocationProfile, BidProfile,
    UtilityDerivatives, ValuationProfile, WeightExponent,
};
pub use design::{
    optimize_p, robust_p, star_curves, sweep, DesignResult, OptimizeOptions, RobustDomain,
    RobustResult, SweepSpec,
};
pub use equilibrium::{revenue, solve_fixed_point, verify_nash, EquilibriumResult, NashReport, SolveOptions};
pub use error::{Error, Result};
pub use olos::{eta, h_eval, olos_equilibrium, revenue_bounds, solve_z, OlosEquilibrium, OlosInstance, RevenueBounds};
pub use response::{
    best_response, best_response_profile, check_box_condition, lower_bounds_sorted,
    lower_bounds_uniform, BidLowerBounds,
};
