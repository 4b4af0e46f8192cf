//! Full-coverage insurance pricing and no-arbitrage equilibrium dynamics.
//!
//! Two independent risks `K1`, `K2` and their composition `K` are priced by
//! insurers using the exponential premium principle. Whenever the best global
//! premium `P` differs from `P1 + P2`, some insurer has a profitable deviation
//! ([`arbitrage`]); iterating those deviations ([`equilibrium`]) drives the
//! market to the additive price vector, which is its only fixed point.

pub mod arbitrage;
pub mod dist;
pub mod equilibrium;
pub mod error;
pub mod market;
pub mod pricing;
pub mod report;
pub mod scenario;

pub use arbitrage::{
    apply, classify, coalition_offer, propose, split_offer, ArbitrageAction, Regime,
};
pub use dist::{convolve, dist_equal, exp_moment, expectation, DiscreteDist};
pub use equilibrium::{run_equilibrium, EquilibriumReport, TraceRecord};
pub use error::{Error, Result};
pub use market::{
    best_quote, build_market, build_market_with, mispricing, purchase_feasible, BestPremia,
    BookSetup, MarketState, Quote, QuoteOrigin, Risk, RiskId,
};
pub use pricing::{
    disutility, indifference_premium, quote_premium, InsurerId, InsurerProfile, RiskTolerance,
};
pub use report::{emit_report, report_json, trace_csv, ReportFormat};
pub use scenario::{load_scenario, Scenario, ScenarioError};
