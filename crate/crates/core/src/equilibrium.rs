//! Equilibrium iteration: one deviation per round until the best premia are additive.

use crate::arbitrage::{apply, classify, propose, ArbitrageAction, Regime};
use crate::error::{Error, Result};
use crate::market::MarketState;
use crate::pricing::RiskTolerance;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ROUNDS: u64 = 200;

/// Market prices at the start of a round and the action taken in it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub round: u64,
    pub global: f64,
    pub first: f64,
    pub second: f64,
    pub delta: f64,
    pub action: ArbitrageAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub converged: bool,
    pub rounds_used: u64,
    pub tolerance: f64,
    pub max_rounds: u64,
    /// One record per visited round, round 0 included.
    pub trace: Vec<TraceRecord>,
    pub purchase_feasible: Option<bool>,
    pub final_state: MarketState,
}

impl EquilibriumReport {
    pub fn final_record(&self) -> &TraceRecord {
        self.trace.last().expect("trace always holds round 0")
    }

    pub fn action_count(&self) -> usize {
        self.trace
            .iter()
            .filter(|r| r.action != ArbitrageAction::NoAction)
            .count()
    }
}

/// Iterates classify, propose, apply until the mispricing is within `tol` or
/// `max_rounds` actions have been applied. Running out of rounds is reported
/// through `converged = false`, not as an error.
pub fn run_equilibrium(
    state: MarketState,
    tol: f64,
    max_rounds: u64,
    insured_rho: Option<RiskTolerance>,
) -> Result<EquilibriumReport> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let mut state = state;
    let mut trace = Vec::new();
    let mut rounds_used = 0;
    let converged = loop {
        let best = state.best_premia()?;
        let regime = classify(&state, tol)?;
        let action = if regime == Regime::Equilibrium || rounds_used == max_rounds {
            ArbitrageAction::NoAction
        } else {
            propose(&state, tol)?
        };
        trace.push(TraceRecord {
            round: rounds_used,
            global: best.global,
            first: best.first,
            second: best.second,
            delta: best.mispricing(),
            action: action.clone(),
        });
        if regime == Regime::Equilibrium {
            break true;
        }
        if rounds_used == max_rounds {
            break false;
        }
        state = apply(&state, &action)?;
        rounds_used += 1;
    };

    let purchase_feasible = insured_rho
        .map(|rho| state.purchase_feasible(rho))
        .transpose()?;
    Ok(EquilibriumReport {
        converged,
        rounds_used,
        tolerance: tol,
        max_rounds,
        trace,
        purchase_feasible,
        final_state: state,
    })
}
