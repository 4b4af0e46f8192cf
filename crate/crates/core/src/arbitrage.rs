//! Profitable deviations against a non-additive price vector.
//!
//! An underpriced global policy (`P < P1 + P2`) is re-offered by its insurer
//! as two component policies whose premia sum to `P`, undercutting both
//! component books. An overpriced one (`P > P1 + P2`) is undercut by a
//! coalition: the best `K1` insurer fronts the global risk at the midpoint
//! `(P + P1 + P2) / 2` and fully reinsures `K2` with the best `K2` insurer,
//! both ending up with more than their standalone premia.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{BestPremia, MarketState, QuoteOrigin, RiskId};
use crate::pricing::InsurerId;

/// Absolute tolerance (scaled by `max(1, P)`) for premium conservation checks.
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Underpriced,
    Overpriced,
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArbitrageAction {
    /// The global best quoter re-offers the global cover as two component covers.
    SplitOffer {
        actor: InsurerId,
        first: f64,
        second: f64,
    },
    /// `lead` quotes `premium` on the global risk and pays `reinsurance_premium`
    /// to `reinsurer` for the whole of `K2`, keeping `lead_net`.
    CoalitionOffer {
        lead: InsurerId,
        reinsurer: InsurerId,
        premium: f64,
        lead_net: f64,
        reinsurance_premium: f64,
    },
    NoAction,
}

impl ArbitrageAction {
    pub fn kind(&self) -> &'static str {
        match self {
            ArbitrageAction::SplitOffer { .. } => "split_offer",
            ArbitrageAction::CoalitionOffer { .. } => "coalition_offer",
            ArbitrageAction::NoAction => "none",
        }
    }
}

pub fn classify_mispricing(delta: f64, tol: f64) -> Regime {
    if delta < -tol {
        Regime::Underpriced
    } else if delta > tol {
        Regime::Overpriced
    } else {
        Regime::Equilibrium
    }
}

pub fn classify(state: &MarketState, tol: f64) -> Result<Regime> {
    check_tolerance(tol)?;
    Ok(classify_mispricing(state.mispricing()?, tol))
}

/// Proportional split `pi_i = P * P_i / (P1 + P2)`, both strictly below the
/// standing component premia.
pub fn split_offer(p: f64, p1: f64, p2: f64) -> Result<(f64, f64)> {
    let total = p1 + p2;
    if !(p1 > 0.0 && p2 > 0.0 && p > 0.0) || !total.is_finite() || !p.is_finite() {
        return Err(Error::Precondition(format!(
            "split needs positive finite premia, got P={p}, P1={p1}, P2={p2}"
        )));
    }
    if p >= total {
        return Err(Error::Precondition(format!(
            "split needs P < P1 + P2, got P={p}, P1 + P2={total}"
        )));
    }
    let first = p * (p1 / total);
    let second = p - first;
    if !(first > 0.0 && second > 0.0 && first < p1 && second < p2) {
        return Err(Error::Precondition(format!(
            "underpricing P1 + P2 - P = {} is below floating-point resolution",
            total - p
        )));
    }
    Ok((first, second))
}

/// Coalition offer `(Pi, Pi1, Pi2)`: `Pi = (P + P1 + P2) / 2`,
/// `Pi2 = P2 + (P - P1 - P2) / 4`, `Pi1 = Pi - Pi2`.
pub fn coalition_offer(p: f64, p1: f64, p2: f64) -> Result<(f64, f64, f64)> {
    let total = p1 + p2;
    if total.is_nan() || total <= 0.0 || !p.is_finite() || !total.is_finite() {
        return Err(Error::Precondition(format!(
            "coalition needs P1 + P2 > 0, got P1={p1}, P2={p2}"
        )));
    }
    let gap = p - total;
    if gap <= 0.0 {
        return Err(Error::Precondition(format!(
            "coalition needs P > P1 + P2, got P={p}, P1 + P2={total}"
        )));
    }
    let premium = total + gap / 2.0;
    let reinsurance = p2 + gap / 4.0;
    let lead_net = premium - reinsurance;
    if !(premium < p && lead_net > p1 && reinsurance > p2) {
        return Err(Error::Precondition(format!(
            "overpricing P - P1 - P2 = {gap} is below floating-point resolution"
        )));
    }
    Ok((premium, lead_net, reinsurance))
}

/// The deviation implied by the current best quotes.
pub fn propose(state: &MarketState, tol: f64) -> Result<ArbitrageAction> {
    let best = state.best_premia()?;
    Ok(match classify(state, tol)? {
        Regime::Equilibrium => ArbitrageAction::NoAction,
        Regime::Underpriced => {
            let (first, second) = split_offer(best.global, best.first, best.second)?;
            ArbitrageAction::SplitOffer {
                actor: state.best_quote(RiskId::K)?.insurer_id.clone(),
                first,
                second,
            }
        }
        Regime::Overpriced => {
            let (premium, lead_net, reinsurance_premium) =
                coalition_offer(best.global, best.first, best.second)?;
            ArbitrageAction::CoalitionOffer {
                lead: state.best_quote(RiskId::K1)?.insurer_id.clone(),
                reinsurer: state.best_quote(RiskId::K2)?.insurer_id.clone(),
                premium,
                lead_net,
                reinsurance_premium,
            }
        }
    })
}

/// Inserts the action's quotes into a copy of `state` and advances the round.
pub fn apply(state: &MarketState, action: &ArbitrageAction) -> Result<MarketState> {
    let best = state.best_premia()?;
    let mut next = state.clone();
    match action {
        ArbitrageAction::NoAction => {}
        ArbitrageAction::SplitOffer {
            actor,
            first,
            second,
        } => {
            check_split(state, &best, actor, *first, *second)?;
            next.push_quote(actor.clone(), RiskId::K1, *first, QuoteOrigin::SplitOffer)?;
            next.push_quote(actor.clone(), RiskId::K2, *second, QuoteOrigin::SplitOffer)?;
        }
        ArbitrageAction::CoalitionOffer {
            lead,
            reinsurer,
            premium,
            lead_net,
            reinsurance_premium,
        } => {
            if &state.best_quote(RiskId::K1)?.insurer_id != lead
                || &state.best_quote(RiskId::K2)?.insurer_id != reinsurer
            {
                return Err(Error::StaleAction(format!(
                    "coalition {lead}/{reinsurer} no longer holds the best component quotes"
                )));
            }
            let ok = *premium < best.global
                && *lead_net > best.first
                && *reinsurance_premium > best.second
                && conserved(*lead_net + *reinsurance_premium, *premium);
            if !ok {
                return Err(Error::StaleAction(format!(
                    "coalition premia ({premium}, {lead_net}, {reinsurance_premium}) do not beat \
                     P={}, P1={}, P2={}",
                    best.global, best.first, best.second
                )));
            }
            next.push_quote(
                lead.clone(),
                RiskId::K,
                *premium,
                QuoteOrigin::CoalitionOffer,
            )?;
        }
    }
    next.advance_round();
    Ok(next)
}

fn check_split(
    state: &MarketState,
    best: &BestPremia,
    actor: &InsurerId,
    first: f64,
    second: f64,
) -> Result<()> {
    if &state.best_quote(RiskId::K)?.insurer_id != actor {
        return Err(Error::StaleAction(format!(
            "{actor} no longer holds the best global quote"
        )));
    }
    let ok = first > 0.0
        && second > 0.0
        && best.global < best.first + best.second
        && conserved(first + second, best.global);
    if !ok {
        return Err(Error::StaleAction(format!(
            "split premia ({first}, {second}) do not match P={}, P1 + P2={}",
            best.global,
            best.first + best.second
        )));
    }
    Ok(())
}

fn conserved(sum: f64, target: f64) -> bool {
    (sum - target).abs() <= CONSERVATION_TOLERANCE * target.abs().max(1.0)
}

fn check_tolerance(tol: f64) -> Result<()> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    Ok(())
}
