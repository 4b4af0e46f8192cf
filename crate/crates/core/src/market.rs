//! Market state: the two component risks, their composition, and one quote
//! book per risk. The insured always takes the cheapest quote in each book.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDist;
use crate::error::{Error, Result};
use crate::pricing::{
    indifference_premium, quote_premium, InsurerId, InsurerProfile, RiskTolerance,
};

/// Tolerance for the composition invariant `dist(K) == dist(K1) * dist(K2)`.
pub const COMPOSITION_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskId {
    K1,
    K2,
    /// The global risk, composition of `K1` and `K2`.
    K,
}

impl RiskId {
    pub const ALL: [RiskId; 3] = [RiskId::K1, RiskId::K2, RiskId::K];

    fn index(self) -> usize {
        match self {
            RiskId::K1 => 0,
            RiskId::K2 => 1,
            RiskId::K => 2,
        }
    }
}

impl fmt::Display for RiskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RiskId::K1 => "K1",
            RiskId::K2 => "K2",
            RiskId::K => "K",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Risk {
    pub id: RiskId,
    pub dist: DiscreteDist,
}

/// Which step produced a quote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteOrigin {
    Initial,
    SplitOffer,
    CoalitionOffer,
}

/// A full-coverage offer. `seq` is the market-wide insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote {
    pub insurer_id: InsurerId,
    pub risk_id: RiskId,
    pub premium: f64,
    pub origin: QuoteOrigin,
    pub seq: u64,
}

/// Initial book adjustments applied by [`build_market_with`].
#[derive(Debug, Clone, Default)]
pub struct BookSetup {
    /// `(insurer, risk)` pairs for which the insurer does not quote.
    pub opt_outs: BTreeSet<(InsurerId, RiskId)>,
    /// Explicit books. A listed risk uses these quotes instead of generated ones.
    pub overrides: BTreeMap<RiskId, Vec<(InsurerId, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    insurers: Vec<InsurerProfile>,
    risks: [Risk; 3],
    books: [Vec<Quote>; 3],
    round: u64,
    next_seq: u64,
}

/// One generated quote per insurer per risk.
pub fn build_market(
    insurers: Vec<InsurerProfile>,
    risk1: DiscreteDist,
    risk2: DiscreteDist,
) -> Result<MarketState> {
    build_market_with(insurers, risk1, risk2, &BookSetup::default())
}

pub fn build_market_with(
    insurers: Vec<InsurerProfile>,
    risk1: DiscreteDist,
    risk2: DiscreteDist,
    setup: &BookSetup,
) -> Result<MarketState> {
    if insurers.is_empty() {
        return Err(Error::HypothesisViolation(
            "the market has no insurers".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for ins in &insurers {
        if !seen.insert(&ins.id) {
            return Err(Error::InvalidArgument(format!(
                "duplicate insurer id {}",
                ins.id
            )));
        }
    }
    for (id, risk) in &setup.opt_outs {
        if !seen.contains(id) {
            return Err(Error::InvalidArgument(format!(
                "opt-out for unknown insurer {id} on {risk}"
            )));
        }
    }

    let global = risk1.convolve(&risk2)?;
    let risks = [
        Risk {
            id: RiskId::K1,
            dist: risk1,
        },
        Risk {
            id: RiskId::K2,
            dist: risk2,
        },
        Risk {
            id: RiskId::K,
            dist: global,
        },
    ];

    let mut state = MarketState {
        insurers,
        risks,
        books: [Vec::new(), Vec::new(), Vec::new()],
        round: 0,
        next_seq: 0,
    };

    for risk_id in RiskId::ALL {
        let entries: Vec<(InsurerId, f64)> = match setup.overrides.get(&risk_id) {
            Some(explicit) => explicit.clone(),
            None => {
                let dist = &state.risks[risk_id.index()].dist;
                state
                    .insurers
                    .iter()
                    .filter(|ins| !setup.opt_outs.contains(&(ins.id.clone(), risk_id)))
                    .map(|ins| Ok((ins.id.clone(), quote_premium(ins, dist)?)))
                    .collect::<Result<_>>()?
            }
        };
        for (insurer_id, premium) in entries {
            state.push_quote(insurer_id, risk_id, premium, QuoteOrigin::Initial)?;
        }
        if state.book(risk_id).is_empty() {
            return Err(Error::HypothesisViolation(format!(
                "no coverage offered for risk {risk_id}"
            )));
        }
    }
    Ok(state)
}

impl MarketState {
    pub fn insurers(&self) -> &[InsurerProfile] {
        &self.insurers
    }

    pub fn insurer(&self, id: &InsurerId) -> Option<&InsurerProfile> {
        self.insurers.iter().find(|ins| &ins.id == id)
    }

    pub fn risk(&self, id: RiskId) -> &Risk {
        &self.risks[id.index()]
    }

    pub fn book(&self, id: RiskId) -> &[Quote] {
        &self.books[id.index()]
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub(crate) fn advance_round(&mut self) {
        self.round += 1;
    }

    /// Appends a quote. Books never shrink.
    pub(crate) fn push_quote(
        &mut self,
        insurer_id: InsurerId,
        risk_id: RiskId,
        premium: f64,
        origin: QuoteOrigin,
    ) -> Result<()> {
        if self.insurer(&insurer_id).is_none() {
            return Err(Error::InvalidArgument(format!(
                "quote on {risk_id} from unknown insurer {insurer_id}"
            )));
        }
        if !premium.is_finite() || premium <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "premium {premium} from {insurer_id} on {risk_id} must be positive"
            )));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.books[risk_id.index()].push(Quote {
            insurer_id,
            risk_id,
            premium,
            origin,
            seq,
        });
        Ok(())
    }

    /// Cheapest quote; ties go to the earliest insertion, then the smallest insurer id.
    pub fn best_quote(&self, risk_id: RiskId) -> Result<&Quote> {
        self.book(risk_id)
            .iter()
            .min_by(|a, b| {
                a.premium
                    .total_cmp(&b.premium)
                    .then(a.seq.cmp(&b.seq))
                    .then_with(|| a.insurer_id.cmp(&b.insurer_id))
            })
            .ok_or_else(|| {
                Error::HypothesisViolation(format!("empty quote book for risk {risk_id}"))
            })
    }

    /// Best premia `(P, P1, P2)`.
    pub fn best_premia(&self) -> Result<BestPremia> {
        Ok(BestPremia {
            global: self.best_quote(RiskId::K)?.premium,
            first: self.best_quote(RiskId::K1)?.premium,
            second: self.best_quote(RiskId::K2)?.premium,
        })
    }

    /// `P - (P1 + P2)`.
    pub fn mispricing(&self) -> Result<f64> {
        Ok(self.best_premia()?.mispricing())
    }

    /// Whether the insured would buy at all: the cheaper of the two coverage
    /// configurations costs no more than their own valuation of the global risk.
    pub fn purchase_feasible(&self, insured_rho: RiskTolerance) -> Result<bool> {
        let best = self.best_premia()?;
        let valuation = indifference_premium(&self.risk(RiskId::K).dist, insured_rho)?;
        Ok(best.global.min(best.first + best.second) <= valuation)
    }

    pub fn composition_holds(&self) -> bool {
        match self.risks[0].dist.convolve(&self.risks[1].dist) {
            Ok(c) => c.approx_eq(&self.risks[2].dist, COMPOSITION_TOLERANCE),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestPremia {
    /// `P`, best quote on the global risk.
    pub global: f64,
    /// `P1`.
    pub first: f64,
    /// `P2`.
    pub second: f64,
}

impl BestPremia {
    pub fn mispricing(&self) -> f64 {
        self.global - (self.first + self.second)
    }
}

pub fn best_quote(state: &MarketState, risk_id: RiskId) -> Result<&Quote> {
    state.best_quote(risk_id)
}

pub fn mispricing(state: &MarketState) -> Result<f64> {
    state.mispricing()
}

pub fn purchase_feasible(state: &MarketState, insured_rho: RiskTolerance) -> Result<bool> {
    state.purchase_feasible(insured_rho)
}
