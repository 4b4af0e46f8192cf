//! Exponential disutility, the indifference premium it induces, and insurer quotes.

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDist;
use crate::error::{Error, Result};

/// Risk tolerance, in currency units. Always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct RiskTolerance(f64);

impl RiskTolerance {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "risk tolerance {rho} must be positive and finite"
            )));
        }
        Ok(Self(rho))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for RiskTolerance {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let rho = f64::deserialize(deserializer)?;
        RiskTolerance::new(rho).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InsurerId(pub String);

impl InsurerId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for InsurerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A pricing agent: quotes `(1 + loading) * indifference premium + admin_cost`.
#[derive(Debug, Clone, PartialEq)]
pub struct InsurerProfile {
    pub id: InsurerId,
    pub rho: RiskTolerance,
    pub loading: f64,
    pub admin_cost: f64,
}

impl InsurerProfile {
    pub fn new(id: impl Into<String>, rho: f64, loading: f64, admin_cost: f64) -> Result<Self> {
        if !loading.is_finite() || loading < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "loading {loading} must be finite and nonnegative"
            )));
        }
        if !admin_cost.is_finite() || admin_cost < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "admin cost {admin_cost} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            id: InsurerId::new(id),
            rho: RiskTolerance::new(rho)?,
            loading,
            admin_cost,
        })
    }

    pub fn quote(&self, d: &DiscreteDist) -> Result<f64> {
        quote_premium(self, d)
    }
}

/// `rho * (exp(l / rho) - 1)`.
pub fn disutility(l: f64, rho: RiskTolerance) -> Result<f64> {
    if !l.is_finite() || l < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "loss {l} must be finite and nonnegative"
        )));
    }
    let u = rho.0 * (l / rho.0).exp_m1();
    if !u.is_finite() {
        return Err(Error::Range(format!(
            "disutility overflows at l / rho = {}",
            l / rho.0
        )));
    }
    Ok(u)
}

/// Certain payment with the same disutility as the random loss `d`:
/// `rho * ln E[exp(X / rho)]`.
///
/// Evaluated as `x_max + rho * ln E[exp((X - x_max) / rho)]` so that small
/// tolerances never overflow; `x_max` is the largest loss with positive mass.
pub fn indifference_premium(d: &DiscreteDist, rho: RiskTolerance) -> Result<f64> {
    let rho = rho.0;
    let x_max = d.max_loss();
    let shifted: f64 = d
        .points()
        .filter(|&(_, p)| p > 0.0)
        .map(|(x, p)| p * ((x - x_max) / rho).exp())
        .sum();
    let premium = x_max + rho * shifted.ln();
    if !premium.is_finite() {
        return Err(Error::Range(format!(
            "indifference premium is not finite for rho = {rho}"
        )));
    }
    Ok(premium)
}

pub fn quote_premium(insurer: &InsurerProfile, d: &DiscreteDist) -> Result<f64> {
    let base = indifference_premium(d, insurer.rho)?;
    let premium = (1.0 + insurer.loading) * base + insurer.admin_cost;
    if !premium.is_finite() {
        return Err(Error::Range(format!(
            "quote from insurer {} is not finite",
            insurer.id
        )));
    }
    Ok(premium)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // ln(0.9 + 0.1 e), evaluated independently in double precision.
    const IP_BERNOULLI_01: f64 = 0.1585650787404291;

    fn rho(r: f64) -> RiskTolerance {
        RiskTolerance::new(r).unwrap()
    }

    fn two_point() -> DiscreteDist {
        DiscreteDist::from_points([(0.0, 0.9), (1.0, 0.1)]).unwrap()
    }

    #[test]
    fn risk_tolerance_must_be_positive() {
        assert!(RiskTolerance::new(0.0).is_err());
        assert!(RiskTolerance::new(-1.0).is_err());
        assert!(RiskTolerance::new(f64::INFINITY).is_err());
    }

    #[test]
    fn disutility_examples() {
        for r in [0.1, 1.0, 7.5] {
            assert_eq!(disutility(0.0, rho(r)).unwrap(), 0.0);
            let want = r * (std::f64::consts::E - 1.0);
            assert!((disutility(r, rho(r)).unwrap() - want).abs() <= 1e-14 * want);
        }
        assert!(disutility(-1.0, rho(1.0)).is_err());
        assert!(matches!(disutility(1e4, rho(1.0)), Err(Error::Range(_))));
    }

    #[test]
    fn disutility_slope_matches_analytic_derivative() {
        let h = 1e-6;
        for r in [0.5, 1.0, 3.0] {
            for l in [0.1, 0.7, 2.0] {
                let slope = (disutility(l + h, rho(r)).unwrap()
                    - disutility(l - h, rho(r)).unwrap())
                    / (2.0 * h);
                let exact = (l / r).exp();
                assert!((slope - exact).abs() <= 1e-5 * exact, "l={l} r={r}");
            }
        }
    }

    #[test]
    fn indifference_premium_examples() {
        for l in [0.0, 2.5, 40.0] {
            let d = DiscreteDist::point_mass(l).unwrap();
            assert_eq!(indifference_premium(&d, rho(0.3)).unwrap(), l);
        }
        let got = indifference_premium(&two_point(), rho(1.0)).unwrap();
        assert!((got - IP_BERNOULLI_01).abs() < 1e-15);
    }

    #[test]
    fn indifference_premium_small_tolerance_does_not_overflow() {
        let d = DiscreteDist::from_points([(0.0, 0.5), (1000.0, 0.5)]).unwrap();
        let p = indifference_premium(&d, rho(0.01)).unwrap();
        assert!((p - (1000.0 + 0.01 * 0.5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn quote_premium_examples() {
        let d = two_point();
        let plain = InsurerProfile::new("A", 2.0, 0.0, 0.0).unwrap();
        assert_eq!(
            quote_premium(&plain, &d).unwrap(),
            indifference_premium(&d, rho(2.0)).unwrap()
        );

        let loaded = InsurerProfile::new("B", 1.0, 0.1, 0.0).unwrap();
        let point = DiscreteDist::point_mass(5.0).unwrap();
        assert!((quote_premium(&loaded, &point).unwrap() - 5.5).abs() < 1e-14);

        let full = InsurerProfile::new("C", 1.0, 0.05, 0.01).unwrap();
        let want = 1.05 * IP_BERNOULLI_01 + 0.01;
        assert!((full.quote(&d).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.17649333267745057).abs() < 1e-16);
    }

    #[test]
    fn insurer_profile_rejects_negative_markups() {
        assert!(InsurerProfile::new("A", 1.0, -0.1, 0.0).is_err());
        assert!(InsurerProfile::new("A", 1.0, 0.0, -1.0).is_err());
        assert!(InsurerProfile::new("A", 0.0, 0.0, 0.0).is_err());
    }

    fn arb_dist() -> impl Strategy<Value = DiscreteDist> {
        prop::collection::vec((0u32..20, 1u32..50), 1..6).prop_map(|pts| {
            let total: u32 = pts.iter().map(|p| p.1).sum();
            DiscreteDist::from_points(
                pts.into_iter()
                    .map(|(x, w)| (x as f64, w as f64 / total as f64)),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn premium_is_additive_over_independent_risks(a in arb_dist(), b in arb_dist()) {
            let joint = a.convolve(&b).unwrap();
            for r in [0.1, 0.5, 1.0, 5.0, 10.0, 100.0] {
                let (pa, pb) = (
                    indifference_premium(&a, rho(r)).unwrap(),
                    indifference_premium(&b, rho(r)).unwrap(),
                );
                let pj = indifference_premium(&joint, rho(r)).unwrap();
                prop_assert!((pj - pa - pb).abs() <= 1e-9 * (1.0 + pa + pb), "rho={}", r);
            }
        }

        #[test]
        fn premium_dominates_expectation(d in arb_dist(), r in 0.05f64..50.0) {
            let p = indifference_premium(&d, rho(r)).unwrap();
            let e = d.expectation();
            prop_assert!(p >= e - 1e-12 * (1.0 + e));
            if !d.is_degenerate() {
                prop_assert!(p > e);
            } else {
                prop_assert!((p - e).abs() <= 1e-12 * (1.0 + e));
            }
        }

        #[test]
        fn premium_decreases_with_tolerance(d in arb_dist(), lo in 0.05f64..50.0, gap in 0.0f64..50.0) {
            let hi = lo + gap;
            let p_lo = indifference_premium(&d, rho(lo)).unwrap();
            let p_hi = indifference_premium(&d, rho(hi)).unwrap();
            prop_assert!(p_lo >= p_hi - 1e-12);
        }

        #[test]
        fn risk_neutral_limit(d in arb_dist()) {
            let p = indifference_premium(&d, rho(1e6)).unwrap();
            prop_assert!((p - d.expectation()).abs() <= 1e-3);
        }
    }
}
