//! Invariants of the equilibrium iteration over generated markets.

use proptest::prelude::*;

use premia_core::{
    apply, build_market, build_market_with, classify, propose, run_equilibrium, ArbitrageAction,
    BookSetup, DiscreteDist, InsurerId, InsurerProfile, MarketState, Regime, RiskId,
};

fn dist() -> impl Strategy<Value = DiscreteDist> {
    prop::collection::vec((0u32..30, 1u32..20), 1..6)
        .prop_map(|pts| {
            let total: u32 = pts.iter().map(|p| p.1).sum();
            DiscreteDist::from_points(
                pts.into_iter()
                    .map(|(x, w)| (x as f64 * 0.5, w as f64 / total as f64)),
            )
            .unwrap()
        })
        .prop_filter("zero-premium risk", |d| d.max_loss() > 0.0)
}

fn insurers() -> impl Strategy<Value = Vec<InsurerProfile>> {
    prop::collection::vec((0.2f64..20.0, 0.0f64..0.4, 0.0f64..1.0), 1..5).prop_map(|specs| {
        specs
            .into_iter()
            .enumerate()
            .map(|(i, (rho, loading, admin))| {
                InsurerProfile::new(format!("I{i}"), rho, loading, admin).unwrap()
            })
            .collect()
    })
}

fn priced(p: f64, p1: f64, p2: f64) -> MarketState {
    let mut setup = BookSetup::default();
    for (risk, premium) in [(RiskId::K, p), (RiskId::K1, p1), (RiskId::K2, p2)] {
        setup
            .overrides
            .insert(risk, vec![(InsurerId::new("A"), premium)]);
    }
    build_market_with(
        vec![InsurerProfile::new("A", 1.0, 0.0, 0.0).unwrap()],
        DiscreteDist::bernoulli(0.5, 1.0).unwrap(),
        DiscreteDist::bernoulli(0.5, 2.0).unwrap(),
        &setup,
    )
    .unwrap()
}

fn termination_bound(delta0: f64, tol: f64) -> u64 {
    1 + (delta0.abs().max(tol) / tol).log2().ceil() as u64
}

proptest! {
    #[test]
    fn generated_markets_converge_within_bound(
        ins in insurers(), d1 in dist(), d2 in dist(), tol_exp in 3i32..10
    ) {
        let tol = 10f64.powi(-tol_exp);
        let state = build_market(ins, d1, d2).unwrap();
        let delta0 = state.mispricing().unwrap();
        let report = run_equilibrium(state, tol, 200, None).unwrap();
        prop_assert!(report.converged);
        prop_assert!(report.final_record().delta.abs() <= tol);
        prop_assert!(report.rounds_used <= termination_bound(delta0, tol));
        prop_assert_eq!(report.trace.len() as u64, report.rounds_used + 1);
        prop_assert!(report.final_state.composition_holds());
    }

    #[test]
    fn zero_markup_markets_start_additive(rhos in prop::collection::vec(0.2f64..20.0, 1..5), d1 in dist(), d2 in dist()) {
        let ins = rhos
            .iter()
            .enumerate()
            .map(|(i, &r)| InsurerProfile::new(format!("I{i}"), r, 0.0, 0.0).unwrap())
            .collect();
        let state = build_market(ins, d1, d2).unwrap();
        prop_assert!(state.mispricing().unwrap().abs() <= 1e-9);
    }

    #[test]
    fn overpriced_rounds_halve_the_gap(p1 in 0.1f64..50.0, p2 in 0.1f64..50.0, gap in 0.01f64..50.0) {
        let report = run_equilibrium(priced(p1 + p2 + gap, p1, p2), 1e-6, 200, None).unwrap();
        for pair in report.trace.windows(2) {
            let is_coalition = matches!(pair[0].action, ArbitrageAction::CoalitionOffer { .. });
            prop_assert!(is_coalition);
            prop_assert!((pair[1].delta - pair[0].delta / 2.0).abs() <= 1e-12);
            prop_assert_eq!(pair[1].first, pair[0].first);
            prop_assert_eq!(pair[1].second, pair[0].second);
        }
    }

    #[test]
    fn underpriced_start_needs_one_split(p1 in 0.1f64..50.0, p2 in 0.1f64..50.0, frac in 0.01f64..0.99) {
        let p = frac * (p1 + p2);
        let report = run_equilibrium(priced(p, p1, p2), 1e-9, 200, None).unwrap();
        prop_assert!(report.converged);
        prop_assert_eq!(report.rounds_used, 1);
        let (before, after) = (&report.trace[0], &report.trace[1]);
        prop_assert!(after.delta >= before.delta);
        prop_assert!(after.delta.abs() <= 1e-9);
        prop_assert_eq!(after.global, p);
    }

    #[test]
    fn books_only_grow(ins in insurers(), d1 in dist(), d2 in dist()) {
        let mut state = build_market(ins, d1, d2).unwrap();
        for _ in 0..20 {
            let action = propose(&state, 1e-9).unwrap();
            let next = apply(&state, &action).unwrap();
            for r in RiskId::ALL {
                prop_assert!(next.book(r).starts_with(state.book(r)));
                let best = next.best_quote(r).unwrap().premium;
                prop_assert!(next.book(r).iter().all(|q| best <= q.premium));
            }
            prop_assert_eq!(next.round(), state.round() + 1);
            if classify(&state, 1e-9).unwrap() == Regime::Equilibrium {
                break;
            }
            state = next;
        }
    }
}
