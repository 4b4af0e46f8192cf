//! Trace CSV and report JSON emission.
//!
//! Every real number is written with 17 significant digits in scientific
//! notation so that files round-trip bit-exactly and compare byte-for-byte
//! across runs.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::arbitrage::ArbitrageAction;
use crate::equilibrium::{EquilibriumReport, TraceRecord};

pub const TRACE_HEADER: &str = "round,P,P1,P2,delta,action,pi1_or_Pi1,pi2_or_Pi2,Pi";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Real number serialized through [`format_real`].
#[derive(Debug, Clone, Copy)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        RawValue::from_string(format_real(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ActionDoc<'a> {
    SplitOffer {
        actor: &'a str,
        pi1: Real,
        pi2: Real,
    },
    CoalitionOffer {
        lead: &'a str,
        reinsurer: &'a str,
        #[serde(rename = "Pi")]
        premium: Real,
        #[serde(rename = "Pi1")]
        lead_net: Real,
        #[serde(rename = "Pi2")]
        reinsurance_premium: Real,
    },
    None,
}

impl<'a> From<&'a ArbitrageAction> for ActionDoc<'a> {
    fn from(a: &'a ArbitrageAction) -> Self {
        match a {
            ArbitrageAction::SplitOffer {
                actor,
                first,
                second,
            } => ActionDoc::SplitOffer {
                actor: actor.as_str(),
                pi1: Real(*first),
                pi2: Real(*second),
            },
            ArbitrageAction::CoalitionOffer {
                lead,
                reinsurer,
                premium,
                lead_net,
                reinsurance_premium,
            } => ActionDoc::CoalitionOffer {
                lead: lead.as_str(),
                reinsurer: reinsurer.as_str(),
                premium: Real(*premium),
                lead_net: Real(*lead_net),
                reinsurance_premium: Real(*reinsurance_premium),
            },
            ArbitrageAction::NoAction => ActionDoc::None,
        }
    }
}

#[derive(Serialize)]
struct RecordDoc<'a> {
    round: u64,
    #[serde(rename = "P")]
    global: Real,
    #[serde(rename = "P1")]
    first: Real,
    #[serde(rename = "P2")]
    second: Real,
    delta: Real,
    action: ActionDoc<'a>,
}

impl<'a> From<&'a TraceRecord> for RecordDoc<'a> {
    fn from(r: &'a TraceRecord) -> Self {
        RecordDoc {
            round: r.round,
            global: Real(r.global),
            first: Real(r.first),
            second: Real(r.second),
            delta: Real(r.delta),
            action: (&r.action).into(),
        }
    }
}

#[derive(Serialize)]
struct FinalDoc {
    #[serde(rename = "P")]
    global: Real,
    #[serde(rename = "P1")]
    first: Real,
    #[serde(rename = "P2")]
    second: Real,
    delta: Real,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    converged: bool,
    rounds_used: u64,
    tolerance: Real,
    max_rounds: u64,
    #[serde(rename = "final")]
    final_prices: FinalDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    purchase_feasible: Option<bool>,
    trace: Vec<RecordDoc<'a>>,
}

pub fn report_json(report: &EquilibriumReport) -> String {
    let last = report.final_record();
    let doc = ReportDoc {
        converged: report.converged,
        rounds_used: report.rounds_used,
        tolerance: Real(report.tolerance),
        max_rounds: report.max_rounds,
        final_prices: FinalDoc {
            global: Real(last.global),
            first: Real(last.first),
            second: Real(last.second),
            delta: Real(last.delta),
        },
        purchase_feasible: report.purchase_feasible,
        trace: report.trace.iter().map(RecordDoc::from).collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
    out.push('\n');
    out
}

pub fn trace_csv(report: &EquilibriumReport) -> String {
    let mut out = String::with_capacity(128 * (report.trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &report.trace {
        let (a, b, c) = match &r.action {
            ArbitrageAction::SplitOffer { first, second, .. } => {
                (format_real(*first), format_real(*second), String::new())
            }
            ArbitrageAction::CoalitionOffer {
                premium,
                lead_net,
                reinsurance_premium,
                ..
            } => (
                format_real(*lead_net),
                format_real(*reinsurance_premium),
                format_real(*premium),
            ),
            ArbitrageAction::NoAction => Default::default(),
        };
        let row = [
            r.round.to_string(),
            format_real(r.global),
            format_real(r.first),
            format_real(r.second),
            format_real(r.delta),
            r.action.kind().to_string(),
            a,
            b,
            c,
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_report(report: &EquilibriumReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => trace_csv(report),
        ReportFormat::Json => report_json(report),
    }
}
