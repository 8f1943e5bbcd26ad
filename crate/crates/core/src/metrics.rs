//! Evaluation metrics computed from a run's ledger and event logs: peak-to-
//! average ratio of demand, service availability (MTBF/MTTR), system
//! reactivity, and the broker's economic profit with its four components.

use serde::Serialize;

use crate::broker::StepLedger;
use crate::{Error, Result};

/// Peak-to-average ratio of a demand series.
///
/// Returns 1.0 for an all-zero series (idle grid convention) and an error for
/// an empty one. For a non-negative series a zero mean with a nonzero peak is
/// impossible, so the result is always finite.
pub fn par(demand_w: &[f64]) -> Result<f64> {
    if demand_w.is_empty() {
        return Err(Error::validation("demand", "cannot compute PAR of an empty series"));
    }
    let max = demand_w.iter().cloned().fold(f64::MIN, f64::max);
    let mean = demand_w.iter().sum::<f64>() / demand_w.len() as f64;
    if mean == 0.0 {
        debug_assert!(max <= 0.0);
        return Ok(1.0);
    }
    Ok(max / mean)
}

/// Availability figures derived from pooled uptime/downtime segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Availability {
    /// Mean uptime segment in seconds.
    pub mtbf_s: f64,
    /// Mean downtime segment in seconds.
    pub mttr_s: f64,
    /// `MTBF / (MTBF + MTTR)`; 1.0 when nothing ever failed.
    pub availability: f64,
    pub unavailability: f64,
    /// `1 / MTBF` when MTBF > 0, else 0.
    pub failure_rate: f64,
}

/// Compute MTBF, MTTR, availability and unavailability from uptime and
/// downtime segment lengths (seconds), pooled over all loads.
pub fn availability(up_segments: &[u64], down_segments: &[u64]) -> Availability {
    let mean = |xs: &[u64]| -> f64 {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
        }
    };
    let mtbf = mean(up_segments);
    let mttr = mean(down_segments);
    let a = if down_segments.is_empty() || mtbf + mttr == 0.0 {
        1.0
    } else {
        mtbf / (mtbf + mttr)
    };
    Availability {
        mtbf_s: mtbf,
        mttr_s: mttr,
        availability: a,
        unavailability: 1.0 - a,
        failure_rate: if mtbf > 0.0 { 1.0 / mtbf } else { 0.0 },
    }
}

/// Reactivity `R = CBP / (CBP + CNBP)`; 1.0 when the load never wanted power
/// it could not immediately obtain.
pub fn reactivity(cbp: u64, cnbp: u64) -> f64 {
    if cbp + cnbp == 0 {
        1.0
    } else {
        cbp as f64 / (cbp + cnbp) as f64
    }
}

/// Profit and its four components, summed over a ledger.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ProfitBreakdown {
    pub profit: f64,
    pub income_ugrid: f64,
    pub income_feedin: f64,
    pub cost_supply: f64,
    pub cost_reimbursement: f64,
}

/// Column sums of the step ledger combined into the overall profit
/// `(Π_uGrid + Π_feedin) − (C_supply + C_reimbursement)`.
pub fn profit(ledger: &[StepLedger]) -> ProfitBreakdown {
    let mut b = ProfitBreakdown::default();
    for row in ledger {
        b.income_ugrid += row.income_ugrid;
        b.income_feedin += row.income_feedin;
        b.cost_supply += row.cost_supply;
        b.cost_reimbursement += row.cost_reimbursement;
    }
    b.profit = (b.income_ugrid + b.income_feedin) - (b.cost_supply + b.cost_reimbursement);
    b
}

/// Full per-run metrics report.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub policy: String,
    pub seed: u64,
    /// Peak-to-average ratio of consumed power; `None` for an empty run.
    pub par: Option<f64>,
    pub mtbf_s: f64,
    pub mttr_s: f64,
    pub availability: f64,
    pub unavailability: f64,
    pub failure_rate: f64,
    pub reactivity: f64,
    pub cbp: u64,
    pub cnbp: u64,
    pub profit: f64,
    pub income_ugrid: f64,
    pub income_feedin: f64,
    pub cost_supply: f64,
    pub cost_reimbursement: f64,
    /// Σ interruption severity over all interruption events.
    pub discomfort: f64,
    pub interruptions: u64,
    pub abandonments: u64,
    pub completions: u64,
    pub contracts_signed: u64,
    pub contracts_terminated: u64,
    /// Contracts granted with the unitary (1 s) duration.
    pub unit_contracts: u64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "policy,seed,par,mtbf_s,mttr_s,availability,\
unavailability,failure_rate,reactivity,cbp,cnbp,profit,income_ugrid,income_feedin,\
cost_supply,cost_reimbursement,discomfort,interruptions,abandonments,completions,\
contracts_signed,contracts_terminated,unit_contracts";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.seed,
            self.par.map(|p| p.to_string()).unwrap_or_else(|| "nan".into()),
            self.mtbf_s,
            self.mttr_s,
            self.availability,
            self.unavailability,
            self.failure_rate,
            self.reactivity,
            self.cbp,
            self.cnbp,
            self.profit,
            self.income_ugrid,
            self.income_feedin,
            self.cost_supply,
            self.cost_reimbursement,
            self.discomfort,
            self.interruptions,
            self.abandonments,
            self.completions,
            self.contracts_signed,
            self.contracts_terminated,
            self.unit_contracts
        )
    }

    /// Human-readable multi-line summary.
    pub fn pretty(&self) -> String {
        let par = self.par.map(|p| format!("{p:.3}")).unwrap_or_else(|| "n/a".into());
        let mut s = String::new();
        let mut line = |text: String| {
            s.push_str(&text);
            s.push('\n');
        };
        line(format!("policy             {}", self.policy));
        line(format!("seed               {}", self.seed));
        line(format!("PAR                {par}"));
        line(format!("MTBF               {:.1} s", self.mtbf_s));
        line(format!("MTTR               {:.1} s", self.mttr_s));
        line(format!("availability       {:.4}", self.availability));
        line(format!(
            "reactivity         {:.4}  (CBP {}, CNBP {})",
            self.reactivity, self.cbp, self.cnbp
        ));
        line(format!("profit             {:.6} EUR", self.profit));
        line(format!("  income uGrid     {:.6} EUR", self.income_ugrid));
        line(format!("  income feed-in   {:.6} EUR", self.income_feedin));
        line(format!("  cost supply      {:.6} EUR", self.cost_supply));
        line(format!("  cost reimburse   {:.6} EUR", self.cost_reimbursement));
        line(format!("discomfort         {:.1}", self.discomfort));
        line(format!(
            "contracts          {} signed, {} terminated, {} unit-duration",
            self.contracts_signed, self.contracts_terminated, self.unit_contracts
        ));
        line(format!(
            "operations         {} completed, {} abandoned, {} interruptions",
            self.completions, self.abandonments, self.interruptions
        ));
        s
    }
}
