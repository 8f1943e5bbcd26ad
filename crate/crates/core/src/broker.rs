//! The power broker: price formulation, SLA allocation, feasibility
//! enforcement with reimbursement, and per-step settlement.
//!
//! The broker is a monopolist. Each trading cycle it posts one unit price per
//! catalog duration. Willing loads reply with quantity vectors and are served
//! first-come in a seeded-random order; a bid is granted only if the total
//! reserved power stays within the instantaneous supply `P_re + P_grid`.
//! When supply later drops below the reserved total, contracts are terminated
//! most-recently-signed-first and the affected energy is refunded at the
//! current supply cost.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::neuro::{self, Genome, Topology};
use crate::scenario::{NormParams, PricingParams, SlaCatalog};

/// Unit prices in €/kWh, one per catalog duration.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn from_vec(prices: Vec<f64>) -> Self {
        debug_assert!(prices.iter().all(|p| p.is_finite() && *p >= 0.0));
        Self(prices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Demanded power in watts, one entry per catalog duration; at most one entry
/// is nonzero under the best-fit load policy.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityVector(Vec<f64>);

impl QuantityVector {
    pub fn zero(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn single(len: usize, k: usize, power_w: f64) -> Self {
        let mut v = vec![0.0; len];
        v[k] = power_w;
        Self(v)
    }

    /// The demanded `(catalog index, power)` entry, if any.
    pub fn demand(&self) -> Option<(usize, f64)> {
        self.0.iter().position(|&p| p > 0.0).map(|k| (k, self.0[k]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A signed power-provisioning reservation.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaContract {
    pub id: u64,
    /// Index of the owning load agent.
    pub load: usize,
    /// Reserved power in watts.
    pub power_w: f64,
    /// Full agreed duration in seconds.
    pub duration_s: u32,
    /// Unit price in €/kWh at which the reservation is billed.
    pub unit_price: f64,
    /// Second at which the contract was signed.
    pub signed_t: u64,
    /// Seconds of provisioning still owed.
    pub remaining_s: u64,
}

/// The broker's book of active contracts.
#[derive(Debug, Clone, Default)]
pub struct SlaBook {
    active: Vec<SlaContract>,
    next_id: u64,
}

impl SlaBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn active(&self) -> &[SlaContract] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Total reserved power, recomputed from the active contracts so the
    /// committed-power identity holds by construction. The `+ 0.0` folds the
    /// empty-sum negative zero into plain zero for stable CSV output.
    pub fn committed_w(&self) -> f64 {
        self.active.iter().map(|c| c.power_w).sum::<f64>() + 0.0
    }

    /// An active contract of `load` reserving at least `power_w`, if any.
    pub fn covering(&self, load: usize, power_w: f64) -> Option<&SlaContract> {
        self.active.iter().find(|c| c.load == load && c.power_w >= power_w)
    }

    fn sign(&mut self, load: usize, power_w: f64, duration_s: u32, unit_price: f64, t: u64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.active.push(SlaContract {
            id,
            load,
            power_w,
            duration_s,
            unit_price,
            signed_t: t,
            remaining_s: duration_s as u64,
        });
        id
    }
}

/// Market context of one trading cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyContext {
    /// Instantaneous renewable power in watts.
    pub p_re_w: f64,
    /// Instantaneous grid plan power in watts.
    pub p_grid_w: f64,
    /// Feed-in tariff in €/kWh.
    pub fit: f64,
    /// Grid energy tariff in €/kWh.
    pub get: f64,
    pub second_of_day: u32,
    /// 1-based ordinal day, folded into [1, 365].
    pub day_of_year: u32,
}

impl SupplyContext {
    pub fn supply_w(&self) -> f64 {
        self.p_re_w + self.p_grid_w
    }
}

/// Supply cost in €/kWh of serving `p_s_w` watts when `p_re_w` watts of
/// renewable power are available: the feed-in tariff while renewables cover
/// the demand, otherwise the energy-weighted blend of both sources.
pub fn base_price(p_s_w: f64, p_re_w: f64, fit: f64, get: f64) -> f64 {
    if p_s_w <= p_re_w {
        fit
    } else {
        (p_re_w * fit + (p_s_w - p_re_w) * get) / p_s_w
    }
}

/// How the broker formulates its price vector.
#[derive(Debug, Clone)]
pub enum BrokerPolicy {
    /// Same price for every duration.
    Optimistic,
    /// Price grows linearly with duration (capped), making long reservations
    /// expensive.
    Pessimistic,
    /// Prices decoded from a fixed-topology neural network.
    Neural { topology: Topology, genome: Genome },
}

impl BrokerPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            BrokerPolicy::Optimistic => "optimistic",
            BrokerPolicy::Pessimistic => "pessimistic",
            BrokerPolicy::Neural { .. } => "neural",
        }
    }
}

/// Post the price vector for this cycle.
///
/// Rule-based policies quote the supply cost of one reference marginal unit
/// on top of the committed power, which keeps the vector independent of any
/// individual bid; the neural policy reads the market context through its
/// input encoding.
pub fn price_vector(
    policy: &BrokerPolicy,
    ctx: &SupplyContext,
    committed_w: f64,
    catalog: &SlaCatalog,
    pricing: &PricingParams,
    norms: &NormParams,
) -> PriceVector {
    match policy {
        BrokerPolicy::Optimistic => {
            let p0 = base_price(committed_w + pricing.reference_increment_w, ctx.p_re_w, ctx.fit, ctx.get);
            PriceVector::from_vec(vec![p0; catalog.len()])
        }
        BrokerPolicy::Pessimistic => {
            let p0 = base_price(committed_w + pricing.reference_increment_w, ctx.p_re_w, ctx.fit, ctx.get);
            let d_min = catalog.durations[0] as f64;
            PriceVector::from_vec(
                catalog
                    .durations
                    .iter()
                    .map(|&d| (p0 * d as f64 / d_min).min(pricing.pessimistic_cap))
                    .collect(),
            )
        }
        BrokerPolicy::Neural { topology, genome } => {
            let input = neuro::encode_input(ctx, norms);
            let out = neuro::forward(genome, topology, &input.to_vec());
            neuro::decode_prices(&out, norms.price_norm)
        }
    }
}

/// Outcome of one allocation round.
#[derive(Debug, Clone)]
pub struct AllocationOutcome {
    /// Contract ids granted this cycle, in processing order.
    pub granted: Vec<u64>,
    /// Load indices whose bids were rejected for lack of supply.
    pub rejected: Vec<usize>,
}

/// Process this cycle's bids in seeded-random order.
///
/// A bid is granted iff the committed power plus its demand still fits under
/// the instantaneous supply; granted bids become contracts at the posted unit
/// price for their duration.
pub fn allocate<R: Rng>(
    book: &mut SlaBook,
    bids: &[(usize, QuantityVector)],
    prices: &PriceVector,
    ctx: &SupplyContext,
    catalog: &SlaCatalog,
    t: u64,
    rng: &mut R,
) -> AllocationOutcome {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.shuffle(rng);
    let supply = ctx.supply_w();
    let mut granted = Vec::new();
    let mut rejected = Vec::new();
    for i in order {
        let (load, ref qv) = bids[i];
        let Some((k, power_w)) = qv.demand() else {
            rejected.push(load);
            continue;
        };
        if book.committed_w() + power_w <= supply {
            let id = book.sign(load, power_w, catalog.durations[k], prices.get(k), t);
            granted.push(id);
        } else {
            rejected.push(load);
        }
    }
    AllocationOutcome { granted, rejected }
}

/// Result of a feasibility enforcement pass.
#[derive(Debug, Clone, Default)]
pub struct EnforceOutcome {
    /// Contracts terminated this cycle, most recent first, with the
    /// reimbursement owed for each.
    pub terminated: Vec<(SlaContract, f64)>,
    pub reimbursement_total: f64,
}

/// Terminate contracts most-recently-signed-first until the committed power
/// fits under the current supply.
///
/// Each terminated contract is refunded the supply cost of its remaining
/// energy, evaluated at the committed power at the instant of termination.
pub fn enforce(book: &mut SlaBook, ctx: &SupplyContext) -> EnforceOutcome {
    let supply = ctx.supply_w();
    let mut outcome = EnforceOutcome::default();
    while book.committed_w() > supply {
        let committed = book.committed_w();
        // Most recent signature = highest id.
        let idx = book
            .active
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| c.id)
            .map(|(i, _)| i)
            .expect("committed > supply >= 0 implies a non-empty book");
        let contract = book.active.swap_remove(idx);
        let price = base_price(committed, ctx.p_re_w, ctx.fit, ctx.get);
        let refund = contract.power_w / 1000.0 * contract.remaining_s as f64 / 3600.0 * price;
        outcome.reimbursement_total += refund;
        outcome.terminated.push((contract, refund));
    }
    outcome
}

/// Money and power flows of one settled trading cycle.
#[derive(Debug, Clone, Default)]
pub struct StepLedger {
    pub t: u64,
    pub p_re_w: f64,
    pub p_grid_w: f64,
    /// Reserved power after this cycle's allocation.
    pub committed_w: f64,
    /// Power actually drawn by running loads.
    pub consumed_w: f64,
    pub grid_drawn_w: f64,
    pub fed_in_w: f64,
    pub income_ugrid: f64,
    pub income_feedin: f64,
    pub cost_supply: f64,
    pub cost_reimbursement: f64,
    pub n_contracts: usize,
}

impl StepLedger {
    /// Profit contribution of this step.
    pub fn profit(&self) -> f64 {
        (self.income_ugrid + self.income_feedin) - (self.cost_supply + self.cost_reimbursement)
    }

    /// Header of the ledger CSV export.
    pub const CSV_HEADER: &'static str =
        "t,P_re,P_grid,committed,income_ugrid,income_feedin,cost_supply,cost_reimb,n_contracts";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.p_re_w,
            self.p_grid_w,
            self.committed_w,
            self.income_ugrid,
            self.income_feedin,
            self.cost_supply,
            self.cost_reimbursement,
            self.n_contracts
        )
    }
}

/// Settle one cycle of `dt` seconds: bill reservations, attribute consumed
/// energy (PV first, grid for the residual), credit surplus feed-in, and
/// advance contract clocks, dropping the expired ones.
///
/// Returns the ledger row and the contracts that expired this cycle.
pub fn settle_step(
    book: &mut SlaBook,
    ctx: &SupplyContext,
    consumed_w: f64,
    t: u64,
    dt: u64,
) -> (StepLedger, Vec<SlaContract>) {
    let hours = dt as f64 / 3600.0;
    let kwh = |watts: f64| watts / 1000.0 * hours;

    let income_ugrid: f64 =
        book.active.iter().map(|c| c.power_w / 1000.0 * hours * c.unit_price).sum::<f64>() + 0.0;

    let consumed_pv = consumed_w.min(ctx.p_re_w);
    let grid_drawn = consumed_w - consumed_pv;
    let fed_in = ctx.p_re_w - consumed_pv;
    let cost_supply = kwh(grid_drawn) * ctx.get + kwh(consumed_pv) * ctx.fit;
    let income_feedin = kwh(fed_in) * ctx.fit;

    let ledger = StepLedger {
        t,
        p_re_w: ctx.p_re_w,
        p_grid_w: ctx.p_grid_w,
        committed_w: book.committed_w(),
        consumed_w,
        grid_drawn_w: grid_drawn,
        fed_in_w: fed_in,
        income_ugrid,
        income_feedin,
        cost_supply,
        cost_reimbursement: 0.0,
        n_contracts: book.len(),
    };

    let mut expired = Vec::new();
    let mut i = 0;
    while i < book.active.len() {
        let c = &mut book.active[i];
        c.remaining_s = c.remaining_s.saturating_sub(dt);
        if c.remaining_s == 0 {
            expired.push(book.active.remove(i));
        } else {
            i += 1;
        }
    }
    (ledger, expired)
}
