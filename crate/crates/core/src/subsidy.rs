//! Supplier/buyer split of the market, the inverse supply of spilled
//! knowledge and the subsidized profit under a negative knowledge price.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::market::{CostModel, EffortProfile, Market};

pub const DEFAULT_BASE_PRICE: f64 = 9.0;

/// Inverse supply `P(q) = base + a/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupplyCurve {
    pub base_price: f64,
    pub slope_coeff: f64,
}

impl Default for SupplyCurve {
    fn default() -> Self {
        SupplyCurve {
            base_price: DEFAULT_BASE_PRICE,
            slope_coeff: 0.0,
        }
    }
}

impl SupplyCurve {
    pub fn new(base_price: f64, slope_coeff: f64) -> Result<Self> {
        let c = SupplyCurve {
            base_price,
            slope_coeff,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_price.is_finite() || !self.slope_coeff.is_finite() {
            return Err(ModelError::validation(
                "supply",
                "base_price and slope_coeff must be finite",
            ));
        }
        Ok(())
    }
}

pub fn inverse_supply_price(curve: &SupplyCurve, q_supplied: f64) -> Result<f64> {
    if !(q_supplied > 0.0) {
        return Err(ModelError::Domain(format!(
            "supplied quantity must be > 0, got {q_supplied}"
        )));
    }
    Ok(curve.base_price + curve.slope_coeff / q_supplied)
}

/// Price in the perfectly elastic limit `q → ∞`, for any slope.
pub fn limit_price(curve: &SupplyCurve) -> f64 {
    curve.base_price
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketSplit {
    pub suppliers: Vec<usize>,
    pub buyers: Vec<usize>,
}

/// First half of the firms supply, second half buy.
pub fn split_market(n: usize) -> Result<MarketSplit> {
    let identity: Vec<usize> = (0..n).collect();
    split_market_with(n, &identity)
}

/// Split after relabelling firms by `permutation`: position `p` holds firm
/// `permutation[p]`.
pub fn split_market_with(n: usize, permutation: &[usize]) -> Result<MarketSplit> {
    if n == 0 {
        return Err(ModelError::Domain("market has no firms".into()));
    }
    if !n.is_multiple_of(2) {
        return Err(ModelError::OddMarket { n });
    }
    if permutation.len() != n {
        return Err(ModelError::validation(
            "permutation",
            format!("length {} for {n} firms", permutation.len()),
        ));
    }
    let mut seen = vec![false; n];
    for &p in permutation {
        if p >= n || seen[p] {
            return Err(ModelError::validation("permutation", "not a permutation of 0..n"));
        }
        seen[p] = true;
    }
    Ok(MarketSplit {
        suppliers: permutation[..n / 2].to_vec(),
        buyers: permutation[n / 2..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsidizedProfit {
    pub profit: f64,
    pub share: f64,
    /// Magnitude of the cost term, paid on the firm's behalf.
    pub subsidy: f64,
}

/// Profit `s_i − p_i·x_i/(γ_i·r_i·k_i)` evaluated with the signed `r_i < 0`,
/// so the cost term enters with a positive sign.
pub fn subsidized_profit(
    i: usize,
    x: &EffortProfile,
    market: &Market,
    effort_price: f64,
    knowledge_price: f64,
    efficiency: f64,
) -> Result<SubsidizedProfit> {
    if !(knowledge_price < 0.0) {
        return Err(ModelError::SignContract { r: knowledge_price });
    }
    market.check_index(i)?;
    let model = CostModel::PricedNoUnit {
        effort_price,
        knowledge_price,
    };
    model.validate()?;
    let share = market.shares(x)?[i];
    let k = market.knowledge(x)?[i];
    let params = crate::market::FirmParams {
        knowledge_efficiency: efficiency,
        ..*market.firm(i)
    };
    let cost = model.cost(&params, x[i], k)?;
    Ok(SubsidizedProfit {
        profit: share - cost,
        share,
        subsidy: cost.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsidyFlow {
    pub supplier: usize,
    pub buyer: usize,
    pub quantity: f64,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsidyFlowReport {
    pub unit_price: f64,
    pub flows: Vec<SubsidyFlow>,
    /// Amount paid by each supplier, in split order.
    pub supplier_payments: Vec<f64>,
    /// Amount received by each buyer, in split order.
    pub buyer_receipts: Vec<f64>,
    pub supplier_total: f64,
    pub buyer_total: f64,
}

impl SubsidyFlowReport {
    pub fn conserved(&self) -> bool {
        self.supplier_total == self.buyer_total
    }
}

/// Each buyer receives `limit_price × quantity`, paid by the supplier in the
/// same position of the split.
pub fn subsidy_flow_report(
    split: &MarketSplit,
    buyer_quantities: &[f64],
    curve: &SupplyCurve,
) -> Result<SubsidyFlowReport> {
    if buyer_quantities.len() != split.buyers.len() {
        return Err(ModelError::validation(
            "quantities",
            format!(
                "{} quantities for {} buyers",
                buyer_quantities.len(),
                split.buyers.len()
            ),
        ));
    }
    if let Some(q) = buyer_quantities.iter().find(|q| !(**q >= 0.0) || !q.is_finite()) {
        return Err(ModelError::Domain(format!("buyer quantity must be >= 0, got {q}")));
    }
    let unit_price = limit_price(curve);
    let flows: Vec<SubsidyFlow> = split
        .suppliers
        .iter()
        .zip(&split.buyers)
        .zip(buyer_quantities)
        .map(|((&supplier, &buyer), &quantity)| SubsidyFlow {
            supplier,
            buyer,
            quantity,
            amount: unit_price * quantity,
        })
        .collect();
    let supplier_payments: Vec<f64> = split
        .suppliers
        .iter()
        .map(|s| flows.iter().filter(|f| f.supplier == *s).map(|f| f.amount).sum())
        .collect();
    let buyer_receipts: Vec<f64> = split
        .buyers
        .iter()
        .map(|b| flows.iter().filter(|f| f.buyer == *b).map(|f| f.amount).sum())
        .collect();
    Ok(SubsidyFlowReport {
        unit_price,
        supplier_total: supplier_payments.iter().sum(),
        buyer_total: buyer_receipts.iter().sum(),
        supplier_payments,
        buyer_receipts,
        flows,
    })
}
