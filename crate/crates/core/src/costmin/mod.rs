//! Constrained cost minimization with the priced cost `p·x/(1 + γ·r·k)`
//! subject to `f(x, k) = Q`, its first-order conditions and the equilibrium
//! price triple `(p*, r*, Q*)`.
//!
//! Differential symbols are read as marginal products: `∂f/∂x ↦ f_x`,
//! `∂f/∂k ↦ f_k`, and a bare `∂k/∂x ↦ 1`.

mod knowledge_price;
mod minimizer;
mod production;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

pub use knowledge_price::{
    knowledge_price_literal, knowledge_price_nounit, knowledge_price_roots, KnowledgePriceInputs,
    KnowledgePriceSolution,
};
pub use minimizer::{grid_minimum, minimize_cost, CostMinimum, GridPoint, GridSpec, SolverOptions};
pub use production::{ProductionForm, ProductionFunction};

/// Input prices and the knowledge efficiency shared by all firms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceSystem {
    pub effort_price: f64,
    /// Any sign.
    pub knowledge_price: f64,
    pub efficiency: f64,
}

impl PriceSystem {
    pub fn new(effort_price: f64, knowledge_price: f64, efficiency: f64) -> Result<Self> {
        let prices = PriceSystem {
            effort_price,
            knowledge_price,
            efficiency,
        };
        prices.validate()?;
        Ok(prices)
    }

    /// `γ = 0` would remove `k` from the cost and leave the k-condition degenerate.
    pub fn validate(&self) -> Result<()> {
        if !(self.effort_price > 0.0) || !self.effort_price.is_finite() {
            return Err(ModelError::validation(
                "effort_price",
                format!("must be > 0, got {}", self.effort_price),
            ));
        }
        if !self.knowledge_price.is_finite() {
            return Err(ModelError::validation("knowledge_price", "must be finite"));
        }
        if !(self.efficiency > 0.0) || !self.efficiency.is_finite() {
            return Err(ModelError::validation(
                "efficiency",
                format!(
                    "must be > 0 (gamma = 0 makes the knowledge condition degenerate), got {}",
                    self.efficiency
                ),
            ));
        }
        Ok(())
    }

    /// `γ·r`.
    pub fn gamma_r(&self) -> f64 {
        self.efficiency * self.knowledge_price
    }

    /// `1 + γ·r·k`, erroring on an exact zero.
    pub fn denominator(&self, knowledge: f64) -> Result<f64> {
        let d = 1.0 + self.gamma_r() * knowledge;
        if d == 0.0 {
            return Err(ModelError::SingularCost { denominator: d });
        }
        Ok(d)
    }

    /// Priced total cost `p·x/(1 + γ·r·k)`.
    pub fn cost(&self, effort: f64, knowledge: f64) -> Result<f64> {
        Ok(self.effort_price * effort / self.denominator(knowledge)?)
    }
}

/// Candidate `(x, k, λ)` for the Lagrangian system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangePoint {
    pub effort: f64,
    pub knowledge: f64,
    pub multiplier: f64,
}

/// Residuals of the first-order conditions at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocReport {
    /// `p/(1 + γrk) − λ·f_x`.
    pub stationarity_x: f64,
    /// `−p·x·γr/(1 + γrk)² − λ·f_k`.
    pub stationarity_k: f64,
    /// `Q − f(x, k)`.
    pub feasibility: f64,
    pub max_abs_residual: f64,
}

impl FocReport {
    pub fn is_stationary(&self, tolerance: f64) -> bool {
        self.max_abs_residual <= tolerance
    }
}

/// `Λ = p·x/(1 + γrk) − λ·f(x, k) + λ·Q`.
pub fn lagrangian(point: &LagrangePoint, prices: &PriceSystem, q_target: f64, f: &ProductionFunction) -> Result<f64> {
    let cost = prices.cost(point.effort, point.knowledge)?;
    let output = f.output(point.effort, point.knowledge)?;
    Ok(cost - point.multiplier * output + point.multiplier * q_target)
}

pub fn foc_residuals(
    point: &LagrangePoint,
    prices: &PriceSystem,
    q_target: f64,
    f: &ProductionFunction,
) -> Result<FocReport> {
    let d = prices.denominator(point.knowledge)?;
    let (fx, fk) = f.marginals(point.effort, point.knowledge)?;
    let p = prices.effort_price;
    let stationarity_x = p / d - point.multiplier * fx;
    let stationarity_k = -p * point.effort * prices.gamma_r() / (d * d) - point.multiplier * fk;
    let feasibility = q_target - f.output(point.effort, point.knowledge)?;
    let max_abs_residual = stationarity_x.abs().max(stationarity_k.abs()).max(feasibility.abs());
    Ok(FocReport {
        stationarity_x,
        stationarity_k,
        feasibility,
        max_abs_residual,
    })
}

/// Optimal effort price `p* = (1 + γ·r·k)·λ·f_x`.
pub fn effort_price_star(
    point: &LagrangePoint,
    efficiency: f64,
    knowledge_price: f64,
    f: &ProductionFunction,
) -> Result<f64> {
    let (fx, _) = f.marginals(point.effort, point.knowledge)?;
    Ok((1.0 + efficiency * knowledge_price * point.knowledge) * point.multiplier * fx)
}

/// Which closed form supplies `r*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RSource {
    /// Upper root of the k-stationarity quadratic.
    #[default]
    Quadratic,
    /// The literal closed-form expression.
    Literal,
    /// The price for the cost without the unit in its denominator.
    NoUnit,
}

impl RSource {
    pub const ALL: [RSource; 3] = [RSource::Quadratic, RSource::Literal, RSource::NoUnit];

    pub fn name(&self) -> &'static str {
        match self {
            RSource::Quadratic => "quadratic",
            RSource::Literal => "literal",
            RSource::NoUnit => "no_unit",
        }
    }
}

/// The equilibrium triple together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashTriple {
    pub source: RSource,
    pub p_star: f64,
    pub r_star: f64,
    pub q_star: f64,
    /// True when `1 + γ·r*·k < 0`, i.e. `p*` has the opposite sign of `λ·f_x`.
    pub negative_denominator: bool,
    pub knowledge_price: KnowledgePriceSolution,
}

/// `(p*, r*, Q*)` at `point` with `r*` taken from `source`.
pub fn nash_triple(
    point: &LagrangePoint,
    effort_price: f64,
    efficiency: f64,
    f: &ProductionFunction,
    source: RSource,
) -> Result<NashTriple> {
    let q_star = f.output(point.effort, point.knowledge)?;
    let (_, fk) = f.marginals(point.effort, point.knowledge)?;
    let inputs = KnowledgePriceInputs {
        effort: point.effort,
        knowledge: point.knowledge,
        multiplier: point.multiplier,
        marginal_knowledge: fk,
        effort_price,
        efficiency,
    };
    let solution = knowledge_price_roots(&inputs)?;
    let r_star = match source {
        RSource::Quadratic => solution.r_star_quadratic,
        RSource::Literal => solution.r_star_literal,
        RSource::NoUnit => solution.r_star_no_unit,
    };
    let p_star = effort_price_star(point, efficiency, r_star, f)?;
    Ok(NashTriple {
        source,
        p_star,
        r_star,
        q_star,
        negative_denominator: 1.0 + efficiency * r_star * point.knowledge < 0.0,
        knowledge_price: solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_point(multiplier: f64) -> LagrangePoint {
        LagrangePoint {
            effort: 1.0,
            knowledge: 1.0,
            multiplier,
        }
    }

    #[test]
    fn zero_efficiency_rejected() {
        assert!(PriceSystem::new(1.0, 0.5, 0.0).is_err());
        assert!(PriceSystem::new(0.0, 0.5, 1.0).is_err());
        assert!(PriceSystem::new(1.0, -3.0, 1.0).is_ok());
    }

    #[test]
    fn lagrangian_examples() {
        let f = ProductionFunction::default();
        let prices = PriceSystem::new(2.0, 0.3, 1.5).unwrap();
        let pt = LagrangePoint {
            effort: 1.3,
            knowledge: 0.8,
            multiplier: 0.0,
        };
        assert_eq!(
            lagrangian(&pt, &prices, 7.0, &f).unwrap(),
            prices.cost(1.3, 0.8).unwrap()
        );

        let pt = LagrangePoint { multiplier: 3.7, ..pt };
        let q = f.output(1.3, 0.8).unwrap();
        let lag = lagrangian(&pt, &prices, q, &f).unwrap();
        assert!((lag - prices.cost(1.3, 0.8).unwrap()).abs() < 1e-15);

        // γrk = 0 via r = 0; f(1,1) = 2 with A = 2.
        let f2 = ProductionFunction::cobb_douglas(2.0, 0.5, 0.5).unwrap();
        let prices = PriceSystem::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!(lagrangian(&unit_point(1.0), &prices, 5.0, &f2).unwrap(), 4.0);
    }

    #[test]
    fn foc_flags_non_stationary_point() {
        let f = ProductionFunction::default();
        let prices = PriceSystem::new(1.0, 0.2, 1.0).unwrap();
        let rep = foc_residuals(&unit_point(0.0), &prices, 1.0, &f).unwrap();
        assert!((rep.stationarity_x - 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(rep.feasibility, 0.0);
        assert!(!rep.is_stationary(1e-8));
    }

    #[test]
    fn foc_singular() {
        let f = ProductionFunction::default();
        let prices = PriceSystem::new(1.0, -1.0, 1.0).unwrap();
        assert!(matches!(
            foc_residuals(&unit_point(1.0), &prices, 1.0, &f),
            Err(ModelError::SingularCost { .. })
        ));
    }

    #[test]
    fn effort_price_star_examples() {
        let f = ProductionFunction::default();
        // f_x = 0.5 at (1, 1)
        assert_eq!(effort_price_star(&unit_point(1.0), 1.0, 0.0, &f).unwrap(), 0.5);
        let root_upper = (-3.0 + 5f64.sqrt()) / 2.0;
        let p = effort_price_star(&unit_point(1.0), 1.0, root_upper, &f).unwrap();
        assert!((p - 0.309017).abs() < 1e-6);
        let root_lower = (-3.0 - 5f64.sqrt()) / 2.0;
        assert!(effort_price_star(&unit_point(1.0), 1.0, root_lower, &f).unwrap() < 0.0);
    }

    #[test]
    fn nash_triple_examples() {
        let f = ProductionFunction::default();
        // λ = 2, f_k = 0.5 → m = 1
        let t = nash_triple(&unit_point(2.0), 1.0, 1.0, &f, RSource::Quadratic).unwrap();
        assert_eq!(t.q_star, 1.0);
        assert!((t.r_star + 0.381966).abs() < 1e-6);
        assert!(!t.negative_denominator);
        let lit = nash_triple(&unit_point(2.0), 1.0, 1.0, &f, RSource::Literal).unwrap();
        assert_eq!(lit.r_star, -4.0);
        assert!(lit.negative_denominator && lit.p_star < 0.0);
        let nu = nash_triple(&unit_point(2.0), 1.0, 1.0, &f, RSource::NoUnit).unwrap();
        assert_eq!(nu.r_star, -1.0);
        assert_eq!(t.knowledge_price, nu.knowledge_price);
    }
}
