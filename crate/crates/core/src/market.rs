//! The static market: firms, spillovers, knowledge accumulation, market
//! shares, the cost-function family and per-firm profit.
//!
//! Everything here is a pure function of immutable values.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::numeric::{default_step, try_central_difference};

/// Per-firm coefficients.
///
/// The attraction weight (share numerator) and the numerator coefficient of
/// the rational cost are independent parameters even though they are often
/// written with the same symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FirmParams {
    /// Weight `a_i` of the firm's effort in the attraction model.
    pub attraction_weight: f64,
    /// Efficiency `γ_i` of knowledge in lowering cost (simple and priced costs).
    pub knowledge_efficiency: f64,
    /// Effort coefficient in the rational cost numerator.
    pub cost_num_coeff: f64,
    /// Fixed term `β_i` in the rational cost numerator.
    pub cost_num_const: f64,
    /// Knowledge coefficient in the rational cost denominator.
    pub cost_den_coeff: f64,
    /// Fixed term `ζ_i` in the rational cost denominator.
    pub cost_den_const: f64,
}

impl Default for FirmParams {
    fn default() -> Self {
        FirmParams {
            attraction_weight: 1.0,
            knowledge_efficiency: 0.0,
            cost_num_coeff: 1.0,
            cost_num_const: 0.0,
            cost_den_coeff: 0.0,
            cost_den_const: 1.0,
        }
    }
}

impl FirmParams {
    /// Firm with unit attraction and the given knowledge efficiency.
    pub fn with_efficiency(knowledge_efficiency: f64) -> Self {
        FirmParams {
            knowledge_efficiency,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("attraction_weight", self.attraction_weight),
            ("knowledge_efficiency", self.knowledge_efficiency),
            ("cost_num_coeff", self.cost_num_coeff),
            ("cost_num_const", self.cost_num_const),
            ("cost_den_coeff", self.cost_den_coeff),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::validation(
                    name,
                    format!("must be a finite value >= 0, got {v}"),
                ));
            }
        }
        if !self.cost_den_const.is_finite() || self.cost_den_const <= 0.0 {
            return Err(ModelError::validation(
                "cost_den_const",
                format!(
                    "must be > 0 so the rational cost denominator stays positive, got {}",
                    self.cost_den_const
                ),
            ));
        }
        Ok(())
    }
}

/// Square matrix of spillover coefficients `θ_ij`, row-major.
///
/// Row `i` holds what firm `i` absorbs from every `j`. The diagonal is pinned
/// to 1 so that accumulated knowledge is a single matrix-vector product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpilloverMatrix {
    n: usize,
    theta: Vec<f64>,
}

impl SpilloverMatrix {
    /// Builds from rows; validates shape, the `[0, 1]` range and the unit diagonal.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::validation("theta", "matrix is empty"));
        }
        let mut theta = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::validation(
                    format!("theta[{i}]"),
                    format!("row has {} entries, expected {n}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ModelError::validation(
                        format!("theta[{i}][{j}]"),
                        format!("spillover coefficient {v} outside [0, 1]"),
                    ));
                }
                if i == j && v != 1.0 {
                    return Err(ModelError::validation(
                        format!("theta[{i}][{i}]"),
                        format!("diagonal must be exactly 1 (own effort), got {v}"),
                    ));
                }
                theta.push(v);
            }
        }
        Ok(SpilloverMatrix { n, theta })
    }

    /// Same spillover `value` between every ordered pair of distinct firms.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { value }).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// No spillovers: the identity.
    pub fn isolated(n: usize) -> Result<Self> {
        Self::uniform(n, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Nonnegative R&D efforts, one per firm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffortProfile(Vec<f64>);

impl EffortProfile {
    pub fn new(efforts: Vec<f64>) -> Result<Self> {
        for (i, &x) in efforts.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(ModelError::validation(
                    format!("x[{i}]"),
                    format!("effort must be a finite value >= 0, got {x}"),
                ));
            }
        }
        Ok(EffortProfile(efforts))
    }

    pub fn uniform(n: usize, x: f64) -> Result<Self> {
        Self::new(vec![x; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for EffortProfile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Which total-cost function a firm faces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostModel {
    /// `(c·x + β) / (γ'·k + ζ)`.
    Rational,
    /// `x / (1 + γ·k)`.
    #[default]
    Simple,
    /// `p·x / (1 + γ·r·k)`.
    Priced { effort_price: f64, knowledge_price: f64 },
    /// `p·x / (γ·r·k)`, the priced cost with the unit dropped from the denominator.
    PricedNoUnit { effort_price: f64, knowledge_price: f64 },
}

impl CostModel {
    pub fn name(&self) -> &'static str {
        match self {
            CostModel::Rational => "rational",
            CostModel::Simple => "simple",
            CostModel::Priced { .. } => "priced",
            CostModel::PricedNoUnit { .. } => "priced_no_unit",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CostModel::Rational | CostModel::Simple => Ok(()),
            CostModel::Priced {
                effort_price,
                knowledge_price,
            }
            | CostModel::PricedNoUnit {
                effort_price,
                knowledge_price,
            } => {
                if !effort_price.is_finite() || effort_price <= 0.0 {
                    return Err(ModelError::validation(
                        "effort_price",
                        format!("must be > 0, got {effort_price}"),
                    ));
                }
                if !knowledge_price.is_finite() {
                    return Err(ModelError::validation("knowledge_price", "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Splits the cost into `(numerator, denominator)` at `(x, k)`.
    fn parts(&self, params: &FirmParams, x: f64, k: f64) -> (f64, f64) {
        match *self {
            CostModel::Rational => (
                params.cost_num_coeff * x + params.cost_num_const,
                params.cost_den_coeff * k + params.cost_den_const,
            ),
            CostModel::Simple => (x, 1.0 + params.knowledge_efficiency * k),
            CostModel::Priced {
                effort_price,
                knowledge_price,
            } => (
                effort_price * x,
                1.0 + params.knowledge_efficiency * knowledge_price * k,
            ),
            CostModel::PricedNoUnit {
                effort_price,
                knowledge_price,
            } => (effort_price * x, params.knowledge_efficiency * knowledge_price * k),
        }
    }

    /// Total cost of a firm with effort `x` and accumulated knowledge `k`.
    pub fn cost(&self, params: &FirmParams, x: f64, k: f64) -> Result<f64> {
        let (num, den) = self.parts(params, x, k);
        if den == 0.0 {
            return Err(ModelError::SingularCost { denominator: den });
        }
        Ok(num / den)
    }

    /// Analytic partial derivatives `(∂C/∂x, ∂C/∂k)`.
    pub fn partials(&self, params: &FirmParams, x: f64, k: f64) -> Result<(f64, f64)> {
        let (num, den) = self.parts(params, x, k);
        if den == 0.0 {
            return Err(ModelError::SingularCost { denominator: den });
        }
        // d(num)/dx and d(den)/dk for each variant; num has no k, den has no x.
        let (dnum_dx, dden_dk) = match *self {
            CostModel::Rational => (params.cost_num_coeff, params.cost_den_coeff),
            CostModel::Simple => (1.0, params.knowledge_efficiency),
            CostModel::Priced {
                effort_price,
                knowledge_price,
            }
            | CostModel::PricedNoUnit {
                effort_price,
                knowledge_price,
            } => (effort_price, params.knowledge_efficiency * knowledge_price),
        };
        Ok((dnum_dx / den, -num * dden_dk / (den * den)))
    }
}

/// Central finite-difference estimates of the cost slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSlopes {
    pub d_effort: f64,
    pub d_knowledge: f64,
}

/// Finite-difference `(dC/dx, dC/dk)`; `step` defaults to `1e-6·max(1, |v|)`
/// per coordinate.
pub fn cost_slopes(model: &CostModel, params: &FirmParams, x: f64, k: f64, step: Option<f64>) -> Result<CostSlopes> {
    let hx = step.unwrap_or_else(|| default_step(x));
    let hk = step.unwrap_or_else(|| default_step(k));
    let d_effort = try_central_difference(|xe| model.cost(params, xe, k), x, hx)?;
    let d_knowledge = try_central_difference(|ke| model.cost(params, x, ke), k, hk)?;
    Ok(CostSlopes { d_effort, d_knowledge })
}

/// `k_i = x_i + Σ_{j≠i} θ_ij x_j`, evaluated as row `i` of `θ·x`.
pub fn accumulate_knowledge(x: &EffortProfile, theta: &SpilloverMatrix) -> Result<Vec<f64>> {
    if x.len() != theta.n() {
        return Err(ModelError::validation(
            "x",
            format!(
                "profile has {} firms but spillover matrix is {}x{}",
                x.len(),
                theta.n(),
                theta.n()
            ),
        ));
    }
    Ok((0..theta.n())
        .map(|i| {
            theta
                .row(i)
                .iter()
                .zip(x.as_slice())
                .fold(0.0, |acc, (t, xj)| acc + t * xj)
        })
        .collect())
}

/// Attraction-model shares `s_i = a_i x_i / Σ_j a_j x_j`.
pub fn market_shares(x: &EffortProfile, attraction: &[f64]) -> Result<Vec<f64>> {
    if x.len() != attraction.len() {
        return Err(ModelError::validation(
            "attraction",
            format!("{} weights for {} firms", attraction.len(), x.len()),
        ));
    }
    let weights: Vec<f64> = attraction.iter().zip(x.as_slice()).map(|(a, xi)| a * xi).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(ModelError::DegenerateMarket);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// A market: per-firm parameters plus the spillover structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Market {
    firms: Vec<FirmParams>,
    theta: SpilloverMatrix,
}

/// Per-firm quantities for one effort profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketState {
    pub efforts: Vec<f64>,
    pub knowledge: Vec<f64>,
    pub shares: Vec<f64>,
    pub costs: Vec<f64>,
    pub profits: Vec<f64>,
}

impl Market {
    /// Needs at least two firms: the share of a lone firm has no competitors.
    pub fn new(firms: Vec<FirmParams>, theta: SpilloverMatrix) -> Result<Self> {
        if firms.len() < 2 {
            return Err(ModelError::DegenerateMarket);
        }
        if firms.len() != theta.n() {
            return Err(ModelError::validation(
                "theta",
                format!("{}x{} matrix for {} firms", theta.n(), theta.n(), firms.len()),
            ));
        }
        for (i, f) in firms.iter().enumerate() {
            f.validate().map_err(|e| match e {
                ModelError::Validation { field, reason } => {
                    ModelError::validation(format!("firms[{i}].{field}"), reason)
                }
                other => other,
            })?;
        }
        Ok(Market { firms, theta })
    }

    /// `n` identical firms with a uniform spillover coefficient.
    pub fn symmetric(n: usize, params: FirmParams, spillover: f64) -> Result<Self> {
        Self::new(vec![params; n], SpilloverMatrix::uniform(n, spillover)?)
    }

    pub fn n(&self) -> usize {
        self.firms.len()
    }

    pub fn firms(&self) -> &[FirmParams] {
        &self.firms
    }

    pub fn firm(&self, i: usize) -> &FirmParams {
        &self.firms[i]
    }

    pub fn theta(&self) -> &SpilloverMatrix {
        &self.theta
    }

    pub fn attraction_weights(&self) -> Vec<f64> {
        self.firms.iter().map(|f| f.attraction_weight).collect()
    }

    /// Same market with every attraction weight multiplied by `factor`.
    pub fn scale_attraction(&self, factor: f64) -> Result<Self> {
        let firms = self
            .firms
            .iter()
            .map(|f| FirmParams {
                attraction_weight: f.attraction_weight * factor,
                ..*f
            })
            .collect();
        Self::new(firms, self.theta.clone())
    }

    fn check_profile(&self, x: &EffortProfile) -> Result<()> {
        if x.len() != self.n() {
            return Err(ModelError::validation(
                "x",
                format!("profile has {} firms, market has {}", x.len(), self.n()),
            ));
        }
        Ok(())
    }

    pub fn knowledge(&self, x: &EffortProfile) -> Result<Vec<f64>> {
        accumulate_knowledge(x, &self.theta)
    }

    pub fn shares(&self, x: &EffortProfile) -> Result<Vec<f64>> {
        self.check_profile(x)?;
        market_shares(x, &self.attraction_weights())
    }

    /// Profit `π_i = s_i − C_i(x_i, k_i)`.
    pub fn profit(&self, i: usize, x: &EffortProfile, model: &CostModel) -> Result<f64> {
        self.check_index(i)?;
        let shares = self.shares(x)?;
        let k = self.knowledge(x)?;
        Ok(shares[i] - model.cost(&self.firms[i], x[i], k[i])?)
    }

    /// Knowledge, shares, costs and profits for every firm.
    pub fn evaluate(&self, x: &EffortProfile, model: &CostModel) -> Result<MarketState> {
        let shares = self.shares(x)?;
        let knowledge = self.knowledge(x)?;
        let costs = (0..self.n())
            .map(|i| model.cost(&self.firms[i], x[i], knowledge[i]))
            .collect::<Result<Vec<_>>>()?;
        let profits = shares.iter().zip(&costs).map(|(s, c)| s - c).collect();
        Ok(MarketState {
            efforts: x.as_slice().to_vec(),
            knowledge,
            shares,
            costs,
            profits,
        })
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(ModelError::validation(
                "firm",
                format!("index {i} out of range for {} firms", self.n()),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(v: &[f64]) -> EffortProfile {
        EffortProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn knowledge_without_spillovers_is_effort() {
        let theta = SpilloverMatrix::isolated(3).unwrap();
        let x = profile(&[0.3, 1.7, 2.0]);
        assert_eq!(accumulate_knowledge(&x, &theta).unwrap(), vec![0.3, 1.7, 2.0]);
    }

    #[test]
    fn knowledge_two_firms_half_spillover() {
        let theta = SpilloverMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let k = accumulate_knowledge(&profile(&[1.0, 2.0]), &theta).unwrap();
        assert_eq!(k, vec![2.0, 2.0]);
    }

    #[test]
    fn knowledge_full_spillovers_is_total() {
        let theta = SpilloverMatrix::uniform(3, 1.0).unwrap();
        let k = accumulate_knowledge(&profile(&[1.0, 2.0, 3.0]), &theta).unwrap();
        assert_eq!(k, vec![6.0; 3]);
    }

    #[test]
    fn knowledge_dimension_mismatch() {
        let theta = SpilloverMatrix::isolated(3).unwrap();
        let err = accumulate_knowledge(&profile(&[1.0, 2.0]), &theta).unwrap_err();
        assert!(matches!(err, ModelError::Validation { .. }));
    }

    #[test]
    fn theta_validation() {
        assert!(SpilloverMatrix::from_rows(&[vec![1.0, 1.5], vec![0.0, 1.0]]).is_err());
        assert!(SpilloverMatrix::from_rows(&[vec![0.9, 0.5], vec![0.0, 1.0]]).is_err());
        assert!(SpilloverMatrix::from_rows(&[vec![1.0, 0.5]]).is_err());
        let asym = SpilloverMatrix::from_rows(&[vec![1.0, 0.2], vec![0.7, 1.0]]).unwrap();
        assert!(!asym.is_symmetric());
    }

    #[test]
    fn shares_examples() {
        let s = market_shares(&profile(&[3.0, 1.0]), &[1.0, 1.0]).unwrap();
        assert_eq!(s, vec![0.75, 0.25]);
        let s = market_shares(&profile(&[2.0; 4]), &[0.5; 4]).unwrap();
        assert!(s.iter().all(|&v| v == 0.25));
        assert_eq!(
            market_shares(&profile(&[0.0, 0.0]), &[1.0, 1.0]).unwrap_err(),
            ModelError::DegenerateMarket
        );
        assert_eq!(
            market_shares(&profile(&[1.0, 2.0]), &[0.0, 0.0]).unwrap_err(),
            ModelError::DegenerateMarket
        );
    }

    #[test]
    fn cost_examples() {
        let p = FirmParams::with_efficiency(0.0);
        assert_eq!(CostModel::Simple.cost(&p, 5.0, 3.0).unwrap(), 5.0);

        let rational = FirmParams {
            cost_num_coeff: 1.0,
            cost_num_const: 0.0,
            cost_den_coeff: 1.0,
            cost_den_const: 1.0,
            ..Default::default()
        };
        assert_eq!(CostModel::Rational.cost(&rational, 2.0, 1.0).unwrap(), 1.0);

        let priced = CostModel::Priced {
            effort_price: 1.0,
            knowledge_price: -1.0,
        };
        let err = priced.cost(&FirmParams::with_efficiency(1.0), 1.0, 1.0).unwrap_err();
        assert_eq!(err, ModelError::SingularCost { denominator: 0.0 });

        // Negative denominators are legal evaluation points.
        let c = priced.cost(&FirmParams::with_efficiency(1.0), 1.0, 2.0).unwrap();
        assert_eq!(c, -1.0);

        let nounit = CostModel::PricedNoUnit {
            effort_price: 2.0,
            knowledge_price: 0.5,
        };
        assert_eq!(nounit.cost(&FirmParams::with_efficiency(2.0), 1.0, 4.0).unwrap(), 0.5);
        assert!(nounit.cost(&FirmParams::with_efficiency(0.0), 1.0, 4.0).is_err());
    }

    #[test]
    fn slopes_of_simple_cost() {
        let p = FirmParams::with_efficiency(1.0);
        let s = cost_slopes(&CostModel::Simple, &p, 1.0, 1.0, None).unwrap();
        assert!((s.d_effort - 0.5).abs() < 1e-9);
        assert!((s.d_knowledge + 0.25).abs() < 1e-9);
        let flat = cost_slopes(&CostModel::Simple, &FirmParams::with_efficiency(0.0), 1.0, 1.0, None).unwrap();
        assert_eq!(flat.d_knowledge, 0.0);
    }

    #[test]
    fn analytic_partials_match_slopes() {
        let p = FirmParams {
            knowledge_efficiency: 0.7,
            cost_num_coeff: 1.3,
            cost_num_const: 0.4,
            cost_den_coeff: 0.9,
            cost_den_const: 2.0,
            ..Default::default()
        };
        for model in [
            CostModel::Rational,
            CostModel::Simple,
            CostModel::Priced {
                effort_price: 1.5,
                knowledge_price: 0.3,
            },
            CostModel::PricedNoUnit {
                effort_price: 1.5,
                knowledge_price: -0.3,
            },
        ] {
            let (cx, ck) = model.partials(&p, 1.2, 2.5).unwrap();
            let s = cost_slopes(&model, &p, 1.2, 2.5, None).unwrap();
            assert!((cx - s.d_effort).abs() < 1e-8, "{model:?}");
            assert!((ck - s.d_knowledge).abs() < 1e-8, "{model:?}");
        }
    }

    #[test]
    fn profit_examples() {
        let market = Market::symmetric(2, FirmParams::with_efficiency(0.0), 0.0).unwrap();
        let m = CostModel::Simple;
        let eq = profile(&[0.25, 0.25]);
        assert_eq!(market.profit(0, &eq, &m).unwrap(), 0.25);
        assert_eq!(market.profit(0, &profile(&[0.0, 0.5]), &m).unwrap(), 0.0);
        assert_eq!(market.profit(0, &profile(&[3.0, 1.0]), &m).unwrap(), -2.25);
    }

    #[test]
    fn single_firm_market_rejected() {
        let err = Market::new(vec![FirmParams::default()], SpilloverMatrix::isolated(1).unwrap()).unwrap_err();
        assert_eq!(err, ModelError::DegenerateMarket);
    }

    #[test]
    fn firm_validation_is_addressed() {
        let bad = FirmParams {
            cost_den_const: 0.0,
            ..Default::default()
        };
        let err = Market::new(vec![FirmParams::default(), bad], SpilloverMatrix::isolated(2).unwrap()).unwrap_err();
        match err {
            ModelError::Validation { field, .. } => assert_eq!(field, "firms[1].cost_den_const"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
