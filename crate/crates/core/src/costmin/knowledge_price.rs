//! The knowledge-price condition of the priced cost-minimization problem.
//!
//! Stationarity in `k` of `p·x/(1 + γ·r·k) − λ·(f(x,k) − Q)` reads
//!
//! ```text
//!   −p·x·γr / (1 + γr·k)² = λ·f_k
//! ```
//!
//! With `u = γr` and `m = λ·f_k` this is the quadratic
//! `k²·u² + (2k + p·x/m)·u + 1 = 0`. Its discriminant is `q·(4k + q)` with
//! `q = p·x/m > 0`, so both roots are real, their product is `1/k²` and their
//! sum is negative: both are negative. `u = −1/k` makes the quadratic equal to
//! `−q/k < 0`, so it separates the roots and exactly one of them keeps the
//! cost denominator `1 + u·k` positive.
//!
//! Two further closed forms are exposed for comparison: the literal
//! closed-form price `(−p·x − 2k·m − m)/(γ·m·k²)`, which is generally *not* a
//! root of the quadratic, and the price for the cost without the unit in its
//! denominator, `−p·x/(γ·m·k²)`.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Inputs of the knowledge-price condition at a candidate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnowledgePriceInputs {
    pub effort: f64,
    pub knowledge: f64,
    pub multiplier: f64,
    /// `∂f/∂k` at the point.
    pub marginal_knowledge: f64,
    pub effort_price: f64,
    pub efficiency: f64,
}

impl KnowledgePriceInputs {
    /// `m = λ·f_k`.
    pub fn marginal_value(&self) -> f64 {
        self.multiplier * self.marginal_knowledge
    }

    fn validated_marginal(&self) -> Result<f64> {
        for (name, v) in [
            ("effort", self.effort),
            ("knowledge", self.knowledge),
            ("effort_price", self.effort_price),
            ("efficiency", self.efficiency),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        let m = self.marginal_value();
        if !(m > 0.0) || !m.is_finite() {
            return Err(ModelError::NonpositiveMarginal { value: m });
        }
        Ok(m)
    }

    /// Residual of the k-stationarity condition at `u = γr`, divided by `m`:
    /// `(−p·x·u − m·(1 + u·k)²) / m`.
    pub fn residual(&self, gamma_r: f64) -> f64 {
        let m = self.marginal_value();
        let d = 1.0 + gamma_r * self.knowledge;
        (-self.effort_price * self.effort * gamma_r - m * d * d) / m
    }
}

/// Both roots of the knowledge-price quadratic plus the alternative closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnowledgePriceSolution {
    /// Larger `γr` root; keeps `1 + γr·k > 0`.
    pub root_upper: f64,
    /// Smaller `γr` root; `1 + γr·k < 0`.
    pub root_lower: f64,
    pub selected_gamma_r: f64,
    pub r_star_quadratic: f64,
    pub r_star_literal: f64,
    pub r_star_no_unit: f64,
    pub foc_residual_at_selected: f64,
    pub foc_residual_at_lower: f64,
    /// Residual of the k-condition at `γ·r_star_literal`.
    pub foc_residual_at_literal: f64,
    /// Distance in `γr` from the literal value to the nearest quadratic root.
    pub literal_vs_quadratic_gap: f64,
}

/// Solves the k-stationarity quadratic in `u = γr`.
pub fn knowledge_price_roots(inputs: &KnowledgePriceInputs) -> Result<KnowledgePriceSolution> {
    let m = inputs.validated_marginal()?;
    let k = inputs.knowledge;
    let q = inputs.effort_price * inputs.effort / m;
    let b = 2.0 * k + q;
    // b² − 4k² without cancellation.
    let disc = q * (4.0 * k + q);
    let k2 = k * k;
    // Both terms share a sign: no cancellation in the lower root. The upper
    // root follows from the product 1/k².
    let root_lower = -(b + disc.sqrt()) / (2.0 * k2);
    let root_upper = 1.0 / (k2 * root_lower);

    let literal = knowledge_price_literal(inputs)?;
    let gamma_r_literal = inputs.efficiency * literal;
    let gap = (gamma_r_literal - root_upper)
        .abs()
        .min((gamma_r_literal - root_lower).abs());

    Ok(KnowledgePriceSolution {
        root_upper,
        root_lower,
        selected_gamma_r: root_upper,
        r_star_quadratic: root_upper / inputs.efficiency,
        r_star_literal: literal,
        r_star_no_unit: knowledge_price_nounit(inputs)?,
        foc_residual_at_selected: inputs.residual(root_upper),
        foc_residual_at_lower: inputs.residual(root_lower),
        foc_residual_at_literal: inputs.residual(gamma_r_literal),
        literal_vs_quadratic_gap: gap,
    })
}

/// Literal closed form `(−p·x − 2k·m − m) / (γ·m·k²)`, reading the bare
/// differential as 1 and `λ∂f` as `m = λ·f_k`.
pub fn knowledge_price_literal(inputs: &KnowledgePriceInputs) -> Result<f64> {
    let m = inputs.validated_marginal()?;
    let k = inputs.knowledge;
    let num = -inputs.effort_price * inputs.effort - 2.0 * k * m - m;
    Ok(num / (inputs.efficiency * m * k * k))
}

/// Price for the cost `p·x/(γ·r·k)`: its k-condition gives `γr = −p·x/(m·k²)`.
pub fn knowledge_price_nounit(inputs: &KnowledgePriceInputs) -> Result<f64> {
    let m = inputs.validated_marginal()?;
    let k = inputs.knowledge;
    Ok(-inputs.effort_price * inputs.effort / (inputs.efficiency * m * k * k))
}
