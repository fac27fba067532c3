use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Functional form of the innovation production function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductionForm {
    /// `A · x^α · k^β`.
    #[default]
    CobbDouglas,
}

/// Output of innovation as a function of effort `x` and knowledge `k`.
///
/// Contract for every form: value and both marginal products are finite and
/// positive on the open positive orthant, and the function is strictly
/// increasing in each argument there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductionFunction {
    pub form: ProductionForm,
    pub scale: f64,
    pub effort_exponent: f64,
    pub knowledge_exponent: f64,
}

impl Default for ProductionFunction {
    fn default() -> Self {
        ProductionFunction {
            form: ProductionForm::CobbDouglas,
            scale: 1.0,
            effort_exponent: 0.5,
            knowledge_exponent: 0.5,
        }
    }
}

impl ProductionFunction {
    pub fn cobb_douglas(scale: f64, effort_exponent: f64, knowledge_exponent: f64) -> Result<Self> {
        let f = ProductionFunction {
            form: ProductionForm::CobbDouglas,
            scale,
            effort_exponent,
            knowledge_exponent,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(ModelError::validation(
                "scale",
                format!("must be > 0, got {}", self.scale),
            ));
        }
        for (name, e) in [
            ("effort_exponent", self.effort_exponent),
            ("knowledge_exponent", self.knowledge_exponent),
        ] {
            if !(e > 0.0 && e < 1.0) {
                return Err(ModelError::validation(name, format!("must lie in (0, 1), got {e}")));
            }
        }
        Ok(())
    }

    fn check_point(x: f64, k: f64) -> Result<()> {
        if !(x > 0.0 && k > 0.0) || !x.is_finite() || !k.is_finite() {
            return Err(ModelError::Domain(format!(
                "production needs x > 0 and k > 0, got x = {x}, k = {k}"
            )));
        }
        Ok(())
    }

    pub fn output(&self, x: f64, k: f64) -> Result<f64> {
        Self::check_point(x, k)?;
        Ok(match self.form {
            ProductionForm::CobbDouglas => self.scale * x.powf(self.effort_exponent) * k.powf(self.knowledge_exponent),
        })
    }

    /// Marginal products `(∂f/∂x, ∂f/∂k)`.
    pub fn marginals(&self, x: f64, k: f64) -> Result<(f64, f64)> {
        let q = self.output(x, k)?;
        Ok(match self.form {
            ProductionForm::CobbDouglas => (self.effort_exponent * q / x, self.knowledge_exponent * q / k),
        })
    }

    /// Effort that produces exactly `q` given knowledge `k`.
    pub fn effort_for(&self, q: f64, k: f64) -> Result<f64> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(ModelError::InfeasibleTarget { q_target: q });
        }
        Self::check_point(1.0, k)?;
        Ok(match self.form {
            ProductionForm::CobbDouglas => {
                (q / (self.scale * k.powf(self.knowledge_exponent))).powf(1.0 / self.effort_exponent)
            }
        })
    }

    /// Same function with the scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let f = ProductionFunction {
            scale: self.scale * factor,
            ..*self
        };
        f.validate()?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{central_difference, default_step};

    #[test]
    fn output_examples() {
        let f = ProductionFunction::default();
        assert_eq!(f.output(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(f.output(4.0, 9.0).unwrap(), 6.0);
        assert!(ProductionFunction::cobb_douglas(2.0, 1.0, 0.5).is_err());
        assert!(ProductionFunction::cobb_douglas(0.0, 0.5, 0.5).is_err());
        assert!(matches!(f.output(0.0, 1.0), Err(ModelError::Domain(_))));
        assert!(matches!(f.output(1.0, -1.0), Err(ModelError::Domain(_))));
    }

    #[test]
    fn marginal_examples() {
        let f = ProductionFunction::default();
        assert_eq!(f.marginals(1.0, 1.0).unwrap(), (0.5, 0.5));
        assert_eq!(f.marginals(4.0, 1.0).unwrap().0, 0.25);
    }

    #[test]
    fn marginals_match_central_difference() {
        let f = ProductionFunction::cobb_douglas(1.7, 0.3, 0.6).unwrap();
        for &(x, k) in &[(0.5, 2.0), (3.0, 0.2), (10.0, 10.0)] {
            let (fx, fk) = f.marginals(x, k).unwrap();
            let nx = central_difference(|xe| f.output(xe, k).unwrap(), x, default_step(x));
            let nk = central_difference(|ke| f.output(x, ke).unwrap(), k, default_step(k));
            assert!(((fx - nx) / fx).abs() < 1e-6);
            assert!(((fk - nk) / fk).abs() < 1e-6);
        }
    }

    #[test]
    fn effort_for_inverts_output() {
        let f = ProductionFunction::cobb_douglas(2.0, 0.4, 0.35).unwrap();
        let x = f.effort_for(3.0, 1.5).unwrap();
        assert!((f.output(x, 1.5).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            f.effort_for(0.0, 1.0),
            Err(ModelError::InfeasibleTarget { .. })
        ));
    }
}
