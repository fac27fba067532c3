//! Effort-game equilibria of the share-minus-cost profit game.
//!
//! Each firm chooses its own effort `x_i ≥ 0` to maximize
//! `a_i x_i / Σ_j a_j x_j − C_i(x_i, k_i)`, where `k_i` also moves with `x_i`.
//! Equilibria are found by damped best-response iteration and checked by an
//! independent unilateral-deviation scan. The cost-minimization price triple
//! is attached per firm by [`market_nash_summary`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmin::{nash_triple, LagrangePoint, NashTriple, ProductionFunction, RSource};
use crate::error::{ModelError, Result};
use crate::market::{CostModel, EffortProfile, FirmParams, Market, MarketState};
use crate::numeric::{bisect, golden_section_max, lin_space};

/// How a profile is updated from best responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// All firms respond to the same frozen snapshot (Jacobi).
    #[default]
    Simultaneous,
    /// Firms respond in index order to the latest efforts (Gauss-Seidel).
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BestResponseOptions {
    /// Upper end of the effort search; `None` means ten times the symmetric
    /// contest effort `(n−1)/n²`.
    pub effort_bound: Option<f64>,
    pub coarse_grid_size: usize,
    /// Golden-section bracket width and the sup-norm convergence threshold.
    pub refine_tolerance: f64,
    pub max_iterations: usize,
    /// Weight on the new best response, in (0, 1].
    pub damping: f64,
    pub update: UpdateRule,
    /// Compute per-firm responses of a simultaneous sweep on the rayon pool.
    pub parallel: bool,
}

impl Default for BestResponseOptions {
    fn default() -> Self {
        BestResponseOptions {
            effort_bound: None,
            coarse_grid_size: 512,
            refine_tolerance: 1e-10,
            max_iterations: 1000,
            damping: 0.5,
            update: UpdateRule::Simultaneous,
            parallel: false,
        }
    }
}

impl BestResponseOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.effort_bound {
            if !(b > 0.0) || !b.is_finite() {
                return Err(ModelError::validation("effort_bound", format!("must be > 0, got {b}")));
            }
        }
        if self.coarse_grid_size < 3 {
            return Err(ModelError::validation("coarse_grid_size", "needs at least 3 points"));
        }
        if !(self.refine_tolerance > 0.0) {
            return Err(ModelError::validation("refine_tolerance", "must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(ModelError::validation("max_iterations", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(ModelError::validation(
                "damping",
                format!("must lie in (0, 1], got {}", self.damping),
            ));
        }
        Ok(())
    }

    pub fn bound_for(&self, n: usize) -> f64 {
        self.effort_bound
            .unwrap_or_else(|| 10.0 * symmetric_contest_effort(n.max(2)).unwrap_or(0.25))
    }
}

/// Closed-form symmetric equilibrium effort `(n−1)/n²` of the contest with
/// uniform attraction and effort-only cost (`γ = 0`).
///
/// With cost `x_i` the first-order condition is `S/(x + S)² = 1` where `S` is
/// the rivals' total; at a symmetric profile `S = (n−1)x`, giving
/// `x = (n−1)/n²`.
pub fn symmetric_contest_effort(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(ModelError::Domain(format!("contest needs n >= 2 firms, got {n}")));
    }
    let n = n as f64;
    Ok((n - 1.0) / (n * n))
}

/// Firm `i`'s profit as a function of its own effort, rivals held fixed.
#[derive(Debug, Clone, Copy)]
struct FirmView<'a> {
    params: &'a FirmParams,
    model: &'a CostModel,
    /// `Σ_{j≠i} a_j x_j`
    rivals_attraction: f64,
    /// `Σ_{j≠i} θ_ij x_j`
    spillover: f64,
}

impl<'a> FirmView<'a> {
    fn new(market: &'a Market, model: &'a CostModel, i: usize, x: &[f64]) -> Self {
        let mut rivals_attraction = 0.0;
        let mut spillover = 0.0;
        for (j, &xj) in x.iter().enumerate().take(market.n()) {
            if j != i {
                rivals_attraction += market.firm(j).attraction_weight * xj;
                spillover += market.theta().get(i, j) * xj;
            }
        }
        FirmView {
            params: market.firm(i),
            model,
            rivals_attraction,
            spillover,
        }
    }

    fn profit(&self, xi: f64) -> Result<f64> {
        let own = self.params.attraction_weight * xi;
        let total = own + self.rivals_attraction;
        if total <= 0.0 {
            return Err(ModelError::DegenerateMarket);
        }
        Ok(own / total - self.model.cost(self.params, xi, xi + self.spillover)?)
    }

    /// `dπ_i/dx_i`; `∂k_i/∂x_i = 1` through the unit diagonal.
    fn marginal_profit(&self, xi: f64) -> Result<f64> {
        let a = self.params.attraction_weight;
        let total = a * xi + self.rivals_attraction;
        if total <= 0.0 {
            return Err(ModelError::DegenerateMarket);
        }
        let (cx, ck) = self.model.partials(self.params, xi, xi + self.spillover)?;
        Ok(a * self.rivals_attraction / (total * total) - (cx + ck))
    }
}

/// Where the best response landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Interior,
    /// Zero effort is optimal.
    ZeroEffort,
    /// Optimum at the search bound; the bound may be too small.
    UpperBound,
    /// Rivals exert no attraction: any positive effort captures the whole
    /// market and the supremum at `x → 0⁺` is not attained. The smallest
    /// positive grid effort is returned.
    BoundaryResponse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub effort: f64,
    pub profit: f64,
    pub kind: ResponseKind,
    /// Grid points skipped because profit was undefined there.
    pub skipped: usize,
}

/// Maximizes firm `i`'s profit over `[0, bound]` holding rivals at `x`.
///
/// A full coarse scan always precedes refinement so a non-concave profit is
/// never trusted to a single basin. The best cell is refined by golden-section
/// search, then polished by bisection on the analytic marginal profit when
/// the cell brackets its sign change.
pub fn best_response(
    i: usize,
    x: &EffortProfile,
    market: &Market,
    model: &CostModel,
    opts: &BestResponseOptions,
) -> Result<BestResponse> {
    market.check_index(i)?;
    if x.len() != market.n() {
        return Err(ModelError::validation("x", "profile length does not match the market"));
    }
    let view = FirmView::new(market, model, i, x.as_slice());
    let bound = opts.bound_for(market.n());
    let grid = lin_space(0.0, bound, opts.coarse_grid_size);

    if view.rivals_attraction <= 0.0 {
        let effort = grid[1];
        return Ok(BestResponse {
            effort,
            profit: view.profit(effort)?,
            kind: ResponseKind::BoundaryResponse,
            skipped: 1,
        });
    }

    let mut skipped = 0;
    let mut best: Option<(usize, f64)> = None;
    for (idx, &xi) in grid.iter().enumerate() {
        match view.profit(xi) {
            Ok(p) => {
                if best.is_none_or(|(_, bp)| p > bp) {
                    best = Some((idx, p));
                }
            }
            Err(_) => skipped += 1,
        }
    }
    let Some((b, _)) = best else {
        return Err(ModelError::DegenerateMarket);
    };
    let lo = grid[b.saturating_sub(1)];
    let hi = grid[(b + 1).min(grid.len() - 1)];

    let objective = |xi: f64| view.profit(xi).unwrap_or(f64::NEG_INFINITY);
    let (mut effort, mut profit) = golden_section_max(objective, lo, hi, opts.refine_tolerance, 500);

    if let (Ok(m_lo), Ok(m_hi)) = (view.marginal_profit(lo), view.marginal_profit(hi)) {
        if m_lo > 0.0 && m_hi < 0.0 {
            let polished = bisect(|xi| view.marginal_profit(xi).unwrap_or(f64::NAN), lo, hi);
            if let Ok(pp) = view.profit(polished) {
                if pp >= profit - 1e-12 * (1.0 + profit.abs()) {
                    effort = polished;
                    profit = pp;
                }
            }
        }
    }

    let kind = if effort == 0.0 {
        ResponseKind::ZeroEffort
    } else if effort >= bound {
        ResponseKind::UpperBound
    } else {
        ResponseKind::Interior
    };
    Ok(BestResponse {
        effort,
        profit,
        kind,
        skipped,
    })
}

/// Result of best-response dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub profile: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of the last update.
    pub last_change: f64,
    pub max_unilateral_gain: f64,
    pub response_kinds: Vec<ResponseKind>,
    pub per_firm: MarketState,
}

fn responses(
    x: &EffortProfile,
    market: &Market,
    model: &CostModel,
    opts: &BestResponseOptions,
) -> Result<Vec<BestResponse>> {
    if opts.parallel {
        (0..market.n())
            .into_par_iter()
            .map(|i| best_response(i, x, market, model, opts))
            .collect()
    } else {
        (0..market.n())
            .map(|i| best_response(i, x, market, model, opts))
            .collect()
    }
}

/// Damped best-response iteration from `x0` until the sup-norm change is at
/// most `refine_tolerance` or the budget runs out. A report is returned in
/// both cases; `converged` tells them apart.
pub fn br_dynamics(
    x0: &EffortProfile,
    market: &Market,
    model: &CostModel,
    opts: &BestResponseOptions,
) -> Result<EquilibriumReport> {
    opts.validate()?;
    model.validate()?;
    if x0.len() != market.n() {
        return Err(ModelError::validation("x0", "profile length does not match the market"));
    }
    let n = market.n();
    let mut x = x0.as_slice().to_vec();
    let mut kinds = vec![ResponseKind::Interior; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let d = opts.damping;

    while iterations < opts.max_iterations {
        iterations += 1;
        let old = x.clone();
        match opts.update {
            UpdateRule::Simultaneous => {
                let snapshot = EffortProfile::new(x.clone())?;
                let brs = responses(&snapshot, market, model, opts)?;
                for (j, br) in brs.iter().enumerate() {
                    x[j] = (old[j] + d * (br.effort - old[j])).max(0.0);
                    kinds[j] = br.kind;
                }
            }
            UpdateRule::Sequential => {
                for j in 0..n {
                    let current = EffortProfile::new(x.clone())?;
                    let br = best_response(j, &current, market, model, opts)?;
                    x[j] = (old[j] + d * (br.effort - old[j])).max(0.0);
                    kinds[j] = br.kind;
                }
            }
        }
        last_change = x.iter().zip(&old).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if last_change <= opts.refine_tolerance {
            converged = true;
            break;
        }
    }

    let profile = EffortProfile::new(x)?;
    let check = verify_nash(&profile, market, model, &DeviationSpec::for_options(opts))?;
    let per_firm = market.evaluate(&profile, model)?;
    Ok(EquilibriumReport {
        profile: profile.into_vec(),
        iterations,
        converged,
        last_change,
        max_unilateral_gain: check.max_gain,
        response_kinds: kinds,
        per_firm,
    })
}

/// Resolution of the unilateral-deviation scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationSpec {
    pub grid_size: usize,
    /// Upper end of the scan; `None` uses `max(10·(n−1)/n², 2·max x)`.
    pub effort_bound: Option<f64>,
    /// Golden-section bracket width around the best grid cell.
    pub refine_width: f64,
}

impl Default for DeviationSpec {
    fn default() -> Self {
        DeviationSpec {
            grid_size: 2001,
            effort_bound: None,
            refine_width: 1e-12,
        }
    }
}

impl DeviationSpec {
    fn for_options(opts: &BestResponseOptions) -> Self {
        DeviationSpec {
            effort_bound: opts.effort_bound,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashCheck {
    pub max_gain: f64,
    pub per_firm_gain: Vec<f64>,
    pub best_deviation: Vec<f64>,
    /// Deviation points where profit was undefined.
    pub skipped: usize,
}

impl NashCheck {
    pub fn accepts(&self, epsilon: f64) -> bool {
        self.max_gain <= epsilon
    }
}

/// Largest profit improvement any single firm can obtain by deviating,
/// found by a grid scan plus golden-section refinement per firm.
pub fn verify_nash(
    profile: &EffortProfile,
    market: &Market,
    model: &CostModel,
    spec: &DeviationSpec,
) -> Result<NashCheck> {
    if profile.len() != market.n() {
        return Err(ModelError::validation("profile", "length does not match the market"));
    }
    if spec.grid_size < 3 {
        return Err(ModelError::validation("grid_size", "needs at least 3 points"));
    }
    let x = profile.as_slice();
    let max_x = x.iter().cloned().fold(0.0, f64::max);
    let default_bound = BestResponseOptions::default().bound_for(market.n());
    let bound = spec.effort_bound.unwrap_or(default_bound).max(2.0 * max_x);
    let grid = lin_space(0.0, bound, spec.grid_size);

    let mut per_firm_gain = Vec::with_capacity(market.n());
    let mut best_deviation = Vec::with_capacity(market.n());
    let mut skipped = 0;
    for i in 0..market.n() {
        let view = FirmView::new(market, model, i, x);
        let base = view.profit(x[i])?;
        let mut best: Option<(usize, f64)> = None;
        for (idx, &xi) in grid.iter().enumerate() {
            match view.profit(xi) {
                Ok(p) => {
                    if best.is_none_or(|(_, bp)| p > bp) {
                        best = Some((idx, p));
                    }
                }
                Err(_) => skipped += 1,
            }
        }
        let (mut dev, mut dev_profit) = (x[i], base);
        if let Some((b, p)) = best {
            let lo = grid[b.saturating_sub(1)];
            let hi = grid[(b + 1).min(grid.len() - 1)];
            let objective = |xi: f64| view.profit(xi).unwrap_or(f64::NEG_INFINITY);
            let (gx, gp) = golden_section_max(objective, lo, hi, spec.refine_width, 500);
            let (cx, cp) = if gp >= p { (gx, gp) } else { (grid[b], p) };
            if cp > dev_profit {
                dev = cx;
                dev_profit = cp;
            }
        }
        per_firm_gain.push(dev_profit - base);
        best_deviation.push(dev);
    }
    let max_gain = per_firm_gain.iter().cloned().fold(0.0, f64::max);
    Ok(NashCheck {
        max_gain,
        per_firm_gain,
        best_deviation,
        skipped,
    })
}

/// Inputs for attaching the price triple to effort-game quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleInputs {
    pub effort_price: f64,
    pub efficiency: f64,
    /// `λ` entering the price formulas.
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmTriples {
    pub firm: usize,
    pub effort: f64,
    pub knowledge: f64,
    pub triples: Vec<NashTriple>,
    /// Why no triple could be formed (e.g. zero effort).
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketNashSummary {
    pub equilibrium: EquilibriumReport,
    pub representative: usize,
    pub firms: Vec<FirmTriples>,
}

/// Triple(s) at arbitrary `(x, k)` for every firm of a profile.
pub fn triples_at(
    efforts: &[f64],
    knowledge: &[f64],
    f: &ProductionFunction,
    inputs: &TripleInputs,
    sources: &[RSource],
) -> Vec<FirmTriples> {
    efforts
        .iter()
        .zip(knowledge)
        .enumerate()
        .map(|(firm, (&effort, &k))| {
            let point = LagrangePoint {
                effort,
                knowledge: k,
                multiplier: inputs.multiplier,
            };
            let triples: Result<Vec<NashTriple>> = sources
                .iter()
                .map(|&s| nash_triple(&point, inputs.effort_price, inputs.efficiency, f, s))
                .collect();
            match triples {
                Ok(triples) => FirmTriples {
                    firm,
                    effort,
                    knowledge: k,
                    triples,
                    error: None,
                },
                Err(e) => FirmTriples {
                    firm,
                    effort,
                    knowledge: k,
                    triples: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Runs the effort game and evaluates the price triple at every firm's
/// equilibrium `(x_i, k_i)`. All firms share one production function and one
/// price system.
#[allow(clippy::too_many_arguments)]
pub fn market_nash_summary(
    market: &Market,
    model: &CostModel,
    x0: &EffortProfile,
    opts: &BestResponseOptions,
    f: &ProductionFunction,
    inputs: &TripleInputs,
    sources: &[RSource],
    representative: usize,
) -> Result<MarketNashSummary> {
    market.check_index(representative)?;
    let equilibrium = br_dynamics(x0, market, model, opts)?;
    let firms = triples_at(
        &equilibrium.per_firm.efforts,
        &equilibrium.per_firm.knowledge,
        f,
        inputs,
        sources,
    );
    Ok(MarketNashSummary {
        equilibrium,
        representative,
        firms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::SpilloverMatrix;

    fn contest(n: usize, spill: f64) -> Market {
        Market::symmetric(n, FirmParams::with_efficiency(0.0), spill).unwrap()
    }

    fn profile(v: &[f64]) -> EffortProfile {
        EffortProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn contest_effort_formula() {
        assert_eq!(symmetric_contest_effort(2).unwrap(), 0.25);
        assert!((symmetric_contest_effort(3).unwrap() - 2.0 / 9.0).abs() < 1e-16);
        assert!(symmetric_contest_effort(1).is_err());
        let seq: Vec<f64> = (2..20).map(|n| symmetric_contest_effort(n).unwrap()).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn best_response_two_firm_contest() {
        let m = contest(2, 0.3);
        let br = best_response(0, &profile(&[1.0, 0.25]), &m, &CostModel::Simple, &Default::default()).unwrap();
        // x = sqrt(S) − S with S = 0.25
        assert!((br.effort - 0.25).abs() < 1e-12, "{}", br.effort);
        assert_eq!(br.kind, ResponseKind::Interior);
    }

    #[test]
    fn best_response_against_huge_rivals_is_zero() {
        let m = contest(2, 0.0);
        let br = best_response(0, &profile(&[1.0, 100.0]), &m, &CostModel::Simple, &Default::default()).unwrap();
        assert_eq!(br.effort, 0.0);
        assert_eq!(br.kind, ResponseKind::ZeroEffort);
    }

    #[test]
    fn best_response_monopoly_corner() {
        let m = contest(2, 0.0);
        let opts = BestResponseOptions::default();
        let br = best_response(0, &profile(&[1.0, 0.0]), &m, &CostModel::Simple, &opts).unwrap();
        assert_eq!(br.kind, ResponseKind::BoundaryResponse);
        let step = opts.bound_for(2) / (opts.coarse_grid_size - 1) as f64;
        assert!((br.effort - step).abs() < 1e-15);
    }

    #[test]
    fn dynamics_reach_contest_equilibrium() {
        for n in [2, 3] {
            let m = contest(n, 0.5);
            let x0 = profile(&vec![0.1; n]);
            let rep = br_dynamics(&x0, &m, &CostModel::Simple, &Default::default()).unwrap();
            assert!(rep.converged);
            let target = symmetric_contest_effort(n).unwrap();
            for &x in &rep.profile {
                assert!((x - target).abs() < 1e-6);
            }
            assert!(rep.max_unilateral_gain <= 1e-8);
        }
    }

    #[test]
    fn fixed_point_start_converges_immediately() {
        let m = contest(2, 0.0);
        let rep = br_dynamics(&profile(&[0.25, 0.25]), &m, &CostModel::Simple, &Default::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let theta =
            SpilloverMatrix::from_rows(&[vec![1.0, 0.2, 0.7], vec![0.5, 1.0, 0.1], vec![0.0, 0.9, 1.0]]).unwrap();
        let firms = vec![
            FirmParams {
                attraction_weight: 1.0,
                knowledge_efficiency: 0.4,
                ..Default::default()
            },
            FirmParams {
                attraction_weight: 1.5,
                knowledge_efficiency: 0.2,
                ..Default::default()
            },
            FirmParams {
                attraction_weight: 0.8,
                knowledge_efficiency: 0.6,
                ..Default::default()
            },
        ];
        let m = Market::new(firms, theta).unwrap();
        let x0 = profile(&[0.2, 0.2, 0.2]);
        let serial = br_dynamics(&x0, &m, &CostModel::Simple, &Default::default()).unwrap();
        let par_opts = BestResponseOptions {
            parallel: true,
            ..Default::default()
        };
        let parallel = br_dynamics(&x0, &m, &CostModel::Simple, &par_opts).unwrap();
        assert_eq!(serial, parallel);
        let seq_opts = BestResponseOptions {
            update: UpdateRule::Sequential,
            ..Default::default()
        };
        let seq = br_dynamics(&x0, &m, &CostModel::Simple, &seq_opts).unwrap();
        assert!(serial.converged && seq.converged);
        for (a, b) in serial.profile.iter().zip(&seq.profile) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn verify_nash_detects_deviation() {
        let m = contest(2, 0.0);
        let ok = verify_nash(&profile(&[0.25, 0.25]), &m, &CostModel::Simple, &Default::default()).unwrap();
        assert!(ok.accepts(1e-8));
        let bad = verify_nash(&profile(&[0.4, 0.25]), &m, &CostModel::Simple, &Default::default()).unwrap();
        assert!(bad.per_firm_gain[0] > 0.03);
        assert!((bad.best_deviation[0] - 0.25).abs() < 1e-4);
    }

    #[test]
    fn summary_symmetric_market() {
        let m = Market::symmetric(2, FirmParams::with_efficiency(0.3), 0.4).unwrap();
        let f = ProductionFunction::default();
        let inputs = TripleInputs {
            effort_price: 1.0,
            efficiency: 1.0,
            multiplier: 1.0,
        };
        let s = market_nash_summary(
            &m,
            &CostModel::Simple,
            &profile(&[0.2, 0.2]),
            &Default::default(),
            &f,
            &inputs,
            &RSource::ALL,
            0,
        )
        .unwrap();
        assert_eq!(s.firms.len(), 2);
        assert_eq!(s.firms[0].triples, s.firms[1].triples);
        assert!(s.firms.iter().all(|f| f.triples[0].r_star < 0.0));
    }
}
