use serde::{Deserialize, Serialize};

use super::{foc_residuals, FocReport, LagrangePoint, PriceSystem, ProductionFunction};
use crate::error::{ModelError, Result};
use crate::numeric::log_space;

/// Options for [`minimize_cost`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Newton iteration budget per start.
    pub max_iterations: usize,
    /// Sup-norm tolerance on the reduced residual.
    pub tolerance: f64,
    /// Upper bound on `k` used when no interior optimum exists (`r ≥ 0`).
    pub knowledge_cap: f64,
    /// Resolution of the brute-force grid used as the fallback start.
    pub grid: GridSpec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 200,
            tolerance: 1e-10,
            knowledge_cap: 1e3,
            grid: GridSpec::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(ModelError::validation("max_iterations", "must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(ModelError::validation("tolerance", "must be > 0"));
        }
        if !(self.knowledge_cap > 0.0) || !self.knowledge_cap.is_finite() {
            return Err(ModelError::validation("knowledge_cap", "must be a finite value > 0"));
        }
        self.grid.validate()
    }
}

/// Log-spaced `(x, k)` grid; a point counts as feasible when
/// `Q ≤ f(x, k) ≤ Q·(1 + band)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub size: usize,
    pub band: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { size: 200, band: 0.05 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(ModelError::validation("grid.size", "needs at least 2 points per axis"));
        }
        if !(self.band > 0.0) {
            return Err(ModelError::validation("grid.band", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub effort: f64,
    pub knowledge: f64,
    pub cost: f64,
}

/// Result of [`minimize_cost`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMinimum {
    pub point: LagrangePoint,
    pub cost: f64,
    pub foc: FocReport,
    /// The optimum sits on the knowledge cap rather than at a stationary point.
    pub boundary: bool,
    /// Index of the winning start (the grid fallback is last).
    pub start_index: usize,
    pub iterations: usize,
    /// Sup-norm of the reduced residual at the returned point.
    pub residual: f64,
}

/// Range of `k` searched on the positive-cost branch.
fn knowledge_range(prices: &PriceSystem, opts: &SolverOptions) -> (f64, f64) {
    let u = prices.gamma_r();
    if u < 0.0 {
        let pole = -1.0 / u;
        (pole * 1e-4, pole * (1.0 - 1e-3))
    } else {
        (opts.knowledge_cap * 1e-4, opts.knowledge_cap)
    }
}

/// Brute-force scan of a log grid for the cheapest feasible point with
/// `1 + γrk > 0`. Returns `None` when no grid point lands in the band.
pub fn grid_minimum(
    prices: &PriceSystem,
    q_target: f64,
    f: &ProductionFunction,
    opts: &SolverOptions,
) -> Result<Option<GridPoint>> {
    let (k_lo, k_hi) = knowledge_range(prices, opts);
    let x_lo = f.effort_for(q_target, k_hi)? / 2.0;
    let x_hi = f.effort_for(q_target, k_lo)? * 2.0;
    let xs = log_space(x_lo, x_hi, opts.grid.size);
    let ks = log_space(k_lo, k_hi, opts.grid.size);
    let upper = q_target * (1.0 + opts.grid.band);
    let mut best: Option<GridPoint> = None;
    for &k in &ks {
        let d = 1.0 + prices.gamma_r() * k;
        if d <= 0.0 {
            continue;
        }
        for &x in &xs {
            let q = f.output(x, k)?;
            if q < q_target || q > upper {
                continue;
            }
            let cost = prices.effort_price * x / d;
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(GridPoint {
                    effort: x,
                    knowledge: k,
                    cost,
                });
            }
        }
    }
    Ok(best)
}

/// Reduced first-order system in `(ln x, ln k)` after eliminating `λ`:
///
/// * `1 + x·u·f_x / ((1 + u·k)·f_k) = 0` (ratio of the two stationarity conditions)
/// * `ln f(x, k) − ln Q = 0`
///
/// Returns `None` off the positive-cost branch.
fn reduced_residual(lx: f64, lk: f64, u: f64, ln_q: f64, f: &ProductionFunction) -> Option<[f64; 2]> {
    let (x, k) = (lx.exp(), lk.exp());
    let d = 1.0 + u * k;
    if !(d > 0.0) || !x.is_finite() || !k.is_finite() {
        return None;
    }
    let q = f.output(x, k).ok()?;
    let (fx, fk) = f.marginals(x, k).ok()?;
    let r = [1.0 + x * u * fx / (d * fk), q.ln() - ln_q];
    (r[0].is_finite() && r[1].is_finite()).then_some(r)
}

fn sup_norm(r: &[f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

struct NewtonRun {
    lx: f64,
    lk: f64,
    residual: f64,
    iterations: usize,
}

/// Damped Newton with a finite-difference Jacobian and backtracking that
/// keeps iterates on the positive-cost branch. Iterates until the residual
/// stops decreasing so the returned point sits at rounding level.
fn newton(start: (f64, f64), u: f64, ln_q: f64, f: &ProductionFunction, opts: &SolverOptions) -> Option<NewtonRun> {
    let (mut lx, mut lk) = (start.0.ln(), start.1.ln());
    let mut r = reduced_residual(lx, lk, u, ln_q, f)?;
    let mut norm = sup_norm(&r);
    let mut iterations = 0;
    let h = 1e-7;
    while iterations < opts.max_iterations {
        let col = |dlx: f64, dlk: f64| -> Option<[f64; 2]> {
            let p = reduced_residual(lx + dlx, lk + dlk, u, ln_q, f)?;
            let m = reduced_residual(lx - dlx, lk - dlk, u, ln_q, f)?;
            Some([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
        };
        let (Some(jx), Some(jk)) = (col(h, 0.0), col(0.0, h)) else {
            break;
        };
        let det = jx[0] * jk[1] - jk[0] * jx[1];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step_x = -(r[0] * jk[1] - jk[0] * r[1]) / det;
        let step_k = -(jx[0] * r[1] - r[0] * jx[1]) / det;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let (nx, nk) = (lx + t * step_x, lk + t * step_k);
            if let Some(nr) = reduced_residual(nx, nk, u, ln_q, f) {
                let nn = sup_norm(&nr);
                if nn < norm {
                    accepted = Some((nx, nk, nr, nn));
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((nx, nk, nr, nn)) => {
                lx = nx;
                lk = nk;
                r = nr;
                norm = nn;
            }
            None => break,
        }
        if norm == 0.0 {
            break;
        }
    }
    Some(NewtonRun {
        lx,
        lk,
        residual: norm,
        iterations,
    })
}

fn finish(
    prices: &PriceSystem,
    q_target: f64,
    f: &ProductionFunction,
    effort: f64,
    knowledge: f64,
) -> Result<(LagrangePoint, f64, FocReport)> {
    let d = prices.denominator(knowledge)?;
    let (fx, _) = f.marginals(effort, knowledge)?;
    // λ from the effort condition p/(1 + γrk) = λ·f_x.
    let point = LagrangePoint {
        effort,
        knowledge,
        multiplier: prices.effort_price / (d * fx),
    };
    let foc = foc_residuals(&point, prices, q_target, f)?;
    Ok((point, prices.effort_price * effort / d, foc))
}

/// Minimizes `p·x/(1 + γ·r·k)` subject to `f(x, k) = Q` on the branch
/// `1 + γ·r·k > 0`.
///
/// For `r < 0` the optimum is interior: the reduced first-order system is
/// solved by damped Newton from a 3×3 log-spaced multi-start, with the best
/// brute-force grid point as a final start. Converged starts are ranked by
/// cost, then by start index.
///
/// For `r ≥ 0` the cost strictly decreases in `k` along the constraint, so no
/// stationary point exists; the optimum over `k ≤ knowledge_cap` sits on the
/// cap and is returned with `boundary = true`.
pub fn minimize_cost(
    prices: &PriceSystem,
    q_target: f64,
    f: &ProductionFunction,
    opts: &SolverOptions,
) -> Result<CostMinimum> {
    prices.validate()?;
    f.validate()?;
    opts.validate()?;
    if !(q_target > 0.0) || !q_target.is_finite() {
        return Err(ModelError::InfeasibleTarget { q_target });
    }
    let u = prices.gamma_r();

    if u >= 0.0 {
        let knowledge = opts.knowledge_cap;
        let effort = f.effort_for(q_target, knowledge)?;
        let (point, cost, foc) = finish(prices, q_target, f, effort, knowledge)?;
        return Ok(CostMinimum {
            point,
            cost,
            foc,
            boundary: true,
            start_index: 0,
            iterations: 0,
            residual: foc.feasibility.abs(),
        });
    }

    let pole = -1.0 / u;
    let x_ref = f.effort_for(q_target, 0.4 * pole)?;
    let mut starts: Vec<(f64, f64)> = Vec::with_capacity(10);
    for kf in [0.1, 0.4, 0.8] {
        for xf in [0.25, 1.0, 4.0] {
            starts.push((x_ref * xf, pole * kf));
        }
    }
    if let Some(g) = grid_minimum(prices, q_target, f, opts)? {
        starts.push((g.effort, g.knowledge));
    }

    let ln_q = q_target.ln();
    let mut best: Option<CostMinimum> = None;
    let mut best_failed: Option<(f64, usize)> = None;
    let mut total_iterations = 0;
    for (index, &start) in starts.iter().enumerate() {
        let Some(run) = newton(start, u, ln_q, f, opts) else {
            continue;
        };
        total_iterations += run.iterations;
        if run.residual > opts.tolerance {
            if best_failed.is_none_or(|(r, _)| run.residual < r) {
                best_failed = Some((run.residual, run.iterations));
            }
            continue;
        }
        let (point, cost, foc) = finish(prices, q_target, f, run.lx.exp(), run.lk.exp())?;
        let candidate = CostMinimum {
            point,
            cost,
            foc,
            boundary: false,
            start_index: index,
            iterations: run.iterations,
            residual: run.residual,
        };
        // Strict comparison keeps the lowest index on ties.
        if best.is_none_or(|b| candidate.cost < b.cost) {
            best = Some(candidate);
        }
    }
    best.ok_or(ModelError::NoConvergence {
        iterations: total_iterations,
        residual: best_failed.map_or(f64::INFINITY, |(r, _)| r),
    })
}
