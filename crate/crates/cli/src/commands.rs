//! The run pipelines behind each subcommand. Each takes a resolved config
//! and returns the report plus its CSV tables.

use serde::Serialize;
use serde_json::{json, Value};

use spillover_core::costmin::{
    foc_residuals, minimize_cost, nash_triple, FocReport, LagrangePoint, NashTriple, PriceSystem, RSource,
};
use spillover_core::equilibrium::{
    br_dynamics, symmetric_contest_effort, triples_at, verify_nash, MarketNashSummary, TripleInputs,
};
use spillover_core::market::{CostModel, EffortProfile, FirmParams, Market, MarketState, SpilloverMatrix};
use spillover_core::numeric::log_space;
use spillover_core::subsidy::{
    inverse_supply_price, limit_price, split_market_with, subsidized_profit, subsidy_flow_report, SupplyCurve,
};

use crate::config::{ScenarioConfig, ThetaSpec};
use crate::error::{CliError, Context, EXIT_NO_CONVERGENCE, EXIT_OK};
use crate::report::{flag, num, PropertyCheck, RunReport, Table};

/// Round-off allowance for sums of a handful of shares.
pub const SHARE_TOL: f64 = 1e-12;
pub const KKT_TOL: f64 = 1e-8;
pub const ROOT_FOC_TOL: f64 = 1e-10;
pub const NASH_GAIN_TOL: f64 = 1e-6;
pub const CONTEST_TOL: f64 = 1e-6;

#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub tables: Vec<Table>,
    pub exit_code: i32,
}

fn outcome(
    command: &str,
    cfg: &ScenarioConfig,
    results: Value,
    checks: Vec<PropertyCheck>,
    tables: Vec<Table>,
) -> Outcome {
    Outcome {
        report: RunReport::new(command, cfg.sweep.seed, cfg, results, checks),
        tables,
        exit_code: EXIT_OK,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

/// Market from a resolved config.
pub fn build_market(cfg: &ScenarioConfig) -> Result<Market, CliError> {
    let firms = cfg
        .market
        .firms
        .clone()
        .unwrap_or_else(|| vec![FirmParams::default(); cfg.market.n]);
    let ThetaSpec::Matrix(rows) = &cfg.market.theta else {
        return Err(CliError::invalid("market.theta", "config was not resolved"));
    };
    let theta = SpilloverMatrix::from_rows(rows).context(|| "market.theta".into())?;
    Market::new(firms, theta).context(|| "market".into())
}

fn efforts(cfg: &ScenarioConfig) -> Result<EffortProfile, CliError> {
    let x = cfg.market.efforts.clone().unwrap_or_else(|| vec![1.0; cfg.market.n]);
    EffortProfile::new(x).context(|| "market.efforts".into())
}

fn cost_header(model: &CostModel) -> &'static str {
    match model {
        CostModel::Rational => "C_i=(c_i*x_i+beta_i)/(gamma'_i*k_i+zeta_i)",
        CostModel::Simple => "C_i=x_i/(1+gamma_i*k_i)",
        CostModel::Priced { .. } => "C_i=p*x_i/(1+gamma_i*r*k_i)",
        CostModel::PricedNoUnit { .. } => "C_i=p*x_i/(gamma_i*r*k_i)",
    }
}

const K_HEADER: &str = "k_i=sum_j theta_ij*x_j";
const S_HEADER: &str = "s_i=a_i*x_i/sum_j a_j*x_j";
const PI_HEADER: &str = "pi_i=s_i-C_i";

/// Knowledge, shares, costs and profits, with the failing firm named on error.
fn evaluate_market(market: &Market, x: &EffortProfile, model: &CostModel) -> Result<MarketState, CliError> {
    let knowledge = market.knowledge(x).context(|| "knowledge".into())?;
    let shares = market.shares(x).context(|| "shares".into())?;
    let mut costs = Vec::with_capacity(market.n());
    for i in 0..market.n() {
        costs.push(
            model
                .cost(market.firm(i), x[i], knowledge[i])
                .context(|| format!("firm {i} cost"))?,
        );
    }
    let profits = shares.iter().zip(&costs).map(|(s, c)| s - c).collect();
    Ok(MarketState {
        efforts: x.as_slice().to_vec(),
        knowledge,
        shares,
        costs,
        profits,
    })
}

fn market_checks(state: &MarketState) -> Vec<PropertyCheck> {
    let sum: f64 = state.shares.iter().sum();
    let outside = state
        .shares
        .iter()
        .map(|&s| (-s).max(s - 1.0).max(0.0))
        .fold(0.0, f64::max);
    let dominance = state
        .efforts
        .iter()
        .zip(&state.knowledge)
        .map(|(x, k)| x - k)
        .fold(f64::NEG_INFINITY, f64::max);
    let decomposition = (0..state.shares.len())
        .map(|i| (state.profits[i] + state.costs[i] - state.shares[i]).abs())
        .fold(0.0, f64::max);
    vec![
        PropertyCheck::at_most("shares_sum_to_one", (sum - 1.0).abs(), SHARE_TOL),
        PropertyCheck::at_most("shares_in_unit_interval", outside, 0.0),
        PropertyCheck::at_most("knowledge_at_least_effort", dominance, 0.0),
        PropertyCheck::at_most("profit_decomposition", decomposition, SHARE_TOL),
    ]
}

fn firm_table(name: &str, model: &CostModel, state: &MarketState) -> Table {
    let mut t = Table::new(
        name,
        &["firm", "x_i", K_HEADER, S_HEADER, cost_header(model), PI_HEADER],
    );
    for i in 0..state.efforts.len() {
        t.push(vec![
            i.to_string(),
            num(state.efforts[i]),
            num(state.knowledge[i]),
            num(state.shares[i]),
            num(state.costs[i]),
            num(state.profits[i]),
        ]);
    }
    t
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let market = build_market(cfg)?;
    let x = efforts(cfg)?;
    let model = cfg.market.cost_model;
    let state = evaluate_market(&market, &x, &model)?;
    let checks = market_checks(&state);
    let table = firm_table("firms", &model, &state);
    let results = json!({ "cost_model": to_value(&model), "state": to_value(&state) });
    Ok(outcome("simulate", cfg, results, checks, vec![table]))
}

/// Prices and diagnostics at one candidate point.
#[derive(Debug, Clone, Serialize)]
pub struct PointEvaluation {
    pub at: String,
    pub point: LagrangePoint,
    pub triples: Vec<NashTriple>,
    pub selected: NashTriple,
}

fn evaluate_point(
    at: &str,
    point: LagrangePoint,
    cfg: &ScenarioConfig,
    checks: &mut Vec<PropertyCheck>,
) -> Result<PointEvaluation, CliError> {
    let p = &cfg.prices;
    let triples = RSource::ALL
        .iter()
        .map(|&s| nash_triple(&point, p.effort_price, p.efficiency, &cfg.production, s))
        .collect::<Result<Vec<_>, _>>()
        .context(|| format!("prices at {at}"))?;
    let selected = *triples
        .iter()
        .find(|t| t.source == p.r_source)
        .expect("all sources evaluated");
    let kp = &selected.knowledge_price;
    let gamma = p.efficiency;
    let largest = [
        kp.root_upper / gamma,
        kp.root_lower / gamma,
        kp.r_star_literal,
        kp.r_star_no_unit,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    checks.push(PropertyCheck::below(
        &format!("{at}.knowledge_prices_negative"),
        largest,
        0.0,
    ));
    checks.push(PropertyCheck::at_most(
        &format!("{at}.root_foc_residual"),
        kp.foc_residual_at_selected.abs().max(kp.foc_residual_at_lower.abs()),
        ROOT_FOC_TOL,
    ));
    checks.push(PropertyCheck::above(
        &format!("{at}.literal_vs_quadratic_gap"),
        kp.literal_vs_quadratic_gap,
        0.0,
    ));
    Ok(PointEvaluation {
        at: at.to_string(),
        point,
        triples,
        selected,
    })
}

fn foc_row(t: &mut Table, at: &str, foc: &FocReport) {
    t.push(vec![
        at.to_string(),
        num(foc.stationarity_x),
        num(foc.stationarity_k),
        num(foc.feasibility),
        num(foc.max_abs_residual),
    ]);
}

pub fn solve(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p = &cfg.prices;
    let f = &cfg.production;
    if p.knowledge_price.is_none() && p.point.is_none() {
        return Err(CliError::invalid(
            "prices",
            "solve needs prices.knowledge_price (to minimize cost) or prices.point (to evaluate prices)",
        ));
    }
    let mut checks = Vec::new();
    let mut evaluations = Vec::new();
    let mut foc_table = Table::new(
        "foc",
        &[
            "at",
            "dL/dx=p/(1+gamma*r*k)-lambda*f_x",
            "dL/dk=-p*x*gamma*r/(1+gamma*r*k)^2-lambda*f_k",
            "Q-f(x;k)",
            "max_abs_residual",
        ],
    );

    let mut minimum = None;
    if let Some(r) = p.knowledge_price {
        let prices = PriceSystem::new(p.effort_price, r, p.efficiency).context(|| "prices".into())?;
        let min = minimize_cost(&prices, p.q_target, f, &p.solver).context(|| "minimize_cost".into())?;
        checks.push(PropertyCheck::at_most(
            "minimum.kkt_residual",
            min.foc.max_abs_residual,
            KKT_TOL,
        ));
        foc_row(&mut foc_table, "minimum", &min.foc);
        let eval = evaluate_point("minimum", min.point, cfg, &mut checks)?;
        if !min.boundary {
            // At an interior optimum the upper root reproduces the input price.
            let rel = (eval.selected.knowledge_price.r_star_quadratic - r).abs() / r.abs();
            checks.push(PropertyCheck::at_most(
                "minimum.quadratic_price_reproduces_input",
                rel,
                KKT_TOL,
            ));
        }
        evaluations.push(eval);
        minimum = Some(min);
    }

    let mut point_foc = None;
    if let Some(pt) = p.point {
        let point = LagrangePoint {
            effort: pt.effort,
            knowledge: pt.knowledge,
            multiplier: pt.multiplier,
        };
        if let Some(r) = p.knowledge_price {
            let prices = PriceSystem::new(p.effort_price, r, p.efficiency).context(|| "prices".into())?;
            let foc = foc_residuals(&point, &prices, p.q_target, f).context(|| "prices.point".into())?;
            checks.push(PropertyCheck::at_most(
                "point.foc_residual",
                foc.max_abs_residual,
                KKT_TOL,
            ));
            foc_row(&mut foc_table, "point", &foc);
            point_foc = Some(foc);
        }
        evaluations.push(evaluate_point("point", point, cfg, &mut checks)?);
    }

    let mut prices_table = Table::new(
        "prices",
        &[
            "at",
            "source",
            "x",
            "k",
            "lambda",
            "gamma*r_upper:k^2*u^2+(2k+p*x/(lambda*f_k))*u+1=0",
            "gamma*r_lower",
            "r_star",
            "p_star=(1+gamma*r_star*k)*lambda*f_x",
            "Q_star=f(x;k)",
            "1+gamma*r_star*k<0",
            "literal_vs_quadratic_gap",
        ],
    );
    for e in &evaluations {
        for t in &e.triples {
            prices_table.push(vec![
                e.at.clone(),
                t.source.name().to_string(),
                num(e.point.effort),
                num(e.point.knowledge),
                num(e.point.multiplier),
                num(t.knowledge_price.root_upper),
                num(t.knowledge_price.root_lower),
                num(t.r_star),
                num(t.p_star),
                num(t.q_star),
                flag(t.negative_denominator),
                num(t.knowledge_price.literal_vs_quadratic_gap),
            ]);
        }
    }

    let results = json!({
        "minimum": to_value(&minimum),
        "point_foc": to_value(&point_foc),
        "evaluations": to_value(&evaluations),
    });
    let mut tables = vec![prices_table];
    if !foc_table.rows.is_empty() {
        tables.push(foc_table);
    }
    Ok(outcome("solve", cfg, results, checks, tables))
}

/// True when the game reduces to the symmetric contest with a known solution.
fn is_contest(market: &Market, model: &CostModel) -> bool {
    let a0 = market.firm(0).attraction_weight;
    matches!(model, CostModel::Simple)
        && a0 > 0.0
        && market
            .firms()
            .iter()
            .all(|f| f.knowledge_efficiency == 0.0 && f.attraction_weight == a0)
}

pub fn equilibrium(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let market = build_market(cfg)?;
    let model = cfg.market.cost_model;
    let g = &cfg.game;
    let x0 = EffortProfile::new(g.initial_profile.clone().unwrap_or_else(|| vec![0.1; market.n()]))
        .context(|| "game.initial_profile".into())?;
    let eq = br_dynamics(&x0, &market, &model, &g.options).context(|| "br_dynamics".into())?;
    let profile = EffortProfile::new(eq.profile.clone()).context(|| "equilibrium profile".into())?;
    let nash = if g.verify {
        Some(verify_nash(&profile, &market, &model, &g.deviation).context(|| "verify_nash".into())?)
    } else {
        None
    };

    let mut checks = vec![PropertyCheck::at_most(
        "converged",
        eq.last_change,
        g.options.refine_tolerance,
    )];
    let gain = nash.as_ref().map_or(eq.max_unilateral_gain, |c| c.max_gain);
    checks.push(PropertyCheck::at_most("max_unilateral_gain", gain, NASH_GAIN_TOL));
    checks.extend(market_checks(&eq.per_firm));
    if is_contest(&market, &model) {
        let target = symmetric_contest_effort(market.n()).context(|| "contest".into())?;
        let dev = eq.profile.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
        checks.push(PropertyCheck::at_most("contest_effort_(n-1)/n^2", dev, CONTEST_TOL));
    }

    let inputs = TripleInputs {
        effort_price: cfg.prices.effort_price,
        efficiency: cfg.prices.efficiency,
        multiplier: cfg.prices.multiplier,
    };
    let firms = triples_at(
        &eq.per_firm.efforts,
        &eq.per_firm.knowledge,
        &cfg.production,
        &inputs,
        &g.sources,
    );

    let mut firm_t = Table::new(
        "firms",
        &[
            "firm",
            "x_i",
            K_HEADER,
            S_HEADER,
            cost_header(&model),
            PI_HEADER,
            "best_response",
            "max_unilateral_gain_i",
        ],
    );
    let s = &eq.per_firm;
    for i in 0..market.n() {
        firm_t.push(vec![
            i.to_string(),
            num(s.efforts[i]),
            num(s.knowledge[i]),
            num(s.shares[i]),
            num(s.costs[i]),
            num(s.profits[i]),
            to_value(&eq.response_kinds[i]).as_str().unwrap_or_default().to_string(),
            nash.as_ref().map_or(String::new(), |c| num(c.per_firm_gain[i])),
        ]);
    }
    let mut triple_t = Table::new(
        "triples",
        &[
            "firm",
            "source",
            "x_i",
            "k_i",
            "r_star",
            "p_star=(1+gamma*r_star*k_i)*lambda*f_x",
            "Q_star=f(x_i;k_i)",
            "error",
        ],
    );
    for ft in &firms {
        if let Some(err) = &ft.error {
            triple_t.push(vec![
                ft.firm.to_string(),
                String::new(),
                num(ft.effort),
                num(ft.knowledge),
                String::new(),
                String::new(),
                String::new(),
                err.clone(),
            ]);
        }
        for t in &ft.triples {
            triple_t.push(vec![
                ft.firm.to_string(),
                t.source.name().to_string(),
                num(ft.effort),
                num(ft.knowledge),
                num(t.r_star),
                num(t.p_star),
                num(t.q_star),
                String::new(),
            ]);
        }
    }

    let converged = eq.converged;
    let summary = MarketNashSummary {
        equilibrium: eq,
        representative: g.representative,
        firms,
    };
    let results = json!({ "summary": to_value(&summary), "nash_check": to_value(&nash) });
    let mut out = outcome("equilibrium", cfg, results, checks, vec![firm_t, triple_t]);
    if !converged {
        out.exit_code = EXIT_NO_CONVERGENCE;
    }
    Ok(out)
}

/// Half an ulp of `v`: the rounding error of a correctly rounded result near `v`.
pub fn half_ulp(v: f64) -> f64 {
    let a = v.abs();
    (f64::from_bits(a.to_bits() + 1) - a) / 2.0
}

pub fn subsidy(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let market = build_market(cfg)?;
    let n = market.n();
    let s = &cfg.subsidy;
    let perm: Vec<usize> = s.permutation.clone().unwrap_or_else(|| (0..n).collect());
    let split = split_market_with(n, &perm).context(|| "split_market".into())?;
    let curve = SupplyCurve::new(s.base_price, s.slope_coeff).context(|| "subsidy".into())?;
    let limit = limit_price(&curve);
    let mut checks = vec![PropertyCheck::at_most(
        "limit_price_equals_base",
        (limit - s.base_price).abs(),
        0.0,
    )];

    let mut supply_t = Table::new(
        "supply",
        &["q", "P(q)=base+a/q", "|P(q)-base|", "|a|/q", "within_bound"],
    );
    let mut worst_excess = f64::NEG_INFINITY;
    let mut allowance: f64 = 0.0;
    let mut grid_rows = Vec::new();
    for q in log_space(s.q_grid.min, s.q_grid.max, s.q_grid.points) {
        let price = inverse_supply_price(&curve, q).context(|| format!("supply at q = {q}"))?;
        let gap = (price - s.base_price).abs();
        let bound = s.slope_coeff.abs() / q;
        let slack = half_ulp(price);
        let within = gap <= bound + slack;
        worst_excess = worst_excess.max(gap - bound);
        allowance = allowance.max(slack);
        supply_t.push(vec![num(q), num(price), num(gap), num(bound), flag(within)]);
        grid_rows.push(json!({ "q": q, "price": price, "gap": gap, "bound": bound, "within_bound": within }));
    }
    // The computed price carries one rounding, so the bound holds up to half an ulp.
    checks.push(PropertyCheck::at_most(
        "supply_gap_within_a_over_q",
        worst_excess,
        allowance,
    ));

    let x = efforts(cfg)?;
    let k = market.knowledge(&x).context(|| "knowledge".into())?;
    let reference = {
        let firms: Vec<FirmParams> = market
            .firms()
            .iter()
            .map(|f| FirmParams {
                knowledge_efficiency: s.efficiency,
                ..*f
            })
            .collect();
        Market::new(firms, market.theta().clone()).context(|| "market".into())?
    };
    let no_unit = CostModel::PricedNoUnit {
        effort_price: s.effort_price,
        knowledge_price: s.knowledge_price,
    };
    let mut profit_t = Table::new(
        "profits",
        &[
            "firm",
            "role",
            "x_i",
            K_HEADER,
            S_HEADER,
            "subsidy_i=|p*x_i/(gamma*r*k_i)|",
            "pi_i=s_i-p*x_i/(gamma*r*k_i)",
        ],
    );
    let mut profits = Vec::with_capacity(n);
    let mut equivalence: f64 = 0.0;
    let mut min_lift = f64::INFINITY;
    for i in 0..n {
        let sp = subsidized_profit(i, &x, &market, s.effort_price, s.knowledge_price, s.efficiency)
            .context(|| format!("firm {i} subsidized profit"))?;
        let r = reference
            .profit(i, &x, &no_unit)
            .context(|| format!("firm {i} profit"))?;
        equivalence = equivalence.max((sp.profit - r).abs());
        min_lift = min_lift.min(sp.profit - sp.share);
        let role = if split.suppliers.contains(&i) {
            "supplier"
        } else {
            "buyer"
        };
        profit_t.push(vec![
            i.to_string(),
            role.to_string(),
            num(x[i]),
            num(k[i]),
            num(sp.share),
            num(sp.subsidy),
            num(sp.profit),
        ]);
        profits.push(sp);
    }
    checks.push(PropertyCheck::at_most(
        "subsidized_profit_matches_no_unit_cost",
        equivalence,
        1e-12,
    ));
    checks.push(PropertyCheck::above("subsidy_raises_profit_above_share", min_lift, 0.0));

    let quantities = s.quantities.clone().unwrap_or_else(|| vec![1.0; n / 2]);
    let flows = subsidy_flow_report(&split, &quantities, &curve).context(|| "subsidy flows".into())?;
    checks.push(PropertyCheck::at_most(
        "flows_conserved",
        (flows.supplier_total - flows.buyer_total).abs(),
        0.0,
    ));
    let mut flow_t = Table::new("flows", &["supplier", "buyer", "quantity", "amount=P_limit*quantity"]);
    for fl in &flows.flows {
        flow_t.push(vec![
            fl.supplier.to_string(),
            fl.buyer.to_string(),
            num(fl.quantity),
            num(fl.amount),
        ]);
    }
    flow_t.push(vec![
        "total".into(),
        "total".into(),
        String::new(),
        num(flows.supplier_total),
    ]);

    let results = json!({
        "split": to_value(&split),
        "curve": to_value(&curve),
        "limit_price": limit,
        "supply_grid": grid_rows,
        "profits": to_value(&profits),
        "flows": to_value(&flows),
    });
    Ok(outcome(
        "subsidy",
        cfg,
        results,
        checks,
        vec![supply_t, profit_t, flow_t],
    ))
}
