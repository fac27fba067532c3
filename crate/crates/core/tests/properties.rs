use proptest::prelude::*;

use spillover_core::costmin::{
    foc_residuals, knowledge_price_literal, knowledge_price_nounit, knowledge_price_roots, minimize_cost,
    KnowledgePriceInputs, PriceSystem, ProductionFunction, SolverOptions,
};
use spillover_core::equilibrium::{
    br_dynamics, symmetric_contest_effort, verify_nash, BestResponseOptions, DeviationSpec,
};
use spillover_core::market::{
    accumulate_knowledge, cost_slopes, market_shares, CostModel, EffortProfile, FirmParams, Market, SpilloverMatrix,
};
use spillover_core::subsidy::{inverse_supply_price, limit_price, subsidized_profit, SupplyCurve};

fn theta_strategy(n: usize) -> impl Strategy<Value = SpilloverMatrix> {
    prop::collection::vec(0.0..=1.0f64, n * n).prop_map(move |v| {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { v[i * n + j] }).collect())
            .collect();
        SpilloverMatrix::from_rows(&rows).unwrap()
    })
}

fn market_case() -> impl Strategy<Value = (SpilloverMatrix, Vec<f64>, Vec<f64>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            theta_strategy(n),
            prop::collection::vec(0.0..5.0f64, n),
            prop::collection::vec(0.01..3.0f64, n),
        )
    })
}

fn kp_inputs() -> impl Strategy<Value = KnowledgePriceInputs> {
    (
        0.5..2.0f64,
        0.5..2.0f64,
        0.5..2.0f64,
        0.5..2.0f64,
        0.5..2.0f64,
        0.5..2.0f64,
    )
        .prop_map(
            |(effort_price, effort, knowledge, multiplier, marginal_knowledge, efficiency)| KnowledgePriceInputs {
                effort,
                knowledge,
                multiplier,
                marginal_knowledge,
                effort_price,
                efficiency,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shares_are_a_distribution((theta, x, a) in market_case()) {
        let _ = theta;
        let x = EffortProfile::new(x).unwrap();
        match market_shares(&x, &a) {
            Ok(s) => {
                let total: f64 = s.iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            Err(e) => prop_assert_eq!(e, spillover_core::ModelError::DegenerateMarket),
        }
    }

    #[test]
    fn knowledge_dominates_effort_and_is_monotone((theta, x, _a) in market_case(), bump in 0.0..1.0f64) {
        let n = theta.n();
        let xp = EffortProfile::new(x.clone()).unwrap();
        let k = accumulate_knowledge(&xp, &theta).unwrap();
        for i in 0..n {
            prop_assert!(k[i] >= x[i]);
        }
        // Raising any effort or any off-diagonal θ never lowers knowledge.
        let mut x2 = x.clone();
        x2[0] += bump;
        let k2 = accumulate_knowledge(&EffortProfile::new(x2).unwrap(), &theta).unwrap();
        prop_assert!(k2.iter().zip(&k).all(|(a, b)| a >= b));
        let mut rows = theta.rows();
        rows[n - 1][0] = (rows[n - 1][0] + bump).min(1.0);
        let theta2 = SpilloverMatrix::from_rows(&rows).unwrap();
        let k3 = accumulate_knowledge(&xp, &theta2).unwrap();
        prop_assert!(k3.iter().zip(&k).all(|(a, b)| a >= b));
    }

    #[test]
    fn profit_decomposes((theta, x, a) in market_case(), gamma in 0.0..3.0f64) {
        let n = theta.n();
        let firms: Vec<FirmParams> = a.iter().map(|&w| FirmParams {
            attraction_weight: w,
            knowledge_efficiency: gamma,
            ..Default::default()
        }).collect();
        let market = Market::new(firms, theta).unwrap();
        let x = EffortProfile::new(x).unwrap();
        let Ok(shares) = market.shares(&x) else { return Ok(()); };
        let k = market.knowledge(&x).unwrap();
        for i in 0..n {
            let profit = market.profit(i, &x, &CostModel::Simple).unwrap();
            let cost = CostModel::Simple.cost(market.firm(i), x[i], k[i]).unwrap();
            prop_assert!((profit + cost - shares[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn costs_rise_in_effort_and_fall_in_knowledge(
        x in 0.0..10.0f64, k in 0.0..10.0f64,
        c in 0.0..3.0f64, beta in 0.0..3.0f64, g in 0.0..3.0f64, zeta in 0.01..3.0f64,
    ) {
        let params = FirmParams {
            knowledge_efficiency: g,
            cost_num_coeff: c,
            cost_num_const: beta,
            cost_den_coeff: g,
            cost_den_const: zeta,
            ..Default::default()
        };
        // Keep the stencil on k >= 0.
        let k = k.max(1e-3);
        for model in [CostModel::Rational, CostModel::Simple] {
            let s = cost_slopes(&model, &params, x, k, None).unwrap();
            prop_assert!(s.d_effort >= -1e-9);
            prop_assert!(s.d_knowledge <= 1e-9);
        }
    }

    #[test]
    fn knowledge_prices_are_negative(inputs in kp_inputs()) {
        let sol = knowledge_price_roots(&inputs).unwrap();
        prop_assert!(sol.root_upper < 0.0 && sol.root_lower < 0.0);
        prop_assert!(knowledge_price_literal(&inputs).unwrap() < 0.0);
        prop_assert!(knowledge_price_nounit(&inputs).unwrap() < 0.0);
        let k = inputs.knowledge;
        prop_assert!(1.0 + sol.root_upper * k > 0.0);
        prop_assert!(1.0 + sol.root_lower * k < 0.0);
    }

    #[test]
    fn quadratic_roots_satisfy_vieta_and_foc(inputs in kp_inputs()) {
        let sol = knowledge_price_roots(&inputs).unwrap();
        let k = inputs.knowledge;
        let m = inputs.marginal_value();
        let product = sol.root_upper * sol.root_lower * k * k;
        prop_assert!((product - 1.0).abs() <= 1e-10);
        let sum = -(2.0 * k + inputs.effort_price * inputs.effort / m) / (k * k);
        prop_assert!(((sol.root_upper + sol.root_lower - sum) / sum).abs() <= 1e-10);
        prop_assert!(sol.foc_residual_at_selected.abs() <= 1e-10);
        prop_assert!(sol.foc_residual_at_lower.abs() <= 1e-10);
    }

    #[test]
    fn marginals_match_finite_differences(
        scale in 0.2..5.0f64, alpha in 0.05..0.95f64, beta in 0.05..0.95f64,
        x in 0.05..20.0f64, k in 0.05..20.0f64,
    ) {
        let f = ProductionFunction::cobb_douglas(scale, alpha, beta).unwrap();
        let (fx, fk) = f.marginals(x, k).unwrap();
        let h = |v: f64| 1e-6 * v.abs().max(1.0);
        let nx = (f.output(x + h(x), k).unwrap() - f.output(x - h(x), k).unwrap()) / (2.0 * h(x));
        let nk = (f.output(x, k + h(k)).unwrap() - f.output(x, k - h(k)).unwrap()) / (2.0 * h(k));
        prop_assert!(((fx - nx) / fx).abs() <= 1e-6);
        prop_assert!(((fk - nk) / fk).abs() <= 1e-6);
    }

    #[test]
    fn supply_price_approaches_limit(base in -20.0..20.0f64, a in -50.0..50.0f64, q in 1e-3..1e9f64) {
        let c = SupplyCurve::new(base, a).unwrap();
        let gap = (inverse_supply_price(&c, q).unwrap() - limit_price(&c)).abs();
        prop_assert!(gap <= a.abs() / q * (1.0 + 1e-12) + 1e-12 * base.abs());
        let gap2 = (inverse_supply_price(&c, 2.0 * q).unwrap() - limit_price(&c)).abs();
        prop_assert!(gap2 <= gap + 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn subsidy_adds_to_share_and_matches_no_unit_profit(
        (theta, x, a) in market_case(), p in 0.1..3.0f64, r in -3.0..-0.01f64, g in 0.1..3.0f64,
    ) {
        let firms: Vec<FirmParams> = a.iter().map(|&w| FirmParams {
            attraction_weight: w,
            knowledge_efficiency: g,
            ..Default::default()
        }).collect();
        let market = Market::new(firms, theta).unwrap();
        let x: Vec<f64> = x.iter().map(|v| v + 0.01).collect();
        let x = EffortProfile::new(x).unwrap();
        let model = CostModel::PricedNoUnit { effort_price: p, knowledge_price: r };
        for i in 0..market.n() {
            let s = subsidized_profit(i, &x, &market, p, r, g).unwrap();
            prop_assert!(s.profit - s.share > 0.0);
            let reference = market.profit(i, &x, &model).unwrap();
            prop_assert!((s.profit - reference).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minimizer_is_invariant_to_joint_rescaling(
        scale in 0.5..2.0f64, alpha in 0.2..0.8f64, beta in 0.2..0.8f64,
        p in 0.5..2.0f64, r in -2.0..-0.1f64, g in 0.5..2.0f64, q in 0.5..2.0f64,
    ) {
        let f = ProductionFunction::cobb_douglas(scale, alpha, beta).unwrap();
        let prices = PriceSystem::new(p, r, g).unwrap();
        let opts = SolverOptions::default();
        let base = minimize_cost(&prices, q, &f, &opts).unwrap();
        let scaled = minimize_cost(&prices, 2.0 * q, &f.rescaled(2.0).unwrap(), &opts).unwrap();
        prop_assert!(((base.point.effort - scaled.point.effort) / base.point.effort).abs() <= 1e-8);
        prop_assert!(((base.point.knowledge - scaled.point.knowledge) / base.point.knowledge).abs() <= 1e-8);
        prop_assert!(base.foc.max_abs_residual <= 1e-8);
    }

    #[test]
    fn attraction_scale_leaves_equilibrium_unchanged(c in 0.2..5.0f64, spill in 0.0..1.0f64, gamma in 0.0..0.5f64) {
        let market = Market::symmetric(2, FirmParams::with_efficiency(gamma), spill).unwrap();
        let scaled = market.scale_attraction(c).unwrap();
        let x0 = EffortProfile::new(vec![0.1, 0.3]).unwrap();
        let opts = BestResponseOptions::default();
        let a = br_dynamics(&x0, &market, &CostModel::Simple, &opts).unwrap();
        let b = br_dynamics(&x0, &scaled, &CostModel::Simple, &opts).unwrap();
        prop_assert!(a.converged && b.converged);
        for (u, v) in a.profile.iter().zip(&b.profile) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
        let sa = market.shares(&EffortProfile::new(a.profile.clone()).unwrap()).unwrap();
        let sb = scaled.shares(&EffortProfile::new(a.profile.clone()).unwrap()).unwrap();
        for (u, v) in sa.iter().zip(&sb) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn spillover_edges_are_exact() {
    for n in 2..=8 {
        let x: Vec<f64> = (0..n).map(|i| 0.37 * (i as f64 + 1.0).sqrt()).collect();
        let xp = EffortProfile::new(x.clone()).unwrap();
        let k0 = accumulate_knowledge(&xp, &SpilloverMatrix::isolated(n).unwrap()).unwrap();
        assert_eq!(k0, x);
        let k1 = accumulate_knowledge(&xp, &SpilloverMatrix::uniform(n, 1.0).unwrap()).unwrap();
        let total = x.iter().fold(0.0, |a, b| a + b);
        assert!(k1.iter().all(|&k| k == total));
    }
}

#[test]
fn constructed_stationary_point_is_recovered() {
    // For the Cobb-Douglas form a stationary point on the positive branch has
    // γr·k = −β/(α+β); pick (x₀, k₀), set r accordingly, take λ from the
    // effort condition and check the quadratic reproduces γr.
    let f = ProductionFunction::cobb_douglas(1.4, 0.35, 0.55).unwrap();
    let (x0, k0, p, gamma) = (0.8, 1.7, 1.3, 0.9);
    let u = -f.knowledge_exponent / ((f.effort_exponent + f.knowledge_exponent) * k0);
    let (fx, fk) = f.marginals(x0, k0).unwrap();
    let lambda = p / ((1.0 + u * k0) * fx);
    let sol = knowledge_price_roots(&KnowledgePriceInputs {
        effort: x0,
        knowledge: k0,
        multiplier: lambda,
        marginal_knowledge: fk,
        effort_price: p,
        efficiency: gamma,
    })
    .unwrap();
    assert!((sol.root_upper - u).abs() < 1e-12);

    let prices = PriceSystem::new(p, u / gamma, gamma).unwrap();
    let q = f.output(x0, k0).unwrap();
    let point = spillover_core::costmin::LagrangePoint {
        effort: x0,
        knowledge: k0,
        multiplier: lambda,
    };
    assert!(foc_residuals(&point, &prices, q, &f).unwrap().max_abs_residual < 1e-12);

    let min = minimize_cost(&prices, q, &f, &SolverOptions::default()).unwrap();
    assert!((min.point.effort - x0).abs() < 1e-8);
    assert!((min.point.knowledge - k0).abs() < 1e-8);
    assert!((min.point.multiplier - lambda).abs() < 1e-8);
}

#[test]
fn positive_price_minimum_sits_on_cap() {
    let f = ProductionFunction::default();
    let opts = SolverOptions {
        knowledge_cap: 20.0,
        ..Default::default()
    };
    let prices = PriceSystem::new(1.0, 0.01, 1.0).unwrap();
    let min = minimize_cost(&prices, 1.0, &f, &opts).unwrap();
    assert!(min.boundary);
    let exact_x = f.effort_for(1.0, 20.0).unwrap();
    assert!(((min.point.effort - exact_x) / exact_x).abs() < 1e-10);
    // Brute force over the same box: nothing feasible is cheaper.
    let n = 200;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let k = 20.0 * (1e-4f64).powf(1.0 - i as f64 / (n - 1) as f64);
        for j in 0..n {
            let x = 1e-3 * (1e5f64).powf(j as f64 / (n - 1) as f64);
            let q = f.output(x, k).unwrap();
            if (1.0..=1.05).contains(&q) {
                best = best.min(prices.cost(x, k).unwrap());
            }
        }
    }
    assert!(min.cost <= best);
}

#[test]
fn contest_dynamics_match_closed_form_for_many_sizes() {
    for n in 2..=6 {
        let market = Market::symmetric(n, FirmParams::with_efficiency(0.0), 0.35).unwrap();
        let x0 = EffortProfile::uniform(n, 0.05).unwrap();
        let rep = br_dynamics(&x0, &market, &CostModel::Simple, &BestResponseOptions::default()).unwrap();
        assert!(rep.converged, "n = {n}");
        let target = symmetric_contest_effort(n).unwrap();
        for &x in &rep.profile {
            assert!((x - target).abs() <= 1e-6, "n = {n}: {x} vs {target}");
        }
        // Symmetric start, symmetric market: identical efforts.
        let first = rep.profile[0];
        assert!(rep.profile.iter().all(|&x| (x - first).abs() <= 1e-10));
        // Fixed-point soundness.
        let profile = EffortProfile::new(rep.profile.clone()).unwrap();
        let check = verify_nash(&profile, &market, &CostModel::Simple, &DeviationSpec::default()).unwrap();
        assert!(check.accepts(10.0 * BestResponseOptions::default().refine_tolerance));
    }
}

#[test]
fn damping_does_not_move_the_equilibrium() {
    for n in [2, 3] {
        let market = Market::symmetric(n, FirmParams::with_efficiency(0.4), 0.6).unwrap();
        let x0 = EffortProfile::uniform(n, 0.1).unwrap();
        let half = br_dynamics(&x0, &market, &CostModel::Simple, &BestResponseOptions::default()).unwrap();
        let full_opts = BestResponseOptions {
            damping: 1.0,
            ..Default::default()
        };
        let full = br_dynamics(&x0, &market, &CostModel::Simple, &full_opts).unwrap();
        assert!(half.converged && full.converged);
        for (a, b) in half.profile.iter().zip(&full.profile) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}
