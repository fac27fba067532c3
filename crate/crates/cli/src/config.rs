//! Scenario configuration: JSON schema types, loading, resolution of
//! defaults and generators, and field-addressed validation.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use spillover_core::costmin::{ProductionFunction, RSource, SolverOptions};
use spillover_core::equilibrium::{BestResponseOptions, DeviationSpec};
use spillover_core::market::{CostModel, FirmParams, SpilloverMatrix};
use spillover_core::subsidy::{split_market_with, DEFAULT_BASE_PRICE};
use spillover_core::ModelError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub market: MarketBlock,
    pub production: ProductionFunction,
    pub prices: PricesBlock,
    pub game: GameBlock,
    pub subsidy: SubsidyBlock,
    pub sweep: SweepBlock,
    pub output: OutputBlock,
}

/// Spillover matrix, given explicitly or generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    /// Same coefficient for every off-diagonal pair.
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
    /// Off-diagonal entries drawn uniformly from `[low, high]` using the run seed.
    Random {
        low: f64,
        high: f64,
    },
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Uniform(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketBlock {
    pub n: usize,
    /// One entry per firm; defaults to `n` copies of the default firm.
    pub firms: Option<Vec<FirmParams>>,
    pub theta: ThetaSpec,
    /// Effort profile evaluated by `simulate` and `subsidy`; defaults to all ones.
    pub efforts: Option<Vec<f64>>,
    pub cost_model: CostModel,
}

impl Default for MarketBlock {
    fn default() -> Self {
        MarketBlock {
            n: 2,
            firms: None,
            theta: ThetaSpec::default(),
            efforts: None,
            cost_model: CostModel::Simple,
        }
    }
}

/// A candidate `(x, k, λ)` supplied directly instead of solving for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub effort: f64,
    pub knowledge: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricesBlock {
    pub effort_price: f64,
    /// When set, `solve` minimizes cost at this price.
    pub knowledge_price: Option<f64>,
    pub efficiency: f64,
    pub q_target: f64,
    /// Source of the headline `r*`.
    pub r_source: RSource,
    /// `λ` used for the price triple at equilibrium efforts.
    pub multiplier: f64,
    /// When set, `solve` also evaluates FOCs and prices at this point.
    pub point: Option<PointSpec>,
    pub solver: SolverOptions,
}

impl Default for PricesBlock {
    fn default() -> Self {
        PricesBlock {
            effort_price: 1.0,
            knowledge_price: None,
            efficiency: 1.0,
            q_target: 1.0,
            r_source: RSource::Quadratic,
            multiplier: 1.0,
            point: None,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameBlock {
    pub options: BestResponseOptions,
    /// Starting profile; defaults to 0.1 for every firm.
    pub initial_profile: Option<Vec<f64>>,
    /// Run the unilateral-deviation scan on the final profile.
    pub verify: bool,
    pub deviation: DeviationSpec,
    /// Firm whose triple is reported as the market's.
    pub representative: usize,
    pub sources: Vec<RSource>,
}

impl Default for GameBlock {
    fn default() -> Self {
        GameBlock {
            options: BestResponseOptions::default(),
            initial_profile: None,
            verify: true,
            deviation: DeviationSpec::default(),
            representative: 0,
            sources: RSource::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for QGrid {
    fn default() -> Self {
        QGrid {
            min: 1.0,
            max: 1e12,
            points: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubsidyBlock {
    pub base_price: f64,
    pub slope_coeff: f64,
    /// Quantity bought by each buyer; defaults to 1 each.
    pub quantities: Option<Vec<f64>>,
    /// Relabelling applied before splitting; defaults to the identity.
    pub permutation: Option<Vec<usize>>,
    pub q_grid: QGrid,
    pub effort_price: f64,
    /// Must be negative.
    pub knowledge_price: f64,
    pub efficiency: f64,
}

impl Default for SubsidyBlock {
    fn default() -> Self {
        SubsidyBlock {
            base_price: DEFAULT_BASE_PRICE,
            slope_coeff: 1.0,
            quantities: None,
            permutation: None,
            q_grid: QGrid::default(),
            effort_price: 1.0,
            knowledge_price: -1.0,
            efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Negativity, FOC and Vieta checks on the knowledge-price quadratic.
    KnowledgePrice,
    /// Constrained cost minimization against its closed-form optimum.
    Minimizer,
    /// Share normalization, knowledge dominance and profit decomposition.
    Market,
}

/// Closed interval `[low, high]` written as a two-element array.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepRanges {
    pub effort_price: Range,
    pub effort: Range,
    pub knowledge: Range,
    pub multiplier: Range,
    pub marginal_knowledge: Range,
    pub efficiency: Range,
    pub knowledge_price: Range,
    pub q_target: Range,
    pub scale: Range,
    pub effort_exponent: Range,
    pub knowledge_exponent: Range,
    pub firms: [usize; 2],
    pub attraction: Range,
    pub spillover: Range,
    pub market_effort: Range,
}

impl Default for SweepRanges {
    fn default() -> Self {
        SweepRanges {
            effort_price: [0.5, 2.0],
            effort: [0.5, 2.0],
            knowledge: [0.5, 2.0],
            multiplier: [0.5, 2.0],
            marginal_knowledge: [0.5, 2.0],
            efficiency: [0.5, 2.0],
            knowledge_price: [-2.0, -0.1],
            q_target: [0.5, 2.0],
            scale: [0.5, 2.0],
            effort_exponent: [0.2, 0.8],
            knowledge_exponent: [0.2, 0.8],
            firms: [2, 8],
            attraction: [0.1, 2.0],
            spillover: [0.0, 1.0],
            market_effort: [0.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub samples: usize,
    /// Run seed; also drives the random spillover generator.
    pub seed: u64,
    pub pipelines: Vec<Pipeline>,
    pub ranges: SweepRanges,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            samples: 1000,
            seed: 0,
            pipelines: vec![Pipeline::KnowledgePrice, Pipeline::Minimizer, Pipeline::Market],
            ranges: SweepRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub format: OutputFormat,
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            format: OutputFormat::Both,
            dir: PathBuf::from("out"),
        }
    }
}

/// One problem found while loading or validating a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Dotted field path, e.g. `market.theta[0][1]`.
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: ")?,
            (Some(l), None) => write!(f, "line {l}: ")?,
            _ => {}
        }
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Parses a config document. Unknown keys and type errors are reported with
/// their field path and source position.
pub fn parse(text: &str) -> Result<ScenarioConfig, Vec<Diagnostic>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        vec![Diagnostic {
            path,
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }]
    })
}

/// Reads, parses and validates a config file, attaching source lines to
/// validation diagnostics where the offending key can be located.
pub fn load(path: &Path) -> Result<(ScenarioConfig, String), LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg = parse(&text).map_err(LoadError::Invalid)?;
    let mut diags = validate(&cfg);
    if !diags.is_empty() {
        for d in &mut diags {
            d.line = locate(&text, &d.path);
        }
        return Err(LoadError::Invalid(diags));
    }
    Ok((cfg, text))
}

#[derive(Debug)]
pub enum LoadError {
    Io { path: PathBuf, source: std::io::Error },
    Invalid(Vec<Diagnostic>),
}

/// Best-effort line of the key named by the last path segment, searching
/// segment by segment so nested keys resolve inside their parent.
fn locate(text: &str, path: &str) -> Option<usize> {
    let mut offset = 0;
    let mut found = None;
    for seg in path.split('.') {
        let name = seg.split('[').next().unwrap_or(seg);
        if name.is_empty() {
            continue;
        }
        let needle = format!("\"{name}\"");
        let pos = text[offset..].find(&needle)? + offset;
        found = Some(pos);
        offset = pos + needle.len();
    }
    found.map(|pos| text[..pos].matches('\n').count() + 1)
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        });
    }

    fn model(&mut self, prefix: &str, result: Result<(), ModelError>) {
        if let Err(e) = result {
            match e {
                ModelError::Validation { field, reason } => self.push(join(prefix, &field), reason),
                other => self.push(prefix, other.to_string()),
            }
        }
    }

    fn positive(&mut self, path: &str, v: f64, why: &str) {
        if !(v > 0.0) || !v.is_finite() {
            let suffix = if why.is_empty() {
                String::new()
            } else {
                format!(" ({why})")
            };
            self.push(path, format!("must be a finite value > 0, got {v}{suffix}"));
        }
    }

    fn nonnegative_list(&mut self, path: &str, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                self.push(format!("{path}[{i}]"), format!("must be a finite value >= 0, got {v}"));
            }
        }
    }

    fn range(&mut self, path: &str, r: Range, lo_bound: f64, hi_bound: f64, open: bool) {
        let [lo, hi] = r;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            self.push(path, format!("needs finite low <= high, got [{lo}, {hi}]"));
            return;
        }
        let inside = |v: f64| {
            if open {
                v > lo_bound && v < hi_bound
            } else {
                v >= lo_bound && v <= hi_bound
            }
        };
        if !inside(lo) || !inside(hi) {
            let (a, b) = if open { ("(", ")") } else { ("[", "]") };
            self.push(
                path,
                format!("[{lo}, {hi}] must lie within {a}{lo_bound}, {hi_bound}{b}"),
            );
        }
    }
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

/// Every invariant the run commands rely on. An empty result means valid.
pub fn validate(cfg: &ScenarioConfig) -> Vec<Diagnostic> {
    let mut c = Collector(Vec::new());
    let n = cfg.market.n;

    let m = &cfg.market;
    if n < 2 {
        c.push("market.n", format!("a market needs at least 2 firms, got {n}"));
    }
    if let Some(firms) = &m.firms {
        if firms.len() != n {
            c.push("market.firms", format!("{} entries for n = {n}", firms.len()));
        }
        for (i, f) in firms.iter().enumerate() {
            c.model(&format!("market.firms[{i}]"), f.validate());
        }
    }
    match &m.theta {
        ThetaSpec::Uniform(v) => {
            if !(0.0..=1.0).contains(v) {
                c.push(
                    "market.theta.uniform",
                    format!("spillover coefficient {v} outside [0, 1]"),
                );
            }
        }
        ThetaSpec::Matrix(rows) => {
            if rows.len() != n {
                c.push("market.theta.matrix", format!("{} rows for n = {n}", rows.len()));
            }
            c.model("market", SpilloverMatrix::from_rows(rows).map(|_| ()));
        }
        ThetaSpec::Random { low, high } => {
            c.range("market.theta.random", [*low, *high], 0.0, 1.0, false);
        }
    }
    if let Some(x) = &m.efforts {
        if x.len() != n {
            c.push("market.efforts", format!("{} entries for n = {n}", x.len()));
        }
        c.nonnegative_list("market.efforts", x);
    }
    c.model("market.cost_model", m.cost_model.validate());

    c.model("production", cfg.production.validate());

    let p = &cfg.prices;
    c.positive("prices.effort_price", p.effort_price, "");
    c.positive(
        "prices.efficiency",
        p.efficiency,
        "cost minimization needs gamma > 0, otherwise knowledge drops out of the cost",
    );
    c.positive("prices.q_target", p.q_target, "output target");
    c.positive("prices.multiplier", p.multiplier, "");
    if let Some(r) = p.knowledge_price {
        if !r.is_finite() {
            c.push("prices.knowledge_price", "must be finite");
        }
    }
    if let Some(pt) = &p.point {
        c.positive("prices.point.effort", pt.effort, "");
        c.positive("prices.point.knowledge", pt.knowledge, "");
        c.positive("prices.point.multiplier", pt.multiplier, "");
    }
    c.model("prices.solver", p.solver.validate());

    let g = &cfg.game;
    c.model("game.options", g.options.validate());
    if let Some(x0) = &g.initial_profile {
        if x0.len() != n {
            c.push("game.initial_profile", format!("{} entries for n = {n}", x0.len()));
        }
        c.nonnegative_list("game.initial_profile", x0);
    }
    if g.deviation.grid_size < 3 {
        c.push("game.deviation.grid_size", "needs at least 3 points");
    }
    if let Some(b) = g.deviation.effort_bound {
        c.positive("game.deviation.effort_bound", b, "");
    }
    if !(g.deviation.refine_width > 0.0) {
        c.push("game.deviation.refine_width", "must be > 0");
    }
    if g.representative >= n.max(1) {
        c.push(
            "game.representative",
            format!("firm {} does not exist for n = {n}", g.representative),
        );
    }
    if g.sources.is_empty() {
        c.push("game.sources", "list at least one price source");
    }

    let s = &cfg.subsidy;
    if !s.base_price.is_finite() {
        c.push("subsidy.base_price", "must be finite");
    }
    if !s.slope_coeff.is_finite() {
        c.push("subsidy.slope_coeff", "must be finite");
    }
    if let Some(q) = &s.quantities {
        if n.is_multiple_of(2) && q.len() != n / 2 {
            c.push(
                "subsidy.quantities",
                format!("{} entries for {} buyers", q.len(), n / 2),
            );
        }
        c.nonnegative_list("subsidy.quantities", q);
    }
    if let Some(perm) = &s.permutation {
        if n.is_multiple_of(2) && n >= 2 {
            c.model("subsidy", split_market_with(n, perm).map(|_| ()));
        }
    }
    c.positive("subsidy.q_grid.min", s.q_grid.min, "");
    if !(s.q_grid.max > s.q_grid.min) || !s.q_grid.max.is_finite() {
        c.push(
            "subsidy.q_grid.max",
            format!("must be finite and exceed min, got {}", s.q_grid.max),
        );
    }
    if s.q_grid.points < 2 {
        c.push("subsidy.q_grid.points", "needs at least 2 points");
    }
    c.positive("subsidy.effort_price", s.effort_price, "");
    c.positive("subsidy.efficiency", s.efficiency, "");
    if !(s.knowledge_price < 0.0) || !s.knowledge_price.is_finite() {
        c.push(
            "subsidy.knowledge_price",
            format!(
                "the subsidized profit needs a negative knowledge price, got {}",
                s.knowledge_price
            ),
        );
    }

    let w = &cfg.sweep;
    if w.samples == 0 {
        c.push("sweep.samples", "must be positive");
    }
    if w.pipelines.is_empty() {
        c.push("sweep.pipelines", "list at least one pipeline");
    }
    let r = &w.ranges;
    let inf = f64::INFINITY;
    for (name, range) in [
        ("effort_price", r.effort_price),
        ("effort", r.effort),
        ("knowledge", r.knowledge),
        ("multiplier", r.multiplier),
        ("marginal_knowledge", r.marginal_knowledge),
        ("efficiency", r.efficiency),
        ("q_target", r.q_target),
        ("scale", r.scale),
    ] {
        c.range(&format!("sweep.ranges.{name}"), range, 0.0, inf, true);
    }
    c.range("sweep.ranges.knowledge_price", r.knowledge_price, -inf, inf, true);
    c.range("sweep.ranges.effort_exponent", r.effort_exponent, 0.0, 1.0, true);
    c.range("sweep.ranges.knowledge_exponent", r.knowledge_exponent, 0.0, 1.0, true);
    c.range("sweep.ranges.spillover", r.spillover, 0.0, 1.0, false);
    c.range("sweep.ranges.attraction", r.attraction, 0.0, inf, false);
    if !(r.attraction[1] > 0.0) {
        c.push("sweep.ranges.attraction", "upper end must be > 0");
    }
    c.range("sweep.ranges.market_effort", r.market_effort, 0.0, inf, false);
    if r.firms[0] < 2 || r.firms[0] > r.firms[1] {
        c.push(
            "sweep.ranges.firms",
            format!("needs 2 <= low <= high, got [{}, {}]", r.firms[0], r.firms[1]),
        );
    }

    c.0
}

/// Stream of the seed reserved for the spillover generator; sweep rows use
/// streams `0..samples`.
const THETA_STREAM: u64 = u64::MAX;

/// Expands every default and generator so the result is self-contained:
/// running it again, with any seed, reproduces the same market. Expects a
/// config that passed [`validate`].
pub fn resolve(cfg: &ScenarioConfig, seed: u64) -> ScenarioConfig {
    let mut out = cfg.clone();
    let n = cfg.market.n;
    out.sweep.seed = seed;
    out.market.firms = Some(
        cfg.market
            .firms
            .clone()
            .unwrap_or_else(|| vec![FirmParams::default(); n]),
    );
    out.market.efforts = Some(cfg.market.efforts.clone().unwrap_or_else(|| vec![1.0; n]));
    out.market.theta = ThetaSpec::Matrix(theta_rows(&cfg.market.theta, n, seed));
    out.game.initial_profile = Some(cfg.game.initial_profile.clone().unwrap_or_else(|| vec![0.1; n]));
    if n.is_multiple_of(2) {
        out.subsidy.quantities = Some(cfg.subsidy.quantities.clone().unwrap_or_else(|| vec![1.0; n / 2]));
        out.subsidy.permutation = Some(cfg.subsidy.permutation.clone().unwrap_or_else(|| (0..n).collect()));
    }
    out
}

fn theta_rows(spec: &ThetaSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    match spec {
        ThetaSpec::Matrix(rows) => rows.clone(),
        ThetaSpec::Uniform(v) => (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { *v }).collect())
            .collect(),
        ThetaSpec::Random { low, high } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(THETA_STREAM);
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                1.0
                            } else if low == high {
                                *low
                            } else {
                                rng.gen_range(*low..=*high)
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let cfg = parse("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert!(validate(&cfg).is_empty());
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = parse("{\n  \"market\": {\n    \"nn\": 3\n  }\n}").unwrap_err();
        assert_eq!(err[0].line, Some(3));
        assert!(err[0].message.contains("unknown field"), "{}", err[0].message);
        assert!(err[0].path.starts_with("market"), "{}", err[0].path);
    }

    #[test]
    fn theta_out_of_range_is_located() {
        let text = "{\n \"market\": {\n  \"theta\": {\"matrix\": [[1, 1.5], [0, 1]]}\n }\n}";
        let cfg = parse(text).unwrap();
        let mut d = validate(&cfg);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "market.theta[0][1]");
        assert!(d[0].message.contains("[0, 1]"));
        d[0].line = locate(text, &d[0].path);
        assert_eq!(d[0].line, Some(3));
    }

    #[test]
    fn zero_gamma_is_rejected() {
        let cfg = parse(r#"{"prices": {"efficiency": 0}}"#).unwrap();
        let d = validate(&cfg);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "prices.efficiency");
        assert!(d[0].message.contains("gamma > 0"));
    }

    #[test]
    fn all_problems_are_reported() {
        let cfg = parse(r#"{"market": {"n": 1}, "production": {"scale": -1}, "sweep": {"samples": 0}}"#).unwrap();
        let paths: Vec<String> = validate(&cfg).into_iter().map(|d| d.path).collect();
        assert!(paths.contains(&"market.n".to_string()));
        assert!(paths.contains(&"production.scale".to_string()));
        assert!(paths.contains(&"sweep.samples".to_string()));
    }

    #[test]
    fn resolve_is_idempotent_and_expands_generators() {
        let cfg = parse(r#"{"market": {"n": 4, "theta": {"random": {"low": 0.2, "high": 0.6}}}}"#).unwrap();
        let r = resolve(&cfg, 7);
        let ThetaSpec::Matrix(rows) = &r.market.theta else {
            panic!()
        };
        assert!(SpilloverMatrix::from_rows(rows).is_ok());
        assert!(rows[0][1] >= 0.2 && rows[0][1] <= 0.6);
        assert_eq!(r.market.firms.as_ref().unwrap().len(), 4);
        assert_eq!(r.subsidy.quantities, Some(vec![1.0, 1.0]));
        assert_eq!(resolve(&r, 7), r);
        assert_ne!(resolve(&cfg, 8).market.theta, r.market.theta);
        assert!(validate(&r).is_empty());
    }
}
