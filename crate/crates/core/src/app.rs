//! Configuration, verification suites, computations and reports behind the
//! `realweight` binary.
//!
//! A [`Config`] is read from a key-value TOML file, then overridden by the
//! `REALWEIGHT_CACHE_DIR` environment variable, then by command-line flags.
//! Every [`Report`] carries the effective configuration and a content hash of
//! the form family it used.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycles::{
    classical_reciprocity, coprime_pairs, dedekind_residual, free_reciprocity, left_right_convert,
    pair_relations, pair_to_cocycle, path_cocycle_check, period_reciprocity, random_free_cusp_element,
    reciprocity_to_dedekind_cocycle, reconstruct_symbol, twisted_pair, FreeGroup, PathModule, Side,
};
use crate::error::{Error, Result};
use crate::exact_core::{classical_symbol, format_rational, reciprocity_residual_classical, Cusp};
use crate::forms::{delta, eta_power, CuspForm, BUILT_IN_WEIGHTS};
use crate::iterated_periods::{
    compose, gamma_action, shuffle_residual, transport, transport_cached, FormFamily, GeneratingSeriesValue,
    TransportConfig,
};
use crate::modular_group::{random_matrix, UniModularMatrix};
use crate::multipliers::{cocycle_residual, unit_phase};
use crate::nc_series::{word_name, NCSeries};
use crate::quadrature::{period_function, Endpoint, PeriodCache, QuadratureConfig};
use crate::reciprocity::ReciprocityEngine;

/// Environment variable overriding the cache directory of a config file.
pub const CACHE_ENV: &str = "REALWEIGHT_CACHE_DIR";

pub const MAX_DEPTH: usize = 4;
pub const MAX_FAMILY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Pretty,
}

/// Effective run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Relative quadrature tolerance; transports use a tenth of it.
    pub tolerance: f64,
    /// Number of q-expansion coefficients.
    pub truncation: usize,
    /// Series depth.
    pub depth: usize,
    /// Form family as weights `w` of `eta^{2w}`.
    pub family: Vec<f64>,
    /// Period parameter in the lower half plane, e.g. `"-1i"` or `"0.2-0.9i"`.
    pub t: String,
    pub cache_dir: Option<PathBuf>,
    pub output: OutputFormat,
    pub seed: u64,
    /// Random instances per randomized check.
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tolerance: 1e-10,
            truncation: 256,
            depth: 3,
            family: vec![12.0, 5.3],
            t: "-1i".into(),
            cache_dir: None,
            output: OutputFormat::Pretty,
            seed: 20240601,
            samples: 20,
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Applies `REALWEIGHT_CACHE_DIR` if set.
    pub fn with_env(mut self) -> Self {
        if let Some(dir) = std::env::var_os(CACHE_ENV) {
            self.cache_dir = Some(PathBuf::from(dir));
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.depth > MAX_DEPTH {
            return Err(Error::InvalidArgument(format!("depth {} exceeds {MAX_DEPTH}", self.depth)));
        }
        if self.family.len() > MAX_FAMILY {
            return Err(Error::InvalidArgument(format!("family of {} forms exceeds {MAX_FAMILY}", self.family.len())));
        }
        if let Some(w) = self.family.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidArgument(format!("weight {w} is not positive")));
        }
        if self.truncation == 0 {
            return Err(Error::InvalidArgument("truncation must be at least 1".into()));
        }
        if self.parameter()?.im >= 0.0 {
            return Err(Error::InvalidArgument(format!("t = {} is not in the lower half plane", self.t)));
        }
        Ok(())
    }

    pub fn parameter(&self) -> Result<Complex64> {
        parse_complex(&self.t)
    }

    pub fn form_family(&self) -> Result<FormFamily> {
        FormFamily::eta_powers(&self.family, self.truncation)
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig { tolerance: self.tolerance, ..QuadratureConfig::default() }
    }

    pub fn transport(&self) -> TransportConfig {
        TransportConfig { tolerance: self.tolerance / 10.0, ..TransportConfig::default() }
    }

    pub fn cache(&self) -> Result<Option<Arc<PeriodCache>>> {
        self.cache_dir.as_deref().map(|d| PeriodCache::open(d).map(Arc::new)).transpose()
    }
}

/// Parses `a+bi`, `bi`, `a` and the like.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&s).map_err(|_| Error::Parse(format!("not a complex number: {s:?}")))
}

// ---------------------------------------------------------------------------
// Reports

/// One verified relation instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub relation: String,
    pub inputs: String,
    pub residual: Option<f64>,
    /// Set for checks decided by exact equality.
    pub exact: Option<bool>,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
    #[serde(skip)]
    numeric_failure: bool,
}

impl CheckRecord {
    pub fn numeric(id: impl Into<String>, relation: &str, inputs: impl Into<String>, residual: Result<f64>, tolerance: f64) -> Self {
        let mut r = Self::blank(id, relation, inputs, tolerance);
        match residual {
            Ok(x) => {
                r.pass = x <= tolerance;
                r.residual = Some(x);
            }
            Err(e) => r.fail(e),
        }
        r
    }

    pub fn exact(id: impl Into<String>, relation: &str, inputs: impl Into<String>, equal: Result<bool>) -> Self {
        let mut r = Self::blank(id, relation, inputs, 0.0);
        match equal {
            Ok(x) => {
                r.pass = x;
                r.exact = Some(x);
            }
            Err(e) => r.fail(e),
        }
        r
    }

    fn blank(id: impl Into<String>, relation: &str, inputs: impl Into<String>, tolerance: f64) -> Self {
        CheckRecord {
            id: id.into(),
            relation: relation.into(),
            inputs: inputs.into(),
            residual: None,
            exact: None,
            tolerance,
            pass: false,
            error: None,
            numeric_failure: false,
        }
    }

    fn fail(&mut self, e: Error) {
        self.numeric_failure = e.is_numeric();
        self.error = Some(e.to_string());
    }
}

/// Outcome of a verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub wall_time_s: f64,
    pub config: Config,
    pub form_hash: String,
}

impl Report {
    /// `0` all pass, `1` a check failed, `3` a computation did not converge.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else if self.checks.iter().any(|c| c.numeric_failure) {
            3
        } else {
            1
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["id", "relation", "inputs", "residual", "tolerance", "pass"]);
        for c in &self.checks {
            let residual = match (&c.error, c.exact, c.residual) {
                (Some(e), _, _) => format!("error: {e}"),
                (_, Some(x), _) => if x { "exact".into() } else { "differs".into() },
                (_, _, Some(r)) => format!("{r:.3e}"),
                _ => String::new(),
            };
            t.push(vec![
                c.id.clone(),
                c.relation.clone(),
                c.inputs.clone(),
                residual,
                format!("{:.0e}", c.tolerance),
                if c.pass { "PASS".into() } else { "FAIL".into() },
            ]);
        }
        t
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)?),
            OutputFormat::Csv => self.table().to_csv(),
            OutputFormat::Pretty => {
                let verdict = if self.passed { "PASS" } else { "FAIL" };
                let failed = self.checks.iter().filter(|c| !c.pass).count();
                Ok(format!(
                    "{}\nsuite {}: {verdict} ({} checks, {failed} failed, {:.2} s, family {})\n",
                    self.table().to_pretty(),
                    self.suite,
                    self.checks.len(),
                    self.wall_time_s,
                    &self.form_hash[..12.min(self.form_hash.len())]
                ))
            }
        }
    }
}

/// A rectangular table of strings rendered as CSV or aligned text.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_pretty(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (i, c) in r.iter().enumerate() {
                widths[i] = widths[i].max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{c:<w$}", w = widths[i])).collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = vec![line(&self.headers)];
        out.extend(self.rows.iter().map(|r| line(r)));
        out.join("\n")
    }
}

// ---------------------------------------------------------------------------
// Suites

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Suite {
    /// Multiplier values, the automorphy cocycle and modular invariance.
    Multiplier,
    /// Period moments of Delta against their q-series values.
    Periods,
    /// Weight action of generators on generating series.
    Action,
    /// Composition through midpoints and shuffle identities.
    Composition,
    /// Scalar and series reciprocity relations.
    Reciprocity,
    /// The Dedekind cocycle of path series.
    PathCocycle,
    /// Exact Dedekind symbols and reciprocity functions.
    Dedekind,
    /// Exact cocycle algebra.
    Cocycle,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Multiplier,
        Suite::Periods,
        Suite::Action,
        Suite::Composition,
        Suite::Reciprocity,
        Suite::PathCocycle,
        Suite::Dedekind,
        Suite::Cocycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Multiplier => "multiplier",
            Suite::Periods => "periods",
            Suite::Action => "action",
            Suite::Composition => "composition",
            Suite::Reciprocity => "reciprocity",
            Suite::PathCocycle => "path-cocycle",
            Suite::Dedekind => "dedekind",
            Suite::Cocycle => "cocycle",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type Task = Box<dyn FnOnce() -> Vec<CheckRecord> + Send>;

struct Context {
    config: Config,
    family: FormFamily,
    t: Complex64,
    cache: Option<Arc<PeriodCache>>,
}

impl Context {
    fn transport(&self, a: &Endpoint, b: &Endpoint, t: Complex64, depth: usize) -> Result<GeneratingSeriesValue> {
        match &self.cache {
            Some(c) => transport_cached(c, &self.family, a, b, t, depth, &self.config.transport()),
            None => transport(&self.family, a, b, t, depth, &self.config.transport()),
        }
    }

    fn engine(&self, depth: usize) -> ReciprocityEngine {
        let e = ReciprocityEngine::new(self.family.clone(), depth)
            .with_configs(self.config.transport(), self.config.quadrature());
        match &self.cache {
            Some(c) => e.with_cache(c.clone()),
            None => e,
        }
    }

    fn depth3(&self) -> usize {
        self.config.depth.min(3)
    }
}

/// Runs `suite` with a worker pool; checks are sorted by id.
pub fn run_suite(suite: Suite, config: &Config) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let ctx = Arc::new(Context {
        config: config.clone(),
        family: config.form_family()?,
        t: config.parameter()?,
        cache: config.cache()?,
    });
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let tasks: Vec<Task> = suites.iter().flat_map(|s| tasks_for(*s, &ctx)).collect();
    let mut checks: Vec<CheckRecord> = tasks.into_par_iter().flat_map_iter(|t| t()).collect();
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Report {
        suite: suite.name().into(),
        passed: checks.iter().all(|c| c.pass),
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: config.clone(),
        form_hash: ctx.family.content_hash(),
    })
}

fn task<F: FnOnce() -> Vec<CheckRecord> + Send + 'static>(f: F) -> Task {
    Box::new(f)
}

fn tasks_for(suite: Suite, ctx: &Arc<Context>) -> Vec<Task> {
    match suite {
        Suite::Multiplier => multiplier_tasks(ctx),
        Suite::Periods => period_tasks(),
        Suite::Action => action_tasks(ctx),
        Suite::Composition => composition_tasks(ctx),
        Suite::Reciprocity => reciprocity_tasks(ctx),
        Suite::PathCocycle => path_cocycle_tasks(ctx),
        Suite::Dedekind => dedekind_tasks(),
        Suite::Cocycle => cocycle_tasks(ctx),
        Suite::All => Vec::new(),
    }
}

fn random_upper_point<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.3..2.0))
}

fn multiplier_tasks(ctx: &Arc<Context>) -> Vec<Task> {
    let mut out = Vec::new();
    for (i, form) in ctx.family.forms.iter().enumerate() {
        let (form, seed) = (form.clone(), ctx.config.seed + i as u64);
        let w = form.weight;
        let id = move |s: &str| format!("multiplier/{i}/{s}");
        out.push(task(move || {
            let v = &form.multiplier;
            let s = UniModularMatrix::sigma();
            let th = UniModularMatrix::theta();
            let tst = UniModularMatrix::theta_sigma_theta();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut recs = vec![
                CheckRecord::numeric(id("v-sigma"), "v(sigma) = exp(-pi i w/2)", format!("w={w}"), Ok((v.value(&s) - unit_phase(-w / 2.0)).norm()), 1e-12),
                CheckRecord::numeric(id("v-theta"), "v(theta) = exp(pi i w/6)", format!("w={w}"), Ok((v.value(&th) - unit_phase(w / 6.0)).norm()), 1e-12),
                CheckRecord::numeric(id("v-theta-sigma-theta"), "v(theta sigma theta) = exp(-pi i w/6)", format!("w={w}"), Ok((v.value(&tst) - unit_phase(-w / 6.0)).norm()), 1e-12),
            ];
            let worst = (0..100).try_fold(0.0f64, |acc, _| {
                let (g, d, z) = (random_matrix(&mut rng, 6), random_matrix(&mut rng, 6), random_upper_point(&mut rng));
                Ok::<f64, Error>(acc.max(cocycle_residual(v, w, &g, &d, z)?))
            });
            recs.push(CheckRecord::numeric(id("automorphy-cocycle"), "j(gd, z) = j(g, dz) j(d, z), relative", format!("w={w}, 100 random triples"), worst, 1e-10));
            for (name, g) in [("sigma", s), ("theta", th), ("tau", UniModularMatrix::tau())] {
                let worst = (0..20).try_fold(0.0f64, |acc, _| {
                    let z = random_upper_point(&mut rng);
                    let scale = form.value(z)?.norm().max(1e-300);
                    Ok::<f64, Error>(acc.max(form.invariance_residual(&g, z)? / scale))
                });
                recs.push(CheckRecord::numeric(id(&format!("invariance-{name}")), "F(gz) = j(g, z) F(z)", format!("w={w}, 20 random z"), worst, 1e-8));
            }
            recs
        }));
    }
    out
}

/// `int_1^inf e^{-x y} y^m dy` for integer `m >= 0`.
fn upper_moment(x: f64, m: i32) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for j in (1..=m).rev() {
        term *= j as f64 / x;
        sum += term;
    }
    (-x).exp() * sum / x
}

/// `int_0^{i inf} Delta(z) z^s dz` from the q-expansion, folding `[0, 1]`
/// onto `[1, inf)` with `y -> 1/y`.
pub fn delta_moment_series(form: &CuspForm, s: i32) -> Complex64 {
    let real: f64 = form
        .coefficients()
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let x = 2.0 * PI * (n as f64 + 1.0);
            a * (upper_moment(x, s) + upper_moment(x, 10 - s))
        })
        .sum();
    Complex64::new(0.0, 1.0).powi(s + 1) * real
}

fn period_tasks() -> Vec<Task> {
    (0..=10)
        .map(|s| {
            task(move || {
                let form = Arc::new(delta());
                let want = delta_moment_series(&form, s);
                let got = crate::quadrature::integrate_along(
                    &crate::quadrature::GeodesicPath::new(Endpoint::integer(0), Endpoint::infinity()).unwrap(),
                    |z| Ok(form.value(z)? * z.powi(s)),
                    &QuadratureConfig::default(),
                );
                let r = got.map(|g| (g.value - want).norm() / want.norm());
                vec![CheckRecord::numeric(format!("periods/moment-{s:02}"), "int Delta z^s dz = q-series value", format!("s={s}"), r, 1e-8)]
            })
        })
        .collect()
}

fn action_tasks(ctx: &Arc<Context>) -> Vec<Task> {
    let gens = [
        ("sigma", UniModularMatrix::sigma()),
        ("theta", UniModularMatrix::theta()),
        ("tau", UniModularMatrix::tau()),
        ("theta-sigma-theta", UniModularMatrix::theta_sigma_theta()),
    ];
    gens.into_iter()
        .map(|(name, g)| {
            let ctx = ctx.clone();
            task(move || {
                let depth = ctx.depth3();
                let r = (|| {
                    let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
                    let j = ctx.transport(&a, &b, g.act_moebius(ctx.t)?, depth)?;
                    let lhs = gamma_action(&ctx.family, &j, &g, ctx.t)?;
                    let rhs = ctx.transport(&lhs.a, &lhs.b, ctx.t, depth)?;
                    lhs.series.max_rel_diff(&rhs.series, 1.0)
                })();
                vec![CheckRecord::numeric(
                    format!("action/{name}"),
                    "v^-1 (ct+d)^k J_a^b(gt) = J_{g^-1 a}^{g^-1 b}(t)",
                    format!("t={}, depth {depth}", ctx.t),
                    r,
                    1e-6,
                )]
            })
        })
        .collect()
}

fn composition_tasks(ctx: &Arc<Context>) -> Vec<Task> {
    let mids = [
        ("i", Endpoint::Point(Complex64::new(0.0, 1.0))),
        ("-1", Endpoint::integer(-1)),
        ("1", Endpoint::integer(1)),
    ];
    let mut out: Vec<Task> = mids
        .into_iter()
        .map(|(name, mid)| {
            let ctx = ctx.clone();
            task(move || {
                let depth = ctx.depth3();
                let r = (|| {
                    let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
                    let direct = ctx.transport(&a, &b, ctx.t, depth)?;
                    let joined = compose(&ctx.transport(&a, &mid, ctx.t, depth)?, &ctx.transport(&mid, &b, ctx.t, depth)?)?;
                    joined.series.max_rel_diff(&direct.series, 1e-12)
                })();
                vec![CheckRecord::numeric(format!("composition/midpoint-{name}"), "J_a^b = J_c^b J_a^c", format!("c={name}, depth {depth}"), r, 1e-8)]
            })
        })
        .collect();
    let ctx = ctx.clone();
    out.push(task(move || {
        let depth = ctx.depth3();
        let r = (|| {
            let j = ctx.transport(&Endpoint::integer(0), &Endpoint::infinity(), ctx.t, depth)?;
            let words: Vec<_> = NCSeries::<Complex64>::zero(ctx.family.len(), depth).words().collect();
            let mut worst: f64 = 0.0;
            for w1 in &words {
                for w2 in words.iter().filter(|w2| w1.len() + w2.len() <= depth) {
                    worst = worst.max(shuffle_residual(&j, w1, w2)?);
                }
            }
            Ok(worst)
        })();
        vec![CheckRecord::numeric("composition/shuffle", "I(u) I(v) = sum of shuffles", format!("depth {depth}"), r, 1e-7)]
    }));
    out
}

const SERIES_PAIRS: [(i64, i64); 5] = [(1, 1), (1, 2), (2, 1), (2, 3), (3, 2)];

fn reciprocity_tasks(ctx: &Arc<Context>) -> Vec<Task> {
    let scalar = Arc::new(ctx.engine(1));
    let series = Arc::new(ctx.engine(ctx.depth3()));
    let mut out = Vec::new();
    for p in 1..=5i64 {
        for q in 1..=5i64 {
            if num_integer::gcd(p, q) != 1 {
                continue;
            }
            let e = scalar.clone();
            out.push(task(move || {
                vec![CheckRecord::numeric(
                    format!("reciprocity/scalar/{p}-{q}"),
                    "scalar three-term relation",
                    format!("p={p}, q={q}"),
                    e.scalar_residual(p, q).map(|r| r.relative),
                    1e-7,
                )]
            }));
        }
    }
    for (p, q) in SERIES_PAIRS {
        let e = series.clone();
        out.push(task(move || {
            vec![CheckRecord::numeric(
                format!("reciprocity/series/{p}-{q}"),
                "series three-term relation",
                format!("p={p}, q={q}, depth {}", e.depth),
                e.series_residual(p, q).map(|r| r.relative),
                1e-6,
            )]
        }));
    }
    for (p, q) in [(1, -1), (2, -1), (3, -2)] {
        let e = scalar.clone();
        out.push(task(move || {
            vec![
                CheckRecord::numeric(
                    format!("reciprocity/sign/{p}{q}"),
                    "f(p,q) + v(sigma) f(-q,p) = 0",
                    format!("p={p}, q={q}"),
                    e.sign_change_scalar_residual(p, q).map(|r| r.relative),
                    1e-8,
                ),
                CheckRecord::numeric(
                    format!("reciprocity/double-extension/{p}{q}"),
                    "extending twice is the action of -I",
                    format!("p={p}, q={q}"),
                    e.double_extension_residual(-q, p),
                    1e-8,
                ),
            ]
        }));
    }
    let ctx = ctx.clone();
    out.push(task(move || {
        let depth = ctx.depth3();
        let r = (|| {
            let (a, b) = (Endpoint::integer(0), Endpoint::infinity());
            let there = ctx.transport(&a, &b, ctx.t, depth)?;
            let back = ctx.transport(&b, &a, ctx.t, depth)?;
            Ok(there.series.multiply(&back.series)?.distance_to_identity())
        })();
        vec![CheckRecord::numeric("reciprocity/inverse", "J_0^inf J_inf^0 = 1", format!("depth {depth}"), r, 1e-8)]
    }));
    out
}

fn path_cocycle_tasks(ctx: &Arc<Context>) -> Vec<Task> {
    let ctx = ctx.clone();
    vec![task(move || {
        let depth = ctx.depth3();
        let module = PathModule::new(ctx.family.clone(), ctx.t, depth, ctx.config.transport());
        let report = module.and_then(|m| {
            let m = match &ctx.cache {
                Some(c) => m.with_cache(c.clone()),
                None => m,
            };
            path_cocycle_check(Arc::new(m), ctx.config.samples, ctx.config.seed)
        });
        let inputs = format!("t={}, depth {depth}", ctx.t);
        match report {
            Err(e) => vec![CheckRecord::numeric("path-cocycle", "path cocycle", inputs, Err(e), 1e-6)],
            Ok(r) => {
                let mut recs = vec![
                    CheckRecord::numeric("path-cocycle/sigma", "X sigma(X) = 1", inputs.clone(), Ok(r.sigma_relation), 1e-6),
                    CheckRecord::numeric("path-cocycle/tau", "Y tau(Y) tau^2(Y) = 1", inputs.clone(), Ok(r.tau_relation), 1e-6),
                    CheckRecord::numeric("path-cocycle/dedekind", "tau(X) = Y", inputs.clone(), Ok(r.dedekind), 1e-6),
                ];
                for (i, l) in r.laws.iter().enumerate() {
                    let inputs = format!("g1={}, g2={}", l.gamma1, l.gamma2);
                    recs.push(CheckRecord::numeric(format!("path-cocycle/law-{i:02}/base-point"), "J^a_{g1 g2 a} = J^a_{g1 a} g1 J^a_{g2 a}", inputs.clone(), Ok(l.base_point), 1e-6));
                    recs.push(CheckRecord::numeric(format!("path-cocycle/law-{i:02}/pair"), "l(g1 g2) = l(g1) g1 l(g2)", inputs, Ok(l.pair), 1e-6));
                }
                recs
            }
        }
    })]
}

fn dedekind_tasks() -> Vec<Task> {
    vec![
        task(|| {
            let ok = (1..=200i64).into_par_iter().try_for_each(|p| {
                for q in 1..=200i64 {
                    if num_integer::gcd(p, q) == 1 && !num_traits::Zero::is_zero(&reciprocity_residual_classical(p, q)?) {
                        return Err(Error::RelationViolated(format!("({p}, {q})")));
                    }
                }
                Ok(())
            });
            let r = match ok {
                Ok(()) => Ok(true),
                Err(Error::RelationViolated(_)) => Ok(false),
                Err(e) => Err(e),
            };
            vec![CheckRecord::exact("dedekind/classical-reciprocity", "d(p,q) - d(q,-p) = (p^2+q^2-3pq+1)/(12pq)", "0 < p, q <= 200", r)]
        }),
        task(|| {
            let d = reconstruct_symbol(&classical_reciprocity());
            let eq = coprime_pairs(30)
                .into_iter()
                .filter(|&(p, _)| p > 0)
                .try_fold(true, |acc, (p, q)| Ok::<bool, Error>(acc && d.value(p, q)? == classical_symbol(p, q)?));
            let rep = d.validate(30, 0.0);
            vec![
                CheckRecord::exact("dedekind/classical-reconstruction", "reconstructed D = s(q, p)", "|p|, |q| <= 30", eq),
                CheckRecord::exact("dedekind/classical-relations", "periodicity, sign, reciprocity", "|p|, |q| <= 30", Ok(rep.passed())),
            ]
        }),
        task(|| {
            let f = free_reciprocity();
            let d = reconstruct_symbol(&f);
            let frep = crate::cocycles::validate_reciprocity(&f, 30, 0.0);
            let drep = d.validate(30, 0.0);
            vec![
                CheckRecord::exact("dedekind/free-reciprocity", "f(p,-q) = f(-p,q), f(p,q) f(-q,p) = 1, three-term", "|p|, |q| <= 30", Ok(frep.passed())),
                CheckRecord::exact("dedekind/free-symbol", "periodicity, sign, reciprocity (word level)", "|p|, |q| <= 30", Ok(drep.passed())),
            ]
        }),
    ]
}

fn cocycle_tasks(ctx: &Arc<Context>) -> Vec<Task> {
    let seed = ctx.config.seed;
    let mut out: Vec<Task> = (0..50u64)
        .map(|i| {
            task(move || {
                let m = Arc::new(FreeGroup::<Cusp>::new());
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
                let (g, h) = (random_free_cusp_element(&mut rng, 4, 4), random_free_cusp_element(&mut rng, 4, 4));
                let side = if i % 2 == 0 { Side::Left } else { Side::Right };
                let r = pair_to_cocycle(m.clone(), twisted_pair(&*m, side, &g, &h), 0.0).map(|c| {
                    let law = (0..5).all(|_| {
                        let (a, b) = (random_matrix(&mut rng, 5), random_matrix(&mut rng, 5));
                        c.law_residual(&a, &b) == 0.0
                    });
                    let other = left_right_convert(&c);
                    let back = left_right_convert(&other);
                    let round = back.pair().sigma == c.pair().sigma && back.pair().tau == c.pair().tau;
                    let relations = pair_relations(&*m, other.pair()) == [0.0, 0.0];
                    (law, round && relations)
                });
                let inputs = format!("{side:?} pair, seed {}", seed.wrapping_add(i));
                vec![
                    CheckRecord::exact(format!("cocycle/free-{i:02}/law"), "cocycle law on 5 random pairs", inputs.clone(), r.as_ref().map(|x| x.0).map_err(Clone::clone)),
                    CheckRecord::exact(format!("cocycle/free-{i:02}/round-trip"), "left-right conversion twice is the identity", inputs, r.map(|x| x.1)),
                ]
            })
        })
        .collect();
    out.push(task(move || {
        let r = reciprocity_to_dedekind_cocycle(&classical_reciprocity(), 7, 0.0).and_then(|(m, pair)| {
            let rel = pair_relations(&*m, &pair) == [0.0, 0.0];
            let ded = dedekind_residual(&*m, &pair) == 0.0;
            let c = pair_to_cocycle(m.clone(), pair, 0.0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let law = (0..50).all(|_| c.law_residual(&random_matrix(&mut rng, 5), &random_matrix(&mut rng, 5)) == 0.0);
            let right = left_right_convert(&c);
            let right_ded = dedekind_residual(&*m, right.pair()) == 0.0 && pair_relations(&*m, right.pair()) == [0.0, 0.0];
            Ok([rel, ded, law, right_ded])
        });
        let names = [
            ("relations", "X sigma(X) = 1, Y tau(Y) tau^2(Y) = 1"),
            ("dedekind", "Y = tau X"),
            ("law", "cocycle law on 50 random pairs"),
            ("right-dedekind", "V = U|sigma after conversion"),
        ];
        names
            .iter()
            .enumerate()
            .map(|(i, (id, rel))| {
                CheckRecord::exact(format!("cocycle/classical/{id}"), rel, "rational function module, |p|, |q| <= 7", r.as_ref().map(|x| x[i]).map_err(Clone::clone))
            })
            .collect()
    }));
    out.push(task(|| {
        let r = period_reciprocity(&delta(), &QuadratureConfig::default())
            .map(|f| crate::cocycles::validate_reciprocity(&f, 8, 1e-10).max_residual);
        vec![CheckRecord::numeric("cocycle/period-reciprocity", "Delta period values satisfy the reciprocity relations", "|p|, |q| <= 8", r, 1e-10)]
    }));
    out
}

// ---------------------------------------------------------------------------
// Computations

/// A computed value with a table view for CSV and pretty output.
pub trait Tabular: Serialize {
    fn table(&self) -> Table;

    fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)?),
            OutputFormat::Csv => self.table().to_csv(),
            OutputFormat::Pretty => Ok(self.table().to_pretty()),
        }
    }
}

fn cplx(z: Complex64) -> [String; 2] {
    [format!("{:.17e}", z.re), format!("{:.17e}", z.im)]
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodValue {
    pub w: f64,
    pub k: f64,
    pub t: Complex64,
    pub value: Complex64,
    pub error: f64,
}

impl Tabular for PeriodValue {
    fn table(&self) -> Table {
        let mut t = Table::new(&["w", "k", "t", "re", "im", "error"]);
        let [re, im] = cplx(self.value);
        t.push(vec![self.w.to_string(), self.k.to_string(), self.t.to_string(), re, im, format!("{:.3e}", self.error)]);
        t
    }
}

/// `int_0^{i inf} F(z) (z - t)^k dz` for `F = eta^{2w}`.
pub fn compute_period(config: &Config, w: f64, t: Complex64) -> Result<PeriodValue> {
    let form = Arc::new(eta_power(w, config.truncation)?);
    let est = match config.cache()? {
        Some(c) => c.period_integral(&crate::quadrature::OneForm::new(form.clone(), t)?, &Endpoint::integer(0), &Endpoint::infinity(), &config.quadrature())?,
        None => period_function(form.clone(), t, &config.quadrature())?,
    };
    Ok(PeriodValue { w, k: form.k(), t, value: est.value, error: est.error })
}

impl Tabular for GeneratingSeriesValue {
    fn table(&self) -> Table {
        let mut t = Table::new(&["word", "re", "im", "error"]);
        for (w, re, im, err) in GeneratingSeriesValue::table(self) {
            t.push(vec![w, format!("{re:.17e}"), format!("{im:.17e}"), format!("{err:.3e}")]);
        }
        t
    }
}

/// `J_a^b(t)` for the configured family.
pub fn compute_iterate(config: &Config, a: &Endpoint, b: &Endpoint, t: Complex64, depth: usize) -> Result<GeneratingSeriesValue> {
    if depth > MAX_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    let family = config.form_family()?;
    match config.cache()? {
        Some(c) => transport_cached(&c, &family, a, b, t, depth, &config.transport()),
        None => transport(&family, a, b, t, depth, &config.transport()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReciprocityOutput {
    pub p: i64,
    pub q: i64,
    pub provenance: String,
    pub scalar: Vec<Complex64>,
    pub series: NCSeries,
}

impl Tabular for ReciprocityOutput {
    fn table(&self) -> Table {
        let mut t = Table::new(&["word", "re", "im"]);
        for (w, c) in self.series.terms() {
            let [re, im] = cplx(*c);
            t.push(vec![word_name(&w), re, im]);
        }
        t
    }
}

fn engine(config: &Config, depth: usize) -> Result<ReciprocityEngine> {
    let e = ReciprocityEngine::new(config.form_family()?, depth).with_configs(config.transport(), config.quadrature());
    Ok(match config.cache()? {
        Some(c) => e.with_cache(c),
        None => e,
    })
}

/// The generalized reciprocity function at `(p, q)`.
pub fn compute_reciprocity(config: &Config, p: i64, q: i64, depth: usize) -> Result<ReciprocityOutput> {
    let e = engine(config, depth.min(MAX_DEPTH))?;
    let v = e.f(p, q)?;
    let scalar = (0..e.family.len()).map(|j| v.value.coefficient(&[j]).copied()).collect::<Result<_>>()?;
    Ok(ReciprocityOutput { p, q, provenance: format!("{:?}", v.provenance).to_lowercase(), scalar, series: v.value })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualOutput {
    pub p: i64,
    pub q: i64,
    pub depth: usize,
    pub series_absolute: f64,
    pub series_relative: f64,
    pub scalar_absolute: f64,
    pub scalar_relative: f64,
}

impl Tabular for ResidualOutput {
    fn table(&self) -> Table {
        let mut t = Table::new(&["relation", "absolute", "relative"]);
        t.push(vec!["series".into(), format!("{:.3e}", self.series_absolute), format!("{:.3e}", self.series_relative)]);
        t.push(vec!["scalar".into(), format!("{:.3e}", self.scalar_absolute), format!("{:.3e}", self.scalar_relative)]);
        t
    }
}

/// Residuals of the series and scalar three-term relations at `(p, q)`.
pub fn compute_residuals(config: &Config, p: i64, q: i64, depth: usize) -> Result<ResidualOutput> {
    let depth = depth.min(MAX_DEPTH);
    let s = engine(config, depth)?.series_residual(p, q)?;
    let c = engine(config, 1)?.scalar_residual(p, q)?;
    Ok(ResidualOutput {
        p,
        q,
        depth,
        series_absolute: s.absolute,
        series_relative: s.relative,
        scalar_absolute: c.absolute,
        scalar_relative: c.relative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    /// Dedekind sums, from the classical reciprocity function.
    Classical,
    /// The generic free-group symbol.
    Free,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolTable {
    pub kind: SymbolKind,
    pub rows: Vec<(i64, i64, String)>,
}

impl Tabular for SymbolTable {
    fn table(&self) -> Table {
        let mut t = Table::new(&["p", "q", "value"]);
        for (p, q, v) in &self.rows {
            t.push(vec![p.to_string(), q.to_string(), v.clone()]);
        }
        t
    }
}

/// `D(p, q)` for one pair, or for every coprime pair up to `bound`.
pub fn compute_symbol(kind: SymbolKind, pair: Option<(i64, i64)>, bound: i64) -> Result<SymbolTable> {
    let pairs = match pair {
        Some(pq) => vec![pq],
        None => coprime_pairs(bound),
    };
    let rows = match kind {
        SymbolKind::Classical => {
            let d = reconstruct_symbol(&classical_reciprocity());
            pairs.into_iter().map(|(p, q)| Ok((p, q, format_rational(&d.value(p, q)?)))).collect::<Result<_>>()?
        }
        SymbolKind::Free => {
            let d = reconstruct_symbol(&free_reciprocity());
            pairs.into_iter().map(|(p, q)| Ok((p, q, d.value(p, q)?.to_string()))).collect::<Result<_>>()?
        }
    };
    Ok(SymbolTable { kind, rows })
}

/// Summary of a built-in form.
#[derive(Debug, Clone, Serialize)]
pub struct FormSummary {
    pub w: f64,
    pub k: f64,
    pub alpha: f64,
    pub hash: String,
    pub leading: Vec<f64>,
    pub v_sigma: Complex64,
    pub v_theta: Complex64,
    pub v_theta_sigma_theta: Complex64,
}

impl FormSummary {
    pub fn new(form: &CuspForm) -> Self {
        let v = &form.multiplier;
        FormSummary {
            w: form.weight,
            k: form.k(),
            alpha: form.alpha(),
            hash: form.content_hash(),
            leading: form.coefficients().iter().take(8).copied().collect(),
            v_sigma: v.value(&UniModularMatrix::sigma()),
            v_theta: v.value(&UniModularMatrix::theta()),
            v_theta_sigma_theta: v.value(&UniModularMatrix::theta_sigma_theta()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormList(pub Vec<FormSummary>);

impl Tabular for FormList {
    fn table(&self) -> Table {
        let mut t = Table::new(&["w", "k", "alpha", "v(sigma)", "v(theta)", "v(theta sigma theta)", "a_1..a_4", "hash"]);
        let z = |c: Complex64| format!("{:.6}{:+.6}i", c.re, c.im);
        for f in &self.0 {
            let lead: Vec<String> = f.leading.iter().take(4).map(|a| format!("{a:.6}")).collect();
            t.push(vec![
                f.w.to_string(),
                format!("{:.4}", f.k),
                format!("{:.6}", f.alpha),
                z(f.v_sigma),
                z(f.v_theta),
                z(f.v_theta_sigma_theta),
                lead.join(" "),
                f.hash[..12].to_string(),
            ]);
        }
        t
    }
}

/// The built-in forms.
pub fn list_forms(truncation: usize) -> Result<FormList> {
    BUILT_IN_WEIGHTS.iter().map(|&w| Ok(FormSummary::new(&eta_power(w, truncation)?))).collect::<Result<_>>().map(FormList)
}

/// One form by weight.
pub fn inspect_form(w: f64, truncation: usize) -> Result<FormList> {
    Ok(FormList(vec![FormSummary::new(&eta_power(w, truncation)?)]))
}
