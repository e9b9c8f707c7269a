//! TOML experiment configuration.
//!
//! A config is a flat document with a few sections:
//!
//! ```toml
//! schema_version = 1
//! horizon = 4096
//!
//! [seeds]
//! base = 0
//! count = 20
//!
//! [metric]
//! kind = "interval_ld"
//! d = 1.0
//!
//! [payoff]
//! kind = "peak_function"
//! peak = 0.3
//!
//! [rewards]
//! kind = "bernoulli"
//!
//! [algorithm]
//! kind = "zooming"
//! rule = { kind = "standard", c = 8.0 }
//! ```
//!
//! Points are written in the form the metric expects: a number on the
//! interval, an index into a finite space, an array of child indices on a
//! tree and a two-element array on a product.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::algorithms::{AlgorithmConfig, FatDecomposition, LevelSet, RadiusRule};
use crate::error::{Error, Result};
use crate::instances::{
    generate_needle_tower, NeedleTower, NeedleTowerSpec, PayoffDescriptor, ProblemInstance,
    RewardModel,
};
use crate::metric::{
    FatSpec, FiniteMetric, LeafSet, MetricDescriptor, Point, Shape, DEFAULT_NET_CAP,
};
use crate::simulator::DEFAULT_WINDOW_FRACTION;

pub const SCHEMA_VERSION: i64 = 1;

/// A parsed config file. Sections are interpreted on demand, so a command
/// only fails on the sections it uses.
#[derive(Clone, Debug)]
pub struct Document {
    path: PathBuf,
    text: String,
    pub table: Table,
}

/// Sweep axis: `field` is a dotted key replaced by each entry of `values`.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub field: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub lipschitz_pairs: usize,
    pub lipschitz_tolerance: f64,
    pub clean: bool,
    pub clean_horizon: Option<u64>,
    pub chernoff_alpha: f64,
    pub chernoff_means: Vec<f64>,
    pub chernoff_plays: Vec<u64>,
    pub chernoff_trials: u64,
}

#[derive(Clone, Debug)]
pub struct DimConfig {
    pub c: f64,
    pub radii: Vec<f64>,
    pub grid_cap: u128,
}

fn describe(v: &Value) -> &'static str {
    v.type_str()
}

impl Document {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(path, text)
    }

    pub fn parse(path: &Path, text: String) -> Result<Self> {
        let table: Table = toml::from_str(&text).map_err(|e| {
            Error::Config(format!("{}: {}", path.display(), e.to_string().trim_end()))
        })?;
        let doc = Self {
            path: path.to_path_buf(),
            text,
            table,
        };
        match doc.table.get("schema_version") {
            None => return Err(doc.err("", "missing key schema_version")),
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(v) => {
                return Err(doc.err(
                    "schema_version",
                    &format!(
                        "unsupported schema_version {v}, this build reads version {SCHEMA_VERSION}"
                    ),
                ))
            }
        }
        Ok(doc)
    }

    /// Copy with the dotted key `field` set to `value`.
    pub fn with_override(&self, field: &str, value: Value) -> Result<Self> {
        let mut doc = self.clone();
        let mut parts: Vec<&str> = field.split('.').collect();
        let last = parts
            .pop()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| self.err("sweep", "empty sweep field"))?;
        let mut table = &mut doc.table;
        for p in parts {
            let entry = table
                .entry(p.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            table = entry.as_table_mut().ok_or_else(|| {
                self.err(
                    "sweep",
                    &format!("sweep field {field}: {p} is not a section"),
                )
            })?;
        }
        table.insert(last.to_string(), value);
        Ok(doc)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Line of the first header or assignment for `key` (a dotted path).
    fn line_of(&self, key: &str) -> Option<usize> {
        if key.is_empty() {
            return None;
        }
        let last = key.rsplit('.').next().unwrap_or(key);
        let header = |l: &str| {
            let l = l.trim_start();
            l.strip_prefix('[')
                .map(|r| r.trim_start_matches('['))
                .is_some_and(|r| {
                    r.strip_prefix(key)
                        .is_some_and(|rest| rest.starts_with(']') || rest.starts_with('.'))
                })
        };
        let assign = |l: &str| {
            let l = l.trim_start();
            l.strip_prefix(last)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        };
        let lines: Vec<&str> = self.text.lines().collect();
        lines
            .iter()
            .position(|l| header(l))
            .or_else(|| lines.iter().position(|l| assign(l)))
            .map(|i| i + 1)
    }

    fn err(&self, key: &str, msg: &str) -> Error {
        match self.line_of(key) {
            Some(line) => Error::Config(format!("{}:{line}: {msg}", self.path.display())),
            None => Error::Config(format!("{}: {msg}", self.path.display())),
        }
    }

    /// Config error anchored at `key`, wrapping a lower-level error.
    fn wrap(&self, key: &str, e: Error) -> Error {
        self.err(key, &format!("[{key}] {e}"))
    }

    fn section(&self, name: &str) -> Result<&Table> {
        match self.table.get(name) {
            Some(Value::Table(t)) => Ok(t),
            Some(_) => Err(self.err(name, &format!("{name} must be a section"))),
            None => Err(self.err("", &format!("missing section [{name}]"))),
        }
    }

    fn opt_section(&self, name: &str) -> Result<Option<&Table>> {
        match self.table.get(name) {
            None => Ok(None),
            Some(_) => self.section(name).map(Some),
        }
    }

    pub fn horizon(&self) -> Result<u64> {
        let h = match self.table.get("horizon") {
            None => return Err(self.err("", "missing key horizon")),
            Some(v) => v
                .as_integer()
                .ok_or_else(|| self.err("horizon", "horizon must be an integer"))?,
        };
        if h < 2 {
            return Err(self.err("horizon", &format!("horizon must be >= 2, got {h}")));
        }
        Ok(h as u64)
    }

    /// Seeds `base, base + 1, ...`; `seed_base` replaces the configured base.
    pub fn seeds(&self, seed_base: Option<u64>) -> Result<Vec<u64>> {
        let s = self.opt_section("seeds")?;
        let f = Fields {
            doc: self,
            key: "seeds",
            table: s,
        };
        let base = match seed_base {
            Some(b) => b,
            None => f.uint("base")?.unwrap_or(0),
        };
        let count = f.uint("count")?.unwrap_or(1);
        if count < 1 {
            return Err(self.err("seeds", "seeds.count must be >= 1"));
        }
        Ok((0..count).map(|k| base.wrapping_add(k)).collect())
    }

    pub fn fit_window(&self) -> Result<f64> {
        let f = Fields {
            doc: self,
            key: "fit_window",
            table: Some(&self.table),
        };
        let w = f.float("fit_window")?.unwrap_or(DEFAULT_WINDOW_FRACTION);
        if !(w > 0.0 && w < 1.0) {
            return Err(self.err(
                "fit_window",
                &format!("fit_window must lie in (0, 1), got {w}"),
            ));
        }
        Ok(w)
    }

    pub fn output_dir(&self) -> Result<Option<PathBuf>> {
        let f = Fields {
            doc: self,
            key: "output",
            table: self.opt_section("output")?,
        };
        Ok(f.string("dir")?.map(PathBuf::from))
    }

    pub fn metric(&self) -> Result<MetricDescriptor> {
        let t = self.section("metric")?;
        parse_metric(self, "metric", t)
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        let metric = self.metric()?;
        let payoff = parse_payoff(self, "payoff", self.section("payoff")?, &metric)?;
        let rewards = match self.opt_section("rewards")? {
            None => RewardModel::Bernoulli,
            Some(t) => Value::Table(t.clone())
                .try_into::<RewardModel>()
                .map_err(|e| {
                    self.err(
                        "rewards",
                        &format!("[rewards] {}", e.to_string().trim_end()),
                    )
                })?,
        };
        let seed = Fields {
            doc: self,
            key: "instance_seed",
            table: Some(&self.table),
        }
        .uint("instance_seed")?;
        ProblemInstance::new(metric, payoff, rewards, seed.unwrap_or(0))
            .map_err(|e| self.wrap("payoff", e))
    }

    pub fn algorithm(&self, metric: &MetricDescriptor) -> Result<AlgorithmConfig> {
        let t = self.section("algorithm")?;
        let cfg = parse_algorithm(self, "algorithm", t, metric)?;
        cfg.validate().map_err(|e| self.wrap("algorithm", e))?;
        Ok(cfg)
    }

    pub fn sweep(&self) -> Result<Sweep> {
        let t = self.section("sweep")?;
        let f = Fields {
            doc: self,
            key: "sweep",
            table: Some(t),
        };
        let field = f
            .string("field")?
            .ok_or_else(|| self.err("sweep", "sweep needs a field"))?;
        let values = match t.get("values") {
            Some(Value::Array(a)) if !a.is_empty() => a.clone(),
            Some(Value::Array(_)) => return Err(self.err("sweep", "sweep.values is empty")),
            Some(_) => return Err(self.err("sweep", "sweep.values must be an array")),
            None => return Err(self.err("sweep", "sweep needs values")),
        };
        Ok(Sweep { field, values })
    }

    pub fn verify(&self) -> Result<VerifyConfig> {
        let f = Fields {
            doc: self,
            key: "verify",
            table: self.opt_section("verify")?,
        };
        Ok(VerifyConfig {
            lipschitz_pairs: f.uint("lipschitz_pairs")?.unwrap_or(20_000) as usize,
            lipschitz_tolerance: f.float("lipschitz_tolerance")?.unwrap_or(1e-9),
            clean: f.boolean("clean")?.unwrap_or(true),
            clean_horizon: f.uint("clean_horizon")?,
            chernoff_alpha: f.float("chernoff_alpha")?.unwrap_or(10.0),
            chernoff_means: f
                .floats("chernoff_means")?
                .unwrap_or_else(|| vec![0.01, 0.5, 0.99]),
            chernoff_plays: f
                .uints("chernoff_plays")?
                .unwrap_or_else(|| vec![10, 100, 1000]),
            chernoff_trials: f.uint("chernoff_trials")?.unwrap_or(0),
        })
    }

    pub fn needle_spec(&self) -> Result<NeedleTowerSpec> {
        let host = self.metric()?;
        let t = self.section("needle")?;
        needle_spec(self, "needle", t, host)
    }

    pub fn dim(&self) -> Result<DimConfig> {
        let f = Fields {
            doc: self,
            key: "dim",
            table: self.opt_section("dim")?,
        };
        let radii = f
            .floats("radii")?
            .unwrap_or_else(|| (2..=8).map(|k| (-(k as f64)).exp2()).collect());
        Ok(DimConfig {
            c: f.float("c")?.unwrap_or(16.0),
            radii,
            grid_cap: f
                .uint("grid_cap")?
                .map_or(crate::instances::DEFAULT_GRID_CAP, u128::from),
        })
    }
}

/// Typed access to the keys of one table, with errors anchored at `key`.
struct Fields<'a> {
    doc: &'a Document,
    key: &'a str,
    table: Option<&'a Table>,
}

impl Fields<'_> {
    fn get(&self, name: &str) -> Option<&Value> {
        self.table.and_then(|t| t.get(name))
    }

    fn bad(&self, name: &str, want: &str, v: &Value) -> Error {
        let anchor = if self.key == name {
            name.to_string()
        } else {
            format!("{}.{name}", self.key)
        };
        self.doc.err(
            &anchor,
            &format!("{anchor} must be {want}, got {}", describe(v)),
        )
    }

    fn float(&self, name: &str) -> Result<Option<f64>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(self.bad(name, "a number", v)),
        }
    }

    fn req_float(&self, name: &str) -> Result<f64> {
        self.float(name)?.ok_or_else(|| self.missing(name))
    }

    fn uint(&self, name: &str) -> Result<Option<u64>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(self.bad(name, "a nonnegative integer", v)),
        }
    }

    fn req_uint(&self, name: &str) -> Result<u64> {
        self.uint(name)?.ok_or_else(|| self.missing(name))
    }

    fn boolean(&self, name: &str) -> Result<Option<bool>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(self.bad(name, "a boolean", v)),
        }
    }

    fn string(&self, name: &str) -> Result<Option<String>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(self.bad(name, "a string", v)),
        }
    }

    fn kind(&self) -> Result<String> {
        self.string("kind")?.ok_or_else(|| self.missing("kind"))
    }

    fn floats(&self, name: &str) -> Result<Option<Vec<f64>>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    v => Err(self.bad(name, "an array of numbers", v)),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(v) => Err(self.bad(name, "an array of numbers", v)),
        }
    }

    fn uints(&self, name: &str) -> Result<Option<Vec<u64>>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    v => Err(self.bad(name, "an array of nonnegative integers", v)),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(v) => Err(self.bad(name, "an array of nonnegative integers", v)),
        }
    }

    fn table(&self, name: &str) -> Result<Option<&Table>> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(v) => Err(self.bad(name, "a table", v)),
        }
    }

    fn missing(&self, name: &str) -> Error {
        self.doc
            .err(self.key, &format!("[{}] is missing {name}", self.key))
    }

    fn sub(&self, name: &str) -> String {
        format!("{}.{name}", self.key)
    }
}

fn parse_metric(doc: &Document, key: &str, t: &Table) -> Result<MetricDescriptor> {
    let f = Fields {
        doc,
        key,
        table: Some(t),
    };
    let wrap = |e| doc.wrap(key, e);
    let kind = f.kind()?;
    match kind.as_str() {
        "interval_ld" | "interval" => {
            MetricDescriptor::interval(f.float("d")?.unwrap_or(1.0)).map_err(wrap)
        }
        "finite_explicit" | "finite" => {
            if let Some(v) = f.get("matrix") {
                let rows: Vec<Vec<f64>> = v
                    .clone()
                    .try_into()
                    .map_err(|_| f.bad("matrix", "a matrix of numbers", v))?;
                return MetricDescriptor::finite(rows).map_err(wrap);
            }
            let n = f.req_uint("points")? as usize;
            let matrix = match f.float("spacing")? {
                Some(s) => FiniteMetric::line(n, s),
                None => FiniteMetric::uniform(n, f.float("distance")?.unwrap_or(1.0)),
            }
            .map_err(wrap)?;
            Ok(MetricDescriptor::FiniteExplicit { matrix })
        }
        "weighted_tree" | "tree" => {
            let fat = match f.string("fat")?.as_deref() {
                None | Some("none") => FatSpec::None,
                Some("leaf") => FatSpec::Leaf,
                Some("subtree") => FatSpec::Subtree,
                Some(other) => {
                    return Err(doc.err(
                        key,
                        &format!("unknown fat kind {other:?}, expected none, leaf or subtree"),
                    ))
                }
            };
            MetricDescriptor::tree(
                f.float("d")?.unwrap_or(1.0),
                f.uint("depth")?.unwrap_or(24) as usize,
                f.uint("branching")?.unwrap_or(2),
                fat,
            )
            .map_err(wrap)
        }
        "product" => {
            let left = f.table("left")?.ok_or_else(|| f.missing("left"))?;
            let right = f.table("right")?.ok_or_else(|| f.missing("right"))?;
            Ok(MetricDescriptor::product(
                parse_metric(doc, &f.sub("left"), left)?,
                parse_metric(doc, &f.sub("right"), right)?,
            ))
        }
        "shaped" => {
            let base = f.table("base")?.ok_or_else(|| f.missing("base"))?;
            let shape = parse_shape(&f)?;
            Ok(MetricDescriptor::shaped(
                parse_metric(doc, &f.sub("base"), base)?,
                shape,
            ))
        }
        other => Err(doc.err(key, &format!("unknown metric kind {other:?}"))),
    }
}

fn parse_shape(f: &Fields<'_>) -> Result<Shape> {
    Shape::new(
        f.float("offset")?.unwrap_or(0.0),
        f.float("scale")?.unwrap_or(1.0),
        f.req_float("exponent")?,
    )
    .map_err(|e| f.doc.wrap(f.key, e))
}

/// Read a point written in the form `metric` expects.
pub fn parse_point(metric: &MetricDescriptor, v: &Value) -> std::result::Result<Point, String> {
    let p = match (metric, v) {
        (MetricDescriptor::Shaped { base, .. }, _) => return parse_point(base, v),
        (MetricDescriptor::IntervalLd { .. }, Value::Float(x)) => Point::Interval(*x),
        (MetricDescriptor::IntervalLd { .. }, Value::Integer(i)) => Point::Interval(*i as f64),
        (MetricDescriptor::FiniteExplicit { .. }, Value::Integer(i)) if *i >= 0 => {
            Point::Finite(*i as usize)
        }
        (MetricDescriptor::WeightedTree { .. }, Value::Array(a)) => Point::Tree(
            a.iter()
                .map(|c| c.as_integer().filter(|&i| i >= 0).map(|i| i as u64))
                .collect::<Option<Vec<u64>>>()
                .ok_or("tree points are arrays of child indices")?,
        ),
        (MetricDescriptor::Product { left, right }, Value::Array(a)) if a.len() == 2 => {
            Point::product(parse_point(left, &a[0])?, parse_point(right, &a[1])?)
        }
        (m, v) => {
            let want = match m {
                MetricDescriptor::IntervalLd { .. } => "a number in [0, 1]",
                MetricDescriptor::FiniteExplicit { .. } => "a point index",
                MetricDescriptor::WeightedTree { .. } => "an array of child indices",
                _ => "a two-element array",
            };
            return Err(format!("expected {want}, got {}", describe(v)));
        }
    };
    metric.validate_point(&p).map_err(|e| e.to_string())?;
    Ok(p)
}

fn point_field(f: &Fields<'_>, metric: &MetricDescriptor, name: &str) -> Result<Point> {
    let v = f.get(name).ok_or_else(|| f.missing(name))?;
    parse_point(metric, v).map_err(|e| f.doc.err(f.key, &format!("{}.{name}: {e}", f.key)))
}

fn targets(f: &Fields<'_>, metric: &MetricDescriptor) -> Result<Vec<Point>> {
    if f.get("target").is_some() {
        return Ok(vec![point_field(f, metric, "target")?]);
    }
    match f.get("targets") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| {
                parse_point(metric, v)
                    .map_err(|e| f.doc.err(f.key, &format!("{}.targets: {e}", f.key)))
            })
            .collect(),
        Some(v) => Err(f.bad("targets", "an array of points", v)),
        None => Err(f.missing("targets")),
    }
}

fn parse_payoff(
    doc: &Document,
    key: &str,
    t: &Table,
    metric: &MetricDescriptor,
) -> Result<PayoffDescriptor> {
    let f = Fields {
        doc,
        key,
        table: Some(t),
    };
    let kind = f.kind()?;
    Ok(match kind.as_str() {
        "explicit_finite" => PayoffDescriptor::ExplicitFinite {
            values: f.floats("values")?.ok_or_else(|| f.missing("values"))?,
        },
        "distance_to_target" => PayoffDescriptor::DistanceToTarget {
            targets: targets(&f, metric)?,
        },
        "shaped_target" => {
            let shape = match f.table("shape")? {
                Some(s) => parse_shape(&Fields {
                    doc,
                    key: &f.sub("shape"),
                    table: Some(s),
                })?,
                None => return Err(f.missing("shape")),
            };
            PayoffDescriptor::ShapedTarget {
                targets: targets(&f, metric)?,
                shape,
            }
        }
        "peak_function" => PayoffDescriptor::PeakFunction {
            peak: point_field(&f, metric, "peak")?,
            mu_star: f.float("mu_star")?.unwrap_or(1.0),
        },
        "bump" => {
            let base = f.table("base")?.ok_or_else(|| f.missing("base"))?;
            PayoffDescriptor::Bump {
                base: Box::new(parse_payoff(doc, &f.sub("base"), base, metric)?),
                center: point_field(&f, metric, "center")?,
                radius: f.req_float("radius")?,
                height: f.req_float("height")?,
            }
        }
        "needle_tower" => {
            let tower = match f.string("file")? {
                Some(file) => {
                    let path = doc.path.parent().unwrap_or(Path::new("")).join(&file);
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        doc.err(
                            key,
                            &format!("cannot read needle file {}: {e}", path.display()),
                        )
                    })?;
                    let tower: NeedleTower = serde_json::from_str(&text).map_err(|e| {
                        doc.err(key, &format!("needle file {}: {e}", path.display()))
                    })?;
                    if &tower.host != metric {
                        return Err(doc.err(key, "needle file was generated on a different metric"));
                    }
                    tower
                }
                None => generate_needle_tower(&needle_spec(doc, key, t, metric.clone())?)
                    .map_err(|e| doc.wrap(key, e))?,
            };
            PayoffDescriptor::NeedleTower(tower)
        }
        other => return Err(doc.err(key, &format!("unknown payoff kind {other:?}"))),
    })
}

fn needle_spec(
    doc: &Document,
    key: &str,
    t: &Table,
    host: MetricDescriptor,
) -> Result<NeedleTowerSpec> {
    let f = Fields {
        doc,
        key,
        table: Some(t),
    };
    Ok(NeedleTowerSpec {
        a: f.req_float("a")?,
        b: f.req_float("b")?,
        depth_cap: f.req_uint("depth_cap")? as usize,
        host,
        seed: f.uint("seed")?.unwrap_or(0),
    })
}

fn parse_algorithm(
    doc: &Document,
    key: &str,
    t: &Table,
    metric: &MetricDescriptor,
) -> Result<AlgorithmConfig> {
    let f = Fields {
        doc,
        key,
        table: Some(t),
    };
    let kind = f.kind()?;
    Ok(match kind.as_str() {
        "ucb1_phased" | "ucb1" => AlgorithmConfig::Ucb1Phased,
        "naive" => AlgorithmConfig::Naive {
            d: f.req_float("d")?,
            net_cap: f.uint("net_cap")?.map_or(DEFAULT_NET_CAP, |c| c as usize),
        },
        "zooming" => {
            let rule = match f.get("rule") {
                None => RadiusRule::standard(),
                Some(v @ Value::Table(_)) => v.clone().try_into::<RadiusRule>().map_err(|e| {
                    doc.err(
                        &f.sub("rule"),
                        &format!("[{key}.rule] {}", e.to_string().trim_end()),
                    )
                })?,
                Some(v) => return Err(f.bad("rule", "a table", v)),
            };
            AlgorithmConfig::Zooming { rule }
        }
        "quota" => {
            let d = f.req_float("d")?;
            let sub = f.sub("decomposition");
            let Some(dt) = f.table("decomposition")? else {
                return Err(doc.err(key, &format!("quota needs a [{sub}] section")));
            };
            AlgorithmConfig::Quota {
                d,
                decomposition: parse_decomposition(doc, &sub, dt, metric)?,
            }
        }
        other => return Err(doc.err(key, &format!("unknown algorithm kind {other:?}"))),
    })
}

fn parse_decomposition(
    doc: &Document,
    key: &str,
    t: &Table,
    metric: &MetricDescriptor,
) -> Result<FatDecomposition> {
    let f = Fields {
        doc,
        key,
        table: Some(t),
    };
    let dec = match f.kind()?.as_str() {
        "fat_tree" => FatDecomposition::for_fat_tree(metric).map_err(|e| doc.wrap(key, e))?,
        "explicit" => {
            let d_star = f.req_float("d_star")?;
            let levels = match f.get("levels") {
                Some(Value::Array(a)) => a
                    .iter()
                    .map(|v| {
                        let Value::Table(lt) = v else {
                            return Err(f.bad("levels", "an array of tables", v));
                        };
                        let lf = Fields {
                            doc,
                            key,
                            table: Some(lt),
                        };
                        Ok(match lf.kind()?.as_str() {
                            "whole" => LevelSet::Whole,
                            "fat_leaf" => LevelSet::Leaves {
                                set: LeafSet::FatLeaf,
                            },
                            "fat_subtree" => LevelSet::Leaves {
                                set: LeafSet::FatSubtree,
                            },
                            "points" => match lt.get("points") {
                                Some(Value::Array(ps)) => LevelSet::Points {
                                    points: ps
                                        .iter()
                                        .map(|p| {
                                            parse_point(metric, p).map_err(|e| doc.err(key, &e))
                                        })
                                        .collect::<Result<_>>()?,
                                },
                                _ => return Err(lf.missing("points")),
                            },
                            other => {
                                return Err(doc.err(key, &format!("unknown level kind {other:?}")))
                            }
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
                Some(v) => return Err(f.bad("levels", "an array of tables", v)),
                None => return Err(f.missing("levels")),
            };
            FatDecomposition { levels, d_star }
        }
        other => return Err(doc.err(key, &format!("unknown decomposition kind {other:?}"))),
    };
    dec.validate(metric).map_err(|e| doc.wrap(key, e))?;
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Result<Document> {
        Document::parse(Path::new("t.toml"), text.to_string())
    }

    const BASE: &str = r#"
schema_version = 1
horizon = 100

[metric]
kind = "interval_ld"

[payoff]
kind = "peak_function"
peak = 0.3
"#;

    #[test]
    fn minimal_instance() {
        let d = doc(BASE).unwrap();
        let inst = d.instance().unwrap();
        assert_eq!(inst.mu_star(), 1.0);
        assert_eq!(d.seeds(None).unwrap(), vec![0]);
        assert_eq!(d.seeds(Some(7)).unwrap(), vec![7]);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let e = doc("schema_version = 1\nhorizon = = 3\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn semantic_errors_carry_a_line() {
        let text = format!("{BASE}\n[algorithm]\nkind = \"quota\"\nd = 2.0\n");
        let d = doc(&text).unwrap();
        let e = d.algorithm(&d.metric().unwrap()).unwrap_err().to_string();
        assert!(e.contains("t.toml:12:"), "{e}");
        assert!(e.contains("[algorithm.decomposition]"), "{e}");
    }

    #[test]
    fn schema_version_is_checked() {
        assert!(doc("horizon = 3").is_err());
        assert!(doc("schema_version = 2").is_err());
    }

    #[test]
    fn points_follow_the_metric() {
        let tree = MetricDescriptor::tree(1.0, 3, 2, FatSpec::None).unwrap();
        let v: Value = toml::from_str::<Table>("p = [0, 1, 1]").unwrap()["p"].clone();
        assert_eq!(parse_point(&tree, &v).unwrap(), Point::Tree(vec![0, 1, 1]));
        assert!(parse_point(&MetricDescriptor::interval(1.0).unwrap(), &v).is_err());
        let prod = MetricDescriptor::product(MetricDescriptor::interval(1.0).unwrap(), tree);
        let v: Value = toml::from_str::<Table>("p = [0.5, [1, 0, 0]]").unwrap()["p"].clone();
        assert!(parse_point(&prod, &v).is_ok());
    }

    #[test]
    fn overrides_replace_nested_keys() {
        let d = doc(BASE).unwrap();
        let d2 = d.with_override("payoff.peak", Value::Float(0.7)).unwrap();
        assert_eq!(
            d2.instance().unwrap().payoff(),
            &PayoffDescriptor::PeakFunction {
                peak: Point::Interval(0.7),
                mu_star: 1.0
            }
        );
    }
}
