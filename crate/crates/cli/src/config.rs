//! Flat `key=value` run configuration: parsing, flag overrides, sweep expansion and
//! validation into a [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ipdhg::precond::CtVariant;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("problem", "tvl1 | graphcut | emd | ct"),
    ("input", "tvl1 noisy image (PGM or CSV)"),
    ("input_r", "graphcut red channel"),
    ("input_g", "graphcut green channel"),
    ("input_b", "graphcut blue channel"),
    ("rho0", "emd source marginal"),
    ("rho1", "emd target marginal"),
    ("matrix", "ct system matrix (coordinate format)"),
    ("data", "ct measurements, one value per line"),
    ("rows", "ct image rows"),
    ("cols", "ct image columns"),
    ("synthetic", "built-in input instead of files"),
    ("size", "synthetic grid side"),
    ("noise", "synthetic noise level"),
    ("seed", "synthetic seed"),
    ("angles", "synthetic ct projection angles"),
    ("detectors", "synthetic ct rays per angle"),
    ("lambda", "tvl1 / ct regularization weight"),
    ("alpha", "graphcut unary weight"),
    ("beta", "graphcut edge sharpness"),
    ("h", "emd grid step"),
    ("variant", "ct preconditioner: norm | rowsum"),
    ("algorithm", "pdhg | dp-pdhg | prepdhg | iprepdhg"),
    ("inner", "iprepdhg inner iterator: bcd | proxgrad | fista"),
    ("tau", "primal step"),
    ("sigma", "pdhg dual step"),
    ("p", "inner iterations per outer step"),
    ("gamma", "inner stepsize for proxgrad / fista"),
    ("exact_tol", "prepdhg subproblem tolerance"),
    ("phi_star", "optimal value, or `reference`"),
    ("tol", "relative objective gap tolerance"),
    ("tol_feas", "feasibility tolerance"),
    ("tol_residual", "step residual tolerance without phi_star"),
    ("max_outer", "outer iteration limit"),
    ("time_budget", "wall-clock limit in seconds"),
    ("out", "output directory"),
    ("trace_stride", "record every n-th iteration"),
    ("trace_time", "record wall time in traces (true | false)"),
    ("threshold", "graphcut mask threshold"),
];

/// Keys describing the solver rather than the problem; the only ones a sweep may vary.
pub const SOLVER_KEYS: &[&str] = &["algorithm", "inner", "tau", "sigma", "p", "gamma", "exact_tol"];

const PATH_KEYS: &[&str] = &["input", "input_r", "input_g", "input_b", "rho0", "rho1", "matrix", "data"];

pub const OUTPUT_DIR_ENV: &str = "IPDHG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub key: Option<String>,
    pub msg: String,
}

impl ConfigError {
    fn at(origin: Origin, key: &str, msg: impl Into<String>) -> Self {
        Self {
            origin: Some(origin),
            key: Some(key.to_string()),
            msg: msg.into(),
        }
    }

    fn general(msg: impl Into<String>) -> Self {
        Self {
            origin: None,
            key: None,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Some(Origin::Line(l)) => write!(f, "line {l}: ")?,
            Some(Origin::Flag) => write!(f, "flag: ")?,
            None => {}
        }
        if let Some(k) = &self.key {
            write!(f, "`{k}`: ")?;
        }
        f.write_str(&self.msg)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub origin: Origin,
}

/// Unvalidated key/value pairs; later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, Entry>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl RawConfig {
    /// Parses config text: one `key=value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (k, line) in text.lines().enumerate() {
            let origin = Origin::Line(k + 1);
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
                origin: Some(origin),
                key: None,
                msg: format!("expected key=value, got `{content}`"),
            })?;
            let key = key.trim();
            if !known(key) {
                return Err(ConfigError::at(origin, key, "unknown key"));
            }
            if let Some(prev) = cfg.entries.get(key) {
                let Origin::Line(l) = prev.origin else { unreachable!() };
                return Err(ConfigError::at(origin, key, format!("duplicate key (first set on line {l})")));
            }
            cfg.entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    origin,
                },
            );
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides from the command line.
    pub fn apply_flags<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), ConfigError> {
        for (key, value) in pairs {
            if !known(key) {
                return Err(ConfigError::at(Origin::Flag, key, "unknown key"));
            }
            self.entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    origin: Origin::Flag,
                },
            );
        }
        Ok(())
    }

    /// Makes relative input paths from a config file relative to `base`, the file's directory.
    pub fn resolve_paths(&mut self, base: &std::path::Path) {
        for key in PATH_KEYS {
            if let Some(e) = self.entries.get_mut(*key) {
                if e.origin != Origin::Flag && std::path::Path::new(&e.value).is_relative() {
                    e.value = base.join(&e.value).to_string_lossy().into_owned();
                }
            }
        }
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin: Origin::Flag,
            },
        );
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn values(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).collect())
            .unwrap_or_default()
    }

    pub fn is_sweep(&self) -> bool {
        self.entries.values().any(|e| e.value.contains(','))
    }

    /// Cartesian product of comma lists. Keys that do not apply to an algorithm are
    /// not varied for it.
    pub fn expand(&self) -> Result<Vec<RawConfig>, ConfigError> {
        for (k, e) in &self.entries {
            if e.value.contains(',') && !SOLVER_KEYS.contains(&k.as_str()) {
                return Err(ConfigError::at(e.origin, k, "only solver keys can be swept"));
            }
        }
        let algorithms = if self.get("algorithm").is_some() {
            self.values("algorithm")
        } else {
            vec!["iprepdhg".to_string()]
        };
        let mut out = Vec::new();
        for alg in algorithms {
            let mut base = self.clone();
            base.set("algorithm", &alg);
            if let Some(e) = self.entries.get("algorithm") {
                base.entries.get_mut("algorithm").expect("just set").origin = e.origin;
            }
            let applicable = applicable_keys(&alg);
            let mut grid = vec![base.clone()];
            for key in SOLVER_KEYS.iter().filter(|k| **k != "algorithm") {
                if base.get(key).is_none() {
                    continue;
                }
                if !applicable.contains(key) {
                    for g in &mut grid {
                        g.entries.remove(*key);
                    }
                    continue;
                }
                let vals = base.values(key);
                let mut next = Vec::with_capacity(grid.len() * vals.len());
                for g in &grid {
                    for v in &vals {
                        let mut c = g.clone();
                        c.entries.get_mut(*key).expect("present").value = v.clone();
                        next.push(c);
                    }
                }
                grid = next;
            }
            out.extend(grid);
        }
        Ok(out)
    }

    /// Solver keys of a single (expanded) config as `key=value` words.
    pub fn solver_params(&self) -> String {
        SOLVER_KEYS
            .iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn applicable_keys(algorithm: &str) -> &'static [&'static str] {
    match algorithm {
        "pdhg" => &["tau", "sigma"],
        "dp-pdhg" => &[],
        "prepdhg" => &["tau", "exact_tol"],
        _ => &["tau", "p", "inner", "gamma"],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    TvL1,
    GraphCut,
    Emd,
    Ct,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Files(Vec<PathBuf>),
    Synthetic { name: String, size: usize, noise: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub family: FamilyName,
    pub source: Source,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h: Option<f64>,
    pub variant: CtVariant,
    pub ct_dims: Option<(usize, usize)>,
    pub angles: usize,
    pub detectors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerChoice {
    Bcd,
    ProxGrad,
    Fista,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Pdhg { tau: Option<f64>, sigma: Option<f64> },
    DpPdhg,
    PrePdhg { tau: Option<f64>, exact_tol: f64 },
    IPrePdhg {
        tau: Option<f64>,
        p: Option<usize>,
        inner: InnerChoice,
        gamma: Option<f64>,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Pdhg { .. } => "pdhg",
            Method::DpPdhg => "dp-pdhg",
            Method::PrePdhg { .. } => "prepdhg",
            Method::IPrePdhg { .. } => "iprepdhg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiStar {
    None,
    Value(f64),
    Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopSpec {
    pub phi_star: PhiStar,
    pub tol: Option<f64>,
    pub tol_feas: Option<f64>,
    pub tol_residual: f64,
    pub max_outer: usize,
    pub time_budget: Option<f64>,
}

/// A validated single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    pub stop: StopSpec,
    pub out: Option<PathBuf>,
    pub trace_stride: usize,
    pub trace_time: bool,
    pub threshold: f64,
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl<'a> Reader<'a> {
    fn entry(&self, key: &str) -> Option<&'a Entry> {
        self.raw.entries.get(key)
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        match self.entry(key) {
            Some(e) => ConfigError::at(e.origin, key, msg),
            None => ConfigError {
                origin: None,
                key: Some(key.into()),
                msg: msg.into(),
            },
        }
    }

    fn num<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => {
                if e.value.contains(',') {
                    return Err(self.err(key, "sweep lists are only accepted by `compare`"));
                }
                e.value
                    .parse()
                    .map(Some)
                    .map_err(|_| self.err(key, format!("expected {what}, got `{}`", e.value)))
            }
        }
    }

    fn pos(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.num::<f64>(key, "a number")? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(self.err(key, format!("must be > 0, got {v}"))),
            v => Ok(v),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.entry(key) {
            Some(e) if e.value.contains(',') => Err(self.err(key, "sweep lists are only accepted by `compare`")),
            Some(e) => Ok(Some(e.value.as_str())),
            None => Ok(None),
        }
    }

    fn require(&self, key: &str) -> Result<&'a str, ConfigError> {
        self.str(key)?
            .ok_or_else(|| ConfigError::general(format!("missing required key `{key}`")))
    }

    fn reject(&self, keys: &[&str], why: &str) -> Result<(), ConfigError> {
        for k in keys {
            if self.entry(k).is_some() {
                return Err(self.err(k, why.to_string()));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    /// Validates a single-run configuration.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let r = Reader { raw };
        let family = match r.require("problem")? {
            "tvl1" => FamilyName::TvL1,
            "graphcut" => FamilyName::GraphCut,
            "emd" => FamilyName::Emd,
            "ct" => FamilyName::Ct,
            other => return Err(r.err("problem", format!("unknown problem `{other}`"))),
        };
        let file_keys: &[&str] = match family {
            FamilyName::TvL1 => &["input"],
            FamilyName::GraphCut => &["input_r", "input_g", "input_b"],
            FamilyName::Emd => &["rho0", "rho1"],
            FamilyName::Ct => &["matrix", "data"],
        };
        for &k in PATH_KEYS {
            if !file_keys.contains(&k) && r.entry(k).is_some() {
                return Err(r.err(k, format!("not an input of `{}`", r.require("problem")?)));
            }
        }
        let synthetic = r.str("synthetic")?;
        let given: Vec<&str> = file_keys.iter().copied().filter(|k| r.entry(k).is_some()).collect();
        let source = match synthetic {
            Some(name) => {
                if let Some(k) = given.first() {
                    return Err(r.err(k, "conflicts with `synthetic`"));
                }
                let allowed: &[&str] = match family {
                    FamilyName::TvL1 => &["checkerboard", "phantom"],
                    FamilyName::GraphCut => &["blobs", "halves", "blue", "green"],
                    FamilyName::Emd => &["gaussians"],
                    FamilyName::Ct => &["phantom"],
                };
                if !allowed.contains(&name) {
                    return Err(r.err(
                        "synthetic",
                        format!("unknown input `{name}` (expected one of {})", allowed.join(", ")),
                    ));
                }
                let default_size = match family {
                    FamilyName::TvL1 | FamilyName::GraphCut => 64,
                    FamilyName::Emd => 32,
                    FamilyName::Ct => 16,
                };
                let default_noise = match family {
                    FamilyName::GraphCut => 0.5,
                    _ => 0.15,
                };
                let size = r.num::<usize>("size", "a grid side")?.unwrap_or(default_size);
                if size == 0 {
                    return Err(r.err("size", "must be >= 1"));
                }
                let noise = r.num::<f64>("noise", "a number")?.unwrap_or(default_noise);
                if !(0.0..=1.0).contains(&noise) {
                    return Err(r.err("noise", format!("must lie in [0, 1], got {noise}")));
                }
                Source::Synthetic {
                    name: name.to_string(),
                    size,
                    noise,
                    seed: r.num::<u64>("seed", "an unsigned integer")?.unwrap_or(1),
                }
            }
            None => {
                for k in file_keys {
                    r.require(k)?;
                }
                r.reject(&["size", "noise", "seed"], "only used with `synthetic`")?;
                Source::Files(file_keys.iter().map(|k| PathBuf::from(r.require(k).expect("checked"))).collect())
            }
        };
        let ct_dims = match (r.num::<usize>("rows", "a row count")?, r.num::<usize>("cols", "a column count")?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(ConfigError::general("`rows` and `cols` must be given together")),
        };
        if family == FamilyName::Ct && matches!(source, Source::Files(_)) && ct_dims.is_none() {
            return Err(ConfigError::general("missing required key `rows`"));
        }
        let variant = match r.str("variant")? {
            Some(v) => v.parse().map_err(|_| r.err("variant", format!("expected norm or rowsum, got `{v}`")))?,
            None => CtVariant::Norm,
        };
        let problem = ProblemSpec {
            family,
            source,
            lambda: r.pos("lambda")?.unwrap_or(1.0),
            alpha: r.pos("alpha")?.unwrap_or(0.5),
            beta: r.pos("beta")?.unwrap_or(10.0),
            h: r.pos("h")?,
            variant,
            ct_dims,
            angles: r.num::<usize>("angles", "an angle count")?.unwrap_or(36),
            detectors: r.num::<usize>("detectors", "a ray count")?.unwrap_or(8),
        };

        let algorithm = r.str("algorithm")?.unwrap_or("iprepdhg");
        let applicable = applicable_keys(algorithm);
        for k in SOLVER_KEYS.iter().filter(|k| **k != "algorithm") {
            if r.entry(k).is_some() && !applicable.contains(k) {
                return Err(r.err(k, format!("not accepted by algorithm `{algorithm}`")));
            }
        }
        let tau = r.pos("tau")?;
        let method = match algorithm {
            "pdhg" => Method::Pdhg {
                tau,
                sigma: r.pos("sigma")?,
            },
            "dp-pdhg" => Method::DpPdhg,
            "prepdhg" => Method::PrePdhg {
                tau,
                exact_tol: r.pos("exact_tol")?.unwrap_or(1e-12),
            },
            "iprepdhg" => {
                let p = r.num::<usize>("p", "an inner count")?;
                if p == Some(0) {
                    return Err(r.err("p", "must be >= 1"));
                }
                let inner = match r.str("inner")?.unwrap_or("bcd") {
                    "bcd" => InnerChoice::Bcd,
                    "proxgrad" => InnerChoice::ProxGrad,
                    "fista" => InnerChoice::Fista,
                    other => return Err(r.err("inner", format!("unknown inner iterator `{other}`"))),
                };
                let gamma = r.pos("gamma")?;
                if gamma.is_some() && inner == InnerChoice::Bcd {
                    return Err(r.err("gamma", "block sweeps take no stepsize"));
                }
                Method::IPrePdhg { tau, p, inner, gamma }
            }
            other => return Err(r.err("algorithm", format!("unknown algorithm `{other}`"))),
        };

        let phi_star = match r.str("phi_star")? {
            None => PhiStar::None,
            Some("reference") => PhiStar::Reference,
            Some(v) => PhiStar::Value(
                v.parse()
                    .map_err(|_| r.err("phi_star", format!("expected a number or `reference`, got `{v}`")))?,
            ),
        };
        let stop = StopSpec {
            phi_star,
            tol: r.pos("tol")?,
            tol_feas: r.pos("tol_feas")?,
            tol_residual: r.pos("tol_residual")?.unwrap_or(1e-8),
            max_outer: r.num::<usize>("max_outer", "an iteration count")?.unwrap_or(100_000),
            time_budget: r.pos("time_budget")?,
        };
        if stop.max_outer == 0 {
            return Err(r.err("max_outer", "must be >= 1"));
        }
        let trace_stride = r.num::<usize>("trace_stride", "a stride")?.unwrap_or(1);
        if trace_stride == 0 {
            return Err(r.err("trace_stride", "must be >= 1"));
        }
        Ok(Self {
            problem,
            method,
            stop,
            out: r.str("out")?.map(PathBuf::from),
            trace_stride,
            trace_time: r.num::<bool>("trace_time", "true or false")?.unwrap_or(true),
            threshold: r.num::<f64>("threshold", "a number")?.unwrap_or(0.5),
        })
    }

    /// Output directory: explicit flag, then the environment, then the file, then `default`.
    pub fn output_dir(&self, raw: &RawConfig, default: &str) -> PathBuf {
        let from_flag = raw.entries.get("out").is_some_and(|e| e.origin == Origin::Flag);
        if from_flag {
            return self.out.clone().expect("flag present");
        }
        if let Some(env) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(env);
        }
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_table_defaults() {
        let raw = RawConfig::parse("problem=tvl1\ninput=img.pgm\n").unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(
            cfg.method,
            Method::IPrePdhg {
                tau: None,
                p: None,
                inner: InnerChoice::Bcd,
                gamma: None
            }
        );
        assert_eq!(cfg.problem.source, Source::Files(vec![PathBuf::from("img.pgm")]));
    }

    #[test]
    fn comments_and_blank_lines() {
        let raw = RawConfig::parse("# header\n\nproblem = emd # trailing\n").unwrap();
        assert_eq!(raw.get("problem"), Some("emd"));
    }

    #[test]
    fn errors_point_at_lines() {
        let e = RawConfig::parse("problem=tvl1\nwibble=3\n").unwrap_err();
        assert_eq!(e.origin, Some(Origin::Line(2)));
        assert!(e.to_string().contains("unknown key"));

        let raw = RawConfig::parse("problem=tvl1\ninput=a.pgm\ntau=abc\n").unwrap();
        let e = RunConfig::from_raw(&raw).unwrap_err();
        assert_eq!(e.to_string(), "line 3: `tau`: expected a number, got `abc`");

        let e = RawConfig::parse("problem=tvl1\nproblem=emd\n").unwrap_err();
        assert!(e.to_string().contains("duplicate"));
    }

    #[test]
    fn empty_file_is_missing_problem() {
        let e = RunConfig::from_raw(&RawConfig::parse("").unwrap()).unwrap_err();
        assert_eq!(e.to_string(), "missing required key `problem`");
    }

    #[test]
    fn pdhg_rejects_inner() {
        let raw = RawConfig::parse("problem=tvl1\ninput=a.pgm\nalgorithm=pdhg\ninner=bcd\n").unwrap();
        let e = RunConfig::from_raw(&raw).unwrap_err();
        assert!(e.to_string().starts_with("line 4: `inner`"), "{e}");
    }

    #[test]
    fn flags_override_file() {
        let mut raw = RawConfig::parse("problem=tvl1\ninput=a.pgm\ntau=0.1\n").unwrap();
        raw.apply_flags([("tau", "0.5")]).unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert!(matches!(cfg.method, Method::IPrePdhg { tau: Some(t), .. } if t == 0.5));
        assert!(raw.apply_flags([("bogus", "1")]).is_err());
    }

    #[test]
    fn sweep_cardinality() {
        let raw = RawConfig::parse(
            "problem=tvl1\nsynthetic=phantom\nalgorithm=pdhg,iprepdhg,dp-pdhg\ntau=10,1,0.1,0.01,0.001\np=1,2,3\n",
        )
        .unwrap();
        let runs = raw.expand().unwrap();
        let count = |a: &str| runs.iter().filter(|r| r.get("algorithm") == Some(a)).count();
        assert_eq!(count("iprepdhg"), 15);
        assert_eq!(count("pdhg"), 5);
        assert_eq!(count("dp-pdhg"), 1);
        for r in &runs {
            RunConfig::from_raw(r).unwrap();
        }
    }

    #[test]
    fn problem_keys_cannot_be_swept() {
        let raw = RawConfig::parse("problem=tvl1\nsynthetic=phantom\nlambda=1,2\n").unwrap();
        assert!(raw.expand().is_err());
        assert!(RunConfig::from_raw(&raw).is_err());
    }
}
