//! Declarative experiment configuration and the named presets.
//!
//! The text format is one `key = value` pair per line with `#` comments.
//!
//! | key       | value                                                   |
//! |-----------|---------------------------------------------------------|
//! | `preset`  | name of a preset to start from (must come first)        |
//! | `name`    | free-form label                                         |
//! | `graph`   | `complete`, `star` or `path`                            |
//! | `model`   | `sparse_rows` or `er_layers`                            |
//! | `theta`   | row probability for `sparse_rows`                       |
//! | `p`       | per-layer edge probability for `er_layers`              |
//! | `n`       | signal dimension                                        |
//! | `sigma`   | noise standard deviation                                |
//! | `s_t`     | `c`, `c*sqrt(T)` or `c*T^a` (the `c*` part is optional) |
//! | `t_grid`  | comma-separated, strictly increasing node counts        |
//! | `trials`  | Monte-Carlo repetitions per grid point                  |
//! | `seed`    | 64-bit base seed                                        |
//! | `mu`      | `auto` or a positive number                             |
//! | `c1`      | constant of the automatic penalty rule                  |
//! | `delta`   | confidence level used by the automatic rule             |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::graph::GraphKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementModel {
    SparseRows { theta: f64 },
    ErLayers { p: f64 },
}

impl MeasurementModel {
    pub fn is_sync(&self) -> bool {
        matches!(self, MeasurementModel::ErLayers { .. })
    }
}

/// Smoothness budget as a function of the node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SmoothnessRule {
    Constant { c: f64 },
    Sqrt { c: f64 },
    Power { c: f64, a: f64 },
}

impl SmoothnessRule {
    pub fn eval(&self, t: usize) -> f64 {
        let tf = t as f64;
        match *self {
            SmoothnessRule::Constant { c } => c,
            SmoothnessRule::Sqrt { c } => c * tf.sqrt(),
            SmoothnessRule::Power { c, a } => c * tf.powf(a),
        }
    }
}

impl fmt::Display for SmoothnessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SmoothnessRule::Constant { c } => write!(f, "{c}"),
            SmoothnessRule::Sqrt { c } => write!(f, "{c}*sqrt(T)"),
            SmoothnessRule::Power { c, a } => write!(f, "{c}*T^{a}"),
        }
    }
}

impl FromStr for SmoothnessRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("unsupported S_T expression `{s}`"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let (coef, rest) = match compact.split_once('*') {
            Some((c, r)) => (num(c)?, r.to_string()),
            None if compact.contains('T') => (1.0, compact.clone()),
            None => return Ok(SmoothnessRule::Constant { c: num(&compact)? }),
        };
        let rule = if rest == "sqrt(T)" {
            SmoothnessRule::Sqrt { c: coef }
        } else if let Some(a) = rest.strip_prefix("T^") {
            SmoothnessRule::Power { c: coef, a: num(a.trim_matches(|c| c == '(' || c == ')'))? }
        } else if rest == "T" {
            SmoothnessRule::Power { c: coef, a: 1.0 }
        } else {
            return Err(bad());
        };
        Ok(rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MuRule {
    Auto,
    Fixed { mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph_kind: GraphKind,
    pub model: MeasurementModel,
    pub n: usize,
    pub sigma: f64,
    pub s_t: SmoothnessRule,
    pub t_grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub mu_rule: MuRule,
    pub c1: f64,
    pub delta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            graph_kind: GraphKind::Star,
            model: MeasurementModel::SparseRows { theta: 0.5 },
            n: 5,
            sigma: 1.0,
            s_t: SmoothnessRule::Sqrt { c: 1.0 },
            t_grid: vec![50, 100, 200, 400],
            trials: 50,
            base_seed: 20_240_601,
            mu_rule: MuRule::Auto,
            c1: bounds::C1_STAR,
            delta: bounds::GAMMA_DELTA,
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 8] = [
    "fig1-star-theta02",
    "fig1-star-theta05",
    "fig1-complete-theta02",
    "fig1-complete-theta05",
    "fig2-star-p002",
    "fig2-star-p0004",
    "fig2-complete-p002",
    "fig2-complete-p0004",
];

/// Built-in configurations for the sparse-row (`fig1-*`) and Erdős–Rényi
/// layer (`fig2-*`) sweeps.
///
/// All presets use the smoothness budget `S_T = √T`, the automatic penalty
/// rule and 50 trials. The `fig1-*` presets use `n = 5`, `σ = 1` and the grid
/// `{50, 100, 200, 400}`; `c1` is 3 on the star and 2 on the complete graph.
/// The `fig2-*` presets use `n = 50`, `σ = 1`, the grid `{20, 40, 80}` and
/// `c1 = 2`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (kind, model) = match name {
        "fig1-star-theta02" => (GraphKind::Star, MeasurementModel::SparseRows { theta: 0.2 }),
        "fig1-star-theta05" => (GraphKind::Star, MeasurementModel::SparseRows { theta: 0.5 }),
        "fig1-complete-theta02" => (GraphKind::Complete, MeasurementModel::SparseRows { theta: 0.2 }),
        "fig1-complete-theta05" => (GraphKind::Complete, MeasurementModel::SparseRows { theta: 0.5 }),
        "fig2-star-p002" => (GraphKind::Star, MeasurementModel::ErLayers { p: 0.02 }),
        "fig2-star-p0004" => (GraphKind::Star, MeasurementModel::ErLayers { p: 0.004 }),
        "fig2-complete-p002" => (GraphKind::Complete, MeasurementModel::ErLayers { p: 0.02 }),
        "fig2-complete-p0004" => (GraphKind::Complete, MeasurementModel::ErLayers { p: 0.004 }),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let mut cfg = ExperimentConfig {
        name: name.to_string(),
        graph_kind: kind,
        model,
        ..ExperimentConfig::default()
    };
    if model.is_sync() {
        cfg.n = 50;
        cfg.t_grid = vec![20, 40, 80];
        cfg.c1 = bounds::C2_SYNC;
    } else if kind == GraphKind::Complete {
        cfg.c1 = bounds::C1_COMPLETE;
    }
    Ok(cfg)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

impl ExperimentConfig {
    /// Parses the `key = value` format. Keys may appear in any order except
    /// `preset`, which resets every field and therefore must come first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut theta: Option<f64> = None;
        let mut p: Option<f64> = None;
        let mut model_name: Option<String> = None;
        let mut seen_other = false;

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "preset" => {
                    if seen_other {
                        return Err(Error::Config("`preset` must precede other keys".into()));
                    }
                    cfg = preset(value)?;
                }
                "name" => cfg.name = value.to_string(),
                "graph" => cfg.graph_kind = value.parse().map_err(|_| {
                    Error::Config(format!("unknown graph kind `{value}`"))
                })?,
                "model" => model_name = Some(value.to_string()),
                "theta" => theta = Some(parse_num(key, value)?),
                "p" => p = Some(parse_num(key, value)?),
                "n" => cfg.n = parse_num(key, value)?,
                "sigma" => cfg.sigma = parse_num(key, value)?,
                "s_t" => cfg.s_t = value.parse()?,
                "t_grid" => {
                    cfg.t_grid = value
                        .split(',')
                        .map(|v| parse_num(key, v.trim()))
                        .collect::<Result<_>>()?
                }
                "trials" => cfg.trials = parse_num(key, value)?,
                "seed" => cfg.base_seed = parse_num(key, value)?,
                "mu" => {
                    cfg.mu_rule = if value == "auto" {
                        MuRule::Auto
                    } else {
                        MuRule::Fixed {
                            mu: parse_num(key, value)?,
                        }
                    }
                }
                "c1" => cfg.c1 = parse_num(key, value)?,
                "delta" => cfg.delta = parse_num(key, value)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
            if key != "preset" {
                seen_other = true;
            }
        }

        let current = cfg.model;
        cfg.model = match model_name.as_deref() {
            None => match current {
                MeasurementModel::SparseRows { theta: t0 } => MeasurementModel::SparseRows {
                    theta: theta.unwrap_or(t0),
                },
                MeasurementModel::ErLayers { p: p0 } => MeasurementModel::ErLayers { p: p.unwrap_or(p0) },
            },
            Some("sparse_rows") => MeasurementModel::SparseRows {
                theta: theta
                    .or(match current {
                        MeasurementModel::SparseRows { theta } => Some(theta),
                        _ => None,
                    })
                    .ok_or_else(|| Error::Config("`sparse_rows` needs `theta`".into()))?,
            },
            Some("er_layers") => MeasurementModel::ErLayers {
                p: p.or(match current {
                    MeasurementModel::ErLayers { p } => Some(p),
                    _ => None,
                })
                .ok_or_else(|| Error::Config("`er_layers` needs `p`".into()))?,
            },
            Some(other) => return Err(Error::Config(format!("unknown model `{other}`"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the configuration in the format accepted by [`Self::parse`].
    pub fn to_text(&self) -> String {
        let model = match self.model {
            MeasurementModel::SparseRows { theta } => format!("model = sparse_rows\ntheta = {theta}"),
            MeasurementModel::ErLayers { p } => format!("model = er_layers\np = {p}"),
        };
        let mu = match self.mu_rule {
            MuRule::Auto => "auto".to_string(),
            MuRule::Fixed { mu } => mu.to_string(),
        };
        let grid: Vec<String> = self.t_grid.iter().map(|t| t.to_string()).collect();
        format!(
            "name = {}\ngraph = {}\n{model}\nn = {}\nsigma = {}\ns_t = {}\nt_grid = {}\ntrials = {}\nseed = {}\nmu = {mu}\nc1 = {}\ndelta = {}\n",
            self.name,
            self.graph_kind,
            self.n,
            self.sigma,
            self.s_t,
            grid.join(","),
            self.trials,
            self.base_seed,
            self.c1,
            self.delta
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !matches!(
            self.graph_kind,
            GraphKind::Complete | GraphKind::Star | GraphKind::Path
        ) {
            return fail(format!("graph kind `{}` is not supported here", self.graph_kind));
        }
        if self.n < 1 {
            return fail("n must be ≥ 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma = {} must be ≥ 0", self.sigma));
        }
        if self.t_grid.is_empty() {
            return fail("t_grid is empty".into());
        }
        if self.t_grid[0] < 2 {
            return fail("every grid point must be ≥ 2".into());
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("t_grid must be strictly increasing".into());
        }
        if self.trials < 1 {
            return fail("trials must be ≥ 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta = {} not in (0, 1)", self.delta));
        }
        if !(self.c1 > 0.0) {
            return fail(format!("c1 = {} must be > 0", self.c1));
        }
        match self.model {
            MeasurementModel::SparseRows { theta } if !(0.0..=1.0).contains(&theta) => {
                return fail(format!("theta = {theta} not in [0, 1]"))
            }
            MeasurementModel::ErLayers { p } if !(0.0..=1.0).contains(&p) => {
                return fail(format!("p = {p} not in [0, 1]"))
            }
            MeasurementModel::ErLayers { .. } if self.n < 2 => {
                return fail("er_layers needs n ≥ 2".into())
            }
            _ => {}
        }
        for &t in &self.t_grid {
            let s = self.s_t.eval(t);
            if !(s >= 0.0 && s.is_finite()) {
                return fail(format!("S_T({t}) = {s} must be finite and ≥ 0"));
            }
        }
        match self.mu_rule {
            MuRule::Fixed { mu } if !(mu > 0.0 && mu.is_finite()) => {
                return fail(format!("mu = {mu} must be > 0"))
            }
            MuRule::Fixed { .. } => {}
            MuRule::Auto => {
                if self.graph_kind == GraphKind::Path {
                    return fail("the automatic penalty rule covers complete and star graphs only".into());
                }
                if self.t_grid.iter().any(|&t| self.s_t.eval(t) <= 0.0) {
                    return fail("the automatic penalty rule needs S_T > 0".into());
                }
                match self.model {
                    MeasurementModel::SparseRows { theta } if theta <= 0.0 => {
                        return fail("the automatic penalty rule needs theta > 0".into())
                    }
                    MeasurementModel::ErLayers { p } if p <= 0.0 => {
                        return fail("the automatic penalty rule needs p > 0".into())
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Penalty used at node count `t`.
    pub fn mu_for(&self, t: usize) -> Result<f64> {
        match self.mu_rule {
            MuRule::Fixed { mu } => Ok(mu),
            MuRule::Auto => {
                let s_t = self.s_t.eval(t);
                match self.model {
                    MeasurementModel::SparseRows { theta } => bounds::mu_star_rand_samp(
                        theta,
                        t,
                        self.n,
                        self.sigma,
                        s_t,
                        self.c1,
                        self.graph_kind,
                    ),
                    MeasurementModel::ErLayers { p } => {
                        let gamma = bounds::gamma_nt(self.n, p, t, self.delta);
                        bounds::mu_star_sync(
                            p * t as f64,
                            gamma,
                            self.n,
                            self.sigma,
                            s_t,
                            t,
                            self.c1,
                            self.graph_kind,
                        )
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothness_rule_forms() {
        assert_eq!("5".parse::<SmoothnessRule>().unwrap(), SmoothnessRule::Constant { c: 5.0 });
        assert_eq!("sqrt(T)".parse::<SmoothnessRule>().unwrap(), SmoothnessRule::Sqrt { c: 1.0 });
        assert_eq!(
            "2 * T^0.8".parse::<SmoothnessRule>().unwrap(),
            SmoothnessRule::Power { c: 2.0, a: 0.8 }
        );
        assert_eq!("T".parse::<SmoothnessRule>().unwrap().eval(7), 7.0);
        assert!("log(T)".parse::<SmoothnessRule>().is_err());
        for r in [
            SmoothnessRule::Constant { c: 0.5 },
            SmoothnessRule::Sqrt { c: 3.0 },
            SmoothnessRule::Power { c: 1.5, a: 0.25 },
        ] {
            assert_eq!(r.to_string().parse::<SmoothnessRule>().unwrap(), r);
        }
    }

    #[test]
    fn presets_valid() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            for &t in &cfg.t_grid {
                assert!(cfg.mu_for(t).unwrap() > 0.0);
            }
        }
        assert!(preset("fig3").is_err());
    }

    #[test]
    fn text_round_trip() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn parse_with_overrides() {
        let cfg = ExperimentConfig::parse(
            "preset = fig1-star-theta05\n# comment\ntrials = 3 # inline\nt_grid = 10, 20\nmu = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.t_grid, vec![10, 20]);
        assert_eq!(cfg.mu_rule, MuRule::Fixed { mu: 0.5 });
        assert_eq!(cfg.model, MeasurementModel::SparseRows { theta: 0.5 });
    }

    #[test]
    fn parse_errors() {
        assert!(ExperimentConfig::parse("t_grid = 20, 10").is_err());
        assert!(ExperimentConfig::parse("trials = 0").is_err());
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("n = 2\npreset = fig1-star-theta05").is_err());
        assert!(ExperimentConfig::parse("graph = path").is_err());
        assert!(ExperimentConfig::parse("graph = path\nmu = 1").is_ok());
        assert!(ExperimentConfig::parse("model = er_layers").is_err());
        assert!(ExperimentConfig::parse("s_t = 0").is_err());
        assert!(ExperimentConfig::parse("s_t = 0\nmu = 1").is_ok());
        assert!(ExperimentConfig::parse("just text").is_err());
    }
}
