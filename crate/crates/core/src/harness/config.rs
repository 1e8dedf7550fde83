//! Experiment configuration and its `section.key = value` text form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::TopologyKind;
use crate::problems::{DataScale, LrmcParams, SyntheticPcaParams};
use crate::solvers::SolverKind;

/// Every key accepted in a config file, in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "problem.kind",
    "problem.n",
    "problem.m",
    "problem.d",
    "problem.r",
    "problem.xi",
    "problem.seed",
    "problem.scale",
    "problem.path",
    "problem.t",
    "problem.noise",
    "problem.ridge",
    "problem.oversampling",
    "problem.full_mask",
    "graph.kind",
    "graph.p",
    "graph.path",
    "graph.seed",
    "graph.theta",
    "solver.kind",
    "solver.beta_hat",
    "solver.beta",
    "solver.max_iters",
    "solver.tol",
    "solver.init_seed",
    "output.csv",
    "output.trace_every",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    PcaSynthetic(SyntheticPcaParams),
    PcaMnist {
        path: PathBuf,
        n: usize,
        r: usize,
        seed: u64,
    },
    Lrmc(LrmcParams),
}

impl ProblemSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ProblemSpec::PcaSynthetic(_) => "pca_synthetic",
            ProblemSpec::PcaMnist { .. } => "pca_mnist",
            ProblemSpec::Lrmc(_) => "lrmc",
        }
    }

    pub fn agents(&self) -> usize {
        match self {
            ProblemSpec::PcaSynthetic(p) => p.n,
            ProblemSpec::PcaMnist { n, .. } => *n,
            ProblemSpec::Lrmc(p) => p.n,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ProblemSpec::PcaSynthetic(p) => p.seed,
            ProblemSpec::PcaMnist { seed, .. } => *seed,
            ProblemSpec::Lrmc(p) => p.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Generated(TopologyKind),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub spec: GraphSpec,
    pub seed: u64,
    pub theta: f64,
}

/// Penalty weight selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyChoice {
    /// `min(beta_floor, 1/(4α))` with `beta_floor` from sampled constants.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub kind: SolverKind,
    /// Raw grid value; the step is `α = β̂ · problem.step_scale()`.
    pub beta_hat: f64,
    pub beta: PenaltyChoice,
    pub max_iters: usize,
    pub tol: f64,
    pub init_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub graph: GraphConfig,
    pub solver: SolverSettings,
    pub csv: Option<PathBuf>,
    pub trace_every: usize,
}

impl ExperimentConfig {
    /// Defaults for a problem family: synthetic PCA on ER(0.6) with `β̂ = 0.08`
    /// and tol `1e−8`; MNIST at `β̂ = 0.06`, tol `1e−6`; LRMC on a ring with
    /// a 1500-iteration cap and tol `1e−6`.
    pub fn defaults_for(kind: &str) -> Result<Self> {
        let er = GraphSpec::Generated(TopologyKind::ErdosRenyi { p: 0.6 });
        let (problem, spec, beta_hat, max_iters, tol, trace_every) = match kind {
            "pca_synthetic" => (
                ProblemSpec::PcaSynthetic(SyntheticPcaParams::default()),
                er,
                0.08,
                50_000,
                1e-8,
                1,
            ),
            "pca_mnist" => (
                ProblemSpec::PcaMnist {
                    path: PathBuf::from("train-images-idx3-ubyte"),
                    n: 8,
                    r: 5,
                    seed: 42,
                },
                er,
                0.06,
                50_000,
                1e-6,
                10,
            ),
            "lrmc" => (
                ProblemSpec::Lrmc(LrmcParams::default()),
                GraphSpec::Generated(TopologyKind::Ring),
                1.25e-5,
                1500,
                1e-6,
                1,
            ),
            other => {
                return Err(Error::Config(format!(
                    "unknown problem.kind {other:?} (expected pca_synthetic, pca_mnist or lrmc)"
                )))
            }
        };
        Ok(ExperimentConfig {
            problem,
            graph: GraphConfig {
                spec,
                seed: 7,
                theta: 0.5,
            },
            solver: SolverSettings {
                kind: SolverKind::RfExtra,
                beta_hat,
                beta: PenaltyChoice::Auto,
                max_iters,
                tol,
                init_seed: 1,
            },
            csv: None,
            trace_every,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.solver.max_iters == 0 {
            return Err(Error::Config("solver.max_iters must be at least 1".into()));
        }
        if !(self.solver.tol >= 0.0) {
            return Err(Error::Config("solver.tol must be nonnegative".into()));
        }
        if !(self.solver.beta_hat > 0.0 && self.solver.beta_hat.is_finite()) {
            return Err(Error::Config("solver.beta_hat must be positive".into()));
        }
        if let PenaltyChoice::Fixed(b) = self.solver.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config("solver.beta must be positive or auto".into()));
            }
        }
        if !(self.graph.theta > 0.0 && self.graph.theta <= 0.5) {
            return Err(Error::Config(format!(
                "graph.theta must lie in (0, 1/2], got {}",
                self.graph.theta
            )));
        }
        if self.trace_every == 0 {
            return Err(Error::Config("output.trace_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses config text. Later entries never silently shadow earlier ones
    /// within one file; a repeated key is an error.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(&parse_entries(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Builds a config from `(key, value)` pairs applied in order on top of the
    /// defaults for the selected `problem.kind`. Later pairs override earlier
    /// ones, which is how command-line overrides are layered on a file.
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self> {
        for (key, _) in entries {
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key {key:?}")));
            }
        }
        let last = |key: &str| {
            entries
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let kind = last("problem.kind").unwrap_or("pca_synthetic");
        let mut cfg = Self::defaults_for(kind)?;
        for (key, value) in entries {
            cfg.apply(key, value)?;
        }
        cfg.resolve_graph(last("graph.kind"), last("graph.p"), last("graph.path"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let (section, field) = key.split_once('.').expect("inventory keys are dotted");
        match section {
            "problem" => self.apply_problem(key, field, value),
            "graph" => {
                // kind, p and path are resolved together once all entries are in.
                match field {
                    "seed" => self.graph.seed = parse_value(key, value)?,
                    "theta" => self.graph.theta = parse_value(key, value)?,
                    _ => {}
                }
                Ok(())
            }
            "solver" => {
                let s = &mut self.solver;
                match field {
                    "kind" => s.kind = value.parse().map_err(|e: Error| rekey(key, e))?,
                    "beta_hat" => s.beta_hat = parse_value(key, value)?,
                    "beta" => {
                        s.beta = if value == "auto" {
                            PenaltyChoice::Auto
                        } else {
                            PenaltyChoice::Fixed(parse_value(key, value)?)
                        }
                    }
                    "max_iters" => s.max_iters = parse_value(key, value)?,
                    "tol" => s.tol = parse_value(key, value)?,
                    "init_seed" => s.init_seed = parse_value(key, value)?,
                    _ => unreachable!(),
                }
                Ok(())
            }
            "output" => {
                match field {
                    "csv" => self.csv = Some(PathBuf::from(value)),
                    "trace_every" => self.trace_every = parse_value(key, value)?,
                    _ => unreachable!(),
                }
                Ok(())
            }
            _ => unreachable!(),
        }
    }

    fn apply_problem(&mut self, key: &str, field: &str, value: &str) -> Result<()> {
        if field == "kind" {
            return Ok(());
        }
        let invalid = |kind: &str| Error::Config(format!("key {key:?} does not apply to problem.kind = {kind}"));
        match &mut self.problem {
            ProblemSpec::PcaSynthetic(p) => match field {
                "n" => p.n = parse_value(key, value)?,
                "m" => p.m_per_agent = parse_value(key, value)?,
                "d" => p.d = parse_value(key, value)?,
                "r" => p.r = parse_value(key, value)?,
                "xi" => p.xi = parse_value(key, value)?,
                "seed" => p.seed = parse_value(key, value)?,
                "scale" => {
                    p.scale = match value {
                        "unit" => DataScale::Unit,
                        "sqrt_rows" => DataScale::SqrtRows,
                        other => {
                            return Err(Error::Config(format!(
                                "{key}: expected unit or sqrt_rows, got {other:?}"
                            )))
                        }
                    }
                }
                _ => return Err(invalid("pca_synthetic")),
            },
            ProblemSpec::PcaMnist { path, n, r, seed } => match field {
                "path" => *path = PathBuf::from(value),
                "n" => *n = parse_value(key, value)?,
                "r" => *r = parse_value(key, value)?,
                "seed" => *seed = parse_value(key, value)?,
                _ => return Err(invalid("pca_mnist")),
            },
            ProblemSpec::Lrmc(p) => match field {
                "n" => p.n = parse_value(key, value)?,
                "d" => p.d = parse_value(key, value)?,
                "r" => p.r = parse_value(key, value)?,
                "t" => p.t = parse_value(key, value)?,
                "noise" => p.noise = parse_value(key, value)?,
                "seed" => p.seed = parse_value(key, value)?,
                "ridge" => p.ridge = parse_value(key, value)?,
                "oversampling" => p.oversampling = parse_value(key, value)?,
                "full_mask" => p.full_mask = parse_value(key, value)?,
                _ => return Err(invalid("lrmc")),
            },
        }
        Ok(())
    }

    fn resolve_graph(&mut self, kind: Option<&str>, p: Option<&str>, path: Option<&str>) -> Result<()> {
        let Some(kind) = kind else {
            if p.is_some() || path.is_some() {
                return Err(Error::Config(
                    "graph.p and graph.path require an explicit graph.kind".into(),
                ));
            }
            return Ok(());
        };
        let stray = |key: &str| Error::Config(format!("key {key:?} does not apply to graph.kind = {kind}"));
        self.graph.spec = match kind {
            "erdos_renyi" => {
                if path.is_some() {
                    return Err(stray("graph.path"));
                }
                let p = match p {
                    Some(v) => parse_value("graph.p", v)?,
                    None => 0.6,
                };
                GraphSpec::Generated(TopologyKind::ErdosRenyi { p })
            }
            "file" => {
                if p.is_some() {
                    return Err(stray("graph.p"));
                }
                let path = path.ok_or_else(|| Error::Config("graph.kind = file needs graph.path".into()))?;
                GraphSpec::File(PathBuf::from(path))
            }
            other => {
                if p.is_some() {
                    return Err(stray("graph.p"));
                }
                if path.is_some() {
                    return Err(stray("graph.path"));
                }
                GraphSpec::Generated(match other {
                    "ring" => TopologyKind::Ring,
                    "star" => TopologyKind::Star,
                    "complete" => TopologyKind::Complete,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown graph.kind {other:?} (expected ring, star, complete, erdos_renyi or file)"
                        )))
                    }
                })
            }
        };
        Ok(())
    }

    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("problem.kind", self.problem.kind_name().into());
        match &self.problem {
            ProblemSpec::PcaSynthetic(p) => {
                line("problem.n", p.n.to_string());
                line("problem.m", p.m_per_agent.to_string());
                line("problem.d", p.d.to_string());
                line("problem.r", p.r.to_string());
                line("problem.xi", p.xi.to_string());
                line("problem.seed", p.seed.to_string());
                let scale = match p.scale {
                    DataScale::Unit => "unit",
                    DataScale::SqrtRows => "sqrt_rows",
                };
                line("problem.scale", scale.into());
            }
            ProblemSpec::PcaMnist { path, n, r, seed } => {
                line("problem.path", path.display().to_string());
                line("problem.n", n.to_string());
                line("problem.r", r.to_string());
                line("problem.seed", seed.to_string());
            }
            ProblemSpec::Lrmc(p) => {
                line("problem.n", p.n.to_string());
                line("problem.d", p.d.to_string());
                line("problem.r", p.r.to_string());
                line("problem.t", p.t.to_string());
                line("problem.noise", p.noise.to_string());
                line("problem.seed", p.seed.to_string());
                line("problem.ridge", p.ridge.to_string());
                line("problem.oversampling", p.oversampling.to_string());
                line("problem.full_mask", p.full_mask.to_string());
            }
        }
        match &self.graph.spec {
            GraphSpec::Generated(TopologyKind::ErdosRenyi { p }) => {
                line("graph.kind", "erdos_renyi".into());
                line("graph.p", p.to_string());
            }
            GraphSpec::Generated(kind) => line("graph.kind", kind.to_string()),
            GraphSpec::File(path) => {
                line("graph.kind", "file".into());
                line("graph.path", path.display().to_string());
            }
        }
        line("graph.seed", self.graph.seed.to_string());
        line("graph.theta", self.graph.theta.to_string());
        let s = &self.solver;
        line("solver.kind", s.kind.to_string());
        line("solver.beta_hat", s.beta_hat.to_string());
        line(
            "solver.beta",
            match s.beta {
                PenaltyChoice::Auto => "auto".into(),
                PenaltyChoice::Fixed(b) => b.to_string(),
            },
        );
        line("solver.max_iters", s.max_iters.to_string());
        line("solver.tol", s.tol.to_string());
        line("solver.init_seed", s.init_seed.to_string());
        if let Some(csv) = &self.csv {
            line("output.csv", csv.display().to_string());
        }
        line("output.trace_every", self.trace_every.to_string());
        out
    }
}

/// Splits config text into `(key, value)` pairs. `#` starts a comment; blank
/// lines are skipped; a key may appear once.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `section.key = value`", idx + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", idx + 1)));
        }
        if value.is_empty() {
            return Err(Error::Config(format!("line {}: empty value for {key}", idx + 1)));
        }
        if entries.iter().any(|(k, _)| k == key) {
            return Err(Error::Config(format!("line {}: duplicate key {key}", idx + 1)));
        }
        entries.push((key.to_owned(), value.to_owned()));
    }
    Ok(entries)
}

/// Splits a `key=value` override.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {arg:?} is not key=value")))?;
    Ok((k.trim().to_owned(), v.trim().to_owned()))
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn rekey(key: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{key}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_pca_defaults() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults_for("pca_synthetic").unwrap());
        assert_eq!(cfg.solver.beta_hat, 0.08);
        assert_eq!(cfg.graph.spec, GraphSpec::Generated(TopologyKind::ErdosRenyi { p: 0.6 }));
    }

    #[test]
    fn every_default_round_trips_through_text() {
        for kind in ["pca_synthetic", "pca_mnist", "lrmc"] {
            let mut cfg = ExperimentConfig::defaults_for(kind).unwrap();
            cfg.csv = Some(PathBuf::from("out/trace.csv"));
            cfg.solver.beta = PenaltyChoice::Fixed(12.5);
            assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
        let mut cfg = ExperimentConfig::defaults_for("lrmc").unwrap();
        cfg.graph.spec = GraphSpec::File(PathBuf::from("g.txt"));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("solver.alpha = 0.1\n").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("solver.alpha")), "{err}");
        let err = ExperimentConfig::from_entries(&[("bogus".into(), "1".into())]).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("bogus")));
    }

    #[test]
    fn inapplicable_keys_are_rejected() {
        assert!(ExperimentConfig::parse("problem.t = 10\n").is_err());
        assert!(ExperimentConfig::parse("problem.kind = lrmc\nproblem.xi = 0.5\n").is_err());
        assert!(ExperimentConfig::parse("graph.kind = ring\ngraph.p = 0.5\n").is_err());
        assert!(ExperimentConfig::parse("graph.kind = file\n").is_err());
    }

    #[test]
    fn malformed_lines_and_values() {
        assert!(ExperimentConfig::parse("problem.n 8\n").is_err());
        assert!(ExperimentConfig::parse("problem.n = eight\n").is_err());
        assert!(ExperimentConfig::parse("problem.n = 8\nproblem.n = 9\n").is_err());
        assert!(ExperimentConfig::parse("solver.tol = -1\n").is_err());
        assert!(ExperimentConfig::parse("solver.max_iters = 0\n").is_err());
        assert!(ExperimentConfig::parse("graph.theta = 0.7\n").is_err());
        assert!(ExperimentConfig::parse("solver.kind = newton\n").is_err());
        assert!(ExperimentConfig::parse("problem.kind = svm\n").is_err());
    }

    #[test]
    fn comments_overrides_and_choices() {
        let text = "# lrmc run\nproblem.kind = lrmc   # trailing\n\nproblem.t = 200\nsolver.beta = 10\n";
        let mut entries = parse_entries(text).unwrap();
        entries.push(parse_override("problem.t=400").unwrap());
        entries.push(parse_override("solver.kind = dprgd").unwrap());
        let cfg = ExperimentConfig::from_entries(&entries).unwrap();
        let ProblemSpec::Lrmc(p) = &cfg.problem else { panic!() };
        assert_eq!(p.t, 400);
        assert_eq!(cfg.solver.kind, SolverKind::Dprgd);
        assert_eq!(cfg.solver.beta, PenaltyChoice::Fixed(10.0));
        assert_eq!(cfg.solver.max_iters, 1500);
        assert_eq!(cfg.graph.spec, GraphSpec::Generated(TopologyKind::Ring));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn inventory_covers_every_emitted_key() {
        for kind in ["pca_synthetic", "pca_mnist", "lrmc"] {
            let mut cfg = ExperimentConfig::defaults_for(kind).unwrap();
            cfg.csv = Some("x.csv".into());
            for line in cfg.to_text().lines() {
                let key = line.split('=').next().unwrap().trim();
                assert!(CONFIG_KEYS.contains(&key), "{key}");
            }
        }
    }
}
