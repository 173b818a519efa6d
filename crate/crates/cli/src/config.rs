//! Run configuration files.
//!
//! A configuration is a TOML document with three required top-level keys and
//! optional sections. Unknown keys are errors, and so are keys that the chosen
//! experiment does not use. See `docs/config.md` for the full grammar.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use meshless::approx::{ApproxEngine, Basis, DenseSolverKind, MonomialBasis, Rbf, ScaleRule, WeightFunction};
use meshless::pde::{PreconditionerKind, SparseSolverConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: key `{key}`: {message}")]
    Parse {
        path: PathBuf,
        key: String,
        message: String,
    },
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ApproxConvergence,
    Heat2d,
    Convdiff3d,
    PoissonBench,
    FillDemo,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ApproxConvergence => "approx-convergence",
            Experiment::Heat2d => "heat2d",
            Experiment::Convdiff3d => "convdiff3d",
            Experiment::PoissonBench => "poisson-bench",
            Experiment::FillDemo => "fill-demo",
        }
    }

    fn dims(self) -> &'static [usize] {
        match self {
            Experiment::ApproxConvergence | Experiment::Heat2d => &[2],
            Experiment::Convdiff3d => &[3],
            Experiment::PoissonBench | Experiment::FillDemo => &[2, 3],
        }
    }

    pub fn default_dim(self) -> usize {
        self.dims()[0]
    }

    /// Optional keys the experiment reads, as `section.key`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::ApproxConvergence => &["run.divisions", "run.setups"],
            Experiment::Heat2d => &[
                "geometry.h",
                "geometry.hole_radius",
                "engine",
                "solver",
                "run.dt_factor",
                "run.end_time",
            ],
            Experiment::Convdiff3d => &["geometry.h", "geometry.hole_radius", "engine", "solver"],
            Experiment::PoissonBench => &[
                "geometry.h",
                "geometry.inner_radius",
                "geometry.outer_radius",
                "engine",
                "solver",
                "run.repetitions",
            ],
            Experiment::FillDemo => &[
                "geometry.h",
                "geometry.h_gradient",
                "geometry.inner_radius",
                "geometry.outer_radius",
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single number or a list of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Nodal spacing, or a list of spacings for refinement studies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<OneOrMany>,
    /// Relative growth of the spacing with distance from the origin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_gradient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hole_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rbffd,
    Gwls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RbfKind {
    Phs,
    Gaussian,
    Mq,
    Imq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Total,
    Pure,
    Rbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    One,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Support,
    Nearest,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Lu,
    Qr,
    Svd,
}

/// Approximation settings. Every key is optional; `spec` is a one-line
/// shorthand whose values are overridden by explicit keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rbf: Option<RbfKind>,
    /// Polyharmonic exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Shape parameter of Gaussian and (inverse) multiquadric RBFs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Augmentation degree (RBF-FD) or basis degree (GWLS).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stencil_size: Option<usize>,
}

impl EngineConfig {
    fn is_empty(&self) -> bool {
        *self == EngineConfig::default()
    }

    /// Fields of `self`, falling back to `base` where unset.
    pub fn over(&self, base: &EngineConfig) -> EngineConfig {
        EngineConfig {
            spec: None,
            method: self.method.or(base.method),
            rbf: self.rbf.or(base.rbf),
            k: self.k.or(base.k),
            sigma: self.sigma.or(base.sigma),
            m: self.m.or(base.m),
            basis: self.basis.or(base.basis),
            weight: self.weight.or(base.weight),
            weight_sigma: self.weight_sigma.or(base.weight_sigma),
            scale: self.scale.or(base.scale),
            solver: self.solver.or(base.solver),
            stencil_size: self.stencil_size.or(base.stencil_size),
        }
    }

    /// Parses the shorthand `spec` grammar: comma or space separated words,
    /// either bare (`rbffd`, `gwls`, `phs`, `gaussian`, `mq`, `imq`) or
    /// `key=value` with the keys of this section (`n` for `stencil_size`).
    pub fn parse_spec(spec: &str) -> Result<EngineConfig, ConfigError> {
        let key = "engine.spec";
        let mut e = EngineConfig::default();
        for token in spec
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            match token.split_once('=') {
                None => match token {
                    "rbffd" => e.method = Some(Method::Rbffd),
                    "gwls" => e.method = Some(Method::Gwls),
                    "phs" => e.rbf = Some(RbfKind::Phs),
                    "gaussian" => e.rbf = Some(RbfKind::Gaussian),
                    "mq" => e.rbf = Some(RbfKind::Mq),
                    "imq" => e.rbf = Some(RbfKind::Imq),
                    _ => return Err(invalid(key, format!("unknown word {token:?}"))),
                },
                Some((k, v)) => {
                    let bad = |what: &str| invalid(key, format!("{k}={v}: expected {what}"));
                    match k {
                        "k" => e.k = Some(v.parse().map_err(|_| bad("a nonnegative integer"))?),
                        "sigma" => e.sigma = Some(v.parse().map_err(|_| bad("a number"))?),
                        "m" => e.m = Some(v.parse().map_err(|_| bad("an integer"))?),
                        "n" | "stencil_size" => {
                            e.stencil_size = Some(v.parse().map_err(|_| bad("a positive integer"))?)
                        }
                        "weight_sigma" => e.weight_sigma = Some(v.parse().map_err(|_| bad("a number"))?),
                        "basis" => e.basis = Some(enum_word(v).map_err(|_| bad("total, pure or rbf"))?),
                        "weight" => e.weight = Some(enum_word(v).map_err(|_| bad("one or gaussian"))?),
                        "scale" => e.scale = Some(enum_word(v).map_err(|_| bad("support, nearest or none"))?),
                        "solver" => e.solver = Some(enum_word(v).map_err(|_| bad("lu, qr or svd"))?),
                        _ => return Err(invalid(key, format!("unknown key {k:?}"))),
                    }
                }
            }
        }
        Ok(e)
    }

    /// The approximation engine and stencil size; every field must be set or
    /// defaultable.
    pub fn build(&self) -> Result<(ApproxEngine, usize), ConfigError> {
        let need = |name: &str| invalid(&format!("engine.{name}"), "missing");
        let rbf = || -> Result<Rbf, ConfigError> {
            let kind = self.rbf.ok_or_else(|| need("rbf"))?;
            let sigma = || self.sigma.ok_or_else(|| need("sigma"));
            Ok(match kind {
                RbfKind::Phs => Rbf::Polyharmonic(self.k.ok_or_else(|| need("k"))?),
                RbfKind::Gaussian => Rbf::Gaussian(sigma()?),
                RbfKind::Mq => Rbf::Multiquadric(sigma()?),
                RbfKind::Imq => Rbf::InverseMultiquadric(sigma()?),
            })
        };
        let mut engine = match self.method.ok_or_else(|| need("method"))? {
            Method::Rbffd => ApproxEngine::rbffd(rbf()?, self.m.unwrap_or(-1)),
            Method::Gwls => {
                let m = self.m.ok_or_else(|| need("m"));
                let basis = match self.basis.unwrap_or(BasisKind::Total) {
                    BasisKind::Total => Basis::Monomials(MonomialBasis::TotalDegree(m?)),
                    BasisKind::Pure => {
                        let m = m?;
                        let m = u32::try_from(m)
                            .map_err(|_| invalid("engine.m", format!("must be nonnegative, got {m}")))?;
                        Basis::Monomials(MonomialBasis::PurePowers(m))
                    }
                    BasisKind::Rbf => Basis::Rbf(rbf()?),
                };
                let weight = match self.weight.unwrap_or(WeightKind::One) {
                    WeightKind::One => WeightFunction::ConstantOne,
                    WeightKind::Gaussian => {
                        WeightFunction::Gaussian(self.weight_sigma.ok_or_else(|| need("weight_sigma"))?)
                    }
                };
                ApproxEngine::gwls(basis, weight)
            }
        };
        if let Some(scale) = self.scale {
            engine = engine.with_scale(match scale {
                ScaleKind::Support => ScaleRule::SupportRadius,
                ScaleKind::Nearest => ScaleRule::NearestNeighbor,
                ScaleKind::None => ScaleRule::None,
            });
        }
        if let Some(solver) = self.solver {
            engine = engine.with_solver(match solver {
                SolverKind::Lu => DenseSolverKind::PartialPivLu,
                SolverKind::Qr => DenseSolverKind::ColPivQr,
                SolverKind::Svd => DenseSolverKind::Svd,
            });
        }
        engine.validate().map_err(|e| invalid("engine", e.to_string()))?;
        let n = self.stencil_size.ok_or_else(|| need("stencil_size"))?;
        if n == 0 {
            return Err(invalid("engine.stencil_size", "must be positive"));
        }
        Ok((engine, n))
    }
}

fn enum_word<T: for<'de> Deserialize<'de>>(word: &str) -> Result<T, ()> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(word)).map_err(|_| ())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerName {
    Ilut,
    None,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preconditioner: Option<PreconditionerName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fill: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop: Option<f64>,
}

impl SolverConfig {
    pub fn build(&self) -> Result<SparseSolverConfig, ConfigError> {
        let default = SparseSolverConfig::default();
        let (dfill, ddrop) = match default.preconditioner {
            PreconditionerKind::Ilut { fill, drop } => (fill, drop),
            PreconditionerKind::None => (5, 1e-2),
        };
        let preconditioner = match self.preconditioner.unwrap_or(PreconditionerName::Ilut) {
            PreconditionerName::Ilut => PreconditionerKind::Ilut {
                fill: self.fill.unwrap_or(dfill),
                drop: self.drop.unwrap_or(ddrop),
            },
            PreconditionerName::None => {
                if self.fill.is_some() || self.drop.is_some() {
                    return Err(invalid("solver.fill", "only used by the ilut preconditioner"));
                }
                PreconditionerKind::None
            }
        };
        let config = SparseSolverConfig {
            tol: self.tol.unwrap_or(default.tol),
            max_iter: self.max_iter.or(default.max_iter),
            preconditioner,
        };
        config.validate().map_err(|e| invalid("solver", e.to_string()))?;
        Ok(config)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Timing repetitions per resolution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    /// Time step as a fraction of the explicit stability guideline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
    /// Grid divisions `1/h` of the approximation study.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divisions: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setups: Option<Vec<usize>>,
}

fn is_default<T: Default + PartialEq>(t: &T) -> bool {
    *t == T::default()
}

/// A parsed run configuration. Sections hold only what the file (or command
/// line) specified; experiments apply their documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub geometry: GeometryConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub engine: EngineConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub run: RunSection,
}

impl RunConfig {
    /// Configuration with only the required keys.
    pub fn new(experiment: Experiment, dim: usize, seed: u64) -> Self {
        RunConfig {
            experiment,
            dim,
            seed,
            out: None,
            geometry: GeometryConfig::default(),
            engine: EngineConfig::default(),
            solver: SolverConfig::default(),
            run: RunSection::default(),
        }
    }

    /// Checks the dimension and that every key that was set is read by the
    /// experiment.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let exp = self.experiment;
        if !exp.dims().contains(&self.dim) {
            return Err(invalid(
                "dim",
                format!("{exp} runs in dimension {:?}, got {}", exp.dims(), self.dim),
            ));
        }
        let allowed = exp.keys();
        let g = &self.geometry;
        let r = &self.run;
        let set = [
            ("geometry.h", g.h.is_some()),
            ("geometry.h_gradient", g.h_gradient.is_some()),
            ("geometry.inner_radius", g.inner_radius.is_some()),
            ("geometry.outer_radius", g.outer_radius.is_some()),
            ("geometry.hole_radius", g.hole_radius.is_some()),
            ("engine", !self.engine.is_empty()),
            ("solver", self.solver != SolverConfig::default()),
            ("run.repetitions", r.repetitions.is_some()),
            ("run.dt_factor", r.dt_factor.is_some()),
            ("run.end_time", r.end_time.is_some()),
            ("run.divisions", r.divisions.is_some()),
            ("run.setups", r.setups.is_some()),
        ];
        for (key, present) in set {
            if present && !allowed.contains(&key) {
                return Err(invalid(key, format!("not used by {exp}")));
            }
        }
        if let Some(spec) = &self.engine.spec {
            EngineConfig::parse_spec(spec)?;
        }
        Ok(())
    }

    /// `engine` keys over `engine.spec` over `defaults`.
    pub fn engine_config(&self, defaults: &EngineConfig) -> Result<EngineConfig, ConfigError> {
        let spec = match &self.engine.spec {
            Some(s) => EngineConfig::parse_spec(s)?,
            None => EngineConfig::default(),
        };
        Ok(self.engine.over(&spec.over(defaults)))
    }

    /// The configuration as TOML, with keys in a fixed order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse(text, Path::new("<config>"))
    }
}

fn parse(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        key: "<document>".into(),
        message: e.message().to_string(),
    })?;
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::Parse {
            path: path.to_path_buf(),
            key: if key == "." { "<document>".into() } else { key },
            message: e.into_inner().message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// Reads and fully validates a configuration file.
pub fn read_run_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path)
}
