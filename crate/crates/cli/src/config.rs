//! Experiment configuration: a single JSON document.

use std::path::{Path, PathBuf};

use resolv_core::bounds::TheoremId;
use resolv_core::estimator::{Penalty, PseudoPenalty};
use resolv_core::{DataSample, EpsGrid, Family, Member, ParamBox};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    /// True parameter; exclusive with `sample_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// CSV of observations, one row per point; certify only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_path: Option<PathBuf>,
    pub grid: GridConfig,
    #[serde(default = "zero_penalty")]
    pub penalty: Penalty,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_penalty: Option<PseudoSpec>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub certificates: CertificateRequest,
    #[serde(default)]
    pub decay: DecaySpec,
    /// `alpha` of the `alpha D_B` pseudo-penalty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// `alpha` of the quadratic pseudo-penalty; defaults to `n/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_alpha: Option<f64>,
    /// `alpha` of the `alpha * penalty` pseudo-penalty; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn zero_penalty() -> Penalty {
    Penalty::Zero
}

fn default_reps() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// `"sqrt(2/n)"` or `"<k>/sqrt(n)"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rule: Option<String>,
    #[serde(rename = "box")]
    pub domain: ParamBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsRule {
    Fixed(f64),
    /// `sqrt(2/n)`
    SqrtTwoOverN,
    /// `k / sqrt(n)`
    Scaled(f64),
}

impl EpsRule {
    pub fn parse(s: &str) -> Option<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t == "sqrt(2/n)" {
            return Some(EpsRule::SqrtTwoOverN);
        }
        let k = t.strip_suffix("/sqrt(n)")?.parse::<f64>().ok()?;
        (k > 0.0 && k.is_finite()).then_some(EpsRule::Scaled(k))
    }

    pub fn eps(self, n: usize) -> f64 {
        match self {
            EpsRule::Fixed(e) => e,
            EpsRule::SqrtTwoOverN => (2.0 / n as f64).sqrt(),
            EpsRule::Scaled(k) => k / (n as f64).sqrt(),
        }
    }
}

/// Pseudo-penalty as written in a config; `n` and the reference come from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PseudoSpec {
    Zero,
    AlphaBhattacharyya { alpha: f64 },
    EntropyCodelength { pmf: Vec<f64> },
    Quadratic { alpha: f64, center: Vec<f64> },
    AlphaTimesPenalty { alpha: f64 },
    Table { values: Vec<f64> },
}

impl PseudoSpec {
    pub fn resolve(&self, n: usize, truth: Option<&Member>) -> Result<PseudoPenalty, String> {
        Ok(match self {
            PseudoSpec::Zero => PseudoPenalty::Zero,
            PseudoSpec::AlphaBhattacharyya { alpha } => PseudoPenalty::AlphaBhattacharyya {
                alpha: *alpha,
                n,
                reference: truth
                    .ok_or("alpha-bhattacharyya pseudo-penalty needs `theta`")?
                    .clone(),
            },
            PseudoSpec::EntropyCodelength { pmf } => {
                PseudoPenalty::EntropyCodelength { pmf: pmf.clone() }
            }
            PseudoSpec::Quadratic { alpha, center } => PseudoPenalty::Quadratic {
                alpha: *alpha,
                center: center.clone(),
            },
            PseudoSpec::AlphaTimesPenalty { alpha } => {
                PseudoPenalty::AlphaTimesPenalty { alpha: *alpha }
            }
            PseudoSpec::Table { values } => PseudoPenalty::Table {
                values: values.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CertificateRequest {
    /// `"all-applicable"`
    Keyword(String),
    List(Vec<String>),
}

impl Default for CertificateRequest {
    fn default() -> Self {
        CertificateRequest::Keyword("all-applicable".into())
    }
}

impl CertificateRequest {
    /// Requested theorems and whether the request was "all-applicable".
    pub fn theorems(&self) -> Result<(Vec<TheoremId>, bool), String> {
        match self {
            CertificateRequest::Keyword(k) if k == "all-applicable" => Ok((TheoremId::ALL.to_vec(), true)),
            CertificateRequest::Keyword(k) => Err(format!(
                "field `certificates`: expected \"all-applicable\" or a list of theorem ids, got \"{k}\""
            )),
            CertificateRequest::List(ids) => {
                if ids.is_empty() {
                    return Err("field `certificates`: the list is empty".into());
                }
                let mut out = Vec::with_capacity(ids.len());
                for id in ids {
                    let t = TheoremId::parse(id).ok_or_else(|| {
                        let known: Vec<&str> = TheoremId::ALL.iter().map(|t| t.as_str()).collect();
                        format!("field `certificates`: unknown theorem id \"{id}\" (known: {})", known.join(", "))
                    })?;
                    if !out.contains(&t) {
                        out.push(t);
                    }
                }
                Ok((out, false))
            }
        }
    }
}

/// Affinity decay profile used by the Gaussian-decay and power-decay certificates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    /// Gaussian decay constant; derived from the family and box when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("field `{name}`: {msg}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.family.validate().map_err(|e| field("family", e))?;
        let d = self.family.dim();
        match (&self.theta, &self.sample_path) {
            (Some(_), Some(_)) => {
                return Err(ConfigError(
                    "`theta` and `sample_path` are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError(
                    "one of `theta` or `sample_path` is required".into(),
                ))
            }
            (Some(t), None) => {
                Member::new(self.family, t.clone()).map_err(|e| field("theta", e))?;
                if self.n.is_empty() {
                    return Err(field("n", "at least one sample size is required"));
                }
            }
            (None, Some(_)) => {}
        }
        if self.n.contains(&0) {
            return Err(field("n", "sample sizes must be positive"));
        }
        let b = &self.grid.domain;
        ParamBox::new(b.lo.clone(), b.hi.clone()).map_err(|e| field("grid.box", e))?;
        if b.dim() != d {
            return Err(field(
                "grid.box",
                format!("has dimension {}, family dimension is {d}", b.dim()),
            ));
        }
        if !b.is_bounded() {
            return Err(field("grid.box", "every bound must be finite"));
        }
        if let Some(o) = &self.grid.offset {
            if o.len() != d {
                return Err(field(
                    "grid.offset",
                    format!("has {} coordinates, family dimension is {d}", o.len()),
                ));
            }
        }
        match (&self.grid.eps, &self.grid.eps_rule) {
            (Some(_), Some(_)) => {
                return Err(field("grid", "`eps` and `eps_rule` are mutually exclusive"))
            }
            (None, None) => return Err(field("grid", "one of `eps` or `eps_rule` is required")),
            (Some(e), None) if !(*e > 0.0 && e.is_finite()) => {
                return Err(field("grid.eps", "must be positive"))
            }
            (None, Some(r)) if EpsRule::parse(r).is_none() => {
                return Err(field(
                    "grid.eps_rule",
                    format!("\"{r}\" is not \"sqrt(2/n)\" or \"<k>/sqrt(n)\""),
                ))
            }
            _ => {}
        }
        if self.reps < 2 {
            return Err(field("reps", "must be at least 2"));
        }
        self.certificates.theorems().map_err(ConfigError)?;
        for (name, v) in [
            ("alpha", self.alpha),
            ("quadratic_alpha", self.quadratic_alpha),
            ("penalty_alpha", self.penalty_alpha),
        ] {
            if let Some(a) = v {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(field(name, "must be finite and >= 0"));
                }
            }
        }
        if let Some(a) = self.alpha {
            if a >= 1.0 {
                return Err(field("alpha", "must be < 1"));
            }
        }
        if let Some(t) = &self.tail {
            if !(t.t >= 0.0) {
                return Err(field("tail.t", "must be >= 0"));
            }
            if t.reps == Some(0) {
                return Err(field("tail.reps", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn eps_rule(&self) -> EpsRule {
        match (&self.grid.eps, &self.grid.eps_rule) {
            (Some(e), _) => EpsRule::Fixed(*e),
            (None, Some(r)) => EpsRule::parse(r).expect("validated"),
            (None, None) => unreachable!("validated"),
        }
    }

    pub fn truth(&self) -> Option<Member> {
        self.theta.as_ref().map(|t| Member {
            family: self.family,
            theta: t.clone(),
        })
    }

    pub fn grid_for(&self, n: usize) -> Result<EpsGrid, ConfigError> {
        let d = self.family.dim();
        let eps = self.eps_rule().eps(n);
        let offset = self.grid.offset.clone().unwrap_or_else(|| vec![0.0; d]);
        let grid = match self.grid.cap {
            Some(cap) => EpsGrid::with_cap(offset, eps, self.grid.domain.clone(), cap),
            None => EpsGrid::new(offset, eps, self.grid.domain.clone()),
        };
        grid.map_err(|e| field("grid", format!("n = {n}: {e}")))
    }

    pub fn load_sample(&self) -> Result<Option<DataSample>, ConfigError> {
        let Some(path) = &self.sample_path else {
            return Ok(None);
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| field("sample_path", e))?;
        let d = self.family.dim();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| field("sample_path", e))?;
            if rec.len() != d {
                return Err(field(
                    "sample_path",
                    format!("row {} has {} columns, expected {d}", i + 1, rec.len()),
                ));
            }
            for cell in rec.iter() {
                values.push(
                    cell.parse::<f64>()
                        .map_err(|e| field("sample_path", format!("row {}: {e}", i + 1)))?,
                );
            }
        }
        let sample = DataSample::external(values, d).map_err(|e| field("sample_path", e))?;
        for x in sample.points() {
            self.family
                .check_observation(x)
                .map_err(|e| field("sample_path", e))?;
        }
        if !self.n.is_empty() && self.n != [sample.len()] {
            return Err(field(
                "n",
                format!(
                    "must be empty or [{}] with an external sample",
                    sample.len()
                ),
            ));
        }
        Ok(Some(sample))
    }
}
