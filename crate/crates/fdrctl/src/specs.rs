//! String forms for shapes and procedures, shared by the command line
//! and experiment configuration files.
//!
//! Shape specs: `linear`, `by`, `sip:gamma=<g>`, `prior:dirac:mu=<x>`,
//! `prior:uniform`, `prior:power:gamma=<g>`, `prior:dpower:gamma=<g>`,
//! `prior:exp:lambda=<l>`, `prior:gauss:mu=<x>,sigma=<s>`, and `holm`
//! (shape-table reference curve only).
//!
//! Procedure specs: `su[:shape]`, `sd[:shape]`, `sud:<lambda>[:shape]`,
//! `rank:{bl_rs|bl99|holm|bonferroni|df:{uniform|k|invk}}`, and
//! `adaptive:<a0>,<a1>[:shape]`. Omitted shapes default to `linear`.

use crate::error::{Error, Result};
use crate::procedures::{
    adaptive_two_stage, make_rank_thresholds, rank_step_down, step_down, step_up, step_up_down,
    FactorizedThresholds, RankKind, RankThresholds,
};
use crate::shape::{ContinuousPrior, PriorDistribution, ShapeFunction, TableCurve};
use crate::space::{HypothesisSpace, PValueVector, RejectionSet};

fn spec_err(spec: &str, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

/// Parse `key=value` parameter lists like `mu=200,sigma=10`.
fn parse_params<'a>(spec: &str, text: &'a str, keys: &[&str]) -> Result<Vec<(&'a str, f64)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| spec_err(spec, format!("expected key=value, got `{part}`")))?;
        if !keys.contains(&key) {
            return Err(spec_err(spec, format!("unknown parameter `{key}`")));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| spec_err(spec, format!("`{value}` is not a number")))?;
        out.push((key, value));
    }
    Ok(out)
}

fn require_param(spec: &str, params: &[(&str, f64)], key: &str) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| spec_err(spec, format!("missing parameter `{key}`")))
}

/// Named prior families.
#[derive(Clone, Debug, PartialEq)]
pub enum PriorSpec {
    Dirac {
        mu: f64,
    },
    Uniform,
    Power {
        gamma: f64,
    },
    /// Discrete power prior `nu({k}) ∝ k^gamma` on `{1..m}`.
    DiscretePower {
        gamma: f64,
    },
    Exponential {
        lambda: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
}

/// Parsed shape specification.
#[derive(Clone, Debug, PartialEq)]
pub enum ShapeSpec {
    Linear,
    BenjaminiYekutieli,
    ScaleInvariantPower {
        gamma: f64,
    },
    Prior(PriorSpec),
    /// Reference curve for the shape table; not usable in procedures.
    HolmReference,
}

impl ShapeSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        match (head, rest) {
            ("linear", None) => Ok(Self::Linear),
            ("by", None) => Ok(Self::BenjaminiYekutieli),
            ("holm", None) => Ok(Self::HolmReference),
            ("sip", Some(params)) => {
                let params = parse_params(spec, params, &["gamma"])?;
                Ok(Self::ScaleInvariantPower {
                    gamma: require_param(spec, &params, "gamma")?,
                })
            }
            ("prior", Some(rest)) => {
                let (family, params_text) = match rest.split_once(':') {
                    Some((f, p)) => (f, Some(p)),
                    None => (rest, None),
                };
                let params = |keys: &[&str]| -> Result<Vec<(&str, f64)>> {
                    parse_params(
                        spec,
                        params_text.ok_or_else(|| {
                            spec_err(spec, format!("`{family}` needs parameters"))
                        })?,
                        keys,
                    )
                };
                match family {
                    "uniform" => Ok(Self::Prior(PriorSpec::Uniform)),
                    "dirac" => {
                        let p = params(&["mu"])?;
                        Ok(Self::Prior(PriorSpec::Dirac {
                            mu: require_param(spec, &p, "mu")?,
                        }))
                    }
                    "power" => {
                        let p = params(&["gamma"])?;
                        Ok(Self::Prior(PriorSpec::Power {
                            gamma: require_param(spec, &p, "gamma")?,
                        }))
                    }
                    "dpower" => {
                        let p = params(&["gamma"])?;
                        Ok(Self::Prior(PriorSpec::DiscretePower {
                            gamma: require_param(spec, &p, "gamma")?,
                        }))
                    }
                    "exp" => {
                        let p = params(&["lambda"])?;
                        Ok(Self::Prior(PriorSpec::Exponential {
                            lambda: require_param(spec, &p, "lambda")?,
                        }))
                    }
                    "gauss" => {
                        let p = params(&["mu", "sigma"])?;
                        Ok(Self::Prior(PriorSpec::Gaussian {
                            mu: require_param(spec, &p, "mu")?,
                            sigma: require_param(spec, &p, "sigma")?,
                        }))
                    }
                    other => Err(spec_err(spec, format!("unknown prior family `{other}`"))),
                }
            }
            (other, _) => Err(spec_err(spec, format!("unknown shape `{other}`"))),
        }
    }

    pub fn canonical(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::BenjaminiYekutieli => "by".into(),
            Self::HolmReference => "holm".into(),
            Self::ScaleInvariantPower { gamma } => format!("sip:gamma={gamma}"),
            Self::Prior(PriorSpec::Uniform) => "prior:uniform".into(),
            Self::Prior(PriorSpec::Dirac { mu }) => format!("prior:dirac:mu={mu}"),
            Self::Prior(PriorSpec::Power { gamma }) => format!("prior:power:gamma={gamma}"),
            Self::Prior(PriorSpec::DiscretePower { gamma }) => {
                format!("prior:dpower:gamma={gamma}")
            }
            Self::Prior(PriorSpec::Exponential { lambda }) => format!("prior:exp:lambda={lambda}"),
            Self::Prior(PriorSpec::Gaussian { mu, sigma }) => {
                format!("prior:gauss:mu={mu},sigma={sigma}")
            }
        }
    }

    fn continuous_prior(prior: &PriorSpec, m: usize) -> Option<ContinuousPrior> {
        match *prior {
            PriorSpec::Dirac { mu } => Some(ContinuousPrior::Dirac { mu }),
            PriorSpec::Uniform => Some(ContinuousPrior::Uniform { upper: m as f64 }),
            PriorSpec::Power { gamma } => Some(ContinuousPrior::Power {
                gamma,
                upper: m as f64,
            }),
            PriorSpec::Exponential { lambda } => Some(ContinuousPrior::Exponential { lambda }),
            PriorSpec::Gaussian { mu, sigma } => {
                Some(ContinuousPrior::TruncatedGaussian { mu, sigma })
            }
            PriorSpec::DiscretePower { .. } => None,
        }
    }

    /// Shape function for use in procedures on `m` hypotheses; continuous
    /// priors are discretized onto `{1..m}` first.
    pub fn materialize(&self, m: usize) -> Result<ShapeFunction> {
        match self {
            Self::Linear => Ok(ShapeFunction::Linear),
            Self::BenjaminiYekutieli => Ok(ShapeFunction::benjamini_yekutieli(m)),
            Self::ScaleInvariantPower { gamma } => ShapeFunction::scale_invariant_power(*gamma, m),
            Self::Prior(PriorSpec::DiscretePower { gamma }) => Ok(ShapeFunction::from_prior(
                PriorDistribution::discrete_power(*gamma, m)?,
            )),
            Self::Prior(prior) => {
                let continuous = Self::continuous_prior(prior, m).expect("handled above");
                Ok(ShapeFunction::from_prior(continuous.discretize(m)?))
            }
            Self::HolmReference => Err(Error::InvalidShape(
                "holm is a reference curve, not a shape usable in procedures".into(),
            )),
        }
    }

    /// Column for the normalized shape table; continuous priors are
    /// evaluated in closed form.
    pub fn table_curve(&self, m: usize) -> Result<TableCurve> {
        match self {
            Self::HolmReference => Ok(TableCurve::HolmReference),
            Self::Prior(prior) => match Self::continuous_prior(prior, m) {
                Some(c) => Ok(TableCurve::Continuous(c)),
                None => Ok(TableCurve::Shape(self.materialize(m)?)),
            },
            _ => Ok(TableCurve::Shape(self.materialize(m)?)),
        }
    }
}

/// Rank step-down families by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankSpec {
    BlRs,
    Bl99,
    Holm,
    Bonferroni,
    DfUniform,
    DfPropK,
    DfPropInvK,
}

impl RankSpec {
    fn parse(spec: &str, text: &str) -> Result<Self> {
        match text {
            "bl_rs" => Ok(Self::BlRs),
            "bl99" => Ok(Self::Bl99),
            "holm" => Ok(Self::Holm),
            "bonferroni" => Ok(Self::Bonferroni),
            "df:uniform" => Ok(Self::DfUniform),
            "df:k" => Ok(Self::DfPropK),
            "df:invk" => Ok(Self::DfPropInvK),
            other => Err(spec_err(spec, format!("unknown rank kind `{other}`"))),
        }
    }

    fn canonical(&self) -> &'static str {
        match self {
            Self::BlRs => "bl_rs",
            Self::Bl99 => "bl99",
            Self::Holm => "holm",
            Self::Bonferroni => "bonferroni",
            Self::DfUniform => "df:uniform",
            Self::DfPropK => "df:k",
            Self::DfPropInvK => "df:invk",
        }
    }

    pub fn kind(&self, m: usize) -> Result<RankKind> {
        Ok(match self {
            Self::BlRs => RankKind::BenjaminiLiuRs,
            Self::Bl99 => RankKind::BenjaminiLiu99,
            Self::Holm => RankKind::Holm,
            Self::Bonferroni => RankKind::Bonferroni,
            Self::DfUniform => {
                RankKind::DistributionFree(PriorDistribution::inverse_rank_power(0.0, m)?)
            }
            Self::DfPropK => {
                RankKind::DistributionFree(PriorDistribution::inverse_rank_power(1.0, m)?)
            }
            Self::DfPropInvK => {
                RankKind::DistributionFree(PriorDistribution::inverse_rank_power(-1.0, m)?)
            }
        })
    }
}

/// Parsed procedure kind.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcedureKind {
    StepUp,
    StepDown,
    StepUpDown { lambda: f64 },
    Rank(RankSpec),
    Adaptive { alpha0: f64, alpha1: f64 },
}

/// A procedure specification: kind plus optional shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcedureSpec {
    pub kind: ProcedureKind,
    pub shape: Option<ShapeSpec>,
}

impl ProcedureSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (spec, None),
        };
        let shape_of = |text: Option<&str>| -> Result<Option<ShapeSpec>> {
            text.map(ShapeSpec::parse).transpose()
        };
        match head {
            "su" => Ok(Self {
                kind: ProcedureKind::StepUp,
                shape: shape_of(rest)?,
            }),
            "sd" => Ok(Self {
                kind: ProcedureKind::StepDown,
                shape: shape_of(rest)?,
            }),
            "sud" => {
                let rest =
                    rest.ok_or_else(|| spec_err(spec, "sud needs an order `sud:<lambda>`"))?;
                let (lambda_text, shape_text) = match rest.split_once(':') {
                    Some((l, s)) => (l, Some(s)),
                    None => (rest, None),
                };
                let lambda: f64 = lambda_text
                    .parse()
                    .map_err(|_| spec_err(spec, format!("`{lambda_text}` is not a number")))?;
                Ok(Self {
                    kind: ProcedureKind::StepUpDown { lambda },
                    shape: shape_of(shape_text)?,
                })
            }
            "rank" => {
                let rest = rest.ok_or_else(|| spec_err(spec, "rank needs a kind `rank:<kind>`"))?;
                Ok(Self {
                    kind: ProcedureKind::Rank(RankSpec::parse(spec, rest)?),
                    shape: None,
                })
            }
            "adaptive" => {
                let rest = rest
                    .ok_or_else(|| spec_err(spec, "adaptive needs levels `adaptive:<a0>,<a1>`"))?;
                let (levels_text, shape_text) = match rest.split_once(':') {
                    Some((l, s)) => (l, Some(s)),
                    None => (rest, None),
                };
                let (a0_text, a1_text) = levels_text
                    .split_once(',')
                    .ok_or_else(|| spec_err(spec, "adaptive needs two levels `<a0>,<a1>`"))?;
                let alpha0: f64 = a0_text
                    .parse()
                    .map_err(|_| spec_err(spec, format!("`{a0_text}` is not a number")))?;
                let alpha1: f64 = a1_text
                    .parse()
                    .map_err(|_| spec_err(spec, format!("`{a1_text}` is not a number")))?;
                Ok(Self {
                    kind: ProcedureKind::Adaptive { alpha0, alpha1 },
                    shape: shape_of(shape_text)?,
                })
            }
            other => Err(spec_err(spec, format!("unknown procedure `{other}`"))),
        }
    }

    pub fn canonical(&self) -> String {
        let shape = self
            .shape
            .as_ref()
            .map(|s| format!(":{}", s.canonical()))
            .unwrap_or_default();
        match &self.kind {
            ProcedureKind::StepUp => format!("su{shape}"),
            ProcedureKind::StepDown => format!("sd{shape}"),
            ProcedureKind::StepUpDown { lambda } => format!("sud:{lambda}{shape}"),
            ProcedureKind::Rank(kind) => format!("rank:{}", kind.canonical()),
            ProcedureKind::Adaptive { alpha0, alpha1 } => {
                format!("adaptive:{alpha0},{alpha1}{shape}")
            }
        }
    }

    /// Attach a shape spec when none is embedded.
    pub fn with_default_shape(mut self, shape: Option<ShapeSpec>) -> Self {
        if self.shape.is_none() {
            self.shape = shape;
        }
        self
    }

    fn shape_function(&self, m: usize) -> Result<ShapeFunction> {
        self.shape
            .clone()
            .unwrap_or(ShapeSpec::Linear)
            .materialize(m)
    }

    /// Bind the spec to a level and problem size.
    pub fn compile(&self, alpha: f64, m: usize) -> Result<CompiledProcedure> {
        match &self.kind {
            ProcedureKind::StepUp => Ok(CompiledProcedure::StepUp(FactorizedThresholds::new(
                alpha,
                self.shape_function(m)?,
            )?)),
            ProcedureKind::StepDown => Ok(CompiledProcedure::StepDown(FactorizedThresholds::new(
                alpha,
                self.shape_function(m)?,
            )?)),
            ProcedureKind::StepUpDown { lambda } => Ok(CompiledProcedure::StepUpDown {
                delta: FactorizedThresholds::new(alpha, self.shape_function(m)?)?,
                lambda: *lambda,
            }),
            ProcedureKind::Rank(kind) => Ok(CompiledProcedure::RankStepDown(make_rank_thresholds(
                &kind.kind(m)?,
                alpha,
                m,
            )?)),
            ProcedureKind::Adaptive { alpha0, alpha1 } => Ok(CompiledProcedure::Adaptive {
                alpha0: *alpha0,
                alpha1: *alpha1,
                beta: self.shape_function(m)?,
            }),
        }
    }
}

/// Result of applying a compiled procedure.
#[derive(Clone, Debug)]
pub struct ProcedureOutcome {
    pub rejections: RejectionSet,
    /// First-stage estimate of `Pi(H0)`; adaptive procedures only.
    pub pi0_hat: Option<f64>,
}

/// A procedure bound to a level and problem size, ready to run.
#[derive(Clone, Debug)]
pub enum CompiledProcedure {
    StepUp(FactorizedThresholds),
    StepDown(FactorizedThresholds),
    StepUpDown {
        delta: FactorizedThresholds,
        lambda: f64,
    },
    RankStepDown(RankThresholds),
    Adaptive {
        alpha0: f64,
        alpha1: f64,
        beta: ShapeFunction,
    },
}

impl CompiledProcedure {
    pub fn apply(&self, p: &PValueVector, space: &HypothesisSpace) -> Result<ProcedureOutcome> {
        let (rejections, pi0_hat) = match self {
            Self::StepUp(delta) => (step_up(delta, p, space)?, None),
            Self::StepDown(delta) => (step_down(delta, p, space)?, None),
            Self::StepUpDown { delta, lambda } => (step_up_down(delta, *lambda, p, space)?, None),
            Self::RankStepDown(t) => (rank_step_down(t, p, space)?, None),
            Self::Adaptive {
                alpha0,
                alpha1,
                beta,
            } => {
                let out = adaptive_two_stage(*alpha0, *alpha1, beta, p, space)?;
                (out.rejections, Some(out.pi0_hat))
            }
        };
        Ok(ProcedureOutcome {
            rejections,
            pi0_hat,
        })
    }
}
