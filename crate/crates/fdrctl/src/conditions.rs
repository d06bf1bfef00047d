//! Empirical verification of the two sufficient conditions for FDR
//! control and of the dependency hypotheses behind them.
//!
//! Self-consistency is an algorithmic property: every rejected
//! hypothesis clears its threshold evaluated at the realized rejection
//! volume. Dependency control is probabilistic: for a couple `(U, V)` of
//! nonnegative variables, `E[1{U <= c beta(V)} / V] <= c` for every
//! `c > 0`. When both hold for `(p_h, |R|)` at every true null `h`, the
//! FDR is at most `alpha Pi(H0)`. The checks here estimate these
//! quantities by seeded Monte-Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::procedures::FactorizedThresholds;
use crate::shape::ShapeFunction;
use crate::simulation::DependenceModel;
use crate::space::{HypothesisSpace, PValueVector, RejectionSet};

/// Outcome of a self-consistency check.
#[derive(Clone, Debug)]
pub struct ScCheck {
    pub holds: bool,
    /// Index of one violating hypothesis when the check fails.
    pub witness: Option<usize>,
}

/// Check `R ⊆ L(|R|)`: every member's p-value must be at most
/// `alpha pi(h) beta(Lambda(R))`, tested in the rescaled form
/// `q_h <= alpha beta(Lambda(R))` used by the procedures themselves.
pub fn check_self_consistency(
    r: &RejectionSet,
    delta: &FactorizedThresholds,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<ScCheck> {
    p.check_len(space)?;
    let threshold = delta.rescaled_threshold(r.volume());
    for &h in r.members() {
        let ph = p.get(h);
        let q = if ph == 0.0 { 0.0 } else { ph / space.pi(h) };
        if q > threshold {
            return Ok(ScCheck {
                holds: false,
                witness: Some(h),
            });
        }
    }
    Ok(ScCheck {
        holds: true,
        witness: None,
    })
}

/// One Monte-Carlo estimate of `E[1{U <= c beta(V)} / V]`.
#[derive(Clone, Debug, Serialize)]
pub struct DcEstimate {
    pub c: f64,
    pub estimate: f64,
    pub se: f64,
    /// Samples entering the mean.
    pub n_used: u64,
    /// Samples with `V = 0` and the indicator true; flagged and excluded.
    pub violations: u64,
}

impl DcEstimate {
    /// Conservative pass flag: the dependency-control bound holds within
    /// three standard errors.
    pub fn passes(&self) -> bool {
        self.violations == 0 && self.estimate <= self.c + 3.0 * self.se
    }
}

/// Estimate the dependency-control functional over a grid of `c` values,
/// reusing one seeded sample of `(U, V)` couples for the whole grid.
///
/// Samples with `V = 0` contribute 0 when the indicator is false (the
/// indicator has priority); when the indicator is true they are counted
/// in `violations` and excluded from the mean.
pub fn dc_estimate<F>(
    mut sampler: F,
    beta: &ShapeFunction,
    c_grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<Vec<DcEstimate>>
where
    F: FnMut(&mut ChaCha8Rng) -> (f64, f64),
{
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    for &c in c_grid {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "c grid must be positive, got {c}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(f64, f64)> = (0..n).map(|_| sampler(&mut rng)).collect();

    Ok(c_grid
        .iter()
        .map(|&c| {
            // Welford accumulation; the summands can be heavy-tailed.
            let mut count = 0u64;
            let mut mean = 0.0f64;
            let mut m2 = 0.0f64;
            let mut violations = 0u64;
            for &(u, v) in &samples {
                let indicator = u <= c * beta.eval(v);
                let value = if v > 0.0 {
                    if indicator {
                        1.0 / v
                    } else {
                        0.0
                    }
                } else if indicator {
                    violations += 1;
                    continue;
                } else {
                    0.0
                };
                count += 1;
                let delta = value - mean;
                mean += delta / count as f64;
                m2 += delta * (value - mean);
            }
            let se = if count > 1 {
                (m2 / (count - 1) as f64 / count as f64).sqrt()
            } else {
                0.0
            };
            DcEstimate {
                c,
                estimate: mean,
                se,
                n_used: count,
                violations,
            }
        })
        .collect())
}

/// Named analytic `(U, V)` sources with known dependency-control
/// behavior, used to calibrate the estimator: `V ≡ 1` attains equality
/// at every `c <= 1`, `V = 1 - U` yields `ln(1+c)`, and `V = U/2` makes
/// the mean diverge (a genuine violation the estimator must flag).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticSampler {
    ConstantOne,
    OneMinusU,
    HalfU,
}

impl AnalyticSampler {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let u: f64 = rng.random();
        match self {
            Self::ConstantOne => (u, 1.0),
            Self::OneMinusU => (u, 1.0 - u),
            Self::HalfU => (u, u / 2.0),
        }
    }
}

/// Sampler for `(U, V) = (p_h, |R|)` under a generative model: `U` is the
/// p-value of hypothesis `h` and `V` the rejection volume of `procedure`.
pub fn pvalue_volume_sampler<'a, F>(
    model: &'a DependenceModel,
    space: &'a HypothesisSpace,
    procedure: F,
    h: usize,
) -> impl FnMut(&mut ChaCha8Rng) -> (f64, f64) + 'a
where
    F: Fn(&PValueVector, &HypothesisSpace) -> Result<RejectionSet> + 'a,
{
    move |rng| {
        let p = model.sample(rng);
        let volume = procedure(&p, space)
            .expect("procedure failed during dependency-control sampling")
            .volume();
        (p.get(h), volume)
    }
}

/// Count strict volume decreases of `procedure` under random
/// single-coordinate decreases of the p-values. Shipped step-wise
/// procedures are nonincreasing in every p-value, so the expected count
/// is zero.
pub fn monotonicity_probe<F>(
    procedure: F,
    p: &PValueVector,
    space: &HypothesisSpace,
    n_perturb: u64,
    seed: u64,
) -> Result<u64>
where
    F: Fn(&PValueVector, &HypothesisSpace) -> Result<RejectionSet>,
{
    if n_perturb == 0 {
        return Err(Error::InvalidArgument(
            "need at least one perturbation".into(),
        ));
    }
    p.check_len(space)?;
    let baseline = procedure(p, space)?.volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    for _ in 0..n_perturb {
        let j = rng.random_range(0..space.len());
        let mut values = p.values().to_vec();
        values[j] *= rng.random::<f64>();
        let perturbed = PValueVector::new(values)?;
        let volume = procedure(&perturbed, space)?.volume();
        if volume < baseline - crate::space::VOLUME_TOL {
            violations += 1;
        }
    }
    Ok(violations)
}

/// One point of an estimated conditional curve `P(|R| < r | p_h <= u)`.
#[derive(Clone, Debug, Serialize)]
pub struct PrdsPoint {
    pub u: f64,
    pub estimate: f64,
    pub se: f64,
    pub conditioning_hits: u64,
}

/// Estimated curve with a monotonicity diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct PrdsCurve {
    pub points: Vec<PrdsPoint>,
    /// False when some adjacent pair decreases by more than three pooled
    /// standard errors.
    pub nondecreasing_within_noise: bool,
}

/// Estimate `u -> P(|R| < r | p_h <= u)` over `u_grid` for a true null
/// `h`. Positive regression dependency makes this curve nondecreasing.
/// Errors out when some conditioning event collects fewer than 100 hits.
#[allow(clippy::too_many_arguments)]
pub fn prds_curve_estimate<F>(
    model: &DependenceModel,
    space: &HypothesisSpace,
    procedure: F,
    h: usize,
    r: f64,
    u_grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<PrdsCurve>
where
    F: Fn(&PValueVector, &HypothesisSpace) -> Result<RejectionSet>,
{
    const MIN_HITS: u64 = 100;
    if u_grid.is_empty() {
        return Err(Error::InvalidArgument("empty u grid".into()));
    }
    for w in u_grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidArgument("u grid must be increasing".into()));
        }
    }
    if !(u_grid[0] > 0.0 && *u_grid.last().unwrap() <= 1.0) {
        return Err(Error::InvalidArgument("u grid must lie in (0, 1]".into()));
    }
    if h >= model.m() || !model.is_null(h) {
        return Err(Error::InvalidArgument(format!(
            "hypothesis {h} is not a true null of the model"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<(f64, f64)> = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let p = model.sample(&mut rng);
        let volume = procedure(&p, space)?.volume();
        draws.push((p.get(h), volume));
    }
    let mut points = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let mut hits = 0u64;
        let mut below = 0u64;
        for &(ph, volume) in &draws {
            if ph <= u {
                hits += 1;
                if volume < r {
                    below += 1;
                }
            }
        }
        if hits < MIN_HITS {
            return Err(Error::InsufficientConditioning {
                u,
                hits,
                min: MIN_HITS,
            });
        }
        let estimate = below as f64 / hits as f64;
        let se = (estimate * (1.0 - estimate) / hits as f64).sqrt();
        points.push(PrdsPoint {
            u,
            estimate,
            se,
            conditioning_hits: hits,
        });
    }
    let nondecreasing_within_noise = points.windows(2).all(|w| {
        let pooled = (w[0].se * w[0].se + w[1].se * w[1].se).sqrt();
        w[1].estimate >= w[0].estimate - 3.0 * pooled
    });
    Ok(PrdsCurve {
        points,
        nondecreasing_within_noise,
    })
}
