//! Threshold collections and the multiple-testing procedures built on
//! them: level sets, step-up, step-down, step-up-down of arbitrary
//! order, rank-threshold step-downs and the adaptive two-stage
//! procedure.
//!
//! A factorized threshold collection is `Delta(h, r) = alpha pi(h)
//! beta(r)` with a nondecreasing shape function `beta`. Its level set at
//! rejection volume `r` is `L(r) = {h : p_h <= Delta(h, r)}`. The
//! step-up procedure returns the largest self-consistent set, i.e. the
//! largest `R = L(r_hat)` with `|L(r_hat)| = r_hat`; the step-up-down
//! family selects other crossing points between the level-set volume and
//! the diagonal.
//!
//! Membership is decided by the rescaled p-values `q_h = p_h / pi(h)`
//! (`q_h = 0` when `p_h = 0`), so the sort order used by the crossing
//! scan and the level-set membership test agree exactly, ties included.

use crate::error::{Error, Result};
use crate::shape::ShapeFunction;
use crate::space::{q_values, HypothesisSpace, PValueVector, RejectionSet};

/// A factorized threshold collection `Delta(h, r) = alpha pi(h) beta(r)`;
/// the weight function `pi` is read from the hypothesis space at
/// application time.
#[derive(Clone, Debug)]
pub struct FactorizedThresholds {
    alpha: f64,
    beta: ShapeFunction,
}

impl FactorizedThresholds {
    pub fn new(alpha: f64, beta: ShapeFunction) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidLevel(alpha));
        }
        Ok(Self { alpha, beta })
    }

    /// Constructor without the `(0, 1)` level check, for data-dependent
    /// collections whose effective level may exceed 1 (adaptive second
    /// stage).
    pub(crate) fn unchecked(alpha: f64, beta: ShapeFunction) -> Self {
        Self { alpha, beta }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &ShapeFunction {
        &self.beta
    }

    /// Threshold value `alpha * pi_h * beta(r)`.
    pub fn threshold(&self, pi_h: f64, r: f64) -> f64 {
        self.alpha * pi_h * self.beta.eval(r)
    }

    /// The rescaled threshold `alpha * beta(r)` compared against
    /// `q_h = p_h / pi(h)`. All membership decisions in this module use
    /// this form, so scans and level sets agree bit for bit.
    pub fn rescaled_threshold(&self, r: f64) -> f64 {
        self.alpha * self.beta.eval(r)
    }
}

/// Sorted view of the rescaled p-values with cumulative volumes.
struct CrossingScan {
    /// Hypothesis indices ordered by ascending `q`.
    order: Vec<usize>,
    /// `q` in sorted order.
    sorted_q: Vec<f64>,
    /// `cum_volume[k]` is the volume of the `k` smallest-`q` hypotheses.
    cum_volume: Vec<f64>,
    q: Vec<f64>,
}

impl CrossingScan {
    fn new(p: &PValueVector, space: &HypothesisSpace) -> Self {
        let q = q_values(p, space);
        let mut order: Vec<usize> = (0..space.len()).collect();
        order.sort_by(|&a, &b| q[a].total_cmp(&q[b]));
        let sorted_q: Vec<f64> = order.iter().map(|&h| q[h]).collect();
        let mut cum_volume = Vec::with_capacity(order.len() + 1);
        let mut acc = crate::num::KahanSum::new();
        cum_volume.push(0.0);
        for &h in &order {
            acc.add(space.lambda(h));
            cum_volume.push(acc.total());
        }
        Self {
            order,
            sorted_q,
            cum_volume,
            q,
        }
    }

    fn m(&self) -> usize {
        self.order.len()
    }

    /// `|L(r)|` expressed as a count: how many sorted entries clear the
    /// rescaled threshold at `r`.
    fn level_count(&self, delta: &FactorizedThresholds, r: f64) -> usize {
        let t = delta.rescaled_threshold(r);
        self.sorted_q.partition_point(|&x| x <= t)
    }

    /// Whether the cumulative volume `cum_volume[k]` is a self-consistent
    /// crossing point: `q_(k) <= alpha beta(V_k)`.
    fn feasible(&self, delta: &FactorizedThresholds, k: usize) -> bool {
        k == 0 || self.sorted_q[k - 1] <= delta.rescaled_threshold(self.cum_volume[k])
    }

    /// Collect the level set at volume `r` into a rejection set.
    fn level_set(
        &self,
        delta: &FactorizedThresholds,
        r: f64,
        space: &HypothesisSpace,
    ) -> RejectionSet {
        let t = delta.rescaled_threshold(r);
        let members: Vec<usize> = (0..self.m()).filter(|&h| self.q[h] <= t).collect();
        RejectionSet::from_indices(space, members)
    }
}

/// Level set `L(r) = {h : p_h <= alpha pi(h) beta(r)}`, inclusive.
pub fn level_set(
    delta: &FactorizedThresholds,
    r: f64,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<RejectionSet> {
    p.check_len(space)?;
    assert!(r >= 0.0, "rejection volumes are nonnegative, got {r}");
    let scan = CrossingScan::new(p, space);
    Ok(scan.level_set(delta, r, space))
}

/// Step-up procedure: rejects `L(r_hat)` for the largest crossing point
/// `r_hat = max{r >= 0 : |L(r)| >= r}`; equivalently, the union of every
/// self-consistent subset.
pub fn step_up(
    delta: &FactorizedThresholds,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<RejectionSet> {
    p.check_len(space)?;
    let scan = CrossingScan::new(p, space);
    let mut r_hat = 0.0;
    for k in (1..=scan.m()).rev() {
        if scan.feasible(delta, k) {
            r_hat = scan.cum_volume[k];
            break;
        }
    }
    Ok(scan.level_set(delta, r_hat, space))
}

/// Step-down procedure: the step-up-down procedure of order 0.
pub fn step_down(
    delta: &FactorizedThresholds,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<RejectionSet> {
    p.check_len(space)?;
    let scan = CrossingScan::new(p, space);
    let mut k = 0;
    while k < scan.m() && scan.feasible(delta, k + 1) {
        k += 1;
    }
    Ok(scan.level_set(delta, scan.cum_volume[k], space))
}

/// Step-up-down procedure of order `lambda` in `[0, Lambda(H)]`.
///
/// The order is first quantized down to the pivot `V_j`, the largest
/// attainable volume (cumulative volume of the `q`-sorted hypotheses)
/// not exceeding `lambda`; under the standard weighting and integer
/// `lambda` the pivot is `lambda` itself. If `|L(V_j)| >= V_j` the
/// crossing scan moves right from the pivot while every intermediate
/// attainable volume stays self-consistent (order `Lambda(H)` recovers
/// the step-up); otherwise it returns the largest self-consistent volume
/// strictly below the pivot (order 0 recovers the step-down). The
/// quantization keeps the output monotone in `lambda`, so step-down and
/// step-up always bracket the result.
pub fn step_up_down(
    delta: &FactorizedThresholds,
    lambda: f64,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<RejectionSet> {
    p.check_len(space)?;
    let total = space.total_volume();
    if !(0.0..=total + crate::space::VOLUME_TOL).contains(&lambda) || lambda.is_nan() {
        return Err(Error::InvalidOrder { lambda, total });
    }
    let scan = CrossingScan::new(p, space);
    let m = scan.m();

    // largest attainable volume at or below lambda (index 0 is volume 0)
    let pivot = scan.cum_volume.partition_point(|&v| v <= lambda) - 1;
    let r_hat = if scan.level_count(delta, scan.cum_volume[pivot]) >= pivot {
        let mut k = pivot;
        while k < m && scan.feasible(delta, k + 1) {
            k += 1;
        }
        scan.cum_volume[k]
    } else {
        let mut r = 0.0;
        for k in (1..pivot).rev() {
            if scan.feasible(delta, k) {
                r = scan.cum_volume[k];
                break;
            }
        }
        r
    };
    Ok(scan.level_set(delta, r_hat, space))
}

/// Rank-based threshold vectors `t(1), .., t(m)` for step-down
/// procedures under the standard volume weighting.
#[derive(Clone, Debug)]
pub struct RankThresholds {
    values: Vec<f64>,
}

impl RankThresholds {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The rank step-down families.
#[derive(Clone, Debug)]
pub enum RankKind {
    /// `t(i) = alpha m / (m-i+1)^2`, valid under PRDSS.
    BenjaminiLiuRs,
    /// `t(i) = (alpha m / (m-i+1)) beta_nu(1/(m-i+1))` for a prior on the
    /// inverted ranks `{1/k}`; distribution-free.
    DistributionFree(crate::shape::PriorDistribution),
    /// `t(i) = 1 - (1 - min(1, alpha m/(m-i+1)))^(1/(m-i+1))`.
    BenjaminiLiu99,
    /// Holm's step-down, `t(i) = alpha / (m-i+1)`; controls the FWER.
    Holm,
    /// Constant Bonferroni threshold `alpha / m`.
    Bonferroni,
}

/// Build the rank threshold vector for `m` hypotheses at level `alpha`.
/// Thresholds are clamped to `[0, 1]` after evaluation.
pub fn make_rank_thresholds(kind: &RankKind, alpha: f64, m: usize) -> Result<RankThresholds> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    if m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one hypothesis".into(),
        ));
    }
    if let RankKind::DistributionFree(nu) = kind {
        for &x in nu.support() {
            let k = (1.0 / x).round();
            if !(1.0..=m as f64).contains(&k) || (x - 1.0 / k).abs() > 1e-12 {
                return Err(Error::InvalidPrior(format!(
                    "distribution-free thresholds need support on {{1/k : k <= {m}}}, got {x}"
                )));
            }
        }
    }
    let mf = m as f64;
    let values = (1..=m)
        .map(|i| {
            let back = mf - i as f64 + 1.0; // m - i + 1
            let t = match kind {
                RankKind::BenjaminiLiuRs => alpha * mf / (back * back),
                RankKind::DistributionFree(nu) => alpha * mf / back * nu.beta_at(1.0 / back),
                RankKind::BenjaminiLiu99 => {
                    1.0 - (1.0 - (alpha * mf / back).min(1.0)).powf(1.0 / back)
                }
                RankKind::Holm => alpha / back,
                RankKind::Bonferroni => alpha / mf,
            };
            t.clamp(0.0, 1.0)
        })
        .collect();
    Ok(RankThresholds { values })
}

/// Step-down over ordered raw p-values: rejects the hypotheses of the
/// `i*` smallest p-values where `i* = max{i : p_(j) <= t(j) for all
/// j <= i}`. Requires the standard volume weighting.
pub fn rank_step_down(
    t: &RankThresholds,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<RejectionSet> {
    p.check_len(space)?;
    if !space.has_standard_lambda() {
        return Err(Error::NonStandardVolume("rank step-down"));
    }
    if t.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            actual: t.len(),
        });
    }
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.sort_by(|&a, &b| p.get(a).total_cmp(&p.get(b)));
    let mut cut = 0;
    for (rank, &h) in order.iter().enumerate() {
        if p.get(h) <= t.values[rank] {
            cut = rank + 1;
        } else {
            break;
        }
    }
    Ok(RejectionSet::from_indices(space, order[..cut].to_vec()))
}

/// Result of the adaptive two-stage procedure: the second-stage
/// rejections and the first-stage estimate of `Pi(H0)`.
#[derive(Clone, Debug)]
pub struct AdaptiveOutcome {
    pub rejections: RejectionSet,
    pub pi0_hat: f64,
}

/// Adaptive two-stage procedure. Stage one runs Holm's step-down at FWER
/// level `alpha0` and estimates `pi0_hat` as the weighted volume of the
/// non-rejected hypotheses. Stage two runs the step-up with the
/// data-dependent collection `alpha1 pi(h) beta(r) / pi0_hat`; when
/// `pi0_hat = 0` every hypothesis is rejected.
pub fn adaptive_two_stage(
    alpha0: f64,
    alpha1: f64,
    beta: &ShapeFunction,
    p: &PValueVector,
    space: &HypothesisSpace,
) -> Result<AdaptiveOutcome> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::InvalidLevel(alpha0));
    }
    if !(alpha1 > 0.0 && alpha1 < 1.0) {
        return Err(Error::InvalidLevel(alpha1));
    }
    p.check_len(space)?;
    if !space.has_standard_lambda() {
        return Err(Error::NonStandardVolume("the Holm first stage"));
    }
    let holm = make_rank_thresholds(&RankKind::Holm, alpha0, space.len())?;
    let first = rank_step_down(&holm, p, space)?;
    let rejected = first.mask(space);
    let pi0_hat = space.pi_volume_of((0..space.len()).filter(|&h| !rejected[h]));
    let rejections = if pi0_hat == 0.0 {
        RejectionSet::from_indices(space, (0..space.len()).collect())
    } else {
        let stage2 = FactorizedThresholds::unchecked(alpha1 / pi0_hat, beta.clone());
        step_up(&stage2, p, space)?
    };
    Ok(AdaptiveOutcome {
        rejections,
        pi0_hat,
    })
}
