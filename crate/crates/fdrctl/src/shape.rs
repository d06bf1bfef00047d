//! Shape functions and the prior distributions that generate them.
//!
//! A shape function is a nondecreasing map `beta: R+ -> R+` scaling the
//! rejection threshold with the rejected volume. The prior-based family
//! `beta_nu(r) = integral_0^r x dnu(x)` (for a probability distribution
//! `nu` on the positive reals) is the family valid under arbitrary
//! dependence between the p-values; it always satisfies `beta_nu(r) <= r`.

use crate::error::{Error, Result};
use crate::num::{adaptive_simpson, harmonic, normal_cdf, normal_pdf, KahanSum};

/// Per-interval absolute tolerance of the discretization quadrature.
const QUADRATURE_TOL: f64 = 1e-10;

/// A discrete probability distribution on positive support points.
#[derive(Clone, Debug)]
pub struct PriorDistribution {
    support: Vec<f64>,
    mass: Vec<f64>,
    // cum_beta[i] = sum_{j <= i} support[j] * mass[j]
    cum_beta: Vec<f64>,
}

impl PriorDistribution {
    /// Build from `(support, mass)` pairs. Support points must be positive
    /// and finite, masses nonnegative and summing to 1 within 1e-12.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidPrior("empty support".into()));
        }
        let mut points = points;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut total = KahanSum::new();
        for &(x, w) in &points {
            if x <= 0.0 || !x.is_finite() {
                return Err(Error::InvalidPrior(format!(
                    "support point {x} must be positive and finite"
                )));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidPrior(format!("mass {w} at {x} is invalid")));
            }
            total.add(w);
        }
        let total = total.total();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        let mut support = Vec::with_capacity(points.len());
        let mut mass = Vec::with_capacity(points.len());
        let mut cum_beta = Vec::with_capacity(points.len());
        let mut acc = KahanSum::new();
        for (x, w) in points {
            acc.add(x * w);
            support.push(x);
            mass.push(w);
            cum_beta.push(acc.total());
        }
        Ok(Self {
            support,
            mass,
            cum_beta,
        })
    }

    /// Point mass at `x0`.
    pub fn dirac(x0: f64) -> Result<Self> {
        Self::new(vec![(x0, 1.0)])
    }

    /// Discrete power prior `nu({k}) ∝ k^gamma` on `{1, .., m}`.
    ///
    /// `gamma = -1` yields the Benjamini–Yekutieli shape `r / H_m`,
    /// `gamma = 0` the quadratic shape `r(r+1)/(2m)` and `gamma = 1` the
    /// cubic shape `r(r+1)(2r+1)/(3m(m+1))` at integer `r`.
    pub fn discrete_power(gamma: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPrior("empty support".into()));
        }
        let weights: Vec<f64> = (1..=m).map(|k| (k as f64).powf(gamma)).collect();
        let norm = crate::num::compensated_sum(weights.iter().copied());
        Self::new(
            weights
                .into_iter()
                .enumerate()
                .map(|(i, w)| ((i + 1) as f64, w / norm))
                .collect(),
        )
    }

    /// Prior on the inverted ranks `{1/k : 1 <= k <= m}` with
    /// `nu({1/k}) ∝ k^gamma`; the support used by the distribution-free
    /// rank step-down thresholds.
    pub fn inverse_rank_power(gamma: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPrior("empty support".into()));
        }
        let weights: Vec<f64> = (1..=m).map(|k| (k as f64).powf(gamma)).collect();
        let norm = crate::num::compensated_sum(weights.iter().copied());
        Self::new(
            weights
                .into_iter()
                .enumerate()
                .map(|(i, w)| (1.0 / (i + 1) as f64, w / norm))
                .collect(),
        )
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `beta_nu(r) = sum_{x <= r} x nu({x})`, right-continuous in `r`.
    pub fn beta_at(&self, r: f64) -> f64 {
        let k = self.support.partition_point(|&x| x <= r);
        if k == 0 {
            0.0
        } else {
            self.cum_beta[k - 1]
        }
    }
}

/// A nondecreasing shape function `beta: R+ -> R+` with `beta(0) = 0`.
#[derive(Clone, Debug)]
pub enum ShapeFunction {
    /// `beta(r) = r`: the Benjamini–Hochberg rejection curve.
    Linear,
    /// `beta(r) = factor * r`; with `factor = 1/H_m` this is the
    /// Benjamini–Yekutieli curve.
    ScaledLinear { factor: f64 },
    /// `beta_nu` generated by a discrete prior.
    PriorBased(PriorDistribution),
    /// `beta(r) = ((gamma+1)/(gamma+2)) r^(gamma+2) / m^(gamma+1)`, the
    /// scale-invariant power family (`gamma > -1`).
    ScaleInvariantPower { gamma: f64, m: f64 },
    /// `beta(r) = x0` for `r >= x0`, else 0; `x0 = 1` is Bonferroni.
    Dirac { x0: f64 },
}

impl ShapeFunction {
    pub fn from_prior(nu: PriorDistribution) -> Self {
        Self::PriorBased(nu)
    }

    pub fn scaled_linear(factor: f64) -> Result<Self> {
        if factor <= 0.0 || !factor.is_finite() {
            return Err(Error::InvalidShape(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self::ScaledLinear { factor })
    }

    /// The Benjamini–Yekutieli curve `r / H_m` for `m` hypotheses.
    pub fn benjamini_yekutieli(m: usize) -> Self {
        Self::ScaledLinear {
            factor: 1.0 / harmonic(m),
        }
    }

    pub fn scale_invariant_power(gamma: f64, m: usize) -> Result<Self> {
        if gamma <= -1.0 || !gamma.is_finite() {
            return Err(Error::InvalidShape(format!(
                "scale-invariant power needs gamma > -1, got {gamma}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidShape("m must be at least 1".into()));
        }
        Ok(Self::ScaleInvariantPower { gamma, m: m as f64 })
    }

    pub fn dirac(x0: f64) -> Result<Self> {
        if x0 <= 0.0 || !x0.is_finite() {
            return Err(Error::InvalidShape(format!(
                "dirac point must be positive, got {x0}"
            )));
        }
        Ok(Self::Dirac { x0 })
    }

    /// Evaluate the shape at rejection volume `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "shape functions are defined on r >= 0, got {r}");
        match self {
            Self::Linear => r,
            Self::ScaledLinear { factor } => factor * r,
            Self::PriorBased(nu) => nu.beta_at(r),
            Self::ScaleInvariantPower { gamma, m } => {
                (gamma + 1.0) / (gamma + 2.0) * r.powf(gamma + 2.0) / m.powf(gamma + 1.0)
            }
            Self::Dirac { x0 } => {
                if r >= *x0 {
                    *x0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Continuous prior distributions on the positive reals, kept in closed
/// form for plotting and discretized before use in procedures.
#[derive(Clone, Debug)]
pub enum ContinuousPrior {
    /// Point mass at `mu > 0`.
    Dirac { mu: f64 },
    /// Uniform density on `(0, upper]`.
    Uniform { upper: f64 },
    /// Density proportional to `x^gamma` on `[1, upper]`.
    Power { gamma: f64, upper: f64 },
    /// Exponential density `exp(-x/lambda)/lambda` on `(0, inf)`.
    Exponential { lambda: f64 },
    /// The distribution of `max(X, 1)` with `X ~ N(mu, sigma^2)`: the
    /// mass of `(-inf, 1]` becomes a point mass at 1.
    TruncatedGaussian { mu: f64, sigma: f64 },
}

impl ContinuousPrior {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPrior(msg));
        match *self {
            Self::Dirac { mu } if mu <= 0.0 || !mu.is_finite() => {
                bad(format!("dirac point must be positive, got {mu}"))
            }
            Self::Uniform { upper } if upper <= 0.0 || !upper.is_finite() => {
                bad(format!("uniform upper bound must be positive, got {upper}"))
            }
            Self::Power { gamma, upper }
                if upper <= 1.0 || upper.is_nan() || !gamma.is_finite() =>
            {
                bad(format!(
                "power prior needs upper > 1 and finite gamma, got gamma={gamma}, upper={upper}"
            ))
            }
            Self::Exponential { lambda } if lambda <= 0.0 || !lambda.is_finite() => {
                bad(format!("exponential scale must be positive, got {lambda}"))
            }
            Self::TruncatedGaussian { mu, sigma }
                if sigma <= 0.0 || !mu.is_finite() || sigma.is_nan() =>
            {
                bad(format!(
                    "gaussian needs sigma > 0, got mu={mu}, sigma={sigma}"
                ))
            }
            _ => Ok(()),
        }
    }

    /// Normalizer of the density part (atoms excluded).
    fn density_norm(&self) -> f64 {
        match *self {
            Self::Dirac { .. } => 1.0,
            Self::Uniform { .. } => 1.0,
            Self::Power { gamma, upper } => {
                if (gamma + 1.0).abs() < 1e-12 {
                    upper.ln()
                } else {
                    (upper.powf(gamma + 1.0) - 1.0) / (gamma + 1.0)
                }
            }
            Self::Exponential { .. } => 1.0,
            Self::TruncatedGaussian { .. } => 1.0,
        }
    }

    /// Density of the absolutely continuous part at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Self::Dirac { .. } => 0.0,
            Self::Uniform { upper } => {
                if x > 0.0 && x <= upper {
                    1.0 / upper
                } else {
                    0.0
                }
            }
            Self::Power { gamma, upper } => {
                if (1.0..=upper).contains(&x) {
                    x.powf(gamma) / self.density_norm()
                } else {
                    0.0
                }
            }
            Self::Exponential { lambda } => {
                if x > 0.0 {
                    (-x / lambda).exp() / lambda
                } else {
                    0.0
                }
            }
            Self::TruncatedGaussian { mu, sigma } => {
                if x > 1.0 {
                    normal_pdf((x - mu) / sigma) / sigma
                } else {
                    0.0
                }
            }
        }
    }

    /// Point mass of the prior, if any.
    fn atom(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Dirac { mu } => Some((mu, 1.0)),
            Self::TruncatedGaussian { mu, sigma } => Some((1.0, normal_cdf((1.0 - mu) / sigma))),
            _ => None,
        }
    }

    /// `beta_nu(r) = integral_0^r x dnu(x)` in closed form.
    pub fn beta(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "shape functions are defined on r >= 0, got {r}");
        match *self {
            Self::Dirac { mu } => {
                if r >= mu {
                    mu
                } else {
                    0.0
                }
            }
            Self::Uniform { upper } => {
                let a = r.min(upper);
                a * a / (2.0 * upper)
            }
            Self::Power { gamma, upper } => {
                if r < 1.0 {
                    return 0.0;
                }
                let a = r.min(upper);
                let num = if (gamma + 2.0).abs() < 1e-12 {
                    a.ln()
                } else {
                    (a.powf(gamma + 2.0) - 1.0) / (gamma + 2.0)
                };
                num / self.density_norm()
            }
            Self::Exponential { lambda } => {
                let t = r / lambda;
                lambda * (1.0 - (-t).exp() * (1.0 + t))
            }
            Self::TruncatedGaussian { mu, sigma } => {
                if r < 1.0 {
                    return 0.0;
                }
                let lo = (1.0 - mu) / sigma;
                let hi = (r - mu) / sigma;
                let atom = normal_cdf(lo);
                let gaussian_part = mu * (normal_cdf(hi) - normal_cdf(lo))
                    + sigma * (normal_pdf(lo) - normal_pdf(hi));
                atom + gaussian_part
            }
        }
    }

    /// Discretize onto `{1, .., m}`: the mass of `(k-1, k]` goes to `k`
    /// for `k < m` and all remaining mass, `nu((m-1, inf))`, goes to `m`.
    /// Interval masses of density parts are computed by adaptive
    /// quadrature to 1e-10 absolute tolerance per interval.
    pub fn discretize(&self, m: usize) -> Result<PriorDistribution> {
        self.validate()?;
        if m == 0 {
            return Err(Error::InvalidPrior("empty support".into()));
        }
        let mut masses = vec![0.0f64; m];
        // density part over (k-1, k] for k < m
        for (k, slot) in masses.iter_mut().enumerate().take(m - 1) {
            let (a, b) = (k as f64, (k + 1) as f64);
            *slot = adaptive_simpson(&|x| self.density(x), a, b, QUADRATURE_TOL);
        }
        // atoms
        if let Some((x0, w)) = self.atom() {
            if w > 0.0 {
                let k = (x0.ceil().max(1.0) as usize).min(m);
                masses[k - 1] += w;
            }
        }
        // tail rule keeps the discretized prior a probability distribution
        let assigned = crate::num::compensated_sum(masses.iter().take(m - 1).copied());
        if assigned > 1.0 {
            // quadrature rounding overshot the true partial mass; rescale
            masses[m - 1] = 0.0;
            for w in masses.iter_mut() {
                *w /= assigned;
            }
        } else {
            masses[m - 1] = 1.0 - assigned;
        }
        PriorDistribution::new(
            masses
                .into_iter()
                .enumerate()
                .map(|(i, w)| ((i + 1) as f64, w))
                .collect(),
        )
    }
}

/// Smallest `r` in `{1, .., m}` with `beta(r) >= 1` — the rejection count
/// beyond which the curve beats Bonferroni's constant threshold — or
/// `None` if the curve never reaches 1 on that range.
pub fn bonferroni_crossover(beta: &ShapeFunction, m: u64) -> Option<u64> {
    if m == 0 || beta.eval(m as f64) < 1.0 {
        return None;
    }
    // binary search over the nondecreasing curve
    let (mut lo, mut hi) = (1u64, m);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if beta.eval(mid as f64) >= 1.0 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// A column of the normalized shape table.
#[derive(Clone, Debug)]
pub enum TableCurve {
    Shape(ShapeFunction),
    Continuous(ContinuousPrior),
    /// Reference curve of Holm's step-down, `m^-1 beta(r) = 1/(m-r+1)`.
    HolmReference,
}

impl TableCurve {
    fn normalized(&self, r: f64, m: f64) -> f64 {
        match self {
            Self::Shape(s) => s.eval(r) / m,
            Self::Continuous(p) => p.beta(r) / m,
            Self::HolmReference => 1.0 / (m - r + 1.0),
        }
    }
}

/// Normalized shape table: one row per `r` in `{1, .., m}`, one column per
/// curve, entries `m^-1 beta(r)`.
pub fn shape_table(curves: &[TableCurve], m: usize) -> Vec<Vec<f64>> {
    let mf = m as f64;
    (1..=m)
        .map(|r| curves.iter().map(|c| c.normalized(r as f64, mf)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dirac_prior_is_bonferroni() {
        let beta = ShapeFunction::from_prior(PriorDistribution::dirac(1.0).unwrap());
        assert_eq!(beta.eval(0.0), 0.0);
        assert_eq!(beta.eval(0.999), 0.0);
        assert_eq!(beta.eval(1.0), 1.0);
        assert_eq!(beta.eval(250.0), 1.0);
    }

    #[test]
    fn uniform_prior_closed_form() {
        for m in [10usize, 1000] {
            let nu = PriorDistribution::discrete_power(0.0, m).unwrap();
            let beta = ShapeFunction::from_prior(nu);
            for r in 1..=m {
                let expected = (r * (r + 1)) as f64 / (2 * m) as f64;
                assert!(
                    (beta.eval(r as f64) - expected).abs() < 1e-12,
                    "m={m} r={r}"
                );
            }
        }
    }

    #[test]
    fn proportional_prior_closed_form() {
        for m in [10usize, 1000] {
            let nu = PriorDistribution::discrete_power(1.0, m).unwrap();
            let beta = ShapeFunction::from_prior(nu);
            for r in 1..=m {
                let expected = (r * (r + 1) * (2 * r + 1)) as f64 / (3 * m * (m + 1)) as f64;
                assert!(
                    (beta.eval(r as f64) - expected).abs() < 1e-12,
                    "m={m} r={r}"
                );
            }
        }
    }

    #[test]
    fn by_prior_matches_scaled_linear_at_integers() {
        for m in [10usize, 1000] {
            // independently summed harmonic number, ascending terms
            let mut h = 0.0f64;
            for i in (1..=m).rev() {
                h += 1.0 / i as f64;
            }
            let nu = PriorDistribution::discrete_power(-1.0, m).unwrap();
            let beta = ShapeFunction::from_prior(nu);
            for r in 1..=m {
                assert!(
                    (beta.eval(r as f64) - r as f64 / h).abs() < 1e-12,
                    "m={m} r={r}"
                );
            }
        }
    }

    #[test]
    fn shape_eval_examples() {
        assert_eq!(ShapeFunction::Linear.eval(5.0), 5.0);
        let nu = PriorDistribution::discrete_power(0.0, 10).unwrap();
        assert!((ShapeFunction::from_prior(nu).eval(4.0) - 1.0).abs() < 1e-14);
        let by4 = ShapeFunction::scaled_linear(12.0 / 25.0).unwrap();
        assert!((by4.eval(3.0) - 1.44).abs() < 1e-14);
        assert!((ShapeFunction::benjamini_yekutieli(4).eval(3.0) - 1.44).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn shape_eval_rejects_negative_volume() {
        ShapeFunction::Linear.eval(-0.5);
    }

    #[test]
    fn prior_validation() {
        assert!(matches!(
            PriorDistribution::new(vec![]),
            Err(Error::InvalidPrior(_))
        ));
        assert!(matches!(
            PriorDistribution::new(vec![(0.0, 1.0)]),
            Err(Error::InvalidPrior(_))
        ));
        assert!(matches!(
            PriorDistribution::new(vec![(1.0, 0.7)]),
            Err(Error::InvalidPrior(_))
        ));
        // big priors stay normalized within 1e-12
        for gamma in [-1.0, 0.0, 1.0] {
            let nu = PriorDistribution::discrete_power(gamma, 1_000_000).unwrap();
            let total = crate::num::compensated_sum(nu.mass().iter().copied());
            assert!((total - 1.0).abs() <= 1e-12, "gamma={gamma}");
        }
    }

    #[test]
    fn discretize_dirac_hits_covering_bin() {
        let nu = ContinuousPrior::Dirac { mu: 2.5 }.discretize(5).unwrap();
        assert_eq!(nu.mass()[2], 1.0); // bin (2, 3]
                                       // integer point lands in its own bin
        let nu3 = ContinuousPrior::Dirac { mu: 3.0 }.discretize(5).unwrap();
        assert_eq!(nu3.mass()[2], 1.0);
        // far beyond the grid -> all mass on m
        let tail = ContinuousPrior::Dirac { mu: 99.0 }.discretize(5).unwrap();
        assert_eq!(tail.mass()[4], 1.0);
    }

    #[test]
    fn discretize_uniform_equal_masses() {
        let m = 20;
        let nu = ContinuousPrior::Uniform { upper: m as f64 }
            .discretize(m)
            .unwrap();
        for k in 0..m {
            assert!((nu.mass()[k] - 1.0 / m as f64).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn discretize_exponential_tail_mass() {
        // oracle: closed-form CDF differences, independent of the quadrature
        let lambda = 7.0;
        let m = 10usize;
        let nu = ContinuousPrior::Exponential { lambda }
            .discretize(m)
            .unwrap();
        let cdf = |x: f64| 1.0 - (-x / lambda).exp();
        for k in 1..m {
            let expected = cdf(k as f64) - cdf(k as f64 - 1.0);
            assert!((nu.mass()[k - 1] - expected).abs() < 1e-9, "k={k}");
        }
        // everything past m-1 lands on m
        let tail = 1.0 - cdf(m as f64 - 1.0);
        assert!((nu.mass()[m - 1] - tail).abs() < 1e-7);
        let total = crate::num::compensated_sum(nu.mass().iter().copied());
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discretize_gaussian_keeps_atom_and_normalization() {
        let prior = ContinuousPrior::TruncatedGaussian {
            mu: 3.0,
            sigma: 2.0,
        };
        let m = 12usize;
        let nu = prior.discretize(m).unwrap();
        // bin 1 holds the atom P(X <= 1) since the density part lives on (1, inf)
        let atom = normal_cdf((1.0 - 3.0) / 2.0);
        let density_part = adaptive_simpson(&|x| prior.density(x), 0.0, 1.0, 1e-12);
        assert!(density_part.abs() < 1e-12);
        assert!((nu.mass()[0] - atom).abs() < 1e-9);
        let total = crate::num::compensated_sum(nu.mass().iter().copied());
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discretization_dominates_continuous_beta() {
        let m = 50usize;
        let priors = vec![
            ContinuousPrior::Uniform { upper: m as f64 },
            ContinuousPrior::Power {
                gamma: -1.0,
                upper: m as f64,
            },
            ContinuousPrior::Power {
                gamma: 1.5,
                upper: m as f64,
            },
            ContinuousPrior::Exponential { lambda: 12.0 },
            ContinuousPrior::TruncatedGaussian {
                mu: 20.0,
                sigma: 6.0,
            },
            ContinuousPrior::Dirac { mu: 17.0 },
        ];
        for prior in priors {
            let disc = ShapeFunction::from_prior(prior.discretize(m).unwrap());
            for r in 1..=m {
                let lhs = disc.eval(r as f64);
                let rhs = prior.beta(r as f64);
                assert!(lhs >= rhs - 1e-9, "{prior:?} at r={r}: {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn beta_nu_never_exceeds_identity() {
        let mut rng = SmallRng::seed_from_u64(7);
        let m = 40usize;
        let shapes: Vec<ShapeFunction> = vec![
            ShapeFunction::from_prior(PriorDistribution::discrete_power(-1.0, m).unwrap()),
            ShapeFunction::from_prior(PriorDistribution::discrete_power(0.0, m).unwrap()),
            ShapeFunction::from_prior(PriorDistribution::discrete_power(1.0, m).unwrap()),
            ShapeFunction::from_prior(
                ContinuousPrior::Exponential { lambda: 9.0 }
                    .discretize(m)
                    .unwrap(),
            ),
            ShapeFunction::Dirac { x0: 13.0 },
        ];
        for shape in &shapes {
            for _ in 0..1000 {
                let r = rng.random::<f64>() * 2.0 * m as f64;
                assert!(shape.eval(r) <= r + 1e-12);
            }
        }
        // equality at the dirac point itself
        assert_eq!(ShapeFunction::Dirac { x0: 13.0 }.eval(13.0), 13.0);
        let delta = ShapeFunction::from_prior(PriorDistribution::dirac(13.0).unwrap());
        assert_eq!(delta.eval(13.0), 13.0);
    }

    #[test]
    fn shapes_are_nondecreasing() {
        let mut rng = SmallRng::seed_from_u64(11);
        let m = 64usize;
        let shapes: Vec<ShapeFunction> = vec![
            ShapeFunction::Linear,
            ShapeFunction::benjamini_yekutieli(m),
            ShapeFunction::from_prior(PriorDistribution::discrete_power(0.5, m).unwrap()),
            ShapeFunction::scale_invariant_power(0.0, m).unwrap(),
            ShapeFunction::scale_invariant_power(1.0, m).unwrap(),
            ShapeFunction::Dirac { x0: 20.0 },
            ShapeFunction::from_prior(
                ContinuousPrior::TruncatedGaussian {
                    mu: 30.0,
                    sigma: 10.0,
                }
                .discretize(m)
                .unwrap(),
            ),
        ];
        for shape in &shapes {
            for _ in 0..1000 {
                let a = rng.random::<f64>() * 1.5 * m as f64;
                let b = rng.random::<f64>() * 1.5 * m as f64;
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                assert!(shape.eval(lo) <= shape.eval(hi) + 1e-12);
            }
        }
    }

    #[test]
    fn scale_invariant_power_rescaling_identity() {
        let mut rng = SmallRng::seed_from_u64(3);
        for gamma in [0.0, 1.0, -0.5] {
            let m = 777usize;
            let shape = ShapeFunction::scale_invariant_power(gamma, m).unwrap();
            for _ in 0..100 {
                let r = rng.random::<f64>() * m as f64;
                let u = r / m as f64;
                let rescaled = m as f64 * ((gamma + 1.0) / (gamma + 2.0) * u.powf(gamma + 2.0));
                let direct = shape.eval(r);
                assert!(
                    (direct - rescaled).abs() <= 1e-12 * rescaled.abs().max(1.0),
                    "gamma={gamma} r={r}"
                );
            }
        }
    }

    fn crossover_scan_oracle(beta: &ShapeFunction, m: u64) -> Option<u64> {
        (1..=m).find(|&r| beta.eval(r as f64) >= 1.0)
    }

    #[test]
    fn crossover_examples() {
        assert_eq!(bonferroni_crossover(&ShapeFunction::Linear, 100), Some(1));
        let uniform200 =
            ShapeFunction::from_prior(PriorDistribution::discrete_power(0.0, 200).unwrap());
        assert_eq!(bonferroni_crossover(&uniform200, 200), Some(20));
        let by100 = ShapeFunction::benjamini_yekutieli(100);
        assert_eq!(bonferroni_crossover(&by100, 100), Some(6));
        // never reaches 1
        let tiny = ShapeFunction::scaled_linear(1e-6).unwrap();
        assert_eq!(bonferroni_crossover(&tiny, 100), None);
    }

    #[test]
    fn crossover_binary_search_agrees_with_scan() {
        let mut rng = SmallRng::seed_from_u64(19);
        for _ in 0..50 {
            let m = rng.random_range(1u64..400);
            let gamma = rng.random_range(-1.5..1.5);
            let shape = ShapeFunction::from_prior(
                PriorDistribution::discrete_power(gamma, m as usize).unwrap(),
            );
            assert_eq!(
                bonferroni_crossover(&shape, m),
                crossover_scan_oracle(&shape, m),
                "m={m} gamma={gamma}"
            );
        }
    }

    #[test]
    fn shape_table_rows_and_reference_values() {
        let m = 1000usize;
        let curves = vec![
            TableCurve::Shape(ShapeFunction::Linear),
            TableCurve::HolmReference,
            TableCurve::Continuous(ContinuousPrior::Dirac { mu: 200.0 }),
        ];
        let table = shape_table(&curves, m);
        assert_eq!(table.len(), m);
        assert_eq!(table[0].len(), 3);
        // linear normalizes to 1 at r = m
        assert!((table[m - 1][0] - 1.0).abs() < 1e-15);
        // Holm reference at r=1 is 1/m
        assert!((table[0][1] - 1e-3).abs() < 1e-18);
        // dirac mu=200: zero below 200, mu/m = 0.2 from 200 on
        assert_eq!(table[198][2], 0.0);
        assert!((table[199][2] - 0.2).abs() < 1e-15);
        assert!((table[999][2] - 0.2).abs() < 1e-15);
    }
}
