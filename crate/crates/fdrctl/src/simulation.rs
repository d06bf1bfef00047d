//! Seeded p-value generators under three dependence regimes, and
//! Monte-Carlo estimation of FDR, FWER and power for arbitrary
//! procedures.
//!
//! True-null test statistics are standard Gaussians, false nulls get a
//! one-sided mean shift `mu1`, and p-values are the upper-tail
//! probabilities `p = P(N(0,1) > z)`, so true-null p-values are exactly
//! uniform. Equicorrelated statistics use the one-factor representation
//! `z_h = sqrt(rho) w + sqrt(1-rho) xi_h`; negative equicorrelation uses
//! the spectral square root of `(1-rho) I + rho 11'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{mean_and_se, normal_sf};
use crate::space::{fdp, HypothesisSpace, PValueVector, RejectionSet};

/// Deterministic per-trial RNG: one ChaCha8 stream per trial index, all
/// derived from the master seed. Aggregates are therefore independent of
/// execution order and thread count.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Dependence structure of the test statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    Independent,
    /// Common-factor Gaussians with pairwise correlation `rho` in `[0, 1)`.
    EquicorrelatedGaussian {
        rho: f64,
    },
    /// Equicorrelated Gaussians with `rho` in `[-1/(m-1), 0)`.
    NegativeGaussian {
        rho: f64,
    },
}

/// A generative model: `m` hypotheses of which the first `m0` are true
/// nulls, with one-sided Gaussian alternatives shifted by `mu1`.
#[derive(Clone, Debug)]
pub struct DependenceModel {
    kind: ModelKind,
    m: usize,
    m0: usize,
    mu1: f64,
}

impl DependenceModel {
    pub fn new(kind: ModelKind, m: usize, m0: usize, mu1: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidModel("need at least one hypothesis".into()));
        }
        if m0 > m {
            return Err(Error::InvalidModel(format!("m0 = {m0} exceeds m = {m}")));
        }
        if mu1 < 0.0 || !mu1.is_finite() {
            return Err(Error::InvalidModel(format!(
                "alternative shift mu1 must be nonnegative, got {mu1}"
            )));
        }
        match kind {
            ModelKind::Independent => {}
            ModelKind::EquicorrelatedGaussian { rho } => {
                if !(0.0..1.0).contains(&rho) {
                    return Err(Error::InvalidModel(format!(
                        "equicorrelated rho must lie in [0, 1), got {rho}"
                    )));
                }
            }
            ModelKind::NegativeGaussian { rho } => {
                if m < 2 {
                    return Err(Error::InvalidModel(
                        "negative equicorrelation needs m >= 2".into(),
                    ));
                }
                let floor = -1.0 / (m as f64 - 1.0);
                if rho >= 0.0 || rho.is_nan() || rho < floor - 1e-12 {
                    return Err(Error::InvalidModel(format!(
                        "negative rho must lie in [{floor}, 0), got {rho}"
                    )));
                }
            }
        }
        Ok(Self { kind, m, m0, mu1 })
    }

    pub fn independent(m: usize, m0: usize, mu1: f64) -> Result<Self> {
        Self::new(ModelKind::Independent, m, m0, mu1)
    }

    pub fn equicorrelated(rho: f64, m: usize, m0: usize, mu1: f64) -> Result<Self> {
        Self::new(ModelKind::EquicorrelatedGaussian { rho }, m, m0, mu1)
    }

    pub fn negative(rho: f64, m: usize, m0: usize, mu1: f64) -> Result<Self> {
        Self::new(ModelKind::NegativeGaussian { rho }, m, m0, mu1)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn is_null(&self, h: usize) -> bool {
        h < self.m0
    }

    /// Ground-truth mask: `true` marks a true null.
    pub fn null_mask(&self) -> Vec<bool> {
        (0..self.m).map(|h| h < self.m0).collect()
    }

    pub fn describe(&self) -> String {
        let base = match self.kind {
            ModelKind::Independent => "independent".to_string(),
            ModelKind::EquicorrelatedGaussian { rho } => format!("equicorrelated(rho={rho})"),
            ModelKind::NegativeGaussian { rho } => format!("negative(rho={rho})"),
        };
        format!("{base}[m={},m0={},mu1={}]", self.m, self.m0, self.mu1)
    }

    /// Draw the Gaussian test statistics for one trial.
    pub fn sample_statistics<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut z: Vec<f64> = match self.kind {
            ModelKind::Independent => (0..self.m).map(|_| rng.sample(StandardNormal)).collect(),
            ModelKind::EquicorrelatedGaussian { rho } => {
                let w: f64 = rng.sample(StandardNormal);
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                (0..self.m)
                    .map(|_| {
                        let xi: f64 = rng.sample(StandardNormal);
                        a * w + b * xi
                    })
                    .collect()
            }
            ModelKind::NegativeGaussian { rho } => {
                let xi: Vec<f64> = (0..self.m).map(|_| rng.sample(StandardNormal)).collect();
                let mean = xi.iter().sum::<f64>() / self.m as f64;
                let a = (1.0 - rho).sqrt();
                // clamp guards the PSD boundary rho = -1/(m-1) against rounding
                let b = (1.0 + (self.m as f64 - 1.0) * rho).max(0.0).sqrt();
                xi.iter().map(|&x| a * (x - mean) + b * mean).collect()
            }
        };
        for value in z.iter_mut().skip(self.m0) {
            *value += self.mu1;
        }
        z
    }

    /// One-sided p-values for one trial.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> PValueVector {
        let p = self
            .sample_statistics(rng)
            .into_iter()
            .map(|z| normal_sf(z).clamp(0.0, 1.0))
            .collect();
        PValueVector::new(p).expect("upper-tail probabilities lie in [0, 1]")
    }

    /// Seeded generation: the p-values of trial `trial` under
    /// `master_seed`, with the ground-truth null mask.
    pub fn generate_pvalues(&self, master_seed: u64, trial: u64) -> (PValueVector, Vec<bool>) {
        let mut rng = trial_rng(master_seed, trial);
        (self.sample(&mut rng), self.null_mask())
    }
}

/// Monte-Carlo error-rate estimates with standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorRateEstimates {
    pub fdr: f64,
    pub fdr_se: f64,
    pub fwer: f64,
    pub fwer_se: f64,
    pub power: f64,
    pub power_se: f64,
    pub n_trials: u64,
    pub seed: u64,
}

/// Estimate FDR, FWER and power of `procedure` under `model` by `n_trials`
/// seeded trials. The FDR is the mean lambda-weighted false discovery
/// proportion, the FWER the probability of at least one true-null
/// rejection, and the power the mean weighted fraction of false nulls
/// rejected (0 when the model has no false nulls).
///
/// Trials use independent per-trial RNG streams, so the estimates do not
/// depend on the parallel schedule.
pub fn estimate_error_rates<F>(
    procedure: F,
    model: &DependenceModel,
    space: &HypothesisSpace,
    n_trials: u64,
    master_seed: u64,
) -> Result<ErrorRateEstimates>
where
    F: Fn(&PValueVector, &HypothesisSpace) -> Result<RejectionSet> + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    if space.len() != model.m() {
        return Err(Error::LengthMismatch {
            expected: model.m(),
            actual: space.len(),
        });
    }
    let null_mask = model.null_mask();
    let alt_volume = space.volume_of((0..space.len()).filter(|&h| !null_mask[h]));

    let per_trial: Vec<Result<[f64; 3]>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(master_seed, trial);
            let p = model.sample(&mut rng);
            let rejected = procedure(&p, space)?;
            let fdp_value = fdp(&rejected, &null_mask, space);
            let any_null = rejected.members().iter().any(|&h| null_mask[h]);
            let true_volume = space.volume_of(
                rejected
                    .members()
                    .iter()
                    .copied()
                    .filter(|&h| !null_mask[h]),
            );
            let power = if alt_volume > 0.0 {
                true_volume / alt_volume
            } else {
                0.0
            };
            Ok([fdp_value, if any_null { 1.0 } else { 0.0 }, power])
        })
        .collect();

    let mut fdps = Vec::with_capacity(n_trials as usize);
    let mut fwers = Vec::with_capacity(n_trials as usize);
    let mut powers = Vec::with_capacity(n_trials as usize);
    for row in per_trial {
        let [a, b, c] = row?;
        fdps.push(a);
        fwers.push(b);
        powers.push(c);
    }
    let (fdr, fdr_se) = mean_and_se(&fdps);
    let (fwer, fwer_se) = mean_and_se(&fwers);
    let (power, power_se) = mean_and_se(&powers);
    Ok(ErrorRateEstimates {
        fdr,
        fdr_se,
        fwer,
        fwer_se,
        power,
        power_se,
        n_trials,
        seed: master_seed,
    })
}

/// One grid cell of an experiment run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub procedure: String,
    pub model: String,
    pub alpha: f64,
    #[serde(flatten)]
    pub estimates: ErrorRateEstimates,
}

/// Model description as it appears in experiment configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: String,
    pub m: usize,
    pub m0: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_mu1")]
    pub mu1: f64,
}

fn default_mu1() -> f64 {
    3.0
}

impl ModelConfig {
    pub fn build(&self) -> Result<DependenceModel> {
        match self.kind.as_str() {
            "independent" => DependenceModel::independent(self.m, self.m0, self.mu1),
            "equicorrelated" => {
                DependenceModel::equicorrelated(self.rho, self.m, self.m0, self.mu1)
            }
            "negative" => DependenceModel::negative(self.rho, self.m, self.m0, self.mu1),
            other => Err(Error::InvalidModel(format!(
                "unknown model kind `{other}` (expected independent, equicorrelated or negative)"
            ))),
        }
    }
}

fn default_n_trials() -> u64 {
    10_000
}

/// A batch experiment: procedures crossed with models and levels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub procedures: Vec<String>,
    pub models: Vec<ModelConfig>,
    pub alpha: Vec<f64>,
    #[serde(default = "default_n_trials")]
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub out_csv: Option<String>,
    #[serde(default)]
    pub out_json: Option<String>,
}

/// Run every cell of the `procedures x models x alpha` grid. Cells share
/// the master seed, so two procedures evaluated on the same model see the
/// same p-values (common random numbers).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    if config.n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
    }
    let mut reports = Vec::new();
    for proc_spec in &config.procedures {
        let parsed =
            crate::specs::ProcedureSpec::parse(proc_spec).map_err(|e| Error::InvalidGridCell {
                cell: format!("procedure `{proc_spec}`"),
                reason: e.to_string(),
            })?;
        for model_cfg in &config.models {
            let model = model_cfg.build().map_err(|e| Error::InvalidGridCell {
                cell: format!("model `{}`", model_cfg.kind),
                reason: e.to_string(),
            })?;
            let space = HypothesisSpace::standard(model.m());
            for &alpha in &config.alpha {
                let compiled =
                    parsed
                        .compile(alpha, model.m())
                        .map_err(|e| Error::InvalidGridCell {
                            cell: format!("procedure `{proc_spec}` at alpha={alpha}"),
                            reason: e.to_string(),
                        })?;
                let estimates = estimate_error_rates(
                    |p, s| compiled.apply(p, s).map(|o| o.rejections),
                    &model,
                    &space,
                    config.n_trials,
                    config.seed,
                )?;
                reports.push(ExperimentReport {
                    procedure: parsed.canonical(),
                    model: model.describe(),
                    alpha,
                    estimates,
                });
            }
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedures::{step_up, FactorizedThresholds};
    use crate::shape::ShapeFunction;

    #[test]
    fn model_validation() {
        assert!(DependenceModel::independent(0, 0, 3.0).is_err());
        assert!(DependenceModel::independent(5, 6, 3.0).is_err());
        assert!(DependenceModel::equicorrelated(1.0, 5, 3, 3.0).is_err());
        assert!(DependenceModel::equicorrelated(-0.1, 5, 3, 3.0).is_err());
        // rho below -1/(m-1) leaves the covariance indefinite
        assert!(DependenceModel::negative(-0.3, 5, 3, 3.0).is_err());
        assert!(DependenceModel::negative(-1.0 / 4.0, 5, 3, 3.0).is_ok());
        assert!(DependenceModel::negative(-0.01, 5, 3, 0.0).is_ok());
    }

    #[test]
    fn generation_is_deterministic_per_seed_and_trial() {
        let model = DependenceModel::equicorrelated(0.4, 20, 12, 2.5).unwrap();
        let (p1, mask) = model.generate_pvalues(99, 7);
        let (p2, _) = model.generate_pvalues(99, 7);
        assert_eq!(p1.values(), p2.values());
        let (p3, _) = model.generate_pvalues(99, 8);
        assert_ne!(p1.values(), p3.values());
        assert_eq!(mask.iter().filter(|&&b| b).count(), 12);
    }

    #[test]
    fn null_coordinate_is_uniform_ks() {
        // KS distance of the empirical CDF of one true-null coordinate
        let model = DependenceModel::independent(5, 5, 0.0).unwrap();
        let n = 10_000u64;
        let mut draws: Vec<f64> = (0..n)
            .map(|t| model.generate_pvalues(2024, t).0.get(3))
            .collect();
        draws.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, &u) in draws.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((u - lo).abs()).max((hi - u).abs());
        }
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn equicorrelated_sample_correlation() {
        let model = DependenceModel::equicorrelated(0.5, 6, 6, 0.0).unwrap();
        let n = 10_000u64;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|t| {
                let mut rng = trial_rng(5150, t);
                let z = model.sample_statistics(&mut rng);
                (z[0], z[1])
            })
            .collect();
        let mean0 = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let mean1 = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let cov = pairs
            .iter()
            .map(|p| (p.0 - mean0) * (p.1 - mean1))
            .sum::<f64>()
            / n as f64;
        let v0 = pairs.iter().map(|p| (p.0 - mean0).powi(2)).sum::<f64>() / n as f64;
        let v1 = pairs.iter().map(|p| (p.1 - mean1).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (v0 * v1).sqrt();
        assert!((corr - 0.5).abs() < 0.03, "sample correlation {corr}");
    }

    #[test]
    fn negative_model_matches_target_moments() {
        let rho = -0.02;
        let model = DependenceModel::negative(rho, 40, 40, 0.0).unwrap();
        let n = 20_000u64;
        let mut sum0 = 0.0;
        let mut sumsq0 = 0.0;
        let mut cross = 0.0;
        for t in 0..n {
            let mut rng = trial_rng(31337, t);
            let z = model.sample_statistics(&mut rng);
            sum0 += z[0];
            sumsq0 += z[0] * z[0];
            cross += z[0] * z[1];
        }
        let mean = sum0 / n as f64;
        let var = sumsq0 / n as f64 - mean * mean;
        let cov = cross / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
        assert!((cov - rho).abs() < 0.02, "covariance {cov}");
    }

    #[test]
    fn estimator_zero_fdr_without_nulls() {
        let model = DependenceModel::independent(30, 0, 2.0).unwrap();
        let space = HypothesisSpace::standard(30);
        let delta = FactorizedThresholds::new(0.2, ShapeFunction::Linear).unwrap();
        let est =
            estimate_error_rates(|p, s| step_up(&delta, p, s), &model, &space, 2000, 1).unwrap();
        assert_eq!(est.fdr, 0.0);
        assert_eq!(est.fwer, 0.0);
        assert!(est.power > 0.2);
    }

    #[test]
    fn estimator_reproducible_and_schedule_independent() {
        let model = DependenceModel::equicorrelated(0.3, 25, 15, 3.0).unwrap();
        let space = HypothesisSpace::standard(25);
        let delta = FactorizedThresholds::new(0.1, ShapeFunction::Linear).unwrap();
        let run = || {
            estimate_error_rates(|p, s| step_up(&delta, p, s), &model, &space, 3000, 77).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.fdr.to_bits(), b.fdr.to_bits());
        assert_eq!(a.power.to_bits(), b.power.to_bits());
        // single-threaded pool must agree bitwise with the default pool
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(run);
        assert_eq!(a.fdr.to_bits(), c.fdr.to_bits());
        assert_eq!(a.fwer.to_bits(), c.fwer.to_bits());
    }

    #[test]
    fn bonferroni_controls_fwer() {
        let model = DependenceModel::independent(50, 50, 0.0).unwrap();
        let space = HypothesisSpace::standard(50);
        let t = crate::procedures::make_rank_thresholds(
            &crate::procedures::RankKind::Bonferroni,
            0.1,
            50,
        )
        .unwrap();
        let est = estimate_error_rates(
            |p, s| crate::procedures::rank_step_down(&t, p, s),
            &model,
            &space,
            10_000,
            8,
        )
        .unwrap();
        assert!(est.fwer <= 0.1 + 3.0 * est.fwer_se, "fwer {}", est.fwer);
    }

    #[test]
    fn run_experiment_grid_shapes_and_determinism() {
        let config = ExperimentConfig {
            procedures: vec!["su:linear".into(), "rank:holm".into()],
            models: vec![
                ModelConfig {
                    kind: "independent".into(),
                    m: 20,
                    m0: 15,
                    rho: 0.0,
                    mu1: 3.0,
                },
                ModelConfig {
                    kind: "equicorrelated".into(),
                    m: 20,
                    m0: 15,
                    rho: 0.5,
                    mu1: 3.0,
                },
            ],
            alpha: vec![0.05, 0.1],
            n_trials: 500,
            seed: 3,
            out_csv: None,
            out_json: None,
        };
        let reports = run_experiment(&config).unwrap();
        assert_eq!(reports.len(), 8);
        let again = run_experiment(&config).unwrap();
        for (a, b) in reports.iter().zip(&again) {
            assert_eq!(a.estimates.fdr.to_bits(), b.estimates.fdr.to_bits());
        }
        // an empty grid yields an empty report list
        let empty = ExperimentConfig {
            procedures: vec![],
            models: vec![],
            alpha: vec![],
            n_trials: 10,
            seed: 0,
            out_csv: None,
            out_json: None,
        };
        assert!(run_experiment(&empty).unwrap().is_empty());
    }

    #[test]
    fn run_experiment_single_cell_matches_direct_call() {
        let config = ExperimentConfig {
            procedures: vec!["su:linear".into()],
            models: vec![ModelConfig {
                kind: "independent".into(),
                m: 15,
                m0: 10,
                rho: 0.0,
                mu1: 3.0,
            }],
            alpha: vec![0.1],
            n_trials: 400,
            seed: 11,
            out_csv: None,
            out_json: None,
        };
        let report = run_experiment(&config).unwrap().remove(0);
        let model = DependenceModel::independent(15, 10, 3.0).unwrap();
        let space = HypothesisSpace::standard(15);
        let delta = FactorizedThresholds::new(0.1, ShapeFunction::Linear).unwrap();
        let direct =
            estimate_error_rates(|p, s| step_up(&delta, p, s), &model, &space, 400, 11).unwrap();
        assert_eq!(report.estimates.fdr.to_bits(), direct.fdr.to_bits());
        assert_eq!(report.estimates.power.to_bits(), direct.power.to_bits());
    }

    #[test]
    fn report_serializes_with_flattened_estimates() {
        let report = ExperimentReport {
            procedure: "su:linear".into(),
            model: "independent[m=10,m0=5,mu1=3]".into(),
            alpha: 0.1,
            estimates: ErrorRateEstimates {
                fdr: 0.05,
                fdr_se: 0.001,
                fwer: 0.2,
                fwer_se: 0.002,
                power: 0.7,
                power_se: 0.003,
                n_trials: 1000,
                seed: 42,
            },
        };
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(json["procedure"], "su:linear");
        assert_eq!(json["fdr"], 0.05);
        assert_eq!(json["seed"], 42);
        let back: ExperimentReport = serde_json::from_value(json).unwrap();
        assert_eq!(back.estimates.n_trials, 1000);
    }

    #[test]
    fn run_experiment_names_offending_cell() {
        let config = ExperimentConfig {
            procedures: vec!["warp:speed".into()],
            models: vec![],
            alpha: vec![],
            n_trials: 10,
            seed: 0,
            out_csv: None,
            out_json: None,
        };
        let err = run_experiment(&config).unwrap_err();
        assert!(err.to_string().contains("warp:speed"));
    }
}
