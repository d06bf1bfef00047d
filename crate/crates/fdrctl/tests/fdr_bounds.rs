//! FDR bounds across the dependence grid, beyond the acceptance
//! settings: the linear step-up under every equicorrelation strength and
//! the prior-shaped step-up under negative dependence keep
//! `fdr <= alpha * m0 / m` within Monte-Carlo noise.

use fdrctl::procedures::{step_up, FactorizedThresholds};
use fdrctl::shape::{PriorDistribution, ShapeFunction};
use fdrctl::simulation::{estimate_error_rates, DependenceModel};
use fdrctl::space::HypothesisSpace;

#[test]
fn bh_bound_across_equicorrelation_strengths() {
    let (m, m0, alpha, n) = (60usize, 45usize, 0.1, 5_000u64);
    let bound = alpha * m0 as f64 / m as f64;
    let space = HypothesisSpace::standard(m);
    let delta = FactorizedThresholds::new(alpha, ShapeFunction::Linear).unwrap();
    for rho in [0.2, 0.5, 0.8] {
        let model = DependenceModel::equicorrelated(rho, m, m0, 3.0).unwrap();
        let est =
            estimate_error_rates(|p, s| step_up(&delta, p, s), &model, &space, n, 91).unwrap();
        assert!(
            est.fdr <= bound + 3.0 * est.fdr_se,
            "rho={rho}: fdr {} exceeds {bound} + 3*{}",
            est.fdr,
            est.fdr_se
        );
    }
}

#[test]
fn prior_shapes_hold_under_negative_dependence_with_varying_m0() {
    let (m, alpha, n) = (40usize, 0.1, 5_000u64);
    let rho = -1.0 / (m as f64 - 1.0);
    let space = HypothesisSpace::standard(m);
    for m0 in [20usize, 36] {
        let bound = alpha * m0 as f64 / m as f64;
        let model = DependenceModel::negative(rho, m, m0, 3.0).unwrap();
        for gamma in [-1.0, 0.0, 1.0] {
            let beta =
                ShapeFunction::from_prior(PriorDistribution::discrete_power(gamma, m).unwrap());
            let delta = FactorizedThresholds::new(alpha, beta).unwrap();
            let est =
                estimate_error_rates(|p, s| step_up(&delta, p, s), &model, &space, n, 92).unwrap();
            assert!(
                est.fdr <= bound + 3.0 * est.fdr_se,
                "gamma={gamma} m0={m0}: fdr {} exceeds {bound}",
                est.fdr
            );
        }
    }
}
