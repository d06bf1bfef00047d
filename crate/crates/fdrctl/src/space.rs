//! Hypothesis spaces, p-value families and false-discovery-proportion
//! accounting.
//!
//! A finite hypothesis space carries two weightings: a positive volume
//! weight `lambda` per hypothesis (how much a rejection counts in the
//! FDR denominator) and a weight `pi` in `[0, 1]` per hypothesis (the
//! prior used to rescale p-values). The standard weighting is
//! `lambda = 1`, `pi = 1/m`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::num::KahanSum;

/// Absolute tolerance for comparing accumulated volumes.
pub const VOLUME_TOL: f64 = 1e-9;

/// A finite set of null hypotheses with volume and weight functions.
#[derive(Clone, Debug)]
pub struct HypothesisSpace {
    labels: Vec<String>,
    lambda: Vec<f64>,
    pi: Vec<f64>,
    index: HashMap<String, usize>,
    total_volume: f64,
    standard_lambda: bool,
    integer_lambda: bool,
}

impl HypothesisSpace {
    /// Build a space from labels, volume weights and p-value weights.
    pub fn new(labels: Vec<String>, lambda: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if labels.len() != lambda.len() || labels.len() != pi.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                actual: lambda.len().max(pi.len()),
            });
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateHypothesis(label.clone()));
            }
        }
        let mut total = KahanSum::new();
        for (i, &l) in lambda.iter().enumerate() {
            if l <= 0.0 || !l.is_finite() {
                return Err(Error::InvalidVolumeWeight {
                    label: labels[i].clone(),
                    value: l,
                });
            }
            total.add(l);
        }
        for (i, &w) in pi.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) || w.is_nan() {
                return Err(Error::InvalidWeight {
                    label: labels[i].clone(),
                    value: w,
                });
            }
        }
        let total_volume = total.total();
        if !total_volume.is_finite() {
            return Err(Error::InvalidVolumeWeight {
                label: "<total>".into(),
                value: total_volume,
            });
        }
        let standard_lambda = lambda.iter().all(|&l| l == 1.0);
        let integer_lambda = lambda.iter().all(|&l| l.fract() == 0.0);
        Ok(Self {
            labels,
            lambda,
            pi,
            index,
            total_volume,
            standard_lambda,
            integer_lambda,
        })
    }

    /// Standard weighting on `m` hypotheses labelled `h1..hm`:
    /// `lambda = 1` and `pi = 1/m` everywhere.
    pub fn standard(m: usize) -> Self {
        let labels = (1..=m).map(|i| format!("h{i}")).collect();
        let lambda = vec![1.0; m];
        let pi = vec![1.0 / m as f64; m];
        Self::new(labels, lambda, pi).expect("standard weighting is always valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda[i]
    }

    pub fn pi(&self, i: usize) -> f64 {
        self.pi[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownHypothesis(label.to_string()))
    }

    /// Total volume `Lambda(H)`.
    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    /// True when every volume weight is exactly 1.
    pub fn has_standard_lambda(&self) -> bool {
        self.standard_lambda
    }

    /// True when every volume weight is an integer, in which case
    /// accumulated volumes are exact.
    pub fn has_integer_lambda(&self) -> bool {
        self.integer_lambda
    }

    /// Volume `Lambda(S)` of a set of hypothesis indices.
    pub fn volume_of<I: IntoIterator<Item = usize>>(&self, indices: I) -> f64 {
        let mut acc = KahanSum::new();
        for i in indices {
            acc.add(self.lambda[i]);
        }
        acc.total()
    }

    /// Weighted volume `Pi(S) = sum_{h in S} lambda(h) pi(h)` of a set of
    /// hypothesis indices.
    pub fn pi_volume_of<I: IntoIterator<Item = usize>>(&self, indices: I) -> f64 {
        let mut acc = KahanSum::new();
        for i in indices {
            acc.add(self.lambda[i] * self.pi[i]);
        }
        acc.total()
    }

    /// Weighted volume of a set given by hypothesis ids.
    pub fn pi_volume<'a, I: IntoIterator<Item = &'a str>>(&self, ids: I) -> Result<f64> {
        let mut acc = KahanSum::new();
        for id in ids {
            let i = self.index_of(id)?;
            acc.add(self.lambda[i] * self.pi[i]);
        }
        Ok(acc.total())
    }

    /// Weighted volume `Pi(H)` of the whole space; the achieved FDR budget
    /// of a level-`alpha` procedure is `alpha * Pi(H0) <= alpha * Pi(H)`.
    pub fn pi_volume_total(&self) -> f64 {
        self.pi_volume_of(0..self.len())
    }
}

/// Per-hypothesis p-values aligned with a [`HypothesisSpace`].
#[derive(Clone, Debug)]
pub struct PValueVector {
    values: Vec<f64>,
}

impl PValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::InvalidPValue { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub(crate) fn check_len(&self, space: &HypothesisSpace) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Weighted p-values `p'_h = p_h / (m pi(h))`.
///
/// When `pi(h) = 0` the weighted p-value is `+inf` for `p_h > 0` and `0`
/// for `p_h = 0`. Under the standard weighting `pi = 1/m` this is the
/// identity.
pub fn weighted_pvalues(p: &PValueVector, space: &HypothesisSpace) -> Result<Vec<f64>> {
    p.check_len(space)?;
    let m = space.len() as f64;
    Ok(p.values()
        .iter()
        .zip(0..space.len())
        .map(|(&ph, h)| {
            if ph == 0.0 {
                0.0
            } else {
                // pi = 0 yields +inf by IEEE division
                ph / (m * space.pi(h))
            }
        })
        .collect())
}

/// Rescaled p-values `q_h = p_h / pi(h)` used internally by the
/// threshold procedures under arbitrary volume weighting, with the same
/// conventions as [`weighted_pvalues`].
pub(crate) fn q_values(p: &PValueVector, space: &HypothesisSpace) -> Vec<f64> {
    p.values()
        .iter()
        .zip(0..space.len())
        .map(|(&ph, h)| if ph == 0.0 { 0.0 } else { ph / space.pi(h) })
        .collect()
}

/// A set of rejected hypotheses together with its volume.
#[derive(Clone, Debug)]
pub struct RejectionSet {
    members: Vec<usize>,
    volume: f64,
}

impl RejectionSet {
    /// Build from member indices (deduplicated, sorted); the volume is
    /// accumulated from the space.
    pub fn from_indices(space: &HypothesisSpace, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        let volume = space.volume_of(members.iter().copied());
        Self { members, volume }
    }

    pub fn empty() -> Self {
        Self {
            members: Vec::new(),
            volume: 0.0,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Member labels, in index order.
    pub fn labels<'a>(&self, space: &'a HypothesisSpace) -> Vec<&'a str> {
        self.members.iter().map(|&i| space.label(i)).collect()
    }

    /// Membership as a boolean mask over the space.
    pub fn mask(&self, space: &HypothesisSpace) -> Vec<bool> {
        let mut mask = vec![false; space.len()];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }
}

/// False discovery proportion `|R ∩ H0| / |R|`, with value 0 when the
/// rejection set is empty. Volumes are `lambda`-weighted.
pub fn fdp(r: &RejectionSet, null_mask: &[bool], space: &HypothesisSpace) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    let null_volume = space.volume_of(r.members().iter().copied().filter(|&i| null_mask[i]));
    null_volume / r.volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space_with(lambda: Vec<f64>, pi: Vec<f64>) -> HypothesisSpace {
        let labels = (1..=lambda.len()).map(|i| format!("h{i}")).collect();
        HypothesisSpace::new(labels, lambda, pi).unwrap()
    }

    #[test]
    fn standard_weighting_fields() {
        let s = HypothesisSpace::standard(4);
        assert_eq!(s.len(), 4);
        assert_eq!(s.total_volume(), 4.0);
        assert!(s.has_standard_lambda());
        for i in 0..4 {
            assert_eq!(s.lambda(i), 1.0);
            assert_eq!(s.pi(i), 0.25);
        }
        assert!((s.pi_volume_total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construction_rejects_bad_weights() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            HypothesisSpace::new(labels.clone(), vec![0.0, 1.0], vec![0.5, 0.5]),
            Err(Error::InvalidVolumeWeight { .. })
        ));
        assert!(matches!(
            HypothesisSpace::new(labels.clone(), vec![1.0, 1.0], vec![0.5, 1.5]),
            Err(Error::InvalidWeight { .. })
        ));
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            HypothesisSpace::new(dup, vec![1.0, 1.0], vec![0.5, 0.5]),
            Err(Error::DuplicateHypothesis(_))
        ));
    }

    #[test]
    fn weighted_pvalues_identity_under_uniform_weights() {
        let s = HypothesisSpace::standard(5);
        let p = PValueVector::new(vec![0.3, 0.01, 0.99, 0.5, 0.0]).unwrap();
        let w = weighted_pvalues(&p, &s).unwrap();
        for (a, b) in w.iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_pvalues_zero_weight_conventions() {
        let s = space_with(vec![1.0, 1.0], vec![0.0, 0.5]);
        let p = PValueVector::new(vec![0.3, 0.3]).unwrap();
        let w = weighted_pvalues(&p, &s).unwrap();
        assert_eq!(w[0], f64::INFINITY);
        let p0 = PValueVector::new(vec![0.0, 0.3]).unwrap();
        let w0 = weighted_pvalues(&p0, &s).unwrap();
        assert_eq!(w0[0], 0.0);
    }

    #[test]
    fn weighted_pvalues_hand_example() {
        // m=4, pi=(0.5,0.25,0.125,0.125), p=0.1 each -> p' = p/(m pi)
        let s = space_with(vec![1.0; 4], vec![0.5, 0.25, 0.125, 0.125]);
        let p = PValueVector::new(vec![0.1; 4]).unwrap();
        let w = weighted_pvalues(&p, &s).unwrap();
        let expected = [0.05, 0.1, 0.2, 0.2];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_pvalues_length_mismatch() {
        let s = HypothesisSpace::standard(3);
        let p = PValueVector::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            weighted_pvalues(&p, &s),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pi_volume_uniform_and_empty() {
        let s = HypothesisSpace::standard(8);
        // |S| = k under standard weighting -> k/m
        let v = s.pi_volume(["h1", "h5", "h8"]).unwrap();
        assert!((v - 3.0 / 8.0).abs() < 1e-12);
        assert_eq!(s.pi_volume([]).unwrap(), 0.0);
    }

    #[test]
    fn pi_volume_direct_sum_oracle() {
        let s = space_with(vec![2.0, 1.0, 1.0], vec![0.25, 0.25, 0.25]);
        let v = s.pi_volume(["h1", "h2"]).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn pi_volume_unknown_id() {
        let s = HypothesisSpace::standard(2);
        assert!(matches!(
            s.pi_volume(["h1", "zz"]),
            Err(Error::UnknownHypothesis(_))
        ));
    }

    #[test]
    fn fdp_conventions() {
        let s = HypothesisSpace::standard(6);
        let nulls = vec![true, true, true, false, false, false];
        assert_eq!(fdp(&RejectionSet::empty(), &nulls, &s), 0.0);
        // R inside the nulls -> 1
        let r = RejectionSet::from_indices(&s, vec![0, 2]);
        assert_eq!(fdp(&r, &nulls, &s), 1.0);
        // |R| = 4 with one true null -> 0.25
        let r = RejectionSet::from_indices(&s, vec![0, 3, 4, 5]);
        assert!((fdp(&r, &nulls, &s) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejection_set_volume_matches_member_sum() {
        let s = space_with(vec![2.0, 3.0, 1.5, 1.0], vec![0.25; 4]);
        let r = RejectionSet::from_indices(&s, vec![3, 1, 1, 0]);
        assert_eq!(r.members(), &[0, 1, 3]);
        assert!((r.volume() - 6.0).abs() < VOLUME_TOL);
        assert!(r.contains(1) && !r.contains(2));
    }

    proptest! {
        // 0 <= Pi(S) <= Pi(H), and Pi is additive over disjoint sets.
        #[test]
        fn pi_volume_bounds_and_additivity(
            lambda in proptest::collection::vec(0.1f64..5.0, 2..20),
            seed in any::<u64>(),
        ) {
            let n = lambda.len();
            let pi: Vec<f64> = (0..n).map(|i| ((seed >> (i % 50)) & 1023) as f64 / 1023.0).collect();
            let s = space_with(lambda, pi);
            let split = n / 2;
            let a = s.pi_volume_of(0..split);
            let b = s.pi_volume_of(split..n);
            let total = s.pi_volume_total();
            prop_assert!(a >= 0.0 && a <= total + 1e-12);
            prop_assert!((a + b - total).abs() < 1e-9);
        }

        // Adding true-null rejections at fixed |R ∩ H1| never lowers the FDP.
        #[test]
        fn fdp_monotone_in_null_rejections(
            m in 2usize..12,
            picks in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let s = HypothesisSpace::standard(m);
            let nulls: Vec<bool> = (0..m).map(|i| i % 2 == 0).collect();
            let alt: Vec<usize> = (0..m).filter(|&i| !nulls[i]).collect();
            let base: Vec<usize> = alt.into_iter().take(2).collect();
            let mut with_nulls = base.clone();
            for (i, &take) in picks.iter().enumerate().take(m) {
                if take && nulls[i] {
                    with_nulls.push(i);
                }
            }
            let r0 = RejectionSet::from_indices(&s, base);
            let r1 = RejectionSet::from_indices(&s, with_nulls);
            prop_assert!(fdp(&r1, &nulls, &s) + 1e-12 >= fdp(&r0, &nulls, &s));
        }

        // Weighted p-values preserve order among hypotheses with equal pi.
        #[test]
        fn weighted_preserves_order_at_equal_pi(
            p1 in 0.0f64..1.0,
            p2 in 0.0f64..1.0,
            w in 0.01f64..1.0,
        ) {
            let s = space_with(vec![1.0, 1.0], vec![w, w]);
            let p = PValueVector::new(vec![p1, p2]).unwrap();
            let wp = weighted_pvalues(&p, &s).unwrap();
            prop_assert_eq!(p1 <= p2, wp[0] <= wp[1]);
        }
    }
}
