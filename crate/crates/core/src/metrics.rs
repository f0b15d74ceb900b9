//! Agreement between two raters and data-efficiency analyses.
//!
//! Quadratic weighted kappa is computed from three `N x N` matrices: the
//! penalty weights `W(i, j) = (i - j)^2 / (N - 1)^2`, the observed counts `O`
//! and the expected counts `E` (outer product of the two rating histograms,
//! rescaled so that `sum(E) == sum(O)`). Then `qwk = 1 - sum(W*O) / sum(W*E)`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::engine::RunRecord;
use crate::error::{Error, Result};

/// Paired ratings of the same items by a human and a machine rater.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingPairs {
    human: Vec<usize>,
    machine: Vec<usize>,
    levels: usize,
}

impl RatingPairs {
    pub fn new(human: Vec<usize>, machine: Vec<usize>, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::argument(format!(
                "rating scale needs at least 2 levels, got {levels}"
            )));
        }
        if human.len() != machine.len() {
            return Err(Error::argument(format!(
                "rating lists differ in length: {} human vs {} machine",
                human.len(),
                machine.len()
            )));
        }
        if human.is_empty() {
            return Err(Error::argument("at least one rating pair is required"));
        }
        if let Some(bad) = human.iter().chain(&machine).find(|&&r| r >= levels) {
            return Err(Error::argument(format!(
                "rating {bad} is outside 0..{levels}"
            )));
        }
        Ok(Self {
            human,
            machine,
            levels,
        })
    }

    pub fn human(&self) -> &[usize] {
        &self.human
    }

    pub fn machine(&self) -> &[usize] {
        &self.machine
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.human.len()
    }

    pub fn is_empty(&self) -> bool {
        self.human.is_empty()
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.human.iter().copied().zip(self.machine.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementMatrices {
    pub weights: Array2<f64>,
    pub observed: Array2<f64>,
    pub expected: Array2<f64>,
}

/// Quadratic disagreement penalties for `levels` rating classes.
pub fn weight_matrix(levels: usize) -> Result<Array2<f64>> {
    if levels < 2 {
        return Err(Error::argument(format!(
            "weight matrix needs at least 2 levels, got {levels}"
        )));
    }
    let denom = ((levels - 1) * (levels - 1)) as f64;
    Ok(Array2::from_shape_fn((levels, levels), |(i, j)| {
        let d = i.abs_diff(j);
        (d * d) as f64 / denom
    }))
}

pub fn agreement_matrices(pairs: &RatingPairs) -> AgreementMatrices {
    let n = pairs.levels;
    let mut observed = Array2::<f64>::zeros((n, n));
    let mut hist_h = vec![0.0; n];
    let mut hist_m = vec![0.0; n];
    for (h, m) in pairs.pairs() {
        observed[[h, m]] += 1.0;
        hist_h[h] += 1.0;
        hist_m[m] += 1.0;
    }
    // sum(outer(h, m)) = len^2, so rescaling by 1/len brings sum(E) to len.
    let total = pairs.len() as f64;
    let expected = Array2::from_shape_fn((n, n), |(i, j)| hist_h[i] * hist_m[j] / total);
    AgreementMatrices {
        weights: weight_matrix(n).expect("RatingPairs guarantees levels >= 2"),
        observed,
        expected,
    }
}

/// Quadratic weighted kappa. Returns 1.0 when `sum(W*E)` vanishes, which
/// only happens when both raters give one and the same class throughout.
pub fn qwk(pairs: &RatingPairs) -> f64 {
    let m = agreement_matrices(pairs);
    let num = (&m.weights * &m.observed).sum();
    let den = (&m.weights * &m.expected).sum();
    if den == 0.0 {
        return 1.0;
    }
    1.0 - num / den
}

/// Cohen's kappa with marginal-product chance agreement.
pub fn cohen_kappa(pairs: &RatingPairs) -> f64 {
    let n = pairs.len() as f64;
    let mut hist_h = vec![0usize; pairs.levels];
    let mut hist_m = vec![0usize; pairs.levels];
    let mut matches = 0usize;
    for (h, m) in pairs.pairs() {
        hist_h[h] += 1;
        hist_m[m] += 1;
        matches += usize::from(h == m);
    }
    let p_o = matches as f64 / n;
    let p_e: f64 = hist_h
        .iter()
        .zip(&hist_m)
        .map(|(&a, &b)| (a as f64 / n) * (b as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return if p_o >= 1.0 { 1.0 } else { 0.0 };
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Percentage of positions where both raters agree exactly.
pub fn exact_agreement(pairs: &RatingPairs) -> f64 {
    let matches = pairs.pairs().filter(|(h, m)| h == m).count();
    100.0 * matches as f64 / pairs.len() as f64
}

/// The three agreement measures reported for every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub qwk: f64,
    pub kappa: f64,
    /// Percent in `[0, 100]`.
    pub exact: f64,
}

impl Agreement {
    pub fn of(pairs: &RatingPairs) -> Self {
        Self {
            qwk: qwk(pairs),
            kappa: cohen_kappa(pairs),
            exact: exact_agreement(pairs),
        }
    }
}

/// Achieved agreement per labeled training item.
pub fn data_efficiency(qwk: f64, n_train: usize) -> Result<f64> {
    if n_train == 0 {
        return Err(Error::argument(
            "data efficiency needs at least one training item",
        ));
    }
    Ok(qwk / n_train as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub qwk: f64,
}

/// Agreement as a function of the labeled fraction. Fractions strictly increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurve {
    points: Vec<CurvePoint>,
}

impl EfficiencyCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        if let Some(w) = points
            .windows(2)
            .find(|w| w[0].fraction.partial_cmp(&w[1].fraction) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::argument(format!(
                "curve fractions must strictly increase, found {} then {}",
                w[0].fraction, w[1].fraction
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Smallest recorded fraction whose agreement reaches `target_ratio * full_qwk`.
pub fn target_fraction(
    curve: &EfficiencyCurve,
    full_qwk: f64,
    target_ratio: f64,
) -> Result<Option<f64>> {
    if curve.is_empty() {
        return Err(Error::argument("target fraction of an empty curve"));
    }
    if full_qwk.is_nan() || full_qwk <= 0.0 {
        return Err(Error::argument(format!(
            "full-data agreement must be positive, got {full_qwk}"
        )));
    }
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::argument(format!(
            "target ratio must lie in (0, 1], got {target_ratio}"
        )));
    }
    let threshold = target_ratio * full_qwk;
    Ok(curve
        .points
        .iter()
        .find(|p| p.qwk >= threshold)
        .map(|p| p.fraction))
}

pub fn growth_curve(run: &RunRecord) -> EfficiencyCurve {
    let points = run
        .iterations
        .iter()
        .map(|it| CurvePoint {
            fraction: it.labeled_fraction,
            qwk: it.qwk,
        })
        .collect();
    EfficiencyCurve::new(points).expect("labeled counts strictly increase within a run")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked() -> RatingPairs {
        RatingPairs::new(vec![0, 1, 2, 2], vec![0, 2, 2, 1], 3).unwrap()
    }

    #[test]
    fn weight_matrix_small_cases() {
        let w2 = weight_matrix(2).unwrap();
        assert_eq!(w2, ndarray::array![[0.0, 1.0], [1.0, 0.0]]);
        let w3 = weight_matrix(3).unwrap();
        assert_eq!(w3[[0, 1]], 0.25);
        assert_eq!(w3[[0, 2]], 1.0);
        for n in 2..9 {
            let w = weight_matrix(n).unwrap();
            assert!((0..n).all(|i| w[[i, i]] == 0.0));
            assert_eq!(w, w.t());
        }
        assert!(weight_matrix(1).is_err());
    }

    #[test]
    fn matrices_for_worked_example() {
        let m = agreement_matrices(&worked());
        let e = ndarray::array![[0.25, 0.25, 0.5], [0.25, 0.25, 0.5], [0.5, 0.5, 1.0]];
        assert_eq!(m.expected, e);
        assert_eq!(m.observed.sum(), 4.0);
        let perfect = RatingPairs::new(vec![0, 1], vec![0, 1], 2).unwrap();
        let o = agreement_matrices(&perfect).observed;
        assert_eq!(o, ndarray::array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn worked_example_metrics() {
        // sum(W*O) = 0.5, sum(W*E) = 1.375, so qwk = 1 - 0.5/1.375 = 7/11.
        let p = worked();
        assert!((qwk(&p) - 7.0 / 11.0).abs() < 1e-12);
        // p_o = 0.5, p_e = (1*1 + 1*1 + 2*2)/16 = 0.375.
        assert!((cohen_kappa(&p) - 0.2).abs() < 1e-12);
        assert_eq!(exact_agreement(&p), 50.0);
    }

    #[test]
    fn degenerate_raters() {
        let same = RatingPairs::new(vec![2; 5], vec![2; 5], 4).unwrap();
        assert_eq!(qwk(&same), 1.0);
        assert_eq!(cohen_kappa(&same), 1.0);
        let identical = RatingPairs::new(vec![0, 3, 1, 2], vec![0, 3, 1, 2], 4).unwrap();
        assert_eq!(qwk(&identical), 1.0);
        assert_eq!(cohen_kappa(&identical), 1.0);
        assert_eq!(exact_agreement(&identical), 100.0);
        let disjoint = RatingPairs::new(vec![0, 0, 1], vec![1, 1, 0], 2).unwrap();
        assert_eq!(exact_agreement(&disjoint), 0.0);
    }

    #[test]
    fn rating_pairs_validation() {
        assert!(RatingPairs::new(vec![], vec![], 3).is_err());
        assert!(RatingPairs::new(vec![0], vec![0, 1], 3).is_err());
        assert!(RatingPairs::new(vec![3], vec![0], 3).is_err());
        assert!(RatingPairs::new(vec![0], vec![0], 1).is_err());
    }

    #[test]
    fn efficiency_quotient() {
        assert!((data_efficiency(0.8, 100).unwrap() - 0.008).abs() < 1e-15);
        assert_eq!(data_efficiency(0.0, 17).unwrap(), 0.0);
        assert!(data_efficiency(0.5, 0).is_err());
        let a = data_efficiency(0.7, 10).unwrap();
        let b = data_efficiency(0.7, 11).unwrap();
        assert!(b < a);
    }

    fn curve(points: &[(f64, f64)]) -> EfficiencyCurve {
        EfficiencyCurve::new(
            points
                .iter()
                .map(|&(fraction, qwk)| CurvePoint { fraction, qwk })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn target_fraction_scan() {
        let c = curve(&[(0.01, 0.60), (0.05, 0.75), (0.10, 0.77)]);
        assert_eq!(target_fraction(&c, 0.78, 0.95).unwrap(), Some(0.05));
        assert_eq!(target_fraction(&c, 0.78, 1.0).unwrap(), None);
        assert!(target_fraction(&c, 0.0, 0.95).is_err());
    }

    #[test]
    fn curve_rejects_non_increasing_fractions() {
        let pts = vec![
            CurvePoint {
                fraction: 0.1,
                qwk: 0.5,
            },
            CurvePoint {
                fraction: 0.1,
                qwk: 0.6,
            },
        ];
        assert!(EfficiencyCurve::new(pts).is_err());
    }

    fn arb_pairs() -> impl Strategy<Value = RatingPairs> {
        (2usize..8, 1usize..40).prop_flat_map(|(levels, len)| {
            (
                proptest::collection::vec(0..levels, len),
                proptest::collection::vec(0..levels, len),
            )
                .prop_map(move |(h, m)| RatingPairs::new(h, m, levels).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matrix_invariants(p in arb_pairs()) {
            let m = agreement_matrices(&p);
            prop_assert_eq!(m.observed.sum(), p.len() as f64);
            prop_assert!((m.expected.sum() - m.observed.sum()).abs() <= 1e-9);
            prop_assert_eq!(m.weights.iter().cloned().fold(0.0, f64::max), 1.0);
        }

        #[test]
        fn metrics_bounded_and_perfect_iff_exact(p in arb_pairs()) {
            let a = Agreement::of(&p);
            prop_assert!(a.qwk <= 1.0 + 1e-12);
            prop_assert!(a.kappa <= 1.0 + 1e-12);
            prop_assert!((0.0..=100.0).contains(&a.exact));
            if a.exact == 100.0 {
                prop_assert_eq!(a.qwk, 1.0);
                prop_assert_eq!(a.kappa, 1.0);
            }
            if (a.qwk - 1.0).abs() < 1e-12 {
                prop_assert_eq!(a.exact, 100.0);
            }
        }

        #[test]
        fn permutation_invariance(p in arb_pairs(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let q = RatingPairs::new(
                idx.iter().map(|&i| p.human()[i]).collect(),
                idx.iter().map(|&i| p.machine()[i]).collect(),
                p.levels(),
            ).unwrap();
            let (a, b) = (Agreement::of(&p), Agreement::of(&q));
            prop_assert!((a.qwk - b.qwk).abs() < 1e-12);
            prop_assert!((a.kappa - b.kappa).abs() < 1e-12);
            prop_assert_eq!(a.exact, b.exact);
        }

        #[test]
        fn reversal_symmetry(p in arb_pairs()) {
            let n = p.levels();
            let flip = |v: &[usize]| v.iter().map(|&r| n - 1 - r).collect::<Vec<_>>();
            let q = RatingPairs::new(flip(p.human()), flip(p.machine()), n).unwrap();
            prop_assert!((qwk(&p) - qwk(&q)).abs() < 1e-12);
        }
    }
}
