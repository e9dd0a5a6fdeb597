//! Interval elbow detection on sampled error curves.
//!
//! Given a non-increasing error curve sampled at `z_0 < z_1 < ... < z_K`
//! with `V(z_K) = 0`, the detector fits a three-segment piecewise-linear
//! approximation with knots `k1 < k2` drawn from the samples and returns
//! the knot pair minimizing the area under the approximation:
//!
//! ```text
//! A1 = (V(z_0) + V(k1)) * (k1 - z_0) / 2      first trapezoid
//! A2 = (V(k1) + V(k2)) * (k2 - k1) / 2        second trapezoid
//! A3 = V(k2) * (z_K - k2) / 2                 final triangle
//! ```
//!
//! The minimizing interval `[k1*, k2*]` quantifies how much slack the
//! model-order choice has; the classic single-knot elbow point (two
//! segments, same area rule) is computed alongside and falls inside the
//! interval in practice. The search is exhaustive over `k1, k2` in
//! `{z_1, ..., z_K}` with `k1 < k2`; ties resolve to the smallest `k1`,
//! then the smallest `k2`, preferring sparser models.

use crate::{Error, Result};

/// One raw curve sample before construction: position, error value, and the
/// regularization weight that produced it (if known).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample {
    pub z: f64,
    pub value: f64,
    pub lambda: Option<f64>,
}

impl CurveSample {
    pub fn new(z: f64, value: f64) -> Self {
        Self {
            z,
            value,
            lambda: None,
        }
    }

    pub fn with_lambda(z: f64, value: f64, lambda: f64) -> Self {
        Self {
            z,
            value,
            lambda: Some(lambda),
        }
    }
}

/// A validated error curve: strictly increasing `z`, non-increasing values
/// with the final value pinned to zero, and optional per-sample lambdas.
#[derive(Clone, Debug)]
pub struct ErrorCurve {
    z: Vec<f64>,
    v: Vec<f64>,
    lambda_at: Option<Vec<f64>>,
    shift_applied: f64,
    adjusted_points: usize,
}

impl ErrorCurve {
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn lambda_at(&self) -> Option<&[f64]> {
        self.lambda_at.as_deref()
    }

    /// Vertical offset subtracted so the final value is zero.
    pub fn shift_applied(&self) -> f64 {
        self.shift_applied
    }

    /// How many samples the running-minimum pass had to lower to restore
    /// monotonicity.
    pub fn adjusted_points(&self) -> usize {
        self.adjusted_points
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Detector output: the interval knots (as z values and sample indices),
/// the three areas at the optimum, and the single-knot elbow point. Lambda
/// fields are filled by [`map_to_lambda`]; the interval is reported
/// large-to-small because small z (few links) pairs with large lambda.
#[derive(Clone, Debug)]
pub struct ElbowResult {
    pub k1_star: f64,
    pub k2_star: f64,
    pub k1_index: usize,
    pub k2_index: usize,
    pub areas: (f64, f64, f64),
    pub total_area: f64,
    pub point_elbow: f64,
    pub point_index: usize,
    pub lambda_interval: Option<(f64, f64)>,
    pub lambda_point: Option<f64>,
    pub degenerate: bool,
}

/// Builds an [`ErrorCurve`] from raw samples.
///
/// Samples are sorted by `z`; exact duplicates of `z` keep the sample with
/// the smallest value (the best achievable error at that position, ties by
/// larger lambda). A running minimum from the left enforces monotonicity,
/// counting how many points were lowered, and the whole curve is shifted
/// down so the last value is zero.
pub fn build_curve(samples: &[CurveSample]) -> Result<ErrorCurve> {
    for s in samples {
        if !s.z.is_finite() || !s.value.is_finite() || s.lambda.is_some_and(|l| !l.is_finite()) {
            return Err(Error::NonFinite("curve sample".into()));
        }
    }
    let mut sorted: Vec<CurveSample> = samples.to_vec();
    sorted.sort_by(|a, b| {
        (a.z, a.value, b.lambda)
            .partial_cmp(&(b.z, b.value, a.lambda))
            .expect("finite samples")
    });
    let mut dedup: Vec<CurveSample> = Vec::with_capacity(sorted.len());
    for s in sorted {
        match dedup.last() {
            Some(last) if last.z == s.z => {}
            _ => dedup.push(s),
        }
    }
    if dedup.len() < 3 {
        return Err(Error::CurveTooShort {
            distinct: dedup.len(),
        });
    }

    let z: Vec<f64> = dedup.iter().map(|s| s.z).collect();
    let mut v: Vec<f64> = dedup.iter().map(|s| s.value).collect();
    let mut adjusted = 0usize;
    let mut running = v[0];
    for val in v.iter_mut().skip(1) {
        if *val > running {
            *val = running;
            adjusted += 1;
        } else {
            running = *val;
        }
    }
    let shift = *v.last().expect("non-empty");
    for val in v.iter_mut() {
        *val -= shift;
    }

    let lambda_at = if dedup.iter().all(|s| s.lambda.is_some()) {
        Some(dedup.iter().map(|s| s.lambda.unwrap()).collect())
    } else {
        None
    };

    Ok(ErrorCurve {
        z,
        v,
        lambda_at,
        shift_applied: shift,
        adjusted_points: adjusted,
    })
}

/// Runs the interval detector on a curve, exhaustively over all knot pairs.
pub fn detect(curve: &ErrorCurve) -> Result<ElbowResult> {
    let k = curve.len();
    if k < 3 {
        return Err(Error::CurveTooShort { distinct: k });
    }
    let z = &curve.z;
    let v = &curve.v;
    let last = k - 1;

    let mut best: Option<(usize, usize, f64, (f64, f64, f64))> = None;
    for i1 in 1..last {
        for i2 in (i1 + 1)..=last {
            let a1 = (v[0] + v[i1]) * (z[i1] - z[0]) / 2.0;
            let a2 = (v[i1] + v[i2]) * (z[i2] - z[i1]) / 2.0;
            let a3 = v[i2] * (z[last] - z[i2]) / 2.0;
            let total = a1 + a2 + a3;
            if best.map_or(true, |(_, _, t, _)| total < t) {
                best = Some((i1, i2, total, (a1, a2, a3)));
            }
        }
    }
    let (i1, i2, total, areas) = best.expect("k >= 3 guarantees at least one pair");

    let mut point_best: Option<(usize, f64)> = None;
    for i in 1..=last {
        let area = (v[0] + v[i]) * (z[i] - z[0]) / 2.0 + v[i] * (z[last] - z[i]) / 2.0;
        if point_best.map_or(true, |(_, a)| area < a) {
            point_best = Some((i, area));
        }
    }
    let (pi, _) = point_best.expect("non-empty");

    Ok(ElbowResult {
        k1_star: z[i1],
        k2_star: z[i2],
        k1_index: i1,
        k2_index: i2,
        areas,
        total_area: total,
        point_elbow: z[pi],
        point_index: pi,
        lambda_interval: None,
        lambda_point: None,
        degenerate: v.iter().all(|&x| x == 0.0),
    })
}

/// Fills the lambda fields of a detector result by looking up the lambda
/// stored at each selected sample. Errors if the curve has no lambda
/// annotations.
pub fn map_to_lambda(curve: &ErrorCurve, result: &ElbowResult) -> Result<ElbowResult> {
    let lambdas = curve.lambda_at().ok_or(Error::MissingLambda)?;
    let mut mapped = result.clone();
    mapped.lambda_interval = Some((lambdas[result.k1_index], lambdas[result.k2_index]));
    mapped.lambda_point = Some(lambdas[result.point_index]);
    Ok(mapped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plain(points: &[(f64, f64)]) -> Vec<CurveSample> {
        points.iter().map(|&(z, v)| CurveSample::new(z, v)).collect()
    }

    #[test]
    fn build_shifts_to_zero_floor() {
        let c = build_curve(&plain(&[(0.0, 10.0), (1.0, 4.0), (2.0, 1.0)])).unwrap();
        assert_eq!(c.z(), &[0.0, 1.0, 2.0]);
        assert_eq!(c.values(), &[9.0, 3.0, 0.0]);
        assert_eq!(c.shift_applied(), 1.0);
        assert_eq!(c.adjusted_points(), 0);
    }

    #[test]
    fn build_dedups_keeping_smallest_value() {
        let c = build_curve(&plain(&[(0.0, 10.0), (1.0, 4.0), (1.0, 3.0), (2.0, 0.0)])).unwrap();
        assert_eq!(c.z(), &[0.0, 1.0, 2.0]);
        assert_eq!(c.values(), &[10.0, 3.0, 0.0]);
    }

    #[test]
    fn build_enforces_monotonicity_by_running_min() {
        let c = build_curve(&plain(&[(0.0, 10.0), (1.0, 4.0), (2.0, 5.0), (3.0, 0.0)])).unwrap();
        assert_eq!(c.values(), &[10.0, 4.0, 4.0, 0.0]);
        assert_eq!(c.adjusted_points(), 1);
        assert_eq!(c.shift_applied(), 0.0);
    }

    #[test]
    fn build_rejects_short_curves() {
        let err = build_curve(&plain(&[(0.0, 1.0), (1.0, 0.0), (1.0, 0.5)])).unwrap_err();
        match err {
            Error::CurveTooShort { distinct } => assert_eq!(distinct, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    // Hand-enumerated: all 10 knot pairs of the 6-point curve evaluated
    // manually; (1, 3) wins with areas 65 + 35 + 5.
    #[test]
    fn detect_hand_curve() {
        let samples = plain(&[
            (0.0, 100.0),
            (1.0, 30.0),
            (2.0, 15.0),
            (3.0, 5.0),
            (4.0, 1.0),
            (5.0, 0.0),
        ]);
        let r = detect(&build_curve(&samples).unwrap()).unwrap();
        assert_eq!((r.k1_star, r.k2_star), (1.0, 3.0));
        assert_eq!(r.total_area, 105.0);
        assert_eq!(r.areas, (65.0, 35.0, 5.0));
        assert_eq!(r.point_elbow, 1.0);
        assert!(!r.degenerate);
    }

    // With three samples the only admissible pair is (z_1, z_2);
    // an immediate drop to zero puts the point elbow at z_1.
    #[test]
    fn detect_three_point_curve() {
        let r = detect(&build_curve(&plain(&[(0.0, 10.0), (1.0, 0.0), (2.0, 0.0)])).unwrap())
            .unwrap();
        assert_eq!((r.k1_star, r.k2_star), (1.0, 2.0));
        assert_eq!(r.total_area, 5.0);
        assert_eq!(r.point_elbow, 1.0);
    }

    #[test]
    fn detect_flags_degenerate_flat_curve() {
        let r = detect(&build_curve(&plain(&[(0.0, 3.0), (1.0, 3.0), (2.0, 3.0), (3.0, 3.0)]))
            .unwrap())
        .unwrap();
        assert!(r.degenerate);
        assert_eq!((r.k1_star, r.k2_star), (1.0, 2.0));
        assert_eq!(r.total_area, 0.0);
    }

    #[test]
    fn lambda_mapping_looks_up_selected_samples() {
        let samples: Vec<CurveSample> = [
            (0.0, 100.0),
            (1.0, 30.0),
            (2.0, 15.0),
            (3.0, 5.0),
            (4.0, 1.0),
            (5.0, 0.0),
        ]
        .iter()
        .zip([5.0, 4.0, 3.0, 2.0, 1.0, 0.0])
        .map(|(&(z, v), l)| CurveSample::with_lambda(z, v, l))
        .collect();
        let curve = build_curve(&samples).unwrap();
        let r = map_to_lambda(&curve, &detect(&curve).unwrap()).unwrap();
        assert_eq!(r.lambda_interval, Some((4.0, 2.0)));
        assert_eq!(r.lambda_point, Some(4.0));
    }

    #[test]
    fn lambda_mapping_requires_annotations() {
        let curve = build_curve(&plain(&[(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)])).unwrap();
        let r = detect(&curve).unwrap();
        assert!(matches!(
            map_to_lambda(&curve, &r),
            Err(Error::MissingLambda)
        ));
    }

    proptest! {
        // Random non-increasing curves: positive scaling of the values must
        // not move the knots, scaling z rescales them, and the single-knot
        // elbow stays inside the interval.
        #[test]
        fn scaling_and_containment(
            raw in proptest::collection::vec((0.01f64..10.0, 0.0f64..50.0), 4..16),
            c in 0.01f64..100.0,
        ) {
            let mut z_acc = 0.0;
            let mut samples = Vec::new();
            let mut value_acc: f64 = raw.iter().map(|r| r.1).sum::<f64>() + 1.0;
            for (dz, dv) in &raw {
                samples.push(CurveSample::new(z_acc, value_acc));
                z_acc += dz;
                value_acc -= dv;
            }
            samples.push(CurveSample::new(z_acc, value_acc));
            let curve = build_curve(&samples).unwrap();
            let base = detect(&curve).unwrap();

            prop_assert!(base.point_elbow >= base.k1_star && base.point_elbow <= base.k2_star);

            let scaled_v: Vec<CurveSample> = samples
                .iter()
                .map(|s| CurveSample::new(s.z, s.value * c))
                .collect();
            let r_v = detect(&build_curve(&scaled_v).unwrap()).unwrap();
            prop_assert_eq!((r_v.k1_star, r_v.k2_star), (base.k1_star, base.k2_star));
            prop_assert_eq!(r_v.point_elbow, base.point_elbow);

            let scaled_z: Vec<CurveSample> = samples
                .iter()
                .map(|s| CurveSample::new(s.z * c, s.value))
                .collect();
            let r_z = detect(&build_curve(&scaled_z).unwrap()).unwrap();
            prop_assert_eq!(r_z.k1_index, base.k1_index);
            prop_assert_eq!(r_z.k2_index, base.k2_index);
        }
    }

    #[test]
    fn immediate_drop_puts_point_elbow_at_first_sample() {
        let r = detect(
            &build_curve(&plain(&[(0.0, 50.0), (0.5, 0.0), (2.0, 0.0), (7.0, 0.0)])).unwrap(),
        )
        .unwrap();
        assert_eq!(r.point_elbow, 0.5);
    }
}
