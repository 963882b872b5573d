//! Detection error metrics over a single score vector.
//!
//! Decision rule throughout: a trial is accepted as bonafide when its score
//! is at or above the threshold. Trials sharing a score value always fall
//! on the same side of any threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_data::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// Operating points ordered by strictly increasing threshold, running from
/// `(far = 1, frr = 0)` to `(far = 0, frr = 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetCurve {
    pub points: Vec<OperatingPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_miss: f64,
    pub c_fa: f64,
    pub p_target: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            c_miss: 1.0,
            c_fa: 10.0,
            p_target: 0.05,
        }
    }
}

impl CostModel {
    pub fn new(c_miss: f64, c_fa: f64, p_target: f64) -> Result<Self> {
        let cost = Self {
            c_miss,
            c_fa,
            p_target,
        };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c_miss.is_finite()
            && self.c_fa.is_finite()
            && self.c_miss > 0.0
            && self.c_fa > 0.0
            && self.p_target > 0.0
            && self.p_target < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "cost model needs c_miss > 0, c_fa > 0 and 0 < p_target < 1, got {self:?}"
            )))
        }
    }

    fn normalizer(&self) -> f64 {
        (self.c_miss * self.p_target).min(self.c_fa * (1.0 - self.p_target))
    }

    /// Normalized detection cost at one operating point.
    pub fn dcf(&self, far: f64, frr: f64) -> f64 {
        let raw = self.c_miss * self.p_target * frr + self.c_fa * (1.0 - self.p_target) * far;
        raw / self.normalizer()
    }
}

/// Walks the operating points in increasing threshold order. The lowest
/// distinct score doubles as the accept-everything endpoint; a threshold
/// just above the maximum closes the curve.
fn sweep(scores: &[f64], labels: &[Label], mut emit: impl FnMut(OperatingPoint)) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue(i));
    }
    let mut trials: Vec<(f64, bool)> = scores
        .iter()
        .zip(labels)
        .map(|(&s, l)| (s, l.is_bonafide()))
        .collect();
    let n_bona = trials.iter().filter(|t| t.1).count();
    let n_spoof = trials.len() - n_bona;
    if n_bona == 0 || n_spoof == 0 {
        return Err(Error::DegenerateClasses {
            bonafide: n_bona,
            spoof: n_spoof,
        });
    }
    trials.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let (nb, ns) = (n_bona as f64, n_spoof as f64);
    let mut bona_below = 0usize;
    let mut spoof_below = 0usize;
    let mut i = 0;
    while i < trials.len() {
        let value = trials[i].0;
        emit(OperatingPoint {
            threshold: value,
            far: (n_spoof - spoof_below) as f64 / ns,
            frr: bona_below as f64 / nb,
        });
        while i < trials.len() && trials[i].0 == value {
            if trials[i].1 {
                bona_below += 1;
            } else {
                spoof_below += 1;
            }
            i += 1;
        }
    }
    let top = trials[trials.len() - 1].0;
    emit(OperatingPoint {
        threshold: top.next_up(),
        far: 0.0,
        frr: 1.0,
    });
    Ok(())
}

pub fn det_points(scores: &[f64], labels: &[Label]) -> Result<DetCurve> {
    let mut points = Vec::with_capacity(scores.len() + 1);
    sweep(scores, labels, |p| points.push(p))?;
    Ok(DetCurve { points })
}

/// Equal error rate: where `far - frr` changes sign, the crossing of the
/// linear interpolants between the two bracketing operating points.
pub fn eer(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let mut prev: Option<OperatingPoint> = None;
    let mut found: Option<f64> = None;
    sweep(scores, labels, |p| {
        if found.is_some() {
            return;
        }
        let d1 = p.far - p.frr;
        if d1 == 0.0 {
            found = Some(p.far);
        } else if d1 < 0.0 {
            // the first point always has far = 1, frr = 0, so prev exists
            let q = prev.expect("curve starts above the diagonal");
            found = Some(crossing(q, p));
        }
        prev = Some(p);
    })?;
    Ok(found.expect("curve ends below the diagonal"))
}

fn crossing(a: OperatingPoint, b: OperatingPoint) -> f64 {
    let d0 = a.far - a.frr;
    let d1 = b.far - b.frr;
    let t = d0 / (d0 - d1);
    a.far + t * (b.far - a.far)
}

impl DetCurve {
    pub fn eer(&self) -> f64 {
        for (k, p) in self.points.iter().enumerate() {
            let d = p.far - p.frr;
            if d == 0.0 {
                return p.far;
            }
            if d < 0.0 {
                return crossing(self.points[k - 1], *p);
            }
        }
        unreachable!("curve ends at far = 0, frr = 1")
    }

    pub fn min_dcf(&self, cost: &CostModel) -> f64 {
        self.points
            .iter()
            .map(|p| cost.dcf(p.far, p.frr))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,far,frr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.far, p.frr));
        }
        out
    }
}

/// Minimum normalized detection cost over all operating points.
pub fn min_dcf(scores: &[f64], labels: &[Label], cost: &CostModel) -> Result<f64> {
    cost.validate()?;
    let mut best = f64::INFINITY;
    sweep(scores, labels, |p| best = best.min(cost.dcf(p.far, p.frr)))?;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Bonafide as B, Spoof as S};

    const TOL: f64 = 1e-12;

    fn three_by_three() -> (Vec<f64>, Vec<Label>) {
        (
            vec![0.8, 0.6, 0.4, 0.5, 0.3, 0.2],
            vec![B, B, B, S, S, S],
        )
    }

    /// Direct counting at a single threshold.
    fn rates_at(scores: &[f64], labels: &[Label], tau: f64) -> (f64, f64) {
        let nb = labels.iter().filter(|l| l.is_bonafide()).count() as f64;
        let ns = labels.len() as f64 - nb;
        let fa = scores
            .iter()
            .zip(labels)
            .filter(|(&s, l)| !l.is_bonafide() && s >= tau)
            .count() as f64;
        let fr = scores
            .iter()
            .zip(labels)
            .filter(|(&s, l)| l.is_bonafide() && s < tau)
            .count() as f64;
        (fa / ns, fr / nb)
    }

    #[test]
    fn perfect_separation() {
        let curve = det_points(&[1.0, 0.0], &[B, S]).unwrap();
        assert!(curve.points.iter().any(|p| p.far == 0.0 && p.frr == 0.0));
        assert_eq!(eer(&[1.0, 0.0], &[B, S]).unwrap(), 0.0);
        assert_eq!(
            min_dcf(&[1.0, 0.0], &[B, S], &CostModel::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_scores() {
        let scores = [0.3; 6];
        let labels = [B, S, B, S, B, S];
        let curve = det_points(&scores, &labels).unwrap();
        let pairs: Vec<_> = curve.points.iter().map(|p| (p.far, p.frr)).collect();
        assert_eq!(pairs, vec![(1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(eer(&scores, &labels).unwrap(), 0.5);
        let c = CostModel::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!(min_dcf(&scores, &labels, &c).unwrap(), 1.0);
    }

    #[test]
    fn three_by_three_operating_point() {
        let (s, l) = three_by_three();
        let curve = det_points(&s, &l).unwrap();
        let p = curve.points.iter().find(|p| p.threshold == 0.5).unwrap();
        assert!((p.far - 1.0 / 3.0).abs() < TOL);
        assert!((p.frr - 1.0 / 3.0).abs() < TOL);
        assert_eq!(rates_at(&s, &l, 0.5), (p.far, p.frr));
    }

    #[test]
    fn three_by_three_eer() {
        let (s, l) = three_by_three();
        assert!((eer(&s, &l).unwrap() - 1.0 / 3.0).abs() < TOL);
        assert!((det_points(&s, &l).unwrap().eer() - 1.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn three_by_three_min_dcf() {
        let (s, l) = three_by_three();
        let c = CostModel::new(1.0, 1.0, 0.5).unwrap();
        // exhaustive sweep: far + frr over every distinct threshold and
        // both extremes; the best is 1/3 at tau = 0.4 and tau = 0.6
        let mut taus: Vec<f64> = s.clone();
        taus.push(-1.0);
        taus.push(2.0);
        let oracle = taus
            .iter()
            .map(|&t| {
                let (fa, fr) = rates_at(&s, &l, t);
                (0.5 * fr + 0.5 * fa) / 0.5
            })
            .fold(f64::INFINITY, f64::min);
        assert!((oracle - 1.0 / 3.0).abs() < TOL);
        assert!((min_dcf(&s, &l, &c).unwrap() - oracle).abs() < TOL);
    }

    #[test]
    fn ties_move_together() {
        let s = [0.5, 0.5, 0.1, 0.9];
        let l = [B, S, S, B];
        let curve = det_points(&s, &l).unwrap();
        let ts: Vec<f64> = curve.points.iter().map(|p| p.threshold).collect();
        assert_eq!(ts.len(), 4);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        for p in &curve.points {
            assert_eq!(rates_at(&s, &l, p.threshold), (p.far, p.frr));
        }
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            eer(&[1.0, 2.0], &[B, B]),
            Err(Error::DegenerateClasses { .. })
        ));
        assert!(matches!(
            eer(&[1.0, f64::NAN], &[B, S]),
            Err(Error::NonFiniteValue(1))
        ));
        assert!(matches!(eer(&[1.0], &[B, S]), Err(Error::LengthMismatch { .. })));
        assert!(CostModel::new(1.0, 1.0, 1.0).is_err());
        assert!(CostModel::new(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn no_clamping_for_anticorrelated_scores() {
        let s = [0.1, 0.2, 0.8, 0.9];
        let l = [B, B, S, S];
        assert_eq!(eer(&s, &l).unwrap(), 1.0);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_filter_map("both classes", |(s, b)| {
                    let labels: Vec<Label> =
                        b.into_iter().map(|x| if x { B } else { S }).collect();
                    let nb = labels.iter().filter(|l| l.is_bonafide()).count();
                    (nb > 0 && nb < labels.len()).then_some((s, labels))
                })
        })
    }

    proptest! {
        #[test]
        fn det_curve_is_monotone((s, l) in instance()) {
            let curve = det_points(&s, &l).unwrap();
            let first = curve.points.first().unwrap();
            let last = curve.points.last().unwrap();
            prop_assert_eq!((first.far, first.frr), (1.0, 0.0));
            prop_assert_eq!((last.far, last.frr), (0.0, 1.0));
            for w in curve.points.windows(2) {
                prop_assert!(w[0].threshold < w[1].threshold);
                prop_assert!(w[0].far >= w[1].far);
                prop_assert!(w[0].frr <= w[1].frr);
            }
        }

        #[test]
        fn monotone_transform_invariance((s, l) in instance()) {
            let t: Vec<f64> = s.iter().map(|x| (3.0 * x + 1.0).exp()).collect();
            let c = CostModel::default();
            prop_assert_eq!(eer(&s, &l).unwrap(), eer(&t, &l).unwrap());
            prop_assert_eq!(min_dcf(&s, &l, &c).unwrap(), min_dcf(&t, &l, &c).unwrap());
        }

        #[test]
        fn negation_mirrors_eer((s, l) in instance()) {
            let neg: Vec<f64> = s.iter().map(|x| -x).collect();
            let e = eer(&s, &l).unwrap();
            prop_assert!((eer(&neg, &l).unwrap() - (1.0 - e)).abs() < 1e-9);
        }

        #[test]
        fn min_dcf_bounds((s, l) in instance(), p in 0.01f64..0.99, cfa in 0.1f64..20.0) {
            let c = CostModel::new(1.0, cfa, p).unwrap();
            let curve = det_points(&s, &l).unwrap();
            let m = min_dcf(&s, &l, &c).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
            // the two points bracketing the EER crossing
            let k = curve.points.iter().position(|q| q.far - q.frr <= 0.0).unwrap();
            prop_assert!(m <= c.dcf(curve.points[k].far, curve.points[k].frr));
            if k > 0 {
                prop_assert!(m <= c.dcf(curve.points[k - 1].far, curve.points[k - 1].frr));
            }
        }
    }
}
