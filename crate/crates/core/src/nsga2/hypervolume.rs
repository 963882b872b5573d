use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fusion::FusionObjectives;
use crate::metrics;
use crate::score_data::ScoreMatrix;

/// Objective-space corner used to normalize hypervolume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub eer: f64,
    pub params: u64,
}

impl ReferencePoint {
    /// EER of the worst single detector rounded up to the next whole
    /// percent (strictly above it), paired with the pool's total size.
    pub fn from_worst_detector(matrix: &ScoreMatrix) -> Result<Self> {
        let mut worst = 0.0f64;
        for row in matrix.rows() {
            worst = worst.max(metrics::eer(row, matrix.labels())?);
        }
        Ok(Self {
            eer: ((worst * 100.0).floor() + 1.0) / 100.0,
            params: matrix.pool().total_params(),
        })
    }

    pub fn normalize(&self, o: &FusionObjectives) -> [f64; 2] {
        [o.eer / self.eer, o.params as f64 / self.params as f64]
    }
}

/// Area of `[0, 1]²` dominated by `points`, which are already normalized so
/// that the reference point sits at `(1, 1)`. Points with any coordinate at
/// or beyond 1 are ignored; dominated points are harmless.
pub fn hypervolume_normalized(points: &[[f64; 2]]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < 1.0 && p[1] < 1.0)
        .map(|p| [p[0].max(0.0), p[1].max(0.0)])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));

    let mut area = 0.0;
    let mut best_y = 1.0f64;
    for (k, p) in pts.iter().enumerate() {
        best_y = best_y.min(p[1]);
        let next_x = pts.get(k + 1).map_or(1.0, |q| q[0]);
        area += (next_x - p[0]) * (1.0 - best_y);
    }
    area
}

/// Normalized 2-D hypervolume of a set of objective pairs.
pub fn hypervolume_2d<'a, I>(objectives: I, reference: ReferencePoint) -> f64
where
    I: IntoIterator<Item = &'a FusionObjectives>,
{
    let pts: Vec<[f64; 2]> = objectives
        .into_iter()
        .map(|o| reference.normalize(o))
        .collect();
    hypervolume_normalized(&pts)
}
