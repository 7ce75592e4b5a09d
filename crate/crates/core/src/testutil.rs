use proptest::prelude::*;

use crate::space::FiniteMmSpace;

/// Points in the unit square under the sup metric, with positive weights.
pub(crate) fn arb_space(min_n: usize, max_n: usize) -> impl Strategy<Value = FiniteMmSpace> {
    (min_n..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), n),
            prop::collection::vec(0.05f64..1.0, n),
        )
            .prop_filter_map("coincident points", |(pts, w)| space_from(&pts, &w))
    })
}

pub(crate) fn space_from(pts: &[(f64, f64)], w: &[f64]) -> Option<FiniteMmSpace> {
    let n = pts.len();
    let s: f64 = w.iter().sum();
    let mut weights: Vec<f64> = w.iter().map(|x| x / s).collect();
    let drift = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (pts[i].0 - pts[j].0).abs().max((pts[i].1 - pts[j].1).abs()))
                .collect()
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && d[i][j] < 1e-3 {
                return None;
            }
        }
    }
    FiniteMmSpace::from_matrix(d, weights).ok()
}
