//! Space files: TOML documents with either explicit data or an expression.
//!
//! ```toml
//! labels = ["a", "b"]          # optional
//! dist = [[0, 1], [1, 0]]      # `inf` marks infinite distances
//! weights = [0.5, 0.5]
//! ```
//! or
//! ```toml
//! expr = "lp_power(two_point(1, 0.5), 2, 3)"
//! ```

use std::path::Path;

use mmpyramid::{Budget, ExtendedFiniteMmSpace, FiniteMmSpace, Metric};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::{line_col, parse_space, Space};

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Space {
    pub fn len(&self) -> usize {
        match self {
            Space::Finite(x) => x.len(),
            Space::Extended(x) => x.len(),
        }
    }

    /// The explicit file form of this space.
    pub fn to_file(&self) -> SpaceFile {
        let (labels, dist, weights) = match self {
            Space::Finite(x) => (x.labels().to_vec(), x.dist_rows(), mmpyramid::WeightedMetric::weights(x).to_vec()),
            Space::Extended(x) => (x.labels().to_vec(), x.dist_rows(), mmpyramid::WeightedMetric::weights(x).to_vec()),
        };
        SpaceFile {
            expr: None,
            labels: Some(labels),
            dist: Some(dist),
            weights: Some(weights),
        }
    }
}

fn file_err(path: &str, msg: impl Into<String>) -> CliError {
    CliError::File {
        path: path.to_string(),
        msg: msg.into(),
    }
}

/// Parses a space file's text.
pub fn parse_file(path: &str, text: &str, budget: &Budget) -> Result<Space, CliError> {
    let f: SpaceFile = toml::from_str(text).map_err(|e| {
        let at = e.span().map_or(String::new(), |s| {
            let (l, c) = line_col(text, s.start);
            format!("line {l}, column {c}: ")
        });
        file_err(path, format!("{at}{}", e.message()))
    })?;
    match (f.expr, f.dist, f.weights) {
        (Some(expr), None, None) => {
            if f.labels.is_some() {
                return Err(file_err(path, "labels cannot accompany an expression"));
            }
            parse_space(&expr, budget).map_err(|e| file_err(path, format!("in expr: {e}")))
        }
        (None, Some(dist), Some(weights)) => {
            let labels = f.labels.unwrap_or_else(|| (0..weights.len()).map(|i| i.to_string()).collect());
            if dist.iter().flatten().any(|d| d.is_infinite()) {
                let z = ExtendedFiniteMmSpace::new(labels, dist, weights).map_err(|e| file_err(path, e.to_string()))?;
                Ok(Space::Extended(z))
            } else {
                let x = FiniteMmSpace::new(labels, dist, weights).map_err(|e| file_err(path, e.to_string()))?;
                Ok(Space::Finite(x))
            }
        }
        _ => Err(file_err(path, "expected either `expr` or both `dist` and `weights`")),
    }
}

/// A file path when one exists, otherwise an expression.
pub fn load_space(arg: &str, budget: &Budget) -> Result<Space, CliError> {
    if Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg).map_err(|e| file_err(arg, e.to_string()))?;
        parse_file(arg, &text, budget)
    } else {
        parse_space(arg, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmpyramid::maps::mm_isomorphic;

    #[test]
    fn explicit_and_expression_files() {
        let b = Budget::default();
        let s = parse_file("t", "dist = [[0, 1], [1, 0]]\nweights = [0.25, 0.75]\n", &b).unwrap();
        assert_eq!(s.len(), 2);
        let s = parse_file("t", "expr = \"dissipation(5)\"\n", &b).unwrap();
        assert_eq!(s.len(), 5);
        let s = parse_file("t", "dist = [[0, inf], [inf, 0]]\nweights = [0.5, 0.5]\n", &b).unwrap();
        assert!(matches!(s, Space::Extended(_)));
    }

    #[test]
    fn file_errors_name_positions() {
        let b = Budget::default();
        let e = parse_file("t", "dist = [[0, 1], [1, 0]\nweights = [1]\n", &b).unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
        let e = parse_file("t", "dist = [[0, 1], [2, 0]]\nweights = [0.5, 0.5]\n", &b).unwrap_err();
        assert!(e.to_string().contains("symmetric"), "{e}");
        assert!(parse_file("t", "weights = [1]\n", &b).is_err());
    }

    #[test]
    fn serialized_expressions_reparse_isomorphically() {
        let b = Budget::default();
        for src in [
            "lp_power(two_point(0.3, 0.25), 2, 3)",
            "wedge(cycle(5), 0, dissipation(3), 1, 0.4)",
            "direct_sum([(cycle(3), 0.5), (gapped_sum([(point(), 0, 0.5), (two_point(1, 0.5), 1, 0.5)], 2), 0.5)])",
        ] {
            let s = parse_space(src, &b).unwrap();
            let text = toml::to_string(&s.to_file()).unwrap();
            let back = parse_file("t", &text, &b).unwrap();
            let iso = match (&s, &back) {
                (Space::Finite(x), Space::Finite(y)) => mm_isomorphic(x, y, &b).unwrap(),
                (Space::Extended(x), Space::Extended(y)) => mm_isomorphic(x, y, &b).unwrap(),
                _ => None,
            };
            assert!(iso.is_some(), "{src}");
        }
    }
}
