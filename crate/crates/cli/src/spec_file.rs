//! Metric spec files (TOML) and point arguments.

use std::path::Path;

use finsler_core::conformance::Region;
use finsler_core::{ChartPoint, MetricSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A metric spec file: the spec fields plus an optional sampling region.
///
/// ```toml
/// name = "randers-x"
/// dim = 2
/// family = "randers"
/// a = [["1 + 0.2*x2^2", "0.1*sin(x1)"], ["1.5 + 0.3*cos(x1)"]]
/// b = ["0.3*sin(x1)", "0.2*cos(x2)"]
///
/// [region]
/// x = [[-1.0, 1.0], [-1.0, 1.0]]
/// y_radius = [0.5, 2.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFile {
    #[serde(flatten)]
    pub spec: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

pub fn parse_metric_file(text: &str) -> Result<MetricFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::spec(format!("invalid metric spec: {}", e.message())))
}

/// `builtin:<name>` or a path to a TOML spec file.
pub fn load_metric(arg: &str) -> Result<MetricFile, CliError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let spec = MetricSpec::builtin(name).ok_or_else(|| {
            CliError::spec(format!(
                "unknown built-in metric `{name}`; available: {}",
                MetricSpec::BUILTIN_NAMES.join(", ")
            ))
        })?;
        return Ok(MetricFile { spec, region: None });
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::spec(format!("cannot read metric spec {}: {e}", path.display())))?;
    parse_metric_file(&text)
}

/// `x1,..,xn;y1,..,yn`.
pub fn parse_point(arg: &str, dim: usize) -> Result<ChartPoint, CliError> {
    let (x, y) = arg
        .split_once(';')
        .ok_or_else(|| CliError::spec(format!("point `{arg}` must look like `x1,..,xn;y1,..,yn`")))?;
    let numbers = |part: &str| -> Result<Vec<f64>, CliError> {
        part.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::spec(format!("`{}` in point `{arg}` is not a number", s.trim())))
            })
            .collect()
    };
    let (x, y) = (numbers(x)?, numbers(y)?);
    if x.len() != dim || y.len() != dim {
        return Err(CliError::spec(format!(
            "point `{arg}` has {} x and {} y coordinates; the metric has dimension {dim}",
            x.len(),
            y.len()
        )));
    }
    ChartPoint::new(x, y).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randers_file_with_region() {
        let text = r#"
            name = "wind"
            dim = 2
            family = "randers"
            a = [["1", "0"], ["1"]]
            b = ["0.5", "0"]

            [region]
            x = [[-1, 1], [0, 2]]
        "#;
        let file = parse_metric_file(text).unwrap();
        assert_eq!(file.spec, MetricSpec::randers("wind", vec![vec!["1", "0"], vec!["1"]], vec!["0.5", "0"]));
        let region = file.region.unwrap();
        assert_eq!(region.x, vec![[-1.0, 1.0], [0.0, 2.0]]);
        assert_eq!(region.y_radius, [0.5, 2.0]);
    }

    #[test]
    fn expression_file() {
        let file = parse_metric_file("dim = 2\nfamily = \"expression\"\nl = \"sqrt(y1^2 + y2^2)\"\n").unwrap();
        assert_eq!(file.spec.dim, 2);
        assert!(file.region.is_none());
    }

    #[test]
    fn unknown_family_is_a_spec_error() {
        let err = parse_metric_file("dim = 2\nfamily = \"kropina\"\n").unwrap_err();
        assert_eq!(err.code, 2);
    }

    #[test]
    fn points() {
        let p = parse_point("0.5, 1; 1,0", 2).unwrap();
        assert_eq!(p.x(), &[0.5, 1.0]);
        assert_eq!(p.y(), &[1.0, 0.0]);
        assert_eq!(parse_point("0,0;1", 2).unwrap_err().code, 2);
        assert_eq!(parse_point("0,0;0,0", 2).unwrap_err().code, 3);
    }
}
