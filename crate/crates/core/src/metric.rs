//! Fundamental functions: declarative specs, built-in families, evaluation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::jets::{seed_variables, ChartPoint, Jet};

/// Declarative description of a fundamental function `L(x, y)`.
///
/// Matrix payloads list only the upper triangle, row by row: row `i` holds
/// the entries `a_ii, a_i(i+1), .., a_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(flatten)]
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `L = sqrt(a_ij(x) y^i y^j)`
    Riemannian { a: Vec<Vec<String>> },
    /// `L = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i`
    Randers { a: Vec<Vec<String>>, b: Vec<String> },
    /// `L` given directly in `x1..xn, y1..yn`.
    Expression { l: String },
}

fn identity_upper(n: usize) -> Vec<Vec<String>> {
    (0..n)
        .map(|i| (i..n).map(|j| if i == j { "1" } else { "0" }.to_string()).collect())
        .collect()
}

impl MetricSpec {
    pub fn riemannian(name: &str, a_upper: Vec<Vec<&str>>) -> Self {
        Self {
            name: Some(name.into()),
            dim: a_upper.len(),
            family: Family::Riemannian {
                a: a_upper.into_iter().map(|r| r.into_iter().map(String::from).collect()).collect(),
            },
        }
    }

    pub fn randers(name: &str, a_upper: Vec<Vec<&str>>, b: Vec<&str>) -> Self {
        Self {
            name: Some(name.into()),
            dim: a_upper.len(),
            family: Family::Randers {
                a: a_upper.into_iter().map(|r| r.into_iter().map(String::from).collect()).collect(),
                b: b.into_iter().map(String::from).collect(),
            },
        }
    }

    pub fn expression(name: &str, dim: usize, l: &str) -> Self {
        Self {
            name: Some(name.into()),
            dim,
            family: Family::Expression { l: l.into() },
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            name: Some(format!("euclidean{dim}")),
            dim,
            family: Family::Riemannian { a: identity_upper(dim) },
        }
    }

    /// Round unit sphere in polar chart, `a = diag(1, sin²x1)`.
    pub fn sphere() -> Self {
        Self::riemannian("sphere", vec![vec!["1", "0"], vec!["sin(x1)^2"]])
    }

    pub fn flat_diag41() -> Self {
        Self::riemannian("diag41", vec![vec!["4", "0"], vec!["1"]])
    }

    /// Constant Randers structure `a = I`, `b = (0.5, 0)`.
    pub fn minkowski_randers() -> Self {
        Self::randers("minkowski-randers", vec![vec!["1", "0"], vec!["1"]], vec!["0.5", "0"])
    }

    /// Randers structure with x-dependent `a` and `b`; genuinely
    /// non-Riemannian and non-Landsberg.
    pub fn randers_x() -> Self {
        Self::randers(
            "randers-x",
            vec![vec!["1 + 0.2*x2^2", "0.1*sin(x1)"], vec!["1.5 + 0.3*cos(x1)"]],
            vec!["0.3*sin(x1)", "0.2*cos(x2)"],
        )
    }

    /// Randers structure over the round sphere with `b_1 = 0.3 sin(x1)`.
    pub fn randers_sphere() -> Self {
        Self::randers(
            "randers-sphere",
            vec![vec!["1", "0"], vec!["sin(x1)^2"]],
            vec!["0.3*sin(x1)", "0"],
        )
    }

    /// A three-dimensional x-dependent Randers structure.
    pub fn randers_x3() -> Self {
        Self::randers(
            "randers-x3",
            vec![
                vec!["1 + 0.1*x2^2", "0.1*sin(x3)", "0"],
                vec!["1.2", "0.05*x1"],
                vec!["1 + 0.2*cos(x1)^2"],
            ],
            vec!["0.2*sin(x2)", "0.1*x3", "0.15*cos(x1)"],
        )
    }

    /// Built-in metrics by name.
    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "euclidean" | "euclidean2" => Self::euclidean(2),
            "euclidean3" => Self::euclidean(3),
            "sphere" => Self::sphere(),
            "diag41" => Self::flat_diag41(),
            "minkowski-randers" => Self::minkowski_randers(),
            "randers-x" => Self::randers_x(),
            "randers-sphere" => Self::randers_sphere(),
            "randers-x3" => Self::randers_x3(),
            _ => return None,
        })
    }

    pub const BUILTIN_NAMES: [&'static str; 8] = [
        "euclidean2",
        "euclidean3",
        "sphere",
        "diag41",
        "minkowski-randers",
        "randers-x",
        "randers-sphere",
        "randers-x3",
    ];

    pub fn id(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let family = match self.family {
                Family::Riemannian { .. } => "riemannian",
                Family::Randers { .. } => "randers",
                Family::Expression { .. } => "expression",
            };
            format!("{family}{}", self.dim)
        })
    }
}

#[derive(Debug, Clone)]
enum Structure {
    Quadratic { a: Vec<Vec<Expr>> },
    Randers { a: Vec<Vec<Expr>>, b: Vec<Expr> },
    Direct(Expr),
}

/// An evaluable fundamental function.
#[derive(Debug, Clone)]
pub struct FinslerMetric {
    id: String,
    dim: usize,
    structure: Structure,
}

fn parse_matrix(a: &[Vec<String>], dim: usize) -> Result<Vec<Vec<Expr>>> {
    if a.len() != dim {
        return Err(Error::Spec(format!("`a` must have {dim} rows, got {}", a.len())));
    }
    let mut full: Vec<Vec<Option<Expr>>> = vec![vec![None; dim]; dim];
    for (i, row) in a.iter().enumerate() {
        if row.len() != dim - i {
            return Err(Error::Spec(format!(
                "row {} of `a` must list the {} upper-triangular entries a_{}{}..a_{}{}, got {}",
                i + 1,
                dim - i,
                i + 1,
                i + 1,
                i + 1,
                dim,
                row.len()
            )));
        }
        for (k, text) in row.iter().enumerate() {
            let j = i + k;
            let e = parse_expression(text, dim)?;
            if e.uses_fiber() {
                return Err(Error::Spec(format!(
                    "a_{}{} = `{text}` depends on y; coefficients may only depend on x",
                    i + 1,
                    j + 1
                )));
            }
            full[i][j] = Some(e.clone());
            full[j][i] = Some(e);
        }
    }
    Ok(full
        .into_iter()
        .map(|r| r.into_iter().map(|e| e.expect("filled")).collect())
        .collect())
}

pub fn build_metric(spec: &MetricSpec) -> Result<FinslerMetric> {
    let dim = spec.dim;
    if dim < 2 {
        return Err(Error::Spec(format!("dim must be at least 2, got {dim}")));
    }
    let structure = match &spec.family {
        Family::Riemannian { a } => Structure::Quadratic {
            a: parse_matrix(a, dim)?,
        },
        Family::Randers { a, b } => {
            if b.len() != dim {
                return Err(Error::Spec(format!("`b` must have {dim} entries, got {}", b.len())));
            }
            let b = b
                .iter()
                .enumerate()
                .map(|(i, text)| {
                    let e = parse_expression(text, dim)?;
                    if e.uses_fiber() {
                        return Err(Error::Spec(format!("b_{} = `{text}` depends on y", i + 1)));
                    }
                    Ok(e)
                })
                .collect::<Result<Vec<_>>>()?;
            Structure::Randers {
                a: parse_matrix(a, dim)?,
                b,
            }
        }
        Family::Expression { l } => Structure::Direct(parse_expression(l, dim)?),
    };
    Ok(FinslerMetric {
        id: spec.id(),
        dim,
        structure,
    })
}

fn quadratic_jet(a: &[Vec<Expr>], seeds: &[Jet]) -> Result<(Jet, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut sum = Jet::zero(seeds[0].nvars(), seeds[0].order());
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let aij = a[i][j].eval_jet(seeds)?;
            values[i][j] = aij.value();
            values[j][i] = aij.value();
            let weight = if i == j { 1.0 } else { 2.0 };
            sum += &(&aij * &(&seeds[n + i] * &seeds[n + j])).scale(weight);
        }
    }
    Ok((sum, values))
}

fn randers_norm(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> Result<f64> {
    let n = b.len();
    let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let chol = a.cholesky().ok_or_else(|| Error::RandersConvexity {
        norm: f64::NAN,
        x: x.to_vec(),
    })?;
    let b = DVector::from_column_slice(b);
    let norm = b.dot(&chol.solve(&b)).sqrt();
    if norm.is_finite() && norm < 1.0 {
        Ok(norm)
    } else {
        Err(Error::RandersConvexity { norm, x: x.to_vec() })
    }
}

impl FinslerMetric {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::InvalidPoint(format!(
                "point has dimension {} but the metric has dimension {}",
                p.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    fn check_positive(&self, value: f64, p: &ChartPoint) -> Result<()> {
        if value > 0.0 && value.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveL {
                value,
                x: p.x().to_vec(),
                y: p.y().to_vec(),
            })
        }
    }

    /// Jet of `L` at `p`, truncated at `order`.
    pub fn eval_jet(&self, p: &ChartPoint, order: usize) -> Result<Jet> {
        self.check_point(p)?;
        let seeds = seed_variables(p, order)?;
        let n = self.dim;
        let l = match &self.structure {
            Structure::Quadratic { a } => quadratic_jet(a, &seeds)?.0.sqrt()?,
            Structure::Randers { a, b } => {
                let (quad, a_values) = quadratic_jet(a, &seeds)?;
                let mut linear = Jet::zero(2 * n, order);
                let mut b_values = Vec::with_capacity(n);
                for (i, bi) in b.iter().enumerate() {
                    let bi = bi.eval_jet(&seeds)?;
                    b_values.push(bi.value());
                    linear += &(&bi * &seeds[n + i]);
                }
                randers_norm(&a_values, &b_values, p.x())?;
                quad.sqrt()? + linear
            }
            Structure::Direct(e) => e.eval_jet(&seeds)?,
        };
        self.check_positive(l.value(), p)?;
        Ok(l)
    }

    /// Plain evaluation of `L` at `p`. Shares no code with the jet path
    /// beyond the expression tree walk.
    pub fn eval(&self, p: &ChartPoint) -> Result<f64> {
        self.check_point(p)?;
        let (x, y) = (p.x(), p.y());
        let n = self.dim;
        let quad = |a: &[Vec<Expr>]| -> Result<(f64, Vec<Vec<f64>>)> {
            let mut values = vec![vec![0.0; n]; n];
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    values[i][j] = a[i][j].eval_f64(x, y)?;
                    sum += values[i][j] * y[i] * y[j];
                }
            }
            Ok((sum, values))
        };
        let sqrt = |v: f64| {
            if v > 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::Domain { op: "sqrt", value: v })
            }
        };
        let l = match &self.structure {
            Structure::Quadratic { a } => sqrt(quad(a)?.0)?,
            Structure::Randers { a, b } => {
                let (q, a_values) = quad(a)?;
                let b_values = b.iter().map(|e| e.eval_f64(x, y)).collect::<Result<Vec<_>>>()?;
                randers_norm(&a_values, &b_values, x)?;
                sqrt(q)? + b_values.iter().zip(y).map(|(bi, yi)| bi * yi).sum::<f64>()
            }
            Structure::Direct(e) => e.eval_f64(x, y)?,
        };
        self.check_positive(l, p)?;
        Ok(l)
    }
}

/// Outcome of a positive 1-homogeneity probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityCheck {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|L(x, λy) − λ L(x, y)|` against `1e-9 · max(1, λL)`.
pub fn verify_homogeneity(m: &FinslerMetric, p: &ChartPoint, lambda: f64) -> Result<HomogeneityCheck> {
    assert!(lambda > 0.0 && lambda != 1.0, "lambda must be positive and different from 1");
    let l = m.eval(p)?;
    let scaled = m.eval(&p.scaled_fiber(lambda)?)?;
    let residual = (scaled - lambda * l).abs();
    let tolerance = 1e-9 * (lambda * l).max(1.0);
    Ok(HomogeneityCheck {
        residual,
        tolerance,
        passed: residual <= tolerance,
    })
}
