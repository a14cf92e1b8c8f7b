//! Serialized point snapshots.
//!
//! Index labels in every output are 1-based; components are nested
//! outermost index first.

use std::fmt::Write as _;

use finsler_core::tensor::index_tuples;
use finsler_core::{TensorValue, Variance};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointJson {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub object: String,
    pub connection: Option<String>,
    pub point: PointJson,
    pub signature: Vec<Variance>,
    pub components: Value,
}

fn nest(components: &[f64], dim: usize, rank: usize) -> Value {
    if rank == 0 {
        return Value::from(components[0]);
    }
    let stride = components.len() / dim;
    Value::Array(
        components
            .chunks(stride)
            .map(|chunk| if rank == 1 { Value::from(chunk[0]) } else { nest(chunk, dim, rank - 1) })
            .collect(),
    )
}

impl TensorJson {
    pub fn new(object: &str, connection: Option<&str>, t: &TensorValue) -> Self {
        Self {
            object: object.to_string(),
            connection: connection.map(str::to_string),
            point: PointJson {
                x: t.point.x().to_vec(),
                y: t.point.y().to_vec(),
            },
            signature: t.signature.clone(),
            components: nest(&t.components, t.dim, t.rank()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}

/// `1,2,3` style label of a 0-based index tuple.
pub fn label(index: &[usize]) -> String {
    index.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

pub fn format_point(t: &TensorValue) -> String {
    let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
    format!("x = ({}), y = ({})", join(t.point.x()), join(t.point.y()))
}

pub fn render_tensor_text(object: &str, connection: Option<&str>, t: &TensorValue) -> String {
    let mut out = String::new();
    let sig: String = t
        .signature
        .iter()
        .map(|v| match v {
            Variance::Up => 'u',
            Variance::Down => 'd',
        })
        .collect();
    let _ = write!(out, "{object}");
    if let Some(c) = connection {
        let _ = write!(out, " ({c})");
    }
    let _ = writeln!(out, " at {}  signature [{sig}]", format_point(t));
    for (idx, value) in index_tuples(t.rank(), t.dim).zip(&t.components) {
        let _ = writeln!(out, "{object}[{}] = {value:.15e}", label(&idx));
    }
    out
}
