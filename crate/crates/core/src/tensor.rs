//! Component containers with an index signature.
//!
//! Components are stored row-major, first index outermost. Indices are
//! 0-based here; user-facing output relabels them from 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jets::{seed_variables, ChartPoint, Jet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variance::Up => "up",
            Variance::Down => "down",
        })
    }
}

pub fn signature(s: &str) -> Vec<Variance> {
    s.chars()
        .map(|c| match c {
            'u' => Variance::Up,
            'd' => Variance::Down,
            other => panic!("bad signature character {other:?}"),
        })
        .collect()
}

/// Flat position of `index` in a row-major array of side `dim`.
pub fn flat(index: &[usize], dim: usize) -> usize {
    index.iter().fold(0, |acc, &i| acc * dim + i)
}

/// All index tuples of the given rank, in storage order.
pub fn index_tuples(rank: usize, dim: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; rank];
        for slot in idx.iter_mut().rev() {
            *slot = k % dim;
            k /= dim;
        }
        idx
    })
}

/// A tensor field known through its jets at a base point.
#[derive(Debug, Clone)]
pub struct TensorField {
    signature: Vec<Variance>,
    dim: usize,
    components: Vec<Jet>,
}

impl TensorField {
    pub fn new(signature: Vec<Variance>, dim: usize, components: Vec<Jet>) -> Self {
        assert_eq!(
            components.len(),
            dim.pow(signature.len() as u32),
            "component count does not match signature"
        );
        Self {
            signature,
            dim,
            components,
        }
    }

    pub fn from_index_fn(signature: Vec<Variance>, dim: usize, mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        let components = index_tuples(signature.len(), dim).map(|idx| f(&idx)).collect();
        Self::new(signature, dim, components)
    }

    pub fn try_from_index_fn(
        signature: Vec<Variance>,
        dim: usize,
        mut f: impl FnMut(&[usize]) -> Result<Jet>,
    ) -> Result<Self> {
        let components = index_tuples(signature.len(), dim)
            .map(|idx| f(&idx))
            .collect::<Result<_>>()?;
        Ok(Self::new(signature, dim, components))
    }

    /// Evaluate a field given as jet algebra over the seeds
    /// `x1..xn, y1..yn` at `p`.
    pub fn from_seeds(
        signature: Vec<Variance>,
        p: &ChartPoint,
        order: usize,
        f: impl FnOnce(&[Jet]) -> Result<Vec<Jet>>,
    ) -> Result<Self> {
        let seeds = seed_variables(p, order)?;
        Ok(Self::new(signature, p.dim(), f(&seeds)?))
    }

    pub fn zeros(signature: Vec<Variance>, dim: usize, order: usize) -> Self {
        let count = dim.pow(signature.len() as u32);
        Self::new(signature, dim, vec![Jet::zero(2 * dim, order); count])
    }

    pub fn signature(&self) -> &[Variance] {
        &self.signature
    }

    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.components.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn components(&self) -> &[Jet] {
        &self.components
    }

    pub fn at(&self, index: &[usize]) -> &Jet {
        &self.components[flat(index, self.dim)]
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self::new(self.signature.clone(), self.dim, self.components.iter().map(f).collect())
    }

    /// Componentwise partial along seed variable `var`, as a field of the
    /// same signature (the differentiation index is not appended).
    pub fn partial(&self, var: usize) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.derivative(var))
            .collect::<Result<_>>()?;
        Ok(Self::new(self.signature.clone(), self.dim, components))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.signature, other.signature);
        Self::new(
            self.signature.clone(),
            self.dim,
            self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.signature, other.signature);
        Self::new(
            self.signature.clone(),
            self.dim,
            self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn value(&self, point: &ChartPoint) -> TensorValue {
        TensorValue::new(
            self.signature.clone(),
            self.dim,
            self.components.iter().map(Jet::value).collect(),
            point.clone(),
        )
    }
}

/// Point snapshot of a tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    pub signature: Vec<Variance>,
    pub dim: usize,
    pub components: Vec<f64>,
    pub point: ChartPoint,
}

impl TensorValue {
    pub fn new(signature: Vec<Variance>, dim: usize, components: Vec<f64>, point: ChartPoint) -> Self {
        assert_eq!(components.len(), dim.pow(signature.len() as u32));
        Self {
            signature,
            dim,
            components,
            point,
        }
    }

    pub fn zeros(signature: Vec<Variance>, dim: usize, point: ChartPoint) -> Self {
        let count = dim.pow(signature.len() as u32);
        Self::new(signature, dim, vec![0.0; count], point)
    }

    pub fn from_index_fn(
        signature: Vec<Variance>,
        point: &ChartPoint,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Self {
        let dim = point.dim();
        let components = index_tuples(signature.len(), dim).map(|idx| f(&idx)).collect();
        Self::new(signature, dim, components, point.clone())
    }

    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.components[flat(index, self.dim)]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &TensorValue) -> f64 {
        assert_eq!(self.components.len(), other.components.len(), "shape mismatch");
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sub(&self, other: &TensorValue) -> TensorValue {
        assert_eq!(self.components.len(), other.components.len(), "shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> TensorValue {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| *c *= factor);
        out
    }
}
