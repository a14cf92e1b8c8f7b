//! Truncated multivariate Taylor jets over the chart coordinates.
//!
//! A [`Jet`] carries every mixed partial derivative `∂^α f` of a scalar with
//! `|α| <= order`, stored in derivative normalization (the coefficient at `α`
//! is the derivative itself, not `∂^α f / α!`). Seed variables are laid out as
//! `x1..xn, y1..yn`, so variable `i` is `x^(i+1)` for `i < n` and
//! `y^(i-n+1)` otherwise.
//!
//! Multi-indices are enumerated graded by total degree, which makes the
//! coefficient vector of an order-`k` jet a prefix of the order-`k+1` one.
//! Truncation is a slice and a derivative is a gather.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Smallest admissible euclidean norm of the fiber coordinates.
pub const DEFAULT_Y_MIN: f64 = 1e-8;

/// Truncation order used for the jet of the energy. The deepest chain in the
/// curvature formulas (the δ- and ∂̇-derivatives of `G^h_ij`) needs six
/// derivatives of E.
pub const GEOMETRY_ORDER: usize = 6;

/// A point `(x, y)` of the slit tangent bundle over a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ChartPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::with_y_min(x, y, DEFAULT_Y_MIN)
    }

    pub fn with_y_min(x: Vec<f64>, y: Vec<f64>, y_min: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidPoint(format!(
                "x has {} coordinates but y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "dimension must be at least 2, got {}",
                x.len()
            )));
        }
        if x.iter().chain(&y).any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < y_min {
            return Err(Error::InvalidPoint(format!(
                "|y| = {norm:e} is below the slit-bundle threshold {y_min:e}"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Coordinate `var` in the seed layout `x1..xn, y1..yn`.
    pub fn coord(&self, var: usize) -> f64 {
        let n = self.dim();
        if var < n {
            self.x[var]
        } else {
            self.y[var - n]
        }
    }

    /// The point with seed coordinate `var` moved by `h`.
    pub fn shifted(&self, var: usize, h: f64) -> Result<Self> {
        let mut x = self.x.clone();
        let mut y = self.y.clone();
        let n = self.dim();
        if var < n {
            x[var] += h;
        } else {
            y[var - n] += h;
        }
        Self::new(x, y)
    }

    /// The point `(x, λy)`.
    pub fn scaled_fiber(&self, lambda: f64) -> Result<Self> {
        Self::new(self.x.clone(), self.y.iter().map(|c| c * lambda).collect())
    }
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x = {:?}, y = {:?}", self.x, self.y)
    }
}

/// Index tables for one `(nvars, order)` pair.
type LayoutCache = HashMap<(usize, usize), Arc<Layout>>;

struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// `len_by_order[k]` is the number of multi-indices with `|α| <= k`.
    len_by_order: Vec<usize>,
    /// `(out, lhs, rhs, binomial weight)` terms of the Leibniz rule.
    leibniz: Vec<(u32, u32, u32, f64)>,
    /// `shift[v][i]` is the position of `α_i + e_v`, for `|α_i| < order`.
    shift: Vec<Vec<u32>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if parts == 1 {
        prefix.push(total as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u8);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Self {
        let mut indices = Vec::new();
        let mut len_by_order = Vec::with_capacity(order + 1);
        for degree in 0..=order {
            compositions(degree, nvars, &mut Vec::with_capacity(nvars), &mut indices);
            len_by_order.push(indices.len());
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        let mut leibniz = Vec::new();
        let mut beta = vec![0u8; nvars];
        let mut rest = vec![0u8; nvars];
        for (out, alpha) in indices.iter().enumerate() {
            // Enumerate every β <= α componentwise.
            beta.iter_mut().for_each(|b| *b = 0);
            loop {
                let mut weight = 1.0;
                for v in 0..nvars {
                    rest[v] = alpha[v] - beta[v];
                    weight *= binomial(alpha[v] as usize, beta[v] as usize);
                }
                leibniz.push((out as u32, lookup[&beta] as u32, lookup[&rest] as u32, weight));
                let mut v = 0;
                while v < nvars {
                    if beta[v] < alpha[v] {
                        beta[v] += 1;
                        break;
                    }
                    beta[v] = 0;
                    v += 1;
                }
                if v == nvars {
                    break;
                }
            }
        }

        let inner = if order == 0 { 0 } else { len_by_order[order - 1] };
        let shift = (0..nvars)
            .map(|v| {
                indices[..inner]
                    .iter()
                    .map(|alpha| {
                        let mut up = alpha.clone();
                        up[v] += 1;
                        lookup[&up] as u32
                    })
                    .collect()
            })
            .collect();

        Self {
            nvars,
            order,
            indices,
            lookup,
            len_by_order,
            leibniz,
            shift,
        }
    }

    fn get(nvars: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<LayoutCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(layout) = cache.lock().expect("layout cache poisoned").get(&(nvars, order)) {
            return Arc::clone(layout);
        }
        // Built outside the lock; a racing duplicate build is harmless.
        let layout = Arc::new(Layout::build(nvars, order));
        Arc::clone(
            cache
                .lock()
                .expect("layout cache poisoned")
                .entry((nvars, order))
                .or_insert(layout),
        )
    }

    fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Number of multi-indices `α` over `nvars` variables with `|α| <= order`.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order).round() as usize
}

/// A truncated Taylor expansion of a scalar in `nvars` seed variables.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.nvars() == other.nvars() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        let layout = Layout::get(nvars, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Self { layout, coeffs }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, 0.0)
    }

    /// The seed jet of variable `var` at `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Self {
        assert!(var < nvars, "seed variable {var} out of range for {nvars} variables");
        let mut jet = Self::constant(nvars, order, value);
        if order >= 1 {
            let mut alpha = vec![0u8; nvars];
            alpha[var] = 1;
            let pos = jet.layout.lookup[&alpha];
            jet.coeffs[pos] = 1.0;
        }
        jet
    }

    /// Build a jet directly from derivative-normalized coefficients in the
    /// graded multi-index order reported by [`Jet::multi_indices`].
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Self {
        let layout = Layout::get(nvars, order);
        assert_eq!(coeffs.len(), layout.len(), "coefficient count mismatch");
        Self { layout, coeffs }
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> impl Iterator<Item = &[u8]> {
        self.layout.indices.iter().map(Vec::as_slice)
    }

    /// The mixed partial `∂^α f` at the seed point.
    pub fn extract(&self, alpha: &[usize]) -> Result<f64> {
        assert_eq!(alpha.len(), self.nvars(), "multi-index length mismatch");
        let total: usize = alpha.iter().sum();
        if total > self.order() {
            return Err(Error::Truncation {
                requested: total,
                order: self.order(),
            });
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        Ok(self.coeffs[self.layout.lookup[&key]])
    }

    /// First partial along seed variable `var` at the seed point.
    pub fn first(&self, var: usize) -> Result<f64> {
        let mut alpha = vec![0; self.nvars()];
        alpha[var] = 1;
        self.extract(&alpha)
    }

    /// The jet of `∂f/∂(var)`, one order shorter.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        assert!(var < self.nvars(), "variable {var} out of range");
        if self.order() == 0 {
            return Err(Error::Truncation {
                requested: 1,
                order: 0,
            });
        }
        let layout = Layout::get(self.nvars(), self.order() - 1);
        let coeffs = self.layout.shift[var]
            .iter()
            .map(|&pos| self.coeffs[pos as usize])
            .collect();
        Ok(Jet { layout, coeffs })
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = Layout::get(self.nvars(), order);
        let len = self.layout.len_by_order[order];
        Jet {
            layout,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    /// Evaluate the Taylor polynomial at `seed + delta`.
    pub fn taylor_eval(&self, delta: &[f64]) -> f64 {
        assert_eq!(delta.len(), self.nvars());
        self.layout
            .indices
            .iter()
            .zip(&self.coeffs)
            .map(|(alpha, &c)| {
                let mut term = c;
                for (&a, &d) in alpha.iter().zip(delta) {
                    for k in 1..=a as i32 {
                        term *= d / k as f64;
                    }
                }
                term
            })
            .sum()
    }

    fn aligned(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(self.nvars(), other.nvars(), "jets over different variable counts");
        let order = self.order().min(other.order());
        (self.truncate(order), other.truncate(order))
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        self.map(|c| c * factor)
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Truncated product via the binomial-weighted Leibniz rule.
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let (a, b) = if self.order() == other.order() {
            assert_eq!(self.nvars(), other.nvars(), "jets over different variable counts");
            (None, None)
        } else {
            let (a, b) = self.aligned(other);
            (Some(a), Some(b))
        };
        let a = a.as_ref().unwrap_or(self);
        let b = b.as_ref().unwrap_or(other);
        let mut coeffs = vec![0.0; a.coeffs.len()];
        for &(out, i, j, w) in &a.layout.leibniz {
            coeffs[out as usize] += w * a.coeffs[i as usize] * b.coeffs[j as usize];
        }
        Jet {
            layout: Arc::clone(&a.layout),
            coeffs,
        }
    }

    /// Compose a univariate function given its derivatives `f^(m)(a0)` for
    /// `m = 0..=order` at the value `a0` of `self`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert_eq!(derivs.len(), order + 1);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        // Horner on the nilpotent part: Σ f^(m)(a0)/m! h^m.
        let mut factorial = 1.0;
        for m in 1..=order {
            factorial *= m as f64;
        }
        let mut acc = Jet::constant(self.nvars(), order, derivs[order] / factorial);
        for m in (0..order).rev() {
            factorial /= (m + 1) as f64;
            acc = acc.mul_jet(&h).add_scalar(derivs[m] / factorial);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(Error::Domain { op: "div", value: a });
        }
        // d^m/da^m a^-1 = (-1)^m m! a^-(m+1)
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut d = 1.0 / a;
        for m in 0..=self.order() {
            derivs.push(d);
            d *= -((m + 1) as f64) / a;
        }
        Ok(self.compose(&derivs))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a.is_nan() || a <= 0.0 {
            return Err(Error::Domain { op: "sqrt", value: a });
        }
        self.powf_unchecked(0.5)
    }

    /// `self^r` for real `r`; requires a positive value unless `r` is a
    /// non-negative integer.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let a = self.value();
        if r.fract() == 0.0 && (0.0..=64.0).contains(&r) {
            return Ok(self.powi(r as u32));
        }
        if a.is_nan() || a <= 0.0 {
            return Err(Error::Domain { op: "pow", value: a });
        }
        self.powf_unchecked(r)
    }

    fn powf_unchecked(&self, r: f64) -> Result<Jet> {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut falling = 1.0;
        for m in 0..=self.order() {
            derivs.push(falling * a.powf(r - m as f64));
            falling *= r - m as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut acc = Jet::constant(self.nvars(), self.order(), 1.0);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a.is_nan() || a <= 0.0 {
            return Err(Error::Domain { op: "log", value: a });
        }
        // d^m/da^m ln a = (-1)^(m-1) (m-1)! a^-m
        let mut derivs = vec![a.ln()];
        let mut d = 1.0 / a;
        for m in 1..=self.order() {
            derivs.push(d);
            d *= -(m as f64) / a;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|m| cycle[m % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|m| cycle[m % 4]).collect::<Vec<_>>())
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Seed jets for `x1..xn, y1..yn` at `p`.
pub fn seed_variables(p: &ChartPoint, order: usize) -> Result<Vec<Jet>> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    let nvars = 2 * p.dim();
    Ok((0..nvars)
        .map(|v| Jet::variable(nvars, order, v, p.coord(v)))
        .collect())
}

/// Multi-index for the single partial `∂_var` (or `∂̇` when `var >= n`).
pub fn unit_index(nvars: usize, vars: &[usize]) -> Vec<usize> {
    let mut alpha = vec![0; nvars];
    for &v in vars {
        alpha[v] += 1;
    }
    alpha
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

fn zip_with(a: &Jet, b: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
    if a.order() == b.order() && a.nvars() == b.nvars() {
        return Jet {
            layout: Arc::clone(&a.layout),
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| f(x, y)).collect(),
        };
    }
    let (a, b) = a.aligned(b);
    zip_with(&a, &b, f)
}

forward_binop!(Add, add, |a, b| zip_with(a, b, |x, y| x + y));
forward_binop!(Sub, sub, |a, b| zip_with(a, b, |x, y| x - y));
forward_binop!(Mul, mul, |a, b| a.mul_jet(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = &*self - rhs;
    }
}
