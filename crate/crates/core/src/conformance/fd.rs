//! Finite-difference oracle. Recomputes geometric objects from plain
//! evaluations of `L` with central differences and Richardson extrapolation;
//! nothing here touches the jet code.
//!
//! The spray is assembled as `G^h = ½ g^hl (y^k ∂_k ∂̇_l E − ∂_l E)`, which
//! needs only second derivatives of `E` and keeps the nested differences for
//! `G^h_i` and `G^h_ij` shallow.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::ChartPoint;
use crate::metric::FinslerMetric;
use crate::tensor::{signature, TensorValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleObject {
    G,
    Gamma,
    Spray,
    Barthel,
    CartanF,
    BerwaldF,
}

impl OracleObject {
    pub const ALL: [OracleObject; 6] = [
        OracleObject::G,
        OracleObject::Gamma,
        OracleObject::Spray,
        OracleObject::Barthel,
        OracleObject::CartanF,
        OracleObject::BerwaldF,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleObject::G => "g",
            OracleObject::Gamma => "gamma",
            OracleObject::Spray => "spray",
            OracleObject::Barthel => "barthel",
            OracleObject::CartanF => "cartan_F",
            OracleObject::BerwaldF => "berwald_F",
        }
    }
}

/// Step sizes and extrapolation depth. Steps along `y` are relative to `|y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdConfig {
    pub base_step: f64,
    pub fiber_step: f64,
    /// Number of Richardson refinements (step halvings) after the first
    /// central difference.
    pub richardson: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            base_step: 0.05,
            fiber_step: 0.05,
            richardson: 3,
        }
    }
}

type VecResult = Result<Vec<f64>>;

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in acc.iter_mut().zip(x) {
        *o += a * v;
    }
}

/// Richardson extrapolation for estimates with an even error expansion in
/// the step, given estimates at `h, h/2, h/4, ...`.
fn richardson(estimates: Vec<Vec<f64>>) -> Vec<f64> {
    let mut row = estimates;
    let mut factor = 4.0;
    while row.len() > 1 {
        row = row
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(fine, coarse)| fine + (fine - coarse) / (factor - 1.0))
                    .collect()
            })
            .collect();
        factor *= 4.0;
    }
    row.pop().expect("at least one estimate")
}

pub struct FdOracle<'a> {
    metric: &'a FinslerMetric,
    cfg: FdConfig,
}

impl<'a> FdOracle<'a> {
    pub fn new(metric: &'a FinslerMetric, cfg: FdConfig) -> Self {
        Self { metric, cfg }
    }

    fn step(&self, p: &ChartPoint, var: usize) -> f64 {
        let n = p.dim();
        if var < n {
            self.cfg.base_step
        } else {
            self.cfg.fiber_step * p.y().iter().map(|c| c * c).sum::<f64>().sqrt()
        }
    }

    fn shifted(&self, p: &ChartPoint, moves: &[(usize, f64)]) -> Result<ChartPoint> {
        let mut q = p.clone();
        for &(var, h) in moves {
            q = q.shifted(var, h)?;
        }
        Ok(q)
    }

    /// `∂f/∂(var)` at `p`.
    pub fn first<F>(&self, f: &F, p: &ChartPoint, var: usize) -> VecResult
    where
        F: Fn(&ChartPoint) -> VecResult,
    {
        let h0 = self.step(p, var);
        let mut estimates = Vec::with_capacity(self.cfg.richardson + 1);
        for level in 0..=self.cfg.richardson {
            let h = h0 / f64::powi(2.0, level as i32);
            let plus = f(&self.shifted(p, &[(var, h)])?)?;
            let minus = f(&self.shifted(p, &[(var, -h)])?)?;
            estimates.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        }
        Ok(richardson(estimates))
    }

    /// `∂²f/∂(u)∂(v)` at `p`; `center` is `f(p)` when already known.
    pub fn second<F>(&self, f: &F, p: &ChartPoint, u: usize, v: usize, center: Option<&[f64]>) -> VecResult
    where
        F: Fn(&ChartPoint) -> VecResult,
    {
        let (hu0, hv0) = (self.step(p, u), self.step(p, v));
        let owned;
        let center = match center {
            Some(c) => c,
            None if u == v => {
                owned = f(p)?;
                &owned
            }
            None => &[][..],
        };
        let mut estimates = Vec::with_capacity(self.cfg.richardson + 1);
        for level in 0..=self.cfg.richardson {
            let scale = f64::powi(2.0, level as i32);
            let (hu, hv) = (hu0 / scale, hv0 / scale);
            if u == v {
                let plus = f(&self.shifted(p, &[(u, hu)])?)?;
                let minus = f(&self.shifted(p, &[(u, -hu)])?)?;
                let mut est = vec![0.0; plus.len()];
                axpy(&mut est, 1.0, &plus);
                axpy(&mut est, 1.0, &minus);
                axpy(&mut est, -2.0, center);
                est.iter_mut().for_each(|e| *e /= hu * hu);
                estimates.push(est);
            } else {
                let pp = f(&self.shifted(p, &[(u, hu), (v, hv)])?)?;
                let pm = f(&self.shifted(p, &[(u, hu), (v, -hv)])?)?;
                let mp = f(&self.shifted(p, &[(u, -hu), (v, hv)])?)?;
                let mm = f(&self.shifted(p, &[(u, -hu), (v, -hv)])?)?;
                let mut est = vec![0.0; pp.len()];
                axpy(&mut est, 1.0, &pp);
                axpy(&mut est, -1.0, &pm);
                axpy(&mut est, -1.0, &mp);
                axpy(&mut est, 1.0, &mm);
                est.iter_mut().for_each(|e| *e /= 4.0 * hu * hv);
                estimates.push(est);
            }
        }
        Ok(richardson(estimates))
    }

    /// Mixed partial `∂^α f` by nesting one- and two-step differences.
    pub fn partial<F>(&self, f: &F, p: &ChartPoint, alpha: &[usize]) -> VecResult
    where
        F: Fn(&ChartPoint) -> VecResult,
    {
        let Some(var) = alpha.iter().position(|&a| a > 0) else {
            return f(p);
        };
        let mut rest = alpha.to_vec();
        if alpha[var] >= 2 {
            rest[var] -= 2;
            let inner = |q: &ChartPoint| self.partial(f, q, &rest);
            self.second(&inner, p, var, var, None)
        } else {
            rest[var] -= 1;
            let inner = |q: &ChartPoint| self.partial(f, q, &rest);
            self.first(&inner, p, var)
        }
    }

    pub fn fundamental(&self, p: &ChartPoint) -> VecResult {
        Ok(vec![self.metric.eval(p)?])
    }

    pub fn energy(&self, p: &ChartPoint) -> VecResult {
        let l = self.metric.eval(p)?;
        Ok(vec![0.5 * l * l])
    }

    /// `g_ij`, row-major.
    pub fn metric_tensor(&self, p: &ChartPoint) -> VecResult {
        let n = p.dim();
        let e = |q: &ChartPoint| self.energy(q);
        let center = self.energy(p)?;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.second(&e, p, n + i, n + j, Some(&center))?[0];
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    fn inverse(&self, g: &[f64], p: &ChartPoint) -> Result<DMatrix<f64>> {
        let n = p.dim();
        DMatrix::from_row_slice(n, n, g)
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::NotPositiveDefinite {
                x: p.x().to_vec(),
                y: p.y().to_vec(),
            })
    }

    /// `γ^h_ij`, from x-differences of the finite-difference `g`.
    pub fn christoffel(&self, p: &ChartPoint) -> VecResult {
        let n = p.dim();
        let g = self.metric_tensor(p)?;
        let g_inv = self.inverse(&g, p)?;
        let metric = |q: &ChartPoint| self.metric_tensor(q);
        let dg = (0..n).map(|k| self.first(&metric, p, k)).collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; n * n * n];
        for h in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[(h * n + i) * n + j] = 0.5
                        * (0..n)
                            .map(|l| {
                                g_inv[(h, l)] * (dg[i][l * n + j] + dg[j][i * n + l] - dg[l][i * n + j])
                            })
                            .sum::<f64>();
                }
            }
        }
        Ok(out)
    }

    /// `G^h = ½ g^hl (y^k ∂_k ∂̇_l E − ∂_l E)`.
    pub fn spray(&self, p: &ChartPoint) -> VecResult {
        let n = p.dim();
        let e = |q: &ChartPoint| self.energy(q);
        let g = self.metric_tensor(p)?;
        let g_inv = self.inverse(&g, p)?;
        let mut bracket = vec![0.0; n];
        for (l, b) in bracket.iter_mut().enumerate() {
            *b = -self.first(&e, p, l)?[0];
            for k in 0..n {
                *b += p.y()[k] * self.second(&e, p, k, n + l, None)?[0];
            }
        }
        Ok((0..n)
            .map(|h| 0.5 * (0..n).map(|l| g_inv[(h, l)] * bracket[l]).sum::<f64>())
            .collect())
    }

    /// `G^h_i`, row `h`.
    pub fn barthel(&self, p: &ChartPoint) -> VecResult {
        let n = p.dim();
        let spray = |q: &ChartPoint| self.spray(q);
        let cols = (0..n).map(|i| self.first(&spray, p, n + i)).collect::<Result<Vec<_>>>()?;
        Ok((0..n * n).map(|k| cols[k % n][k / n]).collect())
    }

    /// `G^h_ij = ∂̇_i ∂̇_j G^h`.
    pub fn berwald(&self, p: &ChartPoint) -> VecResult {
        let n = p.dim();
        let spray = |q: &ChartPoint| self.spray(q);
        let center = self.spray(p)?;
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                let d = self.second(&spray, p, n + i, n + j, Some(&center))?;
                for h in 0..n {
                    out[(h * n + i) * n + j] = d[h];
                    out[(h * n + j) * n + i] = d[h];
                }
            }
        }
        Ok(out)
    }

    /// `Γ^h_ij` with `δ_i = ∂_i − G^h_i ∂̇_h` built from the oracle's own
    /// Barthel coefficients.
    pub fn cartan_f(&self, p: &ChartPoint) -> VecResult {
        let n = p.dim();
        let g = self.metric_tensor(p)?;
        let g_inv = self.inverse(&g, p)?;
        let nl = self.barthel(p)?;
        let metric = |q: &ChartPoint| self.metric_tensor(q);
        let dg = (0..2 * n).map(|v| self.first(&metric, p, v)).collect::<Result<Vec<_>>>()?;
        // δ_k g_ab
        let delta = |a: usize, b: usize, k: usize| {
            dg[k][a * n + b] - (0..n).map(|h| nl[h * n + k] * dg[n + h][a * n + b]).sum::<f64>()
        };
        let mut out = vec![0.0; n * n * n];
        for h in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[(h * n + i) * n + j] = 0.5
                        * (0..n)
                            .map(|l| g_inv[(h, l)] * (delta(l, j, i) + delta(i, l, j) - delta(i, j, l)))
                            .sum::<f64>();
                }
            }
        }
        Ok(out)
    }

    pub fn object(&self, p: &ChartPoint, object: OracleObject) -> Result<TensorValue> {
        let (sig, comps) = match object {
            OracleObject::G => ("dd", self.metric_tensor(p)?),
            OracleObject::Gamma => ("udd", self.christoffel(p)?),
            OracleObject::Spray => ("u", self.spray(p)?),
            OracleObject::Barthel => ("ud", self.barthel(p)?),
            OracleObject::CartanF => ("udd", self.cartan_f(p)?),
            OracleObject::BerwaldF => ("udd", self.berwald(p)?),
        };
        Ok(TensorValue::new(signature(sig), p.dim(), comps, p.clone()))
    }
}

pub fn fd_oracle(m: &FinslerMetric, p: &ChartPoint, object: OracleObject, cfg: FdConfig) -> Result<TensorValue> {
    FdOracle::new(m, cfg).object(p, object)
}

/// `|a − b|_∞ / max(1, |b|_∞)`.
pub fn relative_error(jet: &TensorValue, oracle: &TensorValue) -> f64 {
    jet.max_abs_diff(oracle) / oracle.max_abs().max(1.0)
}
