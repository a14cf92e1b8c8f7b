//! Covariant derivatives, torsions and curvatures of Finsler connections.
//!
//! The curvature evaluator is generic: it only needs the values and first
//! partials (in all `2n` chart variables) of a triple's coefficients. The
//! same assembly is fed from jets here and from finite differences in the
//! conformance layer.
//!
//! Formulas, with `𝔘_jk A_jk = A_jk − A_kj`:
//!
//! ```text
//! R^i_jk   = δ_k N^i_j − δ_j N^i_k                        (v)h-torsion
//! P^i_jk   = ∂̇_k N^i_j − F^i_kj                           (v)hv-torsion
//! R^i_hjk  = 𝔘_jk{δ_k F^i_hj + F^m_hj F^i_mk} + C^i_hm R^m_jk
//! P^i_hjk  = ∂̇_k F^i_hj − C^i_hk|j + C^i_hm P^m_jk
//! S^i_hjk  = 𝔘_jk{∂̇_k C^i_hj + C^m_hj C^i_mk}
//! ```
//!
//! Curvature components are stored `[i][h][j][k]`.

use serde::Serialize;

use crate::connections::{canonical_triples, ConnectionTriple};
use crate::error::Result;
use crate::geometry::PointGeometry;
use crate::jets::{seed_variables, ChartPoint, Jet};
use crate::metric::FinslerMetric;
use crate::tensor::{flat, signature, TensorField, TensorValue, Variance};

fn covariant(
    a: &TensorField,
    derivative: TensorField,
    coefficients: &TensorField,
) -> TensorField {
    let rank = a.rank();
    let n = a.dim();
    let sig = derivative.signature().to_vec();
    TensorField::from_index_fn(sig, n, |idx| {
        let k = idx[rank];
        let mut acc = derivative.at(idx).clone();
        let mut moved = idx[..rank].to_vec();
        for (slot, variance) in a.signature().iter().enumerate() {
            let original = idx[slot];
            for m in 0..n {
                moved[slot] = m;
                let term = match variance {
                    Variance::Up => a.at(&moved) * coefficients.at(&[original, m, k]),
                    Variance::Down => -(a.at(&moved) * coefficients.at(&[m, original, k])),
                };
                acc += &term;
            }
            moved[slot] = original;
        }
        acc
    })
}

/// `A^i_j|k = δ_k A^i_j + A^m_j F^i_mk − A^i_m F^m_jk`, one correction per
/// index, with `δ` adapted to the triple's own `N`.
pub fn h_cov_derivative(a: &TensorField, t: &ConnectionTriple) -> Result<TensorField> {
    let delta = t.frame().delta_field(a)?;
    Ok(covariant(a, delta, t.f()))
}

/// `A^i_j|_k = ∂̇_k A^i_j + A^m_j C^i_mk − A^i_m C^m_jk`.
pub fn v_cov_derivative(a: &TensorField, t: &ConnectionTriple) -> Result<TensorField> {
    let vertical = crate::geometry::vertical_field(a)?;
    Ok(covariant(a, vertical, t.c()))
}

/// Contract the last index of `a` with `y`.
pub fn contract_with_fiber(a: &TensorField, p: &ChartPoint) -> Result<TensorField> {
    let n = a.dim();
    let rank = a.rank();
    let seeds = seed_variables(p, a.order().max(1))?;
    let sig = a.signature()[..rank - 1].to_vec();
    Ok(TensorField::from_index_fn(sig, n, |idx| {
        let mut full = idx.to_vec();
        full.push(0);
        let mut acc = Jet::zero(2 * n, a.order());
        for l in 0..n {
            full[rank - 1] = l;
            acc += &(a.at(&full) * &seeds[n + l]);
        }
        acc
    }))
}

/// `P^i_jk = C^i_jk|0 = C^i_jk|l y^l` with the Cartan h-covariant derivative.
pub fn hv_torsion_field(geo: &PointGeometry) -> Result<TensorField> {
    let cartan = ConnectionTriple::canonical(geo, crate::connections::ConnectionName::Cartan)?;
    let c_bar = h_cov_derivative(&geo.cartan, &cartan)?;
    contract_with_fiber(&c_bar, &geo.point)
}

pub fn hv_torsion(m: &FinslerMetric, p: &ChartPoint) -> Result<TensorValue> {
    Ok(hv_torsion_field(&PointGeometry::new(m, p)?)?.value(p))
}

/// `R^i_jk = δ_k G^i_j − δ_j G^i_k` from the Barthel connection.
pub fn h_torsion_field(geo: &PointGeometry) -> Result<TensorField> {
    let d = geo.frame.delta_field(&geo.barthel)?;
    Ok(TensorField::from_index_fn(signature("udd"), geo.dim(), |idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        d.at(&[i, j, k]) - d.at(&[i, k, j])
    }))
}

pub fn h_torsion(m: &FinslerMetric, p: &ChartPoint) -> Result<TensorValue> {
    Ok(h_torsion_field(&PointGeometry::new(m, p)?)?.value(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureKind {
    H,
    Hv,
    V,
}

/// Values and first partials of a triple's coefficients at one point.
/// `df[v]` is `∂f/∂(var v)` over the seed layout `x1..xn, y1..yn`.
#[derive(Debug, Clone)]
pub struct CoefficientData {
    pub dim: usize,
    pub f: Vec<f64>,
    pub n: Vec<f64>,
    pub c: Vec<f64>,
    pub df: Vec<Vec<f64>>,
    pub dn: Vec<Vec<f64>>,
    pub dc: Vec<Vec<f64>>,
}

fn values_and_partials(field: &TensorField) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let values = field.components().iter().map(Jet::value).collect();
    let nvars = 2 * field.dim();
    let partials = (0..nvars)
        .map(|v| field.components().iter().map(|c| c.first(v)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok((values, partials))
}

impl CoefficientData {
    pub fn from_triple(t: &ConnectionTriple) -> Result<Self> {
        let (f, df) = values_and_partials(t.f())?;
        let (n, dn) = values_and_partials(t.n())?;
        let (c, dc) = values_and_partials(t.c())?;
        Ok(Self {
            dim: t.dim(),
            f,
            n,
            c,
            df,
            dn,
            dc,
        })
    }
}

/// Torsions and curvatures of one connection at one point.
#[derive(Debug, Clone)]
pub struct TripleCurvatures {
    /// (v)h-torsion `R^i_jk`
    pub h_torsion: TensorValue,
    /// (v)hv-torsion `P^i_jk = ∂̇_k N^i_j − F^i_kj`
    pub hv_torsion: TensorValue,
    /// `C^i_hk|j`, stored `[i][h][k][j]`
    pub c_bar: TensorValue,
    pub h: TensorValue,
    pub hv: TensorValue,
    pub v: TensorValue,
}

impl TripleCurvatures {
    pub fn kind(&self, kind: CurvatureKind) -> &TensorValue {
        match kind {
            CurvatureKind::H => &self.h,
            CurvatureKind::Hv => &self.hv,
            CurvatureKind::V => &self.v,
        }
    }
}

/// Evaluate torsions and curvatures from coefficient values and partials.
pub fn assemble_curvatures(d: &CoefficientData, point: &ChartPoint) -> TripleCurvatures {
    let n = d.dim;
    let i3 = |a: usize, b: usize, c: usize| flat(&[a, b, c], n);
    let i2 = |a: usize, b: usize| flat(&[a, b], n);
    // δ_k of a coefficient array component.
    let delta = |values: &[Vec<f64>], pos: usize, k: usize| {
        let mut acc = values[k][pos];
        for m in 0..n {
            acc -= d.n[i2(m, k)] * values[n + m][pos];
        }
        acc
    };

    let h_torsion = TensorValue::from_index_fn(signature("udd"), point, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        delta(&d.dn, i2(i, j), k) - delta(&d.dn, i2(i, k), j)
    });
    let hv_torsion = TensorValue::from_index_fn(signature("udd"), point, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        d.dn[n + k][i2(i, j)] - d.f[i3(i, k, j)]
    });
    let c_bar = TensorValue::from_index_fn(signature("uddd"), point, |x| {
        let (i, h, k, j) = (x[0], x[1], x[2], x[3]);
        let mut acc = delta(&d.dc, i3(i, h, k), j);
        for m in 0..n {
            acc += d.c[i3(m, h, k)] * d.f[i3(i, m, j)];
            acc -= d.c[i3(i, m, k)] * d.f[i3(m, h, j)];
            acc -= d.c[i3(i, h, m)] * d.f[i3(m, k, j)];
        }
        acc
    });

    let h = TensorValue::from_index_fn(signature("uddd"), point, |x| {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        let mut acc = delta(&d.df, i3(i, h, j), k) - delta(&d.df, i3(i, h, k), j);
        for m in 0..n {
            acc += d.f[i3(m, h, j)] * d.f[i3(i, m, k)] - d.f[i3(m, h, k)] * d.f[i3(i, m, j)];
            acc += d.c[i3(i, h, m)] * h_torsion.get(&[m, j, k]);
        }
        acc
    });
    let hv = TensorValue::from_index_fn(signature("uddd"), point, |x| {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        let mut acc = d.df[n + k][i3(i, h, j)] - c_bar.get(&[i, h, k, j]);
        for m in 0..n {
            acc += d.c[i3(i, h, m)] * hv_torsion.get(&[m, j, k]);
        }
        acc
    });
    let v = TensorValue::from_index_fn(signature("uddd"), point, |x| {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        let mut acc = d.dc[n + k][i3(i, h, j)] - d.dc[n + j][i3(i, h, k)];
        for m in 0..n {
            acc += d.c[i3(m, h, j)] * d.c[i3(i, m, k)] - d.c[i3(m, h, k)] * d.c[i3(i, m, j)];
        }
        acc
    });

    TripleCurvatures {
        h_torsion,
        hv_torsion,
        c_bar,
        h,
        hv,
        v,
    }
}

pub fn triple_curvatures(t: &ConnectionTriple, p: &ChartPoint) -> Result<TripleCurvatures> {
    Ok(assemble_curvatures(&CoefficientData::from_triple(t)?, p))
}

pub fn curvature(t: &ConnectionTriple, kind: CurvatureKind, p: &ChartPoint) -> Result<TensorValue> {
    Ok(triple_curvatures(t, p)?.kind(kind).clone())
}

/// Max-abs residuals of the relations between the curvatures and torsions
/// of the four canonical connections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureRelations {
    /// `R♦^i_hjk − (R^i_hjk − C^i_hm R^m_jk)`
    pub chern_h: f64,
    /// `P♦^i_hjk − (P^i_hjk + C^i_hk|j − C^i_hm P^m_jk)`
    pub chern_hv: f64,
    /// `S*^i_hjk − S^i_hjk`
    pub hashiguchi_v: f64,
    /// Largest deviation of any connection's `R^i_jk` from Cartan's.
    pub h_torsion_spread: f64,
    /// `P♦^i_jk − P^i_jk`
    pub chern_hv_torsion: f64,
    /// `P*^i_jk`
    pub hashiguchi_hv_torsion: f64,
    /// `P°^i_jk`
    pub berwald_hv_torsion: f64,
}

impl CurvatureRelations {
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("chern_h", self.chern_h),
            ("chern_hv", self.chern_hv),
            ("hashiguchi_v", self.hashiguchi_v),
            ("h_torsion_spread", self.h_torsion_spread),
            ("chern_hv_torsion", self.chern_hv_torsion),
            ("hashiguchi_hv_torsion", self.hashiguchi_hv_torsion),
            ("berwald_hv_torsion", self.berwald_hv_torsion),
        ]
    }

    pub fn max(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}

pub fn curvature_relations_residuals(geo: &PointGeometry) -> Result<CurvatureRelations> {
    let p = &geo.point;
    let n = geo.dim();
    let triples = canonical_triples(geo)?;
    let [cartan, chern, hashiguchi, berwald] = triples
        .iter()
        .map(|t| triple_curvatures(t, p))
        .collect::<Result<Vec<_>>>()?
        .try_into()
        .expect("four triples");
    let c = geo.cartan.value(p);

    let mut chern_h: f64 = 0.0;
    let mut chern_hv: f64 = 0.0;
    for x in crate::tensor::index_tuples(4, n) {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        let mut c_r = 0.0;
        let mut c_p = 0.0;
        for m in 0..n {
            c_r += c.get(&[i, h, m]) * cartan.h_torsion.get(&[m, j, k]);
            c_p += c.get(&[i, h, m]) * cartan.hv_torsion.get(&[m, j, k]);
        }
        chern_h = chern_h.max((chern.h.get(&x) - (cartan.h.get(&x) - c_r)).abs());
        let rhs = cartan.hv.get(&x) + cartan.c_bar.get(&[i, h, k, j]) - c_p;
        chern_hv = chern_hv.max((chern.hv.get(&x) - rhs).abs());
    }

    let h_torsion_spread = [&chern, &hashiguchi, &berwald]
        .iter()
        .fold(0.0_f64, |acc, t| acc.max(t.h_torsion.max_abs_diff(&cartan.h_torsion)));

    Ok(CurvatureRelations {
        chern_h,
        chern_hv,
        hashiguchi_v: hashiguchi.v.max_abs_diff(&cartan.v),
        h_torsion_spread,
        chern_hv_torsion: chern.hv_torsion.max_abs_diff(&cartan.hv_torsion),
        hashiguchi_hv_torsion: hashiguchi.hv_torsion.max_abs(),
        berwald_hv_torsion: berwald.hv_torsion.max_abs(),
    })
}
