//! Closed-form values used as independent cross-checks.

use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::geometry::PointGeometry;
use crate::jets::ChartPoint;
use crate::metric::{Family, MetricSpec};
use crate::tensor::{signature, TensorValue};

/// Levi-Civita symbols of the round sphere `dx1² + sin²(x1) dx2²`.
pub fn sphere_christoffel(p: &ChartPoint) -> TensorValue {
    let (s, c) = p.x()[0].sin_cos();
    TensorValue::from_index_fn(signature("udd"), p, |x| match (x[0], x[1], x[2]) {
        (0, 1, 1) => -s * c,
        (1, 0, 1) | (1, 1, 0) => c / s,
        _ => 0.0,
    })
}

/// h-curvature of the round sphere in the convention of this crate:
/// `R^i_hjk = −(δ^i_j g_hk − δ^i_k g_hj)`.
pub fn sphere_h_curvature(p: &ChartPoint) -> TensorValue {
    let s = p.x()[0].sin();
    let g = |a: usize, b: usize| match (a, b) {
        (0, 0) => 1.0,
        (1, 1) => s * s,
        _ => 0.0,
    };
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    TensorValue::from_index_fn(signature("uddd"), p, |x| {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        -(delta(i, j) * g(h, k) - delta(i, k) * g(h, j))
    })
}

/// Riemannian metric values `a_ij(x)` of a Riemannian or Randers spec.
pub fn quadratic_part(spec: &MetricSpec, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = spec.dim;
    let rows = match &spec.family {
        Family::Riemannian { a } | Family::Randers { a, .. } => a,
        Family::Expression { .. } => return Err(Error::Spec("no quadratic part in an expression metric".into())),
    };
    let zeros = vec![0.0; n];
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter().enumerate() {
        for (k, text) in row.iter().enumerate() {
            let v = parse_expression(text, n)?.eval_f64(x, &zeros)?;
            a[i][i + k] = v;
            a[i + k][i] = v;
        }
    }
    Ok(a)
}

/// `g_ij = (L/α)(a_ij − ℓ_i ℓ_j) + (ℓ_i + b_i)(ℓ_j + b_j)` with
/// `α² = a_ij y^i y^j` and `ℓ_i = a_ij y^j / α`.
pub fn randers_metric_tensor(spec: &MetricSpec, p: &ChartPoint) -> Result<TensorValue> {
    let Family::Randers { b, .. } = &spec.family else {
        return Err(Error::Spec("not a Randers metric".into()));
    };
    let n = spec.dim;
    let (x, y) = (p.x(), p.y());
    let a = quadratic_part(spec, x)?;
    let zeros = vec![0.0; n];
    let b = b
        .iter()
        .map(|t| parse_expression(t, n)?.eval_f64(x, &zeros))
        .collect::<Result<Vec<_>>>()?;
    let ay: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * y[j]).sum()).collect();
    let alpha = ay.iter().zip(y).map(|(u, v)| u * v).sum::<f64>().sqrt();
    let ell: Vec<f64> = ay.iter().map(|v| v / alpha).collect();
    let l = alpha + b.iter().zip(y).map(|(u, v)| u * v).sum::<f64>();
    Ok(TensorValue::from_index_fn(signature("dd"), p, |ix| {
        let (i, j) = (ix[0], ix[1]);
        l / alpha * (a[i][j] - ell[i] * ell[j]) + (ell[i] + b[i]) * (ell[j] + b[j])
    }))
}

/// h-curvature of the Berwald connection as `∂̇_h R^i_jk`, stored
/// `[i][h][j][k]`.
pub fn berwald_h_from_torsion(geo: &PointGeometry) -> Result<TensorValue> {
    let n = geo.dim();
    let r = crate::calculus::h_torsion_field(geo)?;
    let comps = crate::tensor::index_tuples(4, n)
        .map(|x| r.at(&[x[0], x[2], x[3]]).first(n + x[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorValue::new(signature("uddd"), n, comps, geo.point.clone()))
}

/// `∂̇_k` of a `udd` coefficient field, stored `[i][h][j][k]`.
fn vertical_gradient(field: &crate::tensor::TensorField, p: &ChartPoint) -> Result<TensorValue> {
    let n = p.dim();
    let comps = crate::tensor::index_tuples(4, n)
        .map(|x| field.at(&[x[0], x[1], x[2]]).first(n + x[3]))
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorValue::new(signature("uddd"), n, comps, p.clone()))
}

/// hv-curvature of the Chern connection as `∂̇_k Γ^i_hj`.
pub fn chern_hv_from_gamma(geo: &PointGeometry) -> Result<TensorValue> {
    vertical_gradient(&geo.cartan_gamma, &geo.point)
}

/// hv-curvature of the Berwald connection as `G^i_hjk = ∂̇_k G^i_hj`.
pub fn berwald_hv_from_berwald(geo: &PointGeometry) -> Result<TensorValue> {
    vertical_gradient(&geo.berwald, &geo.point)
}

/// v-curvature of the Cartan connection as `C^m_hk C^i_mj − C^m_hj C^i_mk`.
pub fn cartan_v_from_cartan_tensor(geo: &PointGeometry) -> TensorValue {
    let n = geo.dim();
    let c = geo.cartan.value(&geo.point);
    TensorValue::from_index_fn(signature("uddd"), &geo.point, |x| {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        (0..n)
            .map(|m| c.get(&[m, h, k]) * c.get(&[i, m, j]) - c.get(&[m, h, j]) * c.get(&[i, m, k]))
            .sum()
    })
}
