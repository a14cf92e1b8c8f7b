//! Energy, metric tensor, Cartan tensor, formal Christoffel symbols, the
//! canonical spray with its Barthel and Berwald coefficients, and the
//! horizontal frame `δ_i = ∂_i − G^h_i ∂̇_h`.
//!
//! Everything is computed inside jet algebra from a single jet of the energy
//! `E = L²/2`, so every ∂̇- or δ-derivative of a derived object is exact up to
//! rounding. Each derivative shortens the jet by one order; with the energy
//! at [`GEOMETRY_ORDER`] the orders come out as
//!
//! | object | order |
//! |---|---|
//! | `g_ij`, `g^ij` | 4 |
//! | `C_ijk`, `C^h_ij`, `γ^h_ij`, `G^h` | 3 |
//! | `G^h_i`, `Γ^h_ij` | 2 |
//! | `G^h_ij` | 1 |

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::{seed_variables, ChartPoint, Jet, GEOMETRY_ORDER};
use crate::metric::FinslerMetric;
use crate::tensor::{signature, TensorField, TensorValue};

/// Jet of `E = L²/2` at `p`.
pub fn energy(m: &FinslerMetric, p: &ChartPoint, order: usize) -> Result<Jet> {
    let l = m.eval_jet(p, order)?;
    Ok((&l * &l).scale(0.5))
}

#[derive(Debug, Clone)]
pub struct MetricTensorValue {
    pub g: TensorValue,
    pub g_inv: TensorValue,
    pub point: ChartPoint,
}

#[derive(Debug, Clone)]
pub struct CartanTensorValue {
    /// `C_ijk`
    pub c_low: TensorValue,
    /// `C^h_ij`
    pub c_up: TensorValue,
    pub point: ChartPoint,
}

#[derive(Debug, Clone)]
pub struct SprayValue {
    /// `G^h`
    pub spray: TensorValue,
    /// `G^h_i`, row `h`, column `i`
    pub barthel: TensorValue,
    /// `G^h_ij`
    pub berwald: TensorValue,
    pub point: ChartPoint,
}

/// The horizontal frame adapted to a nonlinear connection `N^h_i`.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    nonlinear: TensorField,
}

impl AdaptedFrame {
    pub fn new(nonlinear: TensorField) -> Self {
        Self { nonlinear }
    }

    pub fn nonlinear(&self) -> &TensorField {
        &self.nonlinear
    }

    /// `δ_i f = ∂_i f − N^h_i ∂̇_h f`
    pub fn delta(&self, f: &Jet, i: usize) -> Result<Jet> {
        let n = self.nonlinear.dim();
        let mut out = f.derivative(i)?;
        for h in 0..n {
            out -= &(self.nonlinear.at(&[h, i]) * &f.derivative(n + h)?);
        }
        Ok(out)
    }

    /// `δ_k A`, with `k` appended as a new last (lower) index.
    pub fn delta_field(&self, a: &TensorField) -> Result<TensorField> {
        let mut sig = a.signature().to_vec();
        sig.push(crate::tensor::Variance::Down);
        let rank = a.rank();
        TensorField::try_from_index_fn(sig, a.dim(), |idx| self.delta(a.at(&idx[..rank]), idx[rank]))
    }

    /// `∂̇_k A`, with `k` appended as a new last (lower) index.
    pub fn vertical_field(&self, a: &TensorField) -> Result<TensorField> {
        vertical_field(a)
    }
}

/// `∂̇_k A`, with `k` appended as a new last (lower) index.
pub fn vertical_field(a: &TensorField) -> Result<TensorField> {
    let mut sig = a.signature().to_vec();
    sig.push(crate::tensor::Variance::Down);
    let rank = a.rank();
    let n = a.dim();
    TensorField::try_from_index_fn(sig, n, |idx| a.at(&idx[..rank]).derivative(n + idx[rank]))
}

/// Invert a symmetric positive-definite matrix of jets. The value part is
/// inverted through Cholesky; the nilpotent remainder by the finite Neumann
/// series `(A0 + H)^-1 = Σ (−A0^-1 H)^m A0^-1`.
fn invert_spd(a: &TensorField, p: &ChartPoint) -> Result<TensorField> {
    let n = a.dim();
    let order = a.order();
    let nvars = 2 * n;
    let a0 = DMatrix::from_fn(n, n, |i, j| a.at(&[i, j]).value());
    let chol = a0.cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        x: p.x().to_vec(),
        y: p.y().to_vec(),
    })?;
    let inv0 = chol.inverse();
    let inv0_jet = |i: usize, j: usize| Jet::constant(nvars, order, inv0[(i, j)]);

    // A0^-1 H with H = A − A0.
    let h = a.map(|c| c.add_scalar(-c.value()));
    let step: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(Jet::zero(nvars, order), |acc, k| acc + h.at(&[k, j]).scale(inv0[(i, k)]))
                })
                .collect()
        })
        .collect();

    let mut x: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| inv0_jet(i, j)).collect()).collect();
    for _ in 0..order {
        let next = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = inv0_jet(i, j);
                        for k in 0..n {
                            acc -= &(&step[i][k] * &x[k][j]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        x = next;
    }
    Ok(TensorField::from_index_fn(signature("uu"), n, |idx| x[idx[0]][idx[1]].clone()))
}

/// Contract `½ g^{hl} (A_lij)` where `lower(l, i, j)` supplies the bracket.
fn raise_first(
    g_inv: &TensorField,
    n: usize,
    mut lower: impl FnMut(usize, usize, usize) -> Result<Jet>,
) -> Result<TensorField> {
    let mut bracket = Vec::with_capacity(n * n * n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                bracket.push(lower(l, i, j)?);
            }
        }
    }
    TensorField::try_from_index_fn(signature("udd"), n, |idx| {
        let (h, i, j) = (idx[0], idx[1], idx[2]);
        let mut acc: Option<Jet> = None;
        for l in 0..n {
            let term = g_inv.at(&[h, l]) * &bracket[(l * n + i) * n + j];
            acc = Some(match acc {
                Some(a) => a + term,
                None => term,
            });
        }
        Ok(acc.expect("n >= 1").scale(0.5))
    })
}

/// All jet-valued fundamental objects at one chart point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: ChartPoint,
    pub energy: Jet,
    /// `g_ij`
    pub g: TensorField,
    /// `g^ij`
    pub g_inv: TensorField,
    /// `C_ijk = ½ ∂̇_k g_ij`
    pub cartan_low: TensorField,
    /// `C^h_ij = g^hl C_lij`
    pub cartan: TensorField,
    /// `γ^h_ij`
    pub gamma: TensorField,
    /// `G^h = ½ γ^h_ij y^i y^j`
    pub spray: TensorField,
    /// `G^h_i = ∂̇_i G^h`
    pub barthel: TensorField,
    /// `G^h_ij = ∂̇_j G^h_i`
    pub berwald: TensorField,
    /// `Γ^h_ij`, the δ-Christoffel symbols of `g`
    pub cartan_gamma: TensorField,
    pub frame: AdaptedFrame,
}

impl PointGeometry {
    pub fn new(m: &FinslerMetric, p: &ChartPoint) -> Result<Self> {
        Self::with_order(m, p, GEOMETRY_ORDER)
    }

    /// Build from an energy jet of the given order (at least 5; 6 is needed
    /// for curvature of the Berwald-type connections).
    pub fn with_order(m: &FinslerMetric, p: &ChartPoint, order: usize) -> Result<Self> {
        assert!(order >= 5, "geometry needs at least five derivatives of E");
        let n = m.dim();
        let energy = energy(m, p, order)?;

        let de: Vec<Jet> = (0..n).map(|i| energy.derivative(n + i)).collect::<Result<_>>()?;
        let g = TensorField::try_from_index_fn(signature("dd"), n, |idx| de[idx[0]].derivative(n + idx[1]))?;
        let g_inv = invert_spd(&g, p)?;

        // ∂_v g_ij for every seed variable v.
        let dg: Vec<TensorField> = (0..2 * n).map(|v| g.partial(v)).collect::<Result<_>>()?;

        let cartan_low = TensorField::from_index_fn(signature("ddd"), n, |idx| {
            dg[n + idx[2]].at(&[idx[0], idx[1]]).scale(0.5)
        });
        let cartan = raise_first(&g_inv, n, |l, i, j| Ok(dg[n + i].at(&[l, j]).clone()))?;
        let gamma = raise_first(&g_inv, n, |l, i, j| {
            Ok(dg[i].at(&[l, j]) + dg[j].at(&[i, l]) - dg[l].at(&[i, j]))
        })?;

        let seeds = seed_variables(p, gamma.order())?;
        let spray = TensorField::try_from_index_fn(signature("u"), n, |idx| {
            let h = idx[0];
            let mut acc = Jet::zero(2 * n, gamma.order());
            for i in 0..n {
                for j in 0..n {
                    acc += &(&(gamma.at(&[h, i, j]) * &seeds[n + i]) * &seeds[n + j]);
                }
            }
            Ok(acc.scale(0.5))
        })?;
        let barthel = TensorField::try_from_index_fn(signature("ud"), n, |idx| {
            spray.at(&[idx[0]]).derivative(n + idx[1])
        })?;
        let berwald = TensorField::try_from_index_fn(signature("udd"), n, |idx| {
            barthel.at(&[idx[0], idx[1]]).derivative(n + idx[2])
        })?;

        let frame = AdaptedFrame::new(barthel.clone());
        let delta_g = frame.delta_field(&g)?;
        let cartan_gamma = raise_first(&g_inv, n, |l, i, j| {
            Ok(delta_g.at(&[l, j, i]) + delta_g.at(&[i, l, j]) - delta_g.at(&[i, j, l]))
        })?;

        Ok(Self {
            point: p.clone(),
            energy,
            g,
            g_inv,
            cartan_low,
            cartan,
            gamma,
            spray,
            barthel,
            berwald,
            cartan_gamma,
            frame,
        })
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    /// The fundamental function as a jet, `L = sqrt(2E)`.
    pub fn fundamental(&self) -> Result<Jet> {
        self.energy.scale(2.0).sqrt()
    }

    pub fn metric_tensor(&self) -> MetricTensorValue {
        MetricTensorValue {
            g: self.g.value(&self.point),
            g_inv: self.g_inv.value(&self.point),
            point: self.point.clone(),
        }
    }

    pub fn cartan_tensor(&self) -> CartanTensorValue {
        CartanTensorValue {
            c_low: self.cartan_low.value(&self.point),
            c_up: self.cartan.value(&self.point),
            point: self.point.clone(),
        }
    }

    pub fn spray_value(&self) -> SprayValue {
        SprayValue {
            spray: self.spray.value(&self.point),
            barthel: self.barthel.value(&self.point),
            berwald: self.berwald.value(&self.point),
            point: self.point.clone(),
        }
    }
}

pub fn metric_tensor(m: &FinslerMetric, p: &ChartPoint) -> Result<MetricTensorValue> {
    Ok(PointGeometry::new(m, p)?.metric_tensor())
}

pub fn cartan_tensor(m: &FinslerMetric, p: &ChartPoint) -> Result<CartanTensorValue> {
    Ok(PointGeometry::new(m, p)?.cartan_tensor())
}

pub fn formal_christoffel(m: &FinslerMetric, p: &ChartPoint) -> Result<TensorValue> {
    Ok(PointGeometry::new(m, p)?.gamma.value(p))
}

pub fn canonical_spray(m: &FinslerMetric, p: &ChartPoint) -> Result<SprayValue> {
    Ok(PointGeometry::new(m, p)?.spray_value())
}

pub fn adapted_frame(m: &FinslerMetric, p: &ChartPoint) -> Result<AdaptedFrame> {
    Ok(PointGeometry::new(m, p)?.frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_metric, MetricSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn pt(x: &[f64], y: &[f64]) -> ChartPoint {
        ChartPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn geometry(spec: MetricSpec, p: &ChartPoint) -> PointGeometry {
        PointGeometry::new(&build_metric(&spec).unwrap(), p).unwrap()
    }

    #[test]
    fn energy_examples() {
        let e = build_metric(&MetricSpec::euclidean(2)).unwrap();
        assert_abs_diff_eq!(energy(&e, &pt(&[0.0, 0.0], &[3.0, 4.0]), 2).unwrap().value(), 12.5, epsilon = 1e-13);
        let r = build_metric(&MetricSpec::minkowski_randers()).unwrap();
        assert_abs_diff_eq!(energy(&r, &pt(&[0.0, 0.0], &[1.0, 0.0]), 2).unwrap().value(), 1.125, epsilon = 1e-14);
        let s = build_metric(&MetricSpec::sphere()).unwrap();
        assert_abs_diff_eq!(energy(&s, &pt(&[FRAC_PI_2, 0.0], &[0.0, 2.0]), 2).unwrap().value(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let g = geometry(MetricSpec::euclidean(3), &pt(&[0.1, 0.2, 0.3], &[1.0, -2.0, 0.5])).metric_tensor();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g.g.get(&[i, j]), d, epsilon = 1e-13);
                assert_abs_diff_eq!(g.g_inv.get(&[i, j]), d, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn riemannian_metric_ignores_fiber() {
        for y in [[1.0, 0.0], [0.3, -2.0]] {
            let g = geometry(MetricSpec::flat_diag41(), &pt(&[0.0, 0.0], &y)).metric_tensor();
            assert_abs_diff_eq!(g.g.get(&[0, 0]), 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.g.get(&[1, 1]), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.g.get(&[0, 1]), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.g_inv.get(&[0, 0]), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_jet_is_exact_to_truncation() {
        let geo = geometry(MetricSpec::randers_x(), &pt(&[0.4, -0.3], &[0.8, 1.1]));
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                let mut prod = Jet::zero(4, geo.g.order());
                for k in 0..n {
                    prod += &(geo.g.at(&[i, k]) * geo.g_inv.at(&[k, j]));
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod.value(), target, epsilon = 1e-12);
                assert!(prod.coeffs()[1..].iter().all(|c| c.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn indefinite_metric_rejected() {
        // L = sqrt(y1^2 + y2^2) - 0.9*y1^2/sqrt(y1^2+y2^2) is 1-homogeneous,
        // positive, but its fundamental tensor is not positive-definite near y = (1, 0).
        let spec = MetricSpec::expression("indef", 2, "sqrt(y1^2+y2^2) - 0.9*y2^2/sqrt(y1^2+y2^2)");
        let m = build_metric(&spec).unwrap();
        let err = PointGeometry::new(&m, &pt(&[0.0, 0.0], &[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn riemannian_cartan_vanishes() {
        let c = geometry(MetricSpec::sphere(), &pt(&[0.9, 0.1], &[0.4, 1.3])).cartan_tensor();
        assert!(c.c_low.max_abs() < 1e-12);
        assert!(c.c_up.max_abs() < 1e-12);
    }

    #[test]
    fn sphere_christoffel_and_spray() {
        let p = pt(&[FRAC_PI_4, 0.0], &[0.0, 1.0]);
        let geo = geometry(MetricSpec::sphere(), &p);
        let gamma = geo.gamma.value(&p);
        assert_abs_diff_eq!(gamma.get(&[0, 1, 1]), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma.get(&[1, 0, 1]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma.get(&[1, 1, 0]), 1.0, epsilon = 1e-12);
        let s = geo.spray_value();
        assert_abs_diff_eq!(s.spray.get(&[0]), -0.25, epsilon = 1e-12);
        // Riemannian: G^h_ij = γ^h_ij
        assert!(s.berwald.max_abs_diff(&gamma) < 1e-11);
    }

    #[test]
    fn minkowski_randers_has_flat_spray() {
        let p = pt(&[0.3, 0.2], &[1.0, 0.4]);
        let geo = geometry(MetricSpec::minkowski_randers(), &p);
        let s = geo.spray_value();
        assert!(s.spray.max_abs() < 1e-13);
        assert!(s.barthel.max_abs() < 1e-13);
        assert!(s.berwald.max_abs() < 1e-13);
        assert!(geo.gamma.value(&p).max_abs() < 1e-13);
        assert!(geo.cartan_tensor().c_low.max_abs() > 1e-3);
    }

    #[test]
    fn delta_kills_energy() {
        let p = pt(&[0.7, -0.2], &[0.6, 1.4]);
        for spec in [MetricSpec::sphere(), MetricSpec::randers_x(), MetricSpec::minkowski_randers()] {
            let geo = geometry(spec, &p);
            for i in 0..2 {
                assert!(geo.frame.delta(&geo.energy, i).unwrap().value().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn delta_of_base_function_is_partial() {
        let p = pt(&[0.7, -0.2], &[0.6, 1.4]);
        let geo = geometry(MetricSpec::randers_x(), &p);
        let seeds = seed_variables(&p, 3).unwrap();
        let f = (&seeds[0] * &seeds[1]).sin();
        for i in 0..2 {
            let d = geo.frame.delta(&f, i).unwrap();
            assert_abs_diff_eq!(d.value(), f.first(i).unwrap(), epsilon = 1e-14);
        }
    }
}
