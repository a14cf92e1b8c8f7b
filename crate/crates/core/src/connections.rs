//! The four canonical Finsler connections as coefficient triples
//! `(F^h_ij, N^h_i, C^h_ij)`, and the two processes relating them: the
//! C-process drops the vertical part, the P¹-process adds the (v)hv-torsion
//! `P^h_ij = C^h_ij|0` to the horizontal part.
//!
//! ```text
//!             C-process
//!   Cartan  ------------>  Chern
//!     |                      |
//!  P¹ |                      | P¹
//!     v                      v
//!  Hashiguchi ---------->  Berwald
//!             C-process
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::calculus::hv_torsion_field;
use crate::error::{Error, Result};
use crate::geometry::{AdaptedFrame, PointGeometry};
use crate::jets::ChartPoint;
use crate::metric::FinslerMetric;
use crate::tensor::{signature, TensorField, TensorValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionName {
    Cartan,
    Chern,
    Hashiguchi,
    Berwald,
    Custom,
}

impl ConnectionName {
    pub const CANONICAL: [ConnectionName; 4] = [
        ConnectionName::Cartan,
        ConnectionName::Chern,
        ConnectionName::Hashiguchi,
        ConnectionName::Berwald,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConnectionName::Cartan => "cartan",
            ConnectionName::Chern => "chern",
            ConnectionName::Hashiguchi => "hashiguchi",
            ConnectionName::Berwald => "berwald",
            ConnectionName::Custom => "custom",
        }
    }
}

impl fmt::Display for ConnectionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConnectionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cartan" => ConnectionName::Cartan,
            "chern" | "rund" => ConnectionName::Chern,
            "hashiguchi" => ConnectionName::Hashiguchi,
            "berwald" => ConnectionName::Berwald,
            other => {
                return Err(Error::Spec(format!(
                    "unknown connection `{other}` (expected cartan, chern, hashiguchi or berwald)"
                )))
            }
        })
    }
}

/// A Finsler connection `(F^h_ij, N^h_i, C^h_ij)` known through jets of its
/// coefficients at a base point.
#[derive(Debug, Clone)]
pub struct ConnectionTriple {
    name: ConnectionName,
    f: TensorField,
    n: TensorField,
    c: TensorField,
}

/// Point snapshot of a triple.
#[derive(Debug, Clone)]
pub struct TripleValue {
    pub name: ConnectionName,
    pub f: TensorValue,
    pub n: TensorValue,
    pub c: TensorValue,
}

impl TripleValue {
    /// Largest componentwise difference over all three parts.
    pub fn max_abs_diff(&self, other: &TripleValue) -> f64 {
        self.f
            .max_abs_diff(&other.f)
            .max(self.n.max_abs_diff(&other.n))
            .max(self.c.max_abs_diff(&other.c))
    }
}

fn check_shape(field: &TensorField, sig: &str, what: &str) -> Result<()> {
    if field.signature() != signature(sig).as_slice() {
        return Err(Error::Spec(format!(
            "{what} must have signature {sig}, got rank {}",
            field.rank()
        )));
    }
    Ok(())
}

impl ConnectionTriple {
    /// An arbitrary triple, for exercising the generic evaluators.
    pub fn custom(f: TensorField, n: TensorField, c: TensorField) -> Result<Self> {
        check_shape(&f, "udd", "F")?;
        check_shape(&n, "ud", "N")?;
        check_shape(&c, "udd", "C")?;
        if f.dim() != n.dim() || f.dim() != c.dim() {
            return Err(Error::Spec("coefficient dimensions differ".into()));
        }
        Ok(Self {
            name: ConnectionName::Custom,
            f,
            n,
            c,
        })
    }

    pub fn canonical(geo: &PointGeometry, name: ConnectionName) -> Result<Self> {
        let n = geo.dim();
        let zero_c = || TensorField::zeros(signature("udd"), n, geo.cartan.order());
        let (f, c) = match name {
            ConnectionName::Cartan => (geo.cartan_gamma.clone(), geo.cartan.clone()),
            ConnectionName::Chern => (geo.cartan_gamma.clone(), zero_c()),
            ConnectionName::Hashiguchi => (geo.berwald.clone(), geo.cartan.clone()),
            ConnectionName::Berwald => (geo.berwald.clone(), zero_c()),
            ConnectionName::Custom => {
                return Err(Error::Spec("custom triples are built with ConnectionTriple::custom".into()))
            }
        };
        Ok(Self {
            name,
            f,
            n: geo.barthel.clone(),
            c,
        })
    }

    pub fn name(&self) -> ConnectionName {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// Horizontal coefficients `F^h_ij`.
    pub fn f(&self) -> &TensorField {
        &self.f
    }

    /// Nonlinear coefficients `N^h_i`.
    pub fn n(&self) -> &TensorField {
        &self.n
    }

    /// Vertical coefficients `C^h_ij`.
    pub fn c(&self) -> &TensorField {
        &self.c
    }

    pub fn frame(&self) -> AdaptedFrame {
        AdaptedFrame::new(self.n.clone())
    }

    pub fn value(&self, point: &ChartPoint) -> TripleValue {
        TripleValue {
            name: self.name,
            f: self.f.value(point),
            n: self.n.value(point),
            c: self.c.value(point),
        }
    }
}

pub fn cartan_connection(m: &FinslerMetric, p: &ChartPoint) -> Result<ConnectionTriple> {
    ConnectionTriple::canonical(&PointGeometry::new(m, p)?, ConnectionName::Cartan)
}

pub fn chern_connection(m: &FinslerMetric, p: &ChartPoint) -> Result<ConnectionTriple> {
    ConnectionTriple::canonical(&PointGeometry::new(m, p)?, ConnectionName::Chern)
}

pub fn hashiguchi_connection(m: &FinslerMetric, p: &ChartPoint) -> Result<ConnectionTriple> {
    ConnectionTriple::canonical(&PointGeometry::new(m, p)?, ConnectionName::Hashiguchi)
}

pub fn berwald_connection(m: &FinslerMetric, p: &ChartPoint) -> Result<ConnectionTriple> {
    ConnectionTriple::canonical(&PointGeometry::new(m, p)?, ConnectionName::Berwald)
}

/// Cartan, Chern, Hashiguchi, Berwald, in that order.
pub fn canonical_triples(geo: &PointGeometry) -> Result<[ConnectionTriple; 4]> {
    Ok([
        ConnectionTriple::canonical(geo, ConnectionName::Cartan)?,
        ConnectionTriple::canonical(geo, ConnectionName::Chern)?,
        ConnectionTriple::canonical(geo, ConnectionName::Hashiguchi)?,
        ConnectionTriple::canonical(geo, ConnectionName::Berwald)?,
    ])
}

/// `(F, N, C) -> (F, N, 0)`.
pub fn c_process(t: &ConnectionTriple) -> ConnectionTriple {
    let name = match t.name {
        ConnectionName::Cartan | ConnectionName::Chern => ConnectionName::Chern,
        ConnectionName::Hashiguchi | ConnectionName::Berwald => ConnectionName::Berwald,
        ConnectionName::Custom => ConnectionName::Custom,
    };
    ConnectionTriple {
        name,
        f: t.f.clone(),
        n: t.n.clone(),
        c: t.c.map(|c| c.scale(0.0)),
    }
}

/// `(F, N, C) -> (F + P, N, C)` with `P^h_ij = C^h_ij|0` taken from the
/// Cartan data of `geo`. Only defined on the Cartan and Chern connections.
pub fn p1_process(t: &ConnectionTriple, geo: &PointGeometry) -> Result<ConnectionTriple> {
    let name = match t.name {
        ConnectionName::Cartan => ConnectionName::Hashiguchi,
        ConnectionName::Chern => ConnectionName::Berwald,
        other => {
            return Err(Error::Process(format!(
                "the P1-process applies to the Cartan and Chern connections, not {other}"
            )))
        }
    };
    let p_hat = hv_torsion_field(geo)?;
    Ok(ConnectionTriple {
        name,
        f: t.f.add(&p_hat),
        n: t.n.clone(),
        c: t.c.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_metric, MetricSpec};
    use std::f64::consts::FRAC_PI_4;

    fn geo(spec: MetricSpec, x: &[f64], y: &[f64]) -> PointGeometry {
        let m = build_metric(&spec).unwrap();
        PointGeometry::new(&m, &ChartPoint::new(x.to_vec(), y.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn euclidean_triples_vanish() {
        let g = geo(MetricSpec::euclidean(2), &[0.3, 0.1], &[1.0, 2.0]);
        for t in canonical_triples(&g).unwrap() {
            let v = t.value(&g.point);
            assert!(v.f.max_abs() < 1e-13 && v.n.max_abs() < 1e-13 && v.c.max_abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_cartan_is_levi_civita() {
        let g = geo(MetricSpec::sphere(), &[FRAC_PI_4, 0.0], &[0.3, 1.0]);
        let cartan = ConnectionTriple::canonical(&g, ConnectionName::Cartan).unwrap().value(&g.point);
        assert!((cartan.f.get(&[0, 1, 1]) + 0.5).abs() < 1e-12);
        assert!((cartan.f.get(&[1, 0, 1]) - 1.0).abs() < 1e-12);
        assert!(cartan.c.max_abs() < 1e-12);
    }

    #[test]
    fn chern_shares_cartan_horizontal_part() {
        let g = geo(MetricSpec::randers_x(), &[0.2, 0.5], &[1.0, -0.4]);
        let cartan = ConnectionTriple::canonical(&g, ConnectionName::Cartan).unwrap().value(&g.point);
        let chern = ConnectionTriple::canonical(&g, ConnectionName::Chern).unwrap().value(&g.point);
        assert_eq!(cartan.f, chern.f);
        assert_eq!(chern.c.max_abs(), 0.0);
    }

    #[test]
    fn minkowski_randers_hashiguchi() {
        let g = geo(MetricSpec::minkowski_randers(), &[0.2, 0.5], &[1.0, -0.4]);
        let h = ConnectionTriple::canonical(&g, ConnectionName::Hashiguchi).unwrap().value(&g.point);
        assert!(h.f.max_abs() < 1e-13);
        assert!(h.c.max_abs() > 1e-3);
    }

    #[test]
    fn processes_follow_the_diagram() {
        let g = geo(MetricSpec::randers_x(), &[0.2, 0.5], &[1.0, -0.4]);
        let [cartan, chern, hashiguchi, berwald] = canonical_triples(&g).unwrap();
        let p = &g.point;

        assert_eq!(c_process(&cartan).name(), ConnectionName::Chern);
        assert_eq!(c_process(&cartan).value(p).max_abs_diff(&chern.value(p)), 0.0);
        assert_eq!(c_process(&hashiguchi).value(p).max_abs_diff(&berwald.value(p)), 0.0);
        assert_eq!(c_process(&chern).value(p).max_abs_diff(&chern.value(p)), 0.0);

        let h = p1_process(&cartan, &g).unwrap();
        assert_eq!(h.name(), ConnectionName::Hashiguchi);
        assert!(h.value(p).max_abs_diff(&hashiguchi.value(p)) < 1e-9);
        let b = p1_process(&chern, &g).unwrap();
        assert!(b.value(p).max_abs_diff(&berwald.value(p)) < 1e-9);

        let via_c = p1_process(&c_process(&cartan), &g).unwrap();
        let via_p = c_process(&p1_process(&cartan, &g).unwrap());
        assert_eq!(via_c.name(), ConnectionName::Berwald);
        assert_eq!(via_p.name(), ConnectionName::Berwald);
        assert!(via_c.value(p).max_abs_diff(&berwald.value(p)) < 1e-9);
        assert!(via_p.value(p).max_abs_diff(&berwald.value(p)) < 1e-9);
    }

    #[test]
    fn p1_rejects_other_triples() {
        let g = geo(MetricSpec::randers_x(), &[0.2, 0.5], &[1.0, -0.4]);
        let [_, _, hashiguchi, berwald] = canonical_triples(&g).unwrap();
        assert!(matches!(p1_process(&hashiguchi, &g), Err(Error::Process(_))));
        assert!(matches!(p1_process(&berwald, &g), Err(Error::Process(_))));
        let custom = ConnectionTriple::custom(g.berwald.clone(), g.barthel.clone(), g.cartan.clone()).unwrap();
        assert!(matches!(p1_process(&custom, &g), Err(Error::Process(_))));
    }

    #[test]
    fn custom_shape_checked() {
        let g = geo(MetricSpec::randers_x(), &[0.2, 0.5], &[1.0, -0.4]);
        assert!(ConnectionTriple::custom(g.barthel.clone(), g.barthel.clone(), g.cartan.clone()).is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!("hashiguchi".parse::<ConnectionName>().unwrap(), ConnectionName::Hashiguchi);
        assert!("shen".parse::<ConnectionName>().is_err());
    }
}
