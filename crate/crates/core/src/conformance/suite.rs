//! Seeded conformance suite over random points of a region.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_forms::{
    berwald_h_from_torsion, berwald_hv_from_berwald, cartan_v_from_cartan_tensor, chern_hv_from_gamma,
};
use super::fd::{relative_error, FdConfig, FdOracle, OracleObject};
use crate::calculus::{
    assemble_curvatures, curvature_relations_residuals, h_cov_derivative, hv_torsion_field, triple_curvatures,
    v_cov_derivative, CoefficientData, TripleCurvatures,
};
use crate::connections::{c_process, canonical_triples, p1_process, ConnectionName, ConnectionTriple};
use crate::error::{Error, Result};
use crate::geometry::{energy, PointGeometry};
use crate::jets::ChartPoint;
use crate::metric::{build_metric, verify_homogeneity, FinslerMetric, MetricSpec};
use crate::tensor::{index_tuples, signature, TensorValue};

/// Sampling region: a box for `x`, a radius band for `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x: Vec<[f64; 2]>,
    #[serde(default = "default_radius")]
    pub y_radius: [f64; 2],
}

fn default_radius() -> [f64; 2] {
    [0.5, 2.0]
}

impl Region {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            x: vec![[lo, hi]; dim],
            y_radius: default_radius(),
        }
    }

    /// Default region for a spec. Built-in sphere charts keep `x1` away
    /// from the poles.
    pub fn for_spec(spec: &MetricSpec) -> Self {
        let mut region = Self::cube(spec.dim, -1.0, 1.0);
        if matches!(spec.name.as_deref(), Some("sphere" | "randers-sphere")) {
            region.x[0] = [0.3, std::f64::consts::PI - 0.3];
        }
        region
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.x.len() != dim {
            return Err(Error::Spec(format!("region has {} x-intervals for dimension {dim}", self.x.len())));
        }
        let ordered = |[lo, hi]: [f64; 2]| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !self.x.iter().all(|&b| ordered(b)) || !ordered(self.y_radius) || self.y_radius[0] <= 0.0 {
            return Err(Error::Spec("region bounds must be finite, ordered, with a positive radius".into()));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<ChartPoint> {
        let uniform = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| if lo < hi { rng.gen_range(lo..hi) } else { lo };
        let x: Vec<f64> = self.x.iter().map(|&b| uniform(rng, b)).collect();
        let n = x.len();
        let direction = loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-2 && norm <= 1.0 {
                break v.into_iter().map(|c| c / norm).collect::<Vec<_>>();
            }
        };
        let r = uniform(rng, self.y_radius);
        ChartPoint::new(x, direction.into_iter().map(|c| c * r).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Identities that hold up to rounding.
    pub exact: f64,
    /// Identities that hold after several derivative and contraction steps.
    pub derived: f64,
    /// Relative agreement with the finite-difference oracle.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-9,
            derived: 1e-7,
            oracle: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub samples: usize,
    pub seed: u64,
    pub region: Region,
    pub tolerances: Tolerances,
    pub fd: FdConfig,
}

impl SuiteConfig {
    pub fn new(spec: &MetricSpec, samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            region: Region::for_spec(spec),
            tolerances: Tolerances::default(),
            fd: FdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Gate,
    Exact,
    Derived,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub anchor: String,
    pub tier: Tier,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Number of sample points the check applied to.
    pub points: usize,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Observations {
    pub max_cartan_tensor: f64,
    pub max_hv_torsion: f64,
    pub max_h_torsion: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub metric: String,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub attempts: usize,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckResult>,
    pub observations: Observations,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "metric {}  dim {}  samples {}  seed {}  attempts {}",
            self.metric, self.dim, self.samples, self.seed, self.attempts
        );
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}  {:<width$}  {:>10.3e}  tol {:.1e}  [{}]  {}",
                c.status.label(),
                c.name,
                c.max_residual,
                c.tolerance,
                c.points,
                c.anchor,
            );
        }
        let o = &self.observations;
        let _ = writeln!(
            out,
            "max |C| {:.3e}  max |P| {:.3e}  max |R| {:.3e}",
            o.max_cartan_tensor, o.max_hv_torsion, o.max_h_torsion
        );
        let _ = writeln!(out, "verdict {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

struct Measure {
    name: String,
    anchor: &'static str,
    tier: Tier,
    /// `None` when the check does not apply at this point.
    residual: Option<f64>,
}

#[derive(Default)]
struct Recorder {
    items: Vec<Measure>,
}

impl Recorder {
    fn push(&mut self, name: impl Into<String>, anchor: &'static str, tier: Tier, residual: Option<f64>) {
        self.items.push(Measure {
            name: name.into(),
            anchor,
            tier,
            residual,
        });
    }

    fn exact(&mut self, name: impl Into<String>, anchor: &'static str, r: f64) {
        self.push(name, anchor, Tier::Exact, Some(r));
    }

    fn derived(&mut self, name: impl Into<String>, anchor: &'static str, r: f64) {
        self.push(name, anchor, Tier::Derived, Some(r));
    }
}

struct PointOutcome {
    measures: Vec<Measure>,
    gate_passed: bool,
    observations: Observations,
}

const HOMOGENEITY_FACTORS: [f64; 3] = [0.5, 2.0, std::f64::consts::E];

fn conn_key(name: ConnectionName) -> &'static str {
    name.as_str()
}

fn max_over(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn lower_first(g: &TensorValue, a: &TensorValue) -> TensorValue {
    let n = g.dim;
    TensorValue::from_index_fn(signature("ddd"), &a.point, |x| {
        (0..n).map(|m| g.get(&[x[0], m]) * a.get(&[m, x[1], x[2]])).sum()
    })
}

fn antisymmetry(t: &TensorValue) -> f64 {
    let rank = t.rank();
    max_over(index_tuples(rank, t.dim).map(|x| {
        let mut swapped = x.clone();
        swapped.swap(rank - 2, rank - 1);
        (t.get(&x) + t.get(&swapped)).abs()
    }))
}

fn gate(m: &FinslerMetric, p: &ChartPoint, rec: &mut Recorder, tol: &Tolerances) -> Result<bool> {
    let mut homogeneity: f64 = 0.0;
    for lambda in HOMOGENEITY_FACTORS {
        let h = verify_homogeneity(m, p, lambda)?;
        homogeneity = homogeneity.max(h.residual / (h.tolerance / 1e-9));
    }
    rec.push("homogeneity", "L(x, λy) = λ L(x, y)", Tier::Gate, Some(homogeneity));

    let n = p.dim();
    let e = energy(m, p, 2)?;
    let hessian = DMatrix::from_fn(n, n, |i, j| {
        let mut alpha = vec![0; 2 * n];
        alpha[n + i] += 1;
        alpha[n + j] += 1;
        e.extract(&alpha).unwrap_or(f64::NAN)
    });
    let lambda_min = SymmetricEigen::new(hessian).eigenvalues.min();
    rec.push("strong_convexity", "g_ij positive definite (−λ_min < 0)", Tier::Gate, Some(-lambda_min));
    Ok(homogeneity <= tol.exact && lambda_min > 0.0)
}

fn fd_curvatures(m: &FinslerMetric, p: &ChartPoint, cfg: FdConfig) -> Result<Vec<TripleCurvatures>> {
    let n = p.dim();
    let sizes = [n * n * n, n * n, n * n * n];
    let coefficients = |q: &ChartPoint| -> Result<Vec<f64>> {
        let geo = PointGeometry::with_order(m, q, 5)?;
        let mut out = Vec::new();
        for t in canonical_triples(&geo)? {
            let v = t.value(q);
            out.extend_from_slice(&v.f.components);
            out.extend_from_slice(&v.n.components);
            out.extend_from_slice(&v.c.components);
        }
        Ok(out)
    };
    let oracle = FdOracle::new(m, cfg);
    let center = coefficients(p)?;
    let partials = (0..2 * n).map(|v| oracle.first(&coefficients, p, v)).collect::<Result<Vec<_>>>()?;
    let block = sizes.iter().sum::<usize>();
    Ok((0..4)
        .map(|t| {
            let base = t * block;
            let slice = |v: &[f64], part: usize| {
                let start = base + sizes[..part].iter().sum::<usize>();
                v[start..start + sizes[part]].to_vec()
            };
            let d = CoefficientData {
                dim: n,
                f: slice(&center, 0),
                n: slice(&center, 1),
                c: slice(&center, 2),
                df: partials.iter().map(|v| slice(v, 0)).collect(),
                dn: partials.iter().map(|v| slice(v, 1)).collect(),
                dc: partials.iter().map(|v| slice(v, 2)).collect(),
            };
            assemble_curvatures(&d, p)
        })
        .collect())
}

fn measure_point(m: &FinslerMetric, p: &ChartPoint, cfg: &SuiteConfig) -> Result<PointOutcome> {
    let tol = &cfg.tolerances;
    let mut rec = Recorder::default();
    m.eval(p)?;
    if !gate(m, p, &mut rec, tol)? {
        return Ok(PointOutcome {
            measures: rec.items,
            gate_passed: false,
            observations: Observations::default(),
        });
    }

    let geo = PointGeometry::new(m, p)?;
    let n = geo.dim();
    let y = p.y();
    let g = geo.g.value(p);
    let c_low = geo.cartan_low.value(p);
    let c_up = geo.cartan.value(p);
    let p_hat = hv_torsion_field(&geo)?.value(p);
    let spray = geo.spray.value(p);
    let barthel = geo.barthel.value(p);
    let berwald = geo.berwald.value(p);

    // Exact identities.
    let l = geo.fundamental()?;
    let euler_l = (0..n).map(|i| Ok(y[i] * l.first(n + i)?)).sum::<Result<f64>>()? - l.value();
    rec.exact("euler_fundamental", "y^i ∂L/∂y^i = L", euler_l.abs() / l.value().max(1.0));
    rec.exact(
        "cartan_symmetry",
        "C_ijk = C_jik = C_ikj",
        max_over(index_tuples(3, n).map(|x| {
            let (i, j, k) = (x[0], x[1], x[2]);
            (c_low.get(&x) - c_low.get(&[j, i, k])).abs().max((c_low.get(&x) - c_low.get(&[i, k, j])).abs())
        })),
    );
    rec.exact(
        "berwald_symmetry",
        "G^h_ij = G^h_ji",
        max_over(index_tuples(3, n).map(|x| (berwald.get(&x) - berwald.get(&[x[0], x[2], x[1]])).abs())),
    );

    let triples = canonical_triples(&geo)?;
    let curvatures = triples
        .iter()
        .map(|t| triple_curvatures(t, p))
        .collect::<Result<Vec<_>>>()?;
    rec.exact(
        "curvature_antisymmetry",
        "R^i_jk, R^i_hjk, S^i_hjk antisymmetric in j, k",
        max_over(
            curvatures
                .iter()
                .flat_map(|c| [antisymmetry(&c.h_torsion), antisymmetry(&c.h), antisymmetry(&c.v)]),
        ),
    );

    // Derived identities.
    let quad = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| g.get(&[i, j]) * y[i] * y[j])
        .sum::<f64>();
    rec.derived(
        "euler_metric",
        "g_ij y^i y^j = L^2",
        (quad - l.value() * l.value()).abs() / (l.value() * l.value()).max(1.0),
    );
    rec.derived(
        "cartan_fiber",
        "C_ijk y^k = 0",
        max_over(index_tuples(2, n).map(|x| (0..n).map(|k| c_low.get(&[x[0], x[1], k]) * y[k]).sum::<f64>().abs())),
    );
    rec.derived(
        "energy_horizontal",
        "δ_i E = 0",
        max_over((0..n).map(|i| geo.frame.delta(&geo.energy, i).map(|d| d.value().abs()).unwrap_or(f64::NAN))),
    );
    rec.derived(
        "barthel_homogeneity",
        "G^h_i y^i = 2 G^h, G^h_ij y^j = G^h_i",
        max_over((0..n).flat_map(|h| {
            let first = ((0..n).map(|i| barthel.get(&[h, i]) * y[i]).sum::<f64>() - 2.0 * spray.get(&[h])).abs();
            let second = (0..n).map(|i| {
                ((0..n).map(|j| berwald.get(&[h, i, j]) * y[j]).sum::<f64>() - barthel.get(&[h, i])).abs()
            });
            std::iter::once(first).chain(second.collect::<Vec<_>>())
        })),
    );
    let cartan_f = geo.cartan_gamma.value(p);
    rec.derived(
        "berwald_identity",
        "G^h_ij = Γ^h_ij + C^h_ij|0",
        max_over(index_tuples(3, n).map(|x| (berwald.get(&x) - cartan_f.get(&x) - p_hat.get(&x)).abs())),
    );

    let zero = TensorValue::zeros(signature("ddd"), n, p.clone());
    let c2 = c_low.scale(2.0);
    let p2 = lower_first(&g, &p_hat).scale(-2.0);
    for t in &triples {
        let (h_expected, v_expected) = match t.name() {
            ConnectionName::Cartan => (&zero, &zero),
            ConnectionName::Chern => (&zero, &c2),
            ConnectionName::Hashiguchi => (&p2, &zero),
            _ => (&p2, &c2),
        };
        let h = h_cov_derivative(&geo.g, t)?.value(p);
        let v = v_cov_derivative(&geo.g, t)?.value(p);
        rec.derived(
            format!("metricity_h_{}", conn_key(t.name())),
            "g_ij|k as prescribed (0 or −2P_ijk)",
            h.max_abs_diff(h_expected),
        );
        rec.derived(
            format!("metricity_v_{}", conn_key(t.name())),
            "g_ij|_k as prescribed (0 or 2C_ijk)",
            v.max_abs_diff(v_expected),
        );
    }

    let [cartan, chern, hashiguchi, berwald_t] = &triples;
    let diff = |a: &ConnectionTriple, b: &ConnectionTriple| a.value(p).max_abs_diff(&b.value(p));
    rec.derived(
        "process_c",
        "C-process: Cartan → Chern, Hashiguchi → Berwald",
        diff(&c_process(cartan), chern).max(diff(&c_process(hashiguchi), berwald_t)),
    );
    rec.derived(
        "process_p1",
        "P1-process: Cartan → Hashiguchi, Chern → Berwald",
        diff(&p1_process(cartan, &geo)?, hashiguchi).max(diff(&p1_process(chern, &geo)?, berwald_t)),
    );
    rec.derived(
        "process_commutation",
        "P1 ∘ C = C ∘ P1",
        diff(&p1_process(&c_process(cartan), &geo)?, &c_process(&p1_process(cartan, &geo)?)),
    );

    for (name, value) in curvature_relations_residuals(&geo)?.entries() {
        rec.derived(format!("relation_{name}"), relation_anchor(name), value);
    }

    let contraction = |full: &TensorValue, torsion: &TensorValue| {
        max_over(index_tuples(3, n).map(|x| {
            let (i, j, k) = (x[0], x[1], x[2]);
            ((0..n).map(|h| y[h] * full.get(&[i, h, j, k])).sum::<f64>() - torsion.get(&x)).abs()
        }))
    };
    rec.derived(
        "fiber_contraction_h",
        "y^h R^i_hjk = R^i_jk",
        max_over(curvatures.iter().map(|c| contraction(&c.h, &c.h_torsion))),
    );
    rec.derived(
        "fiber_contraction_hv",
        "y^h P^i_hjk = P^i_jk",
        max_over(curvatures.iter().map(|c| contraction(&c.hv, &c.hv_torsion))),
    );
    rec.derived(
        "hv_torsion_fiber",
        "P^i_jk y^j = 0",
        max_over(index_tuples(2, n).map(|x| (0..n).map(|j| p_hat.get(&[x[0], j, x[1]]) * y[j]).sum::<f64>().abs())),
    );
    rec.derived(
        "berwald_h_closed_form",
        "R°^i_hjk = ∂̇_h R^i_jk",
        berwald_h_from_torsion(&geo)?.max_abs_diff(&curvatures[3].h),
    );
    rec.derived(
        "cartan_v_closed_form",
        "S^i_hjk = C^m_hk C^i_mj − C^m_hj C^i_mk",
        cartan_v_from_cartan_tensor(&geo).max_abs_diff(&curvatures[0].v),
    );
    rec.derived(
        "chern_hv_closed_form",
        "P♦^i_hjk = ∂̇_k Γ^i_hj",
        chern_hv_from_gamma(&geo)?.max_abs_diff(&curvatures[1].hv),
    );
    rec.derived(
        "berwald_hv_closed_form",
        "P°^i_hjk = ∂̇_k G^i_hj",
        berwald_hv_from_berwald(&geo)?.max_abs_diff(&curvatures[3].hv),
    );
    let bhv = &curvatures[3].hv;
    rec.derived(
        "berwald_hv_symmetry",
        "G^i_hjk totally symmetric",
        max_over(index_tuples(4, n).map(|x| {
            let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
            (bhv.get(&x) - bhv.get(&[i, j, h, k])).abs().max((bhv.get(&x) - bhv.get(&[i, h, k, j])).abs())
        })),
    );

    let collapse = (c_up.max_abs() <= tol.exact).then(|| {
        let base = cartan.value(p);
        max_over(triples[1..].iter().map(|t| t.value(p).f.max_abs_diff(&base.f)))
    });
    rec.push(
        "riemannian_collapse",
        "C = 0 ⇒ all four connections coincide",
        Tier::Derived,
        collapse,
    );

    // Finite-difference oracle.
    let oracle = FdOracle::new(m, cfg.fd);
    for object in OracleObject::ALL {
        let jet = match object {
            OracleObject::G => g.clone(),
            OracleObject::Gamma => geo.gamma.value(p),
            OracleObject::Spray => spray.clone(),
            OracleObject::Barthel => barthel.clone(),
            OracleObject::CartanF => cartan_f.clone(),
            OracleObject::BerwaldF => berwald.clone(),
        };
        let fd = oracle.object(p, object)?;
        rec.push(
            format!("fd_{}", object.as_str()),
            "jet value = finite-difference value",
            Tier::Oracle,
            Some(relative_error(&jet, &fd)),
        );
    }
    let fd_curv = fd_curvatures(m, p, cfg.fd)?;
    rec.push(
        "fd_curvature",
        "curvatures from differenced coefficients",
        Tier::Oracle,
        Some(max_over(curvatures.iter().zip(&fd_curv).flat_map(|(a, b)| {
            [
                relative_error(&a.h_torsion, &b.h_torsion),
                relative_error(&a.hv_torsion, &b.hv_torsion),
                relative_error(&a.h, &b.h),
                relative_error(&a.hv, &b.hv),
                relative_error(&a.v, &b.v),
            ]
        }))),
    );

    Ok(PointOutcome {
        measures: rec.items,
        gate_passed: true,
        observations: Observations {
            max_cartan_tensor: c_up.max_abs(),
            max_hv_torsion: p_hat.max_abs(),
            max_h_torsion: curvatures[0].h_torsion.max_abs(),
        },
    })
}

/// The full list of checks, taken from a run on the flat metric of the same
/// dimension.
fn catalog(dim: usize, cfg: &SuiteConfig) -> Vec<Measure> {
    let flat = build_metric(&MetricSpec::euclidean(dim)).expect("flat metric");
    let mut y = vec![0.0; dim];
    y[0] = 1.0;
    let p = ChartPoint::new(vec![0.0; dim], y).expect("valid point");
    measure_point(&flat, &p, cfg).expect("flat metric passes every gate").measures
}

fn relation_anchor(name: &str) -> &'static str {
    match name {
        "chern_h" => "R♦^i_hjk = R^i_hjk − C^i_hm R^m_jk",
        "chern_hv" => "P♦^i_hjk = P^i_hjk + C^i_hk|j − C^i_hm P^m_jk",
        "hashiguchi_v" => "S*^i_hjk = S^i_hjk",
        "h_torsion_spread" => "R^i_jk shared by all four connections",
        "chern_hv_torsion" => "P♦^i_jk = P^i_jk",
        "hashiguchi_hv_torsion" => "P*^i_jk = 0",
        "berwald_hv_torsion" => "P°^i_jk = 0",
        _ => "",
    }
}

fn tolerance_for(tier: Tier, tol: &Tolerances) -> f64 {
    match tier {
        Tier::Gate | Tier::Exact => tol.exact,
        Tier::Derived => tol.derived,
        Tier::Oracle => tol.oracle,
    }
}

fn passes(name: &str, residual: f64, tolerance: f64) -> bool {
    if name == "strong_convexity" {
        residual < 0.0
    } else {
        residual <= tolerance
    }
}

/// Run every check at `cfg.samples` sample points of `cfg.region`.
///
/// Points where `L` or one of its stencils leaves the domain are redrawn, up
/// to ten times the requested sample count. A failed homogeneity or
/// convexity gate skips all remaining checks.
pub fn run_suite(spec: &MetricSpec, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let m = build_metric(spec)?;
    cfg.region.validate(m.dim())?;
    if cfg.samples == 0 {
        return Err(Error::Spec("samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cap = 10 * cfg.samples;
    let mut attempts = 0;
    let mut outcomes: Vec<PointOutcome> = Vec::with_capacity(cfg.samples);
    let mut last = String::new();
    while outcomes.len() < cfg.samples {
        if attempts >= cap {
            return Err(Error::SamplingExhausted {
                attempts,
                accepted: outcomes.len(),
                last,
            });
        }
        let batch = (cfg.samples - outcomes.len()).min(cap - attempts);
        let points = (0..batch).map(|_| cfg.region.draw(&mut rng)).collect::<Result<Vec<_>>>()?;
        attempts += batch;
        let results: Vec<Result<PointOutcome>> = points.par_iter().map(|p| measure_point(&m, p, cfg)).collect();
        for r in results {
            match r {
                Ok(o) => {
                    if outcomes.len() < cfg.samples {
                        outcomes.push(o);
                    }
                }
                Err(e) if e.is_domain() && !matches!(e, Error::NotPositiveDefinite { .. }) => last = e.to_string(),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(aggregate(&m, cfg, attempts, outcomes))
}

fn aggregate(m: &FinslerMetric, cfg: &SuiteConfig, attempts: usize, outcomes: Vec<PointOutcome>) -> VerificationReport {
    let gates_ok = outcomes.iter().all(|o| o.gate_passed);
    let reference;
    let template = match outcomes.iter().find(|o| o.gate_passed) {
        Some(o) => &o.measures,
        None => {
            reference = catalog(m.dim(), cfg);
            &reference
        }
    };
    let mut checks: Vec<CheckResult> = Vec::new();
    for (idx, slot) in template.iter().enumerate() {
        let is_gate = slot.tier == Tier::Gate;
        let values: Vec<f64> = if is_gate || gates_ok {
            outcomes.iter().filter_map(|o| o.measures.get(idx).and_then(|m| m.residual)).collect()
        } else {
            Vec::new()
        };
        let tolerance = if slot.name == "strong_convexity" {
            0.0
        } else {
            tolerance_for(slot.tier, &cfg.tolerances)
        };
        let (max_residual, status) = if values.is_empty() {
            (f64::NAN, Status::Skipped)
        } else {
            let worst = if slot.name == "strong_convexity" {
                values.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { b } else { a.max(b) })
            } else {
                max_over(values.iter().copied())
            };
            let ok = passes(&slot.name, worst, tolerance);
            (worst, if ok { Status::Pass } else { Status::Fail })
        };
        checks.push(CheckResult {
            name: slot.name.clone(),
            anchor: slot.anchor.to_string(),
            tier: slot.tier,
            max_residual,
            tolerance,
            points: values.len(),
            status,
        });
    }
    let observations = outcomes.iter().fold(Observations::default(), |acc, o| Observations {
        max_cartan_tensor: acc.max_cartan_tensor.max(o.observations.max_cartan_tensor),
        max_hv_torsion: acc.max_hv_torsion.max(o.observations.max_hv_torsion),
        max_h_torsion: acc.max_h_torsion.max(o.observations.max_h_torsion),
    });
    let passed = gates_ok && checks.iter().all(|c| c.status != Status::Fail);
    VerificationReport {
        metric: m.id().to_string(),
        dim: m.dim(),
        samples: outcomes.len(),
        seed: cfg.seed,
        attempts,
        tolerances: cfg.tolerances,
        checks,
        observations,
        passed,
    }
}
