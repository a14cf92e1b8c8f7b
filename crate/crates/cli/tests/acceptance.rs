//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use finsler_core::calculus::{
    curvature_relations_residuals, h_cov_derivative, hv_torsion_field, triple_curvatures, v_cov_derivative,
};
use finsler_core::conformance::{fd_oracle, relative_error, FdConfig, OracleObject, Region};
use finsler_core::connections::{c_process, canonical_triples, p1_process};
use finsler_core::tensor::{signature, TensorValue};
use finsler_core::{build_metric, ChartPoint, ConnectionName, MetricSpec, PointGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn sample_points(spec: &MetricSpec, count: usize, seed: u64) -> Vec<ChartPoint> {
    let region = Region::for_spec(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = region.x.iter().map(|[lo, hi]| rng.gen_range(*lo..*hi)).collect();
            let dir: Vec<f64> = loop {
                let v: Vec<f64> = (0..spec.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if r > 1e-2 && r <= 1.0 {
                    break v.iter().map(|c| c / r).collect();
                }
            };
            let r = rng.gen_range(0.5..2.0);
            ChartPoint::new(x, dir.iter().map(|c| c * r).collect()).unwrap()
        })
        .collect()
}

fn geometries(spec: &MetricSpec, count: usize, seed: u64) -> Vec<PointGeometry> {
    let m = build_metric(spec).unwrap();
    sample_points(spec, count, seed)
        .iter()
        .map(|p| PointGeometry::new(&m, p).unwrap())
        .collect()
}

fn within(what: &str, worst: f64, tol: f64) -> Outcome {
    let line = format!("{what}: max {worst:.3e} (tol {tol:.0e})");
    if worst <= tol {
        Ok(line)
    } else {
        Err(line)
    }
}

fn all(parts: Vec<Outcome>) -> Outcome {
    let failed = parts.iter().any(Result::is_err);
    let text = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| e))
        .collect::<Vec<_>>()
        .join("; ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn riemannian_collapse() -> Outcome {
    let mut parts = Vec::new();
    for spec in [MetricSpec::euclidean(2), MetricSpec::flat_diag41(), MetricSpec::sphere()] {
        let mut spread: f64 = 0.0;
        let mut cartan: f64 = 0.0;
        for geo in geometries(&spec, 100, 1) {
            let values: Vec<_> = canonical_triples(&geo).unwrap().iter().map(|t| t.value(&geo.point)).collect();
            for v in &values[1..] {
                spread = spread.max(v.max_abs_diff(&values[0]));
            }
            cartan = cartan.max(geo.cartan_low.value(&geo.point).max_abs());
        }
        parts.push(within(&format!("{} triples", spec.id()), spread, 1e-9));
        parts.push(within(&format!("{} C", spec.id()), cartan, 1e-10));
    }
    all(parts)
}

fn sphere_oracle() -> Outcome {
    let mut lc_err: f64 = 0.0;
    let mut riemann_err: f64 = 0.0;
    for geo in geometries(&MetricSpec::sphere(), 20, 2) {
        let p = &geo.point;
        let (s, c) = p.x()[0].sin_cos();
        let levi_civita = TensorValue::from_index_fn(signature("udd"), p, |x| match (x[0], x[1], x[2]) {
            (0, 1, 1) => -s * c,
            (1, 0, 1) | (1, 1, 0) => c / s,
            _ => 0.0,
        });
        // R^i_hjk = δ^i_j g_hk − δ^i_k g_hj; the h-curvature here is its negative.
        let g = [[1.0, 0.0], [0.0, s * s]];
        let d = |a: usize, b: usize| f64::from(u8::from(a == b));
        let riemann = TensorValue::from_index_fn(signature("uddd"), p, |x| {
            let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
            -(d(i, j) * g[h][k] - d(i, k) * g[h][j])
        });
        let cartan = &canonical_triples(&geo).unwrap()[0];
        lc_err = lc_err.max(cartan.f().value(p).max_abs_diff(&levi_civita));
        riemann_err = riemann_err.max(triple_curvatures(cartan, p).unwrap().h.max_abs_diff(&riemann));
    }
    all(vec![
        within("Cartan F vs Levi-Civita", lc_err, 1e-8),
        within("h-curvature vs Riemann", riemann_err, 1e-7),
    ])
}

fn berwald_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for geo in geometries(&MetricSpec::randers_x(), 100, 3) {
        let p = &geo.point;
        let p_hat = hv_torsion_field(&geo).unwrap().value(p);
        let residual = geo.berwald.value(p).sub(&geo.cartan_gamma.value(p)).sub(&p_hat);
        worst = worst.max(residual.max_abs());
    }
    within("G^h_ij - Γ^h_ij - C^h_ij|0", worst, 1e-8)
}

fn process_diagram() -> Outcome {
    let mut worst: f64 = 0.0;
    for geo in geometries(&MetricSpec::randers_x(), 50, 4) {
        let [cartan, _, _, berwald] = canonical_triples(&geo).unwrap();
        let target = berwald.value(&geo.point);
        let a = c_process(&p1_process(&cartan, &geo).unwrap()).value(&geo.point);
        let b = p1_process(&c_process(&cartan), &geo).unwrap().value(&geo.point);
        worst = worst.max(a.max_abs_diff(&target)).max(b.max_abs_diff(&target));
    }
    within("C∘P1 and P1∘C vs Berwald", worst, 1e-8)
}

fn metricity_table() -> Outcome {
    let mut worst = [[0.0_f64; 2]; 4];
    let mut landsberg_scale: f64 = 0.0;
    for geo in geometries(&MetricSpec::randers_x(), 50, 5) {
        let p = &geo.point;
        let n = geo.dim();
        let g = geo.g.value(p);
        let p_hat = hv_torsion_field(&geo).unwrap().value(p);
        let p_low = TensorValue::from_index_fn(signature("ddd"), p, |x| {
            (0..n).map(|m| g.get(&[x[0], m]) * p_hat.get(&[m, x[1], x[2]])).sum()
        });
        landsberg_scale = landsberg_scale.max(p_low.max_abs());
        let zero = TensorValue::zeros(signature("ddd"), n, p.clone());
        let c2 = geo.cartan_low.value(p).scale(2.0);
        let p2 = p_low.scale(-2.0);
        let expected = [(&zero, &zero), (&zero, &c2), (&p2, &zero), (&p2, &c2)];
        for (k, t) in canonical_triples(&geo).unwrap().iter().enumerate() {
            let h = h_cov_derivative(&geo.g, t).unwrap().value(p);
            let v = v_cov_derivative(&geo.g, t).unwrap().value(p);
            worst[k][0] = worst[k][0].max(h.max_abs_diff(expected[k].0));
            worst[k][1] = worst[k][1].max(v.max_abs_diff(expected[k].1));
        }
    }
    let mut parts = vec![if landsberg_scale > 1e-3 {
        Ok(format!("max |P_ijk| {landsberg_scale:.3e}"))
    } else {
        Err("test metric is Landsberg; metricity entries are degenerate".to_string())
    }];
    for (k, name) in ConnectionName::CANONICAL.iter().enumerate() {
        parts.push(within(&format!("{name} h"), worst[k][0], 1e-8));
        parts.push(within(&format!("{name} v"), worst[k][1], 1e-8));
    }
    all(parts)
}

fn torsion_corollaries() -> Outcome {
    let mut r_spread: f64 = 0.0;
    let mut p_cartan_chern: f64 = 0.0;
    let mut p_berwald_type: f64 = 0.0;
    for geo in geometries(&MetricSpec::randers_x(), 50, 6) {
        let curv: Vec<_> = canonical_triples(&geo)
            .unwrap()
            .iter()
            .map(|t| triple_curvatures(t, &geo.point).unwrap())
            .collect();
        for c in &curv[1..] {
            r_spread = r_spread.max(c.h_torsion.max_abs_diff(&curv[0].h_torsion));
        }
        p_cartan_chern = p_cartan_chern.max(curv[1].hv_torsion.max_abs_diff(&curv[0].hv_torsion));
        p_berwald_type = p_berwald_type.max(curv[2].hv_torsion.max_abs()).max(curv[3].hv_torsion.max_abs());
    }
    all(vec![
        within("R^i_jk across connections", r_spread, 1e-7),
        within("P^i_jk Cartan vs Chern", p_cartan_chern, 1e-8),
        within("P^i_jk Hashiguchi, Berwald", p_berwald_type, 1e-8),
    ])
}

fn curvature_relations() -> Outcome {
    let mut parts = Vec::new();
    for spec in [MetricSpec::randers_x(), MetricSpec::randers_x3()] {
        let mut worst: f64 = 0.0;
        let mut chern_vs_berwald_h: f64 = 0.0;
        let mut s_nonzero: f64 = 0.0;
        for geo in geometries(&spec, 20, 7) {
            worst = worst.max(curvature_relations_residuals(&geo).unwrap().max());
            let curv: Vec<_> = canonical_triples(&geo)
                .unwrap()
                .iter()
                .map(|t| triple_curvatures(t, &geo.point).unwrap())
                .collect();
            // R♦ = K with K the curvature of Γ, which is the Cartan
            // h-curvature without its C·R term.
            let c = geo.cartan.value(&geo.point);
            let n = geo.dim();
            let k_from_cartan = TensorValue::from_index_fn(signature("uddd"), &geo.point, |x| {
                let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
                curv[0].h.get(x)
                    - (0..n).map(|m| c.get(&[i, h, m]) * curv[0].h_torsion.get(&[m, j, k])).sum::<f64>()
            });
            chern_vs_berwald_h = chern_vs_berwald_h.max(curv[1].h.max_abs_diff(&k_from_cartan));
            s_nonzero = s_nonzero.max(curv[0].v.max_abs());
            worst = worst.max(curv[2].v.max_abs_diff(&curv[0].v));
        }
        parts.push(within(&format!("{} relations incl. S* = S", spec.id()), worst, 1e-7));
        parts.push(within(&format!("{} R♦ = K", spec.id()), chern_vs_berwald_h, 1e-7));
        if spec.dim == 3 {
            parts.push(if s_nonzero > 1e-4 {
                Ok(format!("max |S| {s_nonzero:.3e}"))
            } else {
                Err("S vanishes on the 3D metric; S* = S is not exercised".into())
            });
        }
    }
    all(parts)
}

fn oracle_independence() -> Outcome {
    let specs = [
        MetricSpec::randers_x(),
        MetricSpec::randers_sphere(),
        MetricSpec::sphere(),
        MetricSpec::flat_diag41(),
        MetricSpec::randers_x3(),
    ];
    let mut parts = Vec::new();
    for spec in specs {
        let m = build_metric(&spec).unwrap();
        let mut worst: f64 = 0.0;
        for geo in geometries(&spec, 50, 8) {
            let p = &geo.point;
            for object in OracleObject::ALL {
                let jet = match object {
                    OracleObject::G => geo.g.value(p),
                    OracleObject::Gamma => geo.gamma.value(p),
                    OracleObject::Spray => geo.spray.value(p),
                    OracleObject::Barthel => geo.barthel.value(p),
                    OracleObject::CartanF => geo.cartan_gamma.value(p),
                    OracleObject::BerwaldF => geo.berwald.value(p),
                };
                let fd = fd_oracle(&m, p, object, FdConfig::default()).unwrap();
                worst = worst.max(relative_error(&jet, &fd));
            }
        }
        parts.push(within(&spec.id(), worst, 1e-5));
    }
    all(parts)
}

fn finsler(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn homogeneity_gate() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.toml");
    std::fs::write(&path, "dim = 2\nfamily = \"expression\"\nl = \"y1^2+y2^2\"\n").unwrap();
    let (code, stdout, _) = finsler(&["verify", "--metric", path.to_str().unwrap(), "--samples", "10"]);
    let gate_failed = stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("homogeneity"));
    if code == 1 && gate_failed {
        Ok("exit 1 with homogeneity FAIL".into())
    } else {
        Err(format!("exit {code}, homogeneity failure reported: {gate_failed}"))
    }
}

fn determinism() -> Outcome {
    let args = ["verify", "--metric", "builtin:randers-x", "--samples", "20", "--seed", "11"];
    let (c1, a, _) = finsler(&args);
    let (c2, b, _) = finsler(&args);
    let mut json = args.to_vec();
    json.extend(["--format", "json"]);
    let (_, ja, _) = finsler(&json);
    let (_, jb, _) = finsler(&json);
    if c1 == 0 && c2 == 0 && a == b && ja == jb && !a.is_empty() {
        Ok(format!("two runs identical ({} bytes text, {} bytes json)", a.len(), ja.len()))
    } else {
        Err(format!("exit {c1}/{c2}, text equal {}, json equal {}", a == b, ja == jb))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("riemannian collapse", riemannian_collapse),
        ("sphere oracle", sphere_oracle),
        ("berwald identity", berwald_identity),
        ("process diagram", process_diagram),
        ("metricity table", metricity_table),
        ("torsion corollaries", torsion_corollaries),
        ("curvature relations", curvature_relations),
        ("finite-difference oracle", oracle_independence),
        ("homogeneity gate", homogeneity_gate),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}  {name}  ({secs:.1}s)  {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL  criterion {:>2}  {name}  ({secs:.1}s)  {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
