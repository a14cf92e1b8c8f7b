//! Command-line frontend for `finsler-core`.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad spec or arguments,
//! 3 domain or numerical error at the requested point.

pub mod output;
pub mod spec_file;

use std::fmt;
use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_core::calculus::{h_cov_derivative, triple_curvatures, v_cov_derivative};
use finsler_core::conformance::{
    fd_oracle, relative_error, run_suite, FdConfig, OracleObject, Region, SuiteConfig, Tolerances,
};
use finsler_core::metric::verify_homogeneity;
use finsler_core::tensor::index_tuples;
use finsler_core::{
    build_metric, ChartPoint, ConnectionName, ConnectionTriple, Error, FinslerMetric, PointGeometry, TensorValue,
};
use serde::Serialize;

use output::{format_point, label, render_tensor_text, TensorJson};
use spec_file::{load_metric, parse_point, MetricFile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn spec(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::VariableOutOfRange { .. } | Error::Spec(_) => 2,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Result of a successful command: text for stdout and the exit code
/// (0, or 1 when a check failed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Finsler connections, torsions and curvatures at a point")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one object at a point.
    Compute(ComputeArgs),
    /// Run the seeded conformance suite.
    Verify(VerifyArgs),
    /// Side-by-side summary of the four canonical connections at a point.
    Table(TableArgs),
    /// Compare jet values with the finite-difference oracle at a point.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Connection {
    Cartan,
    Chern,
    Hashiguchi,
    Berwald,
}

impl From<Connection> for ConnectionName {
    fn from(c: Connection) -> Self {
        match c {
            Connection::Cartan => ConnectionName::Cartan,
            Connection::Chern => ConnectionName::Chern,
            Connection::Hashiguchi => ConnectionName::Hashiguchi,
            Connection::Berwald => ConnectionName::Berwald,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Object {
    #[value(name = "L")]
    L,
    #[value(name = "E")]
    E,
    #[value(name = "g")]
    G,
    #[value(name = "g_inv")]
    GInv,
    /// Vertical coefficients `C^h_ij` of the connection.
    #[value(name = "C")]
    C,
    #[value(name = "gamma")]
    Gamma,
    #[value(name = "spray")]
    Spray,
    #[value(name = "barthel")]
    Barthel,
    /// Horizontal coefficients `F^h_ij` of the connection.
    #[value(name = "F")]
    F,
    #[value(name = "torsion_P")]
    TorsionP,
    #[value(name = "torsion_R")]
    TorsionR,
    #[value(name = "curvature_h")]
    CurvatureH,
    #[value(name = "curvature_hv")]
    CurvatureHv,
    #[value(name = "curvature_v")]
    CurvatureV,
    /// `g_ij|k`
    #[value(name = "hcov")]
    Hcov,
    /// `g_ij|_k`
    #[value(name = "vcov")]
    Vcov,
}

impl Object {
    fn name(self) -> &'static str {
        match self {
            Object::L => "L",
            Object::E => "E",
            Object::G => "g",
            Object::GInv => "g_inv",
            Object::C => "C",
            Object::Gamma => "gamma",
            Object::Spray => "spray",
            Object::Barthel => "barthel",
            Object::F => "F",
            Object::TorsionP => "torsion_P",
            Object::TorsionR => "torsion_R",
            Object::CurvatureH => "curvature_h",
            Object::CurvatureHv => "curvature_hv",
            Object::CurvatureV => "curvature_v",
            Object::Hcov => "hcov",
            Object::Vcov => "vcov",
        }
    }

    fn uses_connection(self) -> bool {
        matches!(
            self,
            Object::C
                | Object::F
                | Object::TorsionP
                | Object::TorsionR
                | Object::CurvatureH
                | Object::CurvatureHv
                | Object::CurvatureV
                | Object::Hcov
                | Object::Vcov
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// `builtin:<name>` or path to a TOML metric spec.
    #[arg(long)]
    pub metric: String,
    /// `x1,..,xn;y1,..,yn`
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub at: PointArgs,
    #[arg(long, value_enum)]
    pub object: Object,
    #[arg(long, value_enum, default_value = "cartan")]
    pub connection: Connection,
    /// Truncation order of the energy jet (at least 5).
    #[arg(long, default_value_t = finsler_core::jets::GEOMETRY_ORDER)]
    pub order: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// `builtin:<name>` or path to a TOML metric spec.
    #[arg(long)]
    pub metric: String,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_exact: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_derived: f64,
    /// Relative tolerance against the finite-difference oracle.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_oracle: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub at: PointArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub at: PointArgs,
    /// One of g, gamma, spray, barthel, F.
    #[arg(long, value_enum)]
    pub object: Object,
    /// Selects Γ (cartan, chern) or G^h_ij (hashiguchi, berwald) for F.
    #[arg(long, value_enum, default_value = "cartan")]
    pub connection: Connection,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_oracle: f64,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Table(a) => cmd_table(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

struct Prepared {
    metric: FinslerMetric,
    point: ChartPoint,
}

/// Load the metric, parse the point, and refuse to go on unless `L` is
/// positively 1-homogeneous there.
fn prepare(at: &PointArgs) -> Result<Prepared, CliError> {
    let MetricFile { spec, .. } = load_metric(&at.metric)?;
    let metric = build_metric(&spec)?;
    let point = parse_point(&at.point, metric.dim())?;
    for lambda in [0.5, 2.0, std::f64::consts::E] {
        let h = verify_homogeneity(&metric, &point, lambda)?;
        if !h.passed {
            return Err(CliError {
                code: 3,
                message: format!(
                    "L is not positively 1-homogeneous at x = {:?}, y = {:?}: residual {:.3e} at λ = {lambda}",
                    point.x(),
                    point.y(),
                    h.residual
                ),
            });
        }
    }
    Ok(Prepared { metric, point })
}

fn at_point(e: Error, p: &ChartPoint) -> CliError {
    let mut err = CliError::from(e);
    if err.code == 3 {
        err.message = format!("{} (at x = {:?}, y = {:?})", err.message, p.x(), p.y());
    }
    err
}

fn scalar(value: f64, p: &ChartPoint) -> TensorValue {
    TensorValue::new(vec![], p.dim(), vec![value], p.clone())
}

fn evaluate(object: Object, connection: Connection, geo: &PointGeometry) -> finsler_core::Result<TensorValue> {
    let p = &geo.point;
    let triple = || ConnectionTriple::canonical(geo, connection.into());
    Ok(match object {
        Object::L => scalar(geo.fundamental()?.value(), p),
        Object::E => scalar(geo.energy.value(), p),
        Object::G => geo.g.value(p),
        Object::GInv => geo.g_inv.value(p),
        Object::C => triple()?.c().value(p),
        Object::Gamma => geo.gamma.value(p),
        Object::Spray => geo.spray.value(p),
        Object::Barthel => geo.barthel.value(p),
        Object::F => triple()?.f().value(p),
        Object::TorsionP => triple_curvatures(&triple()?, p)?.hv_torsion,
        Object::TorsionR => triple_curvatures(&triple()?, p)?.h_torsion,
        Object::CurvatureH => triple_curvatures(&triple()?, p)?.h,
        Object::CurvatureHv => triple_curvatures(&triple()?, p)?.hv,
        Object::CurvatureV => triple_curvatures(&triple()?, p)?.v,
        Object::Hcov => h_cov_derivative(&geo.g, &triple()?)?.value(p),
        Object::Vcov => v_cov_derivative(&geo.g, &triple()?)?.value(p),
    })
}

fn connection_label(c: Connection) -> &'static str {
    ConnectionName::from(c).as_str()
}

pub fn cmd_compute(a: &ComputeArgs) -> Result<Outcome, CliError> {
    if a.order < 5 {
        return Err(CliError::spec(format!("--order must be at least 5, got {}", a.order)));
    }
    let Prepared { metric, point } = prepare(&a.at)?;
    let geo = PointGeometry::with_order(&metric, &point, a.order).map_err(|e| at_point(e, &point))?;
    let value = evaluate(a.object, a.connection, &geo).map_err(|e| at_point(e, &point))?;
    let connection = a.object.uses_connection().then(|| connection_label(a.connection));
    let stdout = match a.at.format {
        Format::Json => TensorJson::new(a.object.name(), connection, &value).to_json(),
        Format::Table => render_tensor_text(a.object.name(), connection, &value),
    };
    Ok(Outcome { stdout, code: 0 })
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let MetricFile { spec, region } = load_metric(&a.metric)?;
    build_metric(&spec)?;
    let cfg = SuiteConfig {
        samples: a.samples,
        seed: a.seed,
        region: region.unwrap_or_else(|| Region::for_spec(&spec)),
        tolerances: Tolerances {
            exact: a.tol_exact,
            derived: a.tol_derived,
            oracle: a.tol_oracle,
        },
        fd: FdConfig::default(),
    };
    let report = run_suite(&spec, &cfg)?;
    let stdout = match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("serializable");
            s.push('\n');
            s
        }
        Format::Table => report.render_text(),
    };
    Ok(Outcome {
        stdout,
        code: if report.passed { 0 } else { 1 },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub row: &'static str,
    pub values: [f64; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionTable {
    pub point: output::PointJson,
    pub connections: [&'static str; 4],
    pub rows: Vec<TableRow>,
}

/// Max-abs norms of the local expressions of the four canonical connections.
pub fn connection_table(geo: &PointGeometry) -> finsler_core::Result<ConnectionTable> {
    let p = &geo.point;
    let triples = ConnectionName::CANONICAL
        .iter()
        .map(|&name| ConnectionTriple::canonical(geo, name))
        .collect::<finsler_core::Result<Vec<_>>>()?;
    let base_f = triples[0].f().value(p);
    let mut rows: Vec<TableRow> = Vec::new();
    let mut push = |row: &'static str, f: &dyn Fn(&ConnectionTriple) -> finsler_core::Result<f64>| {
        let mut values = [0.0; 4];
        for (v, t) in values.iter_mut().zip(&triples) {
            *v = f(t)?;
        }
        rows.push(TableRow { row, values });
        Ok::<(), Error>(())
    };
    push("F^h_ij", &|t| Ok(t.f().value(p).max_abs()))?;
    push("F^h_ij - Γ^h_ij", &|t| Ok(t.f().value(p).max_abs_diff(&base_f)))?;
    push("N^h_i", &|t| Ok(t.n().value(p).max_abs()))?;
    push("C^h_ij", &|t| Ok(t.c().value(p).max_abs()))?;
    push("T^i_jk = F^i_jk - F^i_kj", &|t| {
        let f = t.f().value(p);
        Ok(index_tuples(3, f.dim).fold(0.0_f64, |m, x| m.max((f.get(&x) - f.get(&[x[0], x[2], x[1]])).abs())))
    })?;
    push("R^i_jk", &|t| Ok(triple_curvatures(t, p)?.h_torsion.max_abs()))?;
    push("P^i_jk", &|t| Ok(triple_curvatures(t, p)?.hv_torsion.max_abs()))?;
    push("g_ij|k", &|t| Ok(h_cov_derivative(&geo.g, t)?.value(p).max_abs()))?;
    push("g_ij|_k", &|t| Ok(v_cov_derivative(&geo.g, t)?.value(p).max_abs()))?;
    push("R^i_hjk", &|t| Ok(triple_curvatures(t, p)?.h.max_abs()))?;
    push("P^i_hjk", &|t| Ok(triple_curvatures(t, p)?.hv.max_abs()))?;
    push("S^i_hjk", &|t| Ok(triple_curvatures(t, p)?.v.max_abs()))?;
    Ok(ConnectionTable {
        point: output::PointJson {
            x: p.x().to_vec(),
            y: p.y().to_vec(),
        },
        connections: ConnectionName::CANONICAL.map(ConnectionName::as_str),
        rows,
    })
}

pub fn cmd_table(a: &TableArgs) -> Result<Outcome, CliError> {
    let Prepared { metric, point } = prepare(&a.at)?;
    let geo = PointGeometry::new(&metric, &point).map_err(|e| at_point(e, &point))?;
    let table = connection_table(&geo).map_err(|e| at_point(e, &point))?;
    let stdout = match a.at.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&table).expect("serializable");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "max-abs norms at {}", format_point(&scalar(0.0, &point)));
            let _ = write!(out, "{:<26}", "");
            for c in table.connections {
                let _ = write!(out, "{c:>14}");
            }
            out.push('\n');
            for row in &table.rows {
                let _ = write!(out, "{:<26}", row.row);
                for v in row.values {
                    let _ = write!(out, "{v:>14.6e}");
                }
                out.push('\n');
            }
            out
        }
    };
    Ok(Outcome { stdout, code: 0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareEntry {
    pub index: String,
    pub jet: f64,
    pub finite_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub object: String,
    pub point: output::PointJson,
    pub entries: Vec<CompareEntry>,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn cmd_compare(a: &CompareArgs) -> Result<Outcome, CliError> {
    let (oracle_object, name) = match (a.object, a.connection) {
        (Object::G, _) => (OracleObject::G, "g"),
        (Object::Gamma, _) => (OracleObject::Gamma, "gamma"),
        (Object::Spray, _) => (OracleObject::Spray, "spray"),
        (Object::Barthel, _) => (OracleObject::Barthel, "barthel"),
        (Object::F, Connection::Cartan | Connection::Chern) => (OracleObject::CartanF, "F (Γ^h_ij)"),
        (Object::F, _) => (OracleObject::BerwaldF, "F (G^h_ij)"),
        (other, _) => {
            return Err(CliError::spec(format!(
                "compare supports g, gamma, spray, barthel and F, not {}",
                other.name()
            )))
        }
    };
    let Prepared { metric, point } = prepare(&a.at)?;
    let geo = PointGeometry::new(&metric, &point).map_err(|e| at_point(e, &point))?;
    let jet = match oracle_object {
        OracleObject::G => geo.g.value(&point),
        OracleObject::Gamma => geo.gamma.value(&point),
        OracleObject::Spray => geo.spray.value(&point),
        OracleObject::Barthel => geo.barthel.value(&point),
        OracleObject::CartanF => geo.cartan_gamma.value(&point),
        OracleObject::BerwaldF => geo.berwald.value(&point),
    };
    let fd = fd_oracle(&metric, &point, oracle_object, FdConfig::default()).map_err(|e| at_point(e, &point))?;
    let err = relative_error(&jet, &fd);
    let cmp = Comparison {
        object: name.to_string(),
        point: output::PointJson {
            x: point.x().to_vec(),
            y: point.y().to_vec(),
        },
        entries: index_tuples(jet.rank(), jet.dim)
            .zip(jet.components.iter().zip(&fd.components))
            .map(|(idx, (j, f))| CompareEntry {
                index: label(&idx),
                jet: *j,
                finite_difference: *f,
            })
            .collect(),
        relative_error: err,
        tolerance: a.tol_oracle,
        passed: err <= a.tol_oracle,
    };
    let stdout = match a.at.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&cmp).expect("serializable");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "{} at {}", cmp.object, format_point(&jet));
            let _ = writeln!(out, "{:<10}{:>24}{:>24}{:>12}", "index", "jet", "finite difference", "|diff|");
            for e in &cmp.entries {
                let _ = writeln!(
                    out,
                    "{:<10}{:>24.15e}{:>24.15e}{:>12.3e}",
                    e.index,
                    e.jet,
                    e.finite_difference,
                    (e.jet - e.finite_difference).abs()
                );
            }
            let _ = writeln!(
                out,
                "relative error {:.3e}  tol {:.1e}  {}",
                err,
                a.tol_oracle,
                if cmp.passed { "PASS" } else { "FAIL" }
            );
            out
        }
    };
    Ok(Outcome {
        stdout,
        code: if cmp.passed { 0 } else { 1 },
    })
}

/// Parse `args` (including the program name) and run, returning the exit
/// code with the stdout and stderr texts.
pub fn run_args<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 { (0, text, String::new()) } else { (2, String::new(), text) };
        }
    };
    match run(&cli) {
        Ok(o) => (o.code, o.stdout, String::new()),
        Err(e) => (e.code, String::new(), format!("error: {}\n", e.message)),
    }
}
