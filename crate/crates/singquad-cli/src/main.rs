//! Command-line driver: convergence studies for the single and double
//! integrals, and a 1D transplanted-vs-Gauss quadrature demo, all emitted
//! as CSV.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use singquad::geometry::{ConstantDensity, QuadraticTriangle, RefPoint, SurfaceMap, Vec3};
use singquad::integrals::{
    convergence_records, fitted_slope, integrate_double_identical, integrate_single, RulePolicy,
};
use singquad::oracle::{duffy_single, relative_coordinate_double};
use singquad::quadrature::{
    exact_integral_munu, f_munu, gauss_legendre, predicted_rho, transplanted_rule,
    ConformalMapParams, RhoCase,
};
use singquad::taylor::RegLevel;

#[derive(Parser)]
#[command(name = "singquad", about = "Singular surface integral studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// 2D convergence study of the single-layer integral over one element.
    Single(SingleArgs),
    /// 4D convergence study of the double integral over identical elements.
    Double(DoubleArgs),
    /// Gauss vs transplanted Gauss on the model integrand f_{mu,nu}.
    QuadDemo(QuadDemoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Transplanted,
    PlainGauss,
}

impl From<RuleArg> for RulePolicy {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Transplanted => RulePolicy::Transplanted,
            RuleArg::PlainGauss => RulePolicy::PlainGauss,
        }
    }
}

#[derive(Args)]
struct SingleArgs {
    /// Named experiment: center-singular or near-edge.
    #[arg(long, default_value = "center-singular")]
    experiment: String,
    /// Midnode parameters "a,b,c" of the curved reference element.
    #[arg(long)]
    abc: Option<String>,
    /// Control-point file: 6 lines "j x y z".
    #[arg(long)]
    element: Option<String>,
    /// Reference preimage "x,y" of the singular point.
    #[arg(long)]
    preimage: Option<String>,
    /// Normal offset h from the surface.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Explicit 3D target "x,y,z" (overrides preimage/offset).
    #[arg(long)]
    point: Option<String>,
    /// Comma-separated subtraction levels out of tm1,t0,t1.
    #[arg(long, default_value = "tm1,t0,t1")]
    levels: String,
    #[arg(long, default_value_t = 2)]
    nmin: usize,
    #[arg(long, default_value_t = 64)]
    nmax: usize,
    #[arg(long, value_enum, default_value = "transplanted")]
    rule: RuleArg,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
    /// Also print the oracle reference value and its error estimate.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct DoubleArgs {
    /// Midnode parameters "a,b,c" of the curved reference element.
    #[arg(long, default_value = "0.5,0.5,1.0")]
    abc: String,
    #[arg(long)]
    element: Option<String>,
    #[arg(long, default_value = "tm1,t0,t1")]
    levels: String,
    #[arg(long, default_value_t = 2)]
    nmin: usize,
    #[arg(long, default_value_t = 16)]
    nmax: usize,
    #[arg(long, value_enum, default_value = "transplanted")]
    rule: RuleArg,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct QuadDemoArgs {
    /// Integrand parameter mu of f_{mu,nu}.
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    /// Integrand parameter nu of f_{mu,nu}.
    #[arg(long)]
    nu: f64,
    /// Map parameter mu' of g_{mu',nu'} (defaults to mu).
    #[arg(long, allow_hyphen_values = true)]
    map_mu: Option<f64>,
    /// Map parameter nu' of g_{mu',nu'} (defaults to nu).
    #[arg(long)]
    map_nu: Option<f64>,
    #[arg(long, default_value_t = 1)]
    nmin: usize,
    #[arg(long, default_value_t = 30)]
    nmax: usize,
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Single(a) => cmd_single(a),
        Command::Double(a) => cmd_double(a),
        Command::QuadDemo(a) => cmd_quad_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<singquad::Error> for CliError {
    fn from(e: singquad::Error) -> Self {
        match e {
            singquad::Error::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn parse_floats(s: &str, count: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(CliError::Usage(format!(
            "{what} must be {count} comma-separated numbers, got {s:?}"
        ))),
    }
}

fn parse_levels(s: &str) -> Result<Vec<RegLevel>, CliError> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        match tok.trim() {
            "tm1" => out.push(RegLevel::Tm1),
            "t0" => out.push(RegLevel::T0),
            "t1" => out.push(RegLevel::T1),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown level {other:?} (expected tm1, t0, t1)"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no levels selected".into()));
    }
    Ok(out)
}

/// Control-point file: one line per node, "j x y z", j in 1..=6.
fn parse_element_file(path: &str) -> Result<QuadraticTriangle, CliError> {
    let text = fs::read_to_string(path)?;
    let mut points = [None::<Vec3>; 6];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CliError::Usage(format!(
                "element file line {line:?}: expected \"j x y z\""
            )));
        }
        let j: usize = fields[0]
            .parse()
            .map_err(|_| CliError::Usage(format!("bad node index in {line:?}")))?;
        if !(1..=6).contains(&j) {
            return Err(CliError::Usage(format!("node index {j} out of 1..=6")));
        }
        let coords: Result<Vec<f64>, _> = fields[1..].iter().map(|f| f.parse()).collect();
        let coords =
            coords.map_err(|_| CliError::Usage(format!("bad coordinate in {line:?}")))?;
        points[j - 1] = Some(Vec3::new(coords[0], coords[1], coords[2]));
    }
    let mut out = [Vec3::new(0.0, 0.0, 0.0); 6];
    for (j, p) in points.iter().enumerate() {
        out[j] = p.ok_or_else(|| CliError::Usage(format!("element file missing node {}", j + 1)))?;
    }
    Ok(QuadraticTriangle::new(out))
}

fn load_triangle(
    element: &Option<String>,
    abc: &Option<String>,
    default_abc: [f64; 3],
) -> Result<QuadraticTriangle, CliError> {
    if let Some(path) = element {
        return parse_element_file(path);
    }
    let abc = match abc {
        Some(s) => {
            let v = parse_floats(s, 3, "--abc")?;
            [v[0], v[1], v[2]]
        }
        None => default_abc,
    };
    Ok(QuadraticTriangle::with_shifted_midnode(abc[0], abc[1], abc[2]))
}

fn write_output(out: &Option<String>, csv: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn fmt_row(fields: &[String]) -> String {
    fields.join(",")
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_single(a: SingleArgs) -> Result<(), CliError> {
    let levels = parse_levels(&a.levels)?;
    if a.nmin == 0 || a.nmin > a.nmax {
        return Err(CliError::Usage("need 0 < nmin <= nmax".into()));
    }
    let tri = load_triangle(&a.element, &a.abc, [0.6, 0.7, 0.5])?;
    let preimage = match (&a.preimage, a.experiment.as_str()) {
        (Some(s), _) => {
            let v = parse_floats(s, 2, "--preimage")?;
            RefPoint::new(v[0], v[1])
        }
        (None, "center-singular") => RefPoint::new(0.2, 0.4),
        (None, "near-edge") => RefPoint::new(0.5, 1e-4),
        (None, other) => {
            return Err(CliError::Usage(format!(
                "unknown experiment {other:?} (expected center-singular or near-edge)"
            )))
        }
    };
    let x0 = match &a.point {
        Some(s) => {
            let v = parse_floats(s, 3, "--point")?;
            Vec3::new(v[0], v[1], v[2])
        }
        None => {
            let jet = tri.jet(preimage);
            let n = jet.d1[0].cross(&jet.d1[1]);
            jet.f + n * (a.offset / n.norm())
        }
    };

    let dens = ConstantDensity(1.0);
    let reference = duffy_single(&tri, &dens, x0, 5)?;
    let policy: RulePolicy = a.rule.into();

    let ns: Vec<usize> = (a.nmin..=a.nmax).collect();
    let rows: Result<Vec<(usize, Vec<f64>)>, singquad::Error> = ns
        .par_iter()
        .map(|&n| {
            let vals: Result<Vec<f64>, _> = levels
                .iter()
                .map(|&l| integrate_single(&tri, &dens, x0, l, n, policy))
                .collect();
            Ok((n, vals?))
        })
        .collect();
    let rows = rows?;

    let mut csv = String::new();
    let mut header = vec!["n".to_string(), "N".to_string()];
    for l in &levels {
        header.push(format!("value_{}", l.label()));
        header.push(format!("rel_error_{}", l.label()));
    }
    let _ = writeln!(csv, "{}", fmt_row(&header));
    for (n, vals) in &rows {
        let mut fields = vec![n.to_string(), (n * n).to_string()];
        for v in vals {
            fields.push(sci(*v));
            fields.push(sci((v - reference.value).abs() / reference.value.abs()));
        }
        let _ = writeln!(csv, "{}", fmt_row(&fields));
    }
    write_output(&a.out, &csv)?;

    for (i, l) in levels.iter().enumerate() {
        let data: Vec<(usize, usize, f64)> =
            rows.iter().map(|(n, vals)| (*n, n * n, vals[i])).collect();
        let recs = convergence_records(&data, reference.value);
        match fitted_slope(&recs) {
            Some(s) => eprintln!("slope[{}] = {s:.3}", l.label()),
            None => eprintln!("slope[{}] = n/a (errors at roundoff)", l.label()),
        }
    }
    if a.oracle {
        eprintln!(
            "oracle = {} (error estimate {:.3e}, level {})",
            sci(reference.value),
            reference.estimated_error,
            reference.subdivision_count
        );
    }
    Ok(())
}

fn cmd_double(a: DoubleArgs) -> Result<(), CliError> {
    let levels = parse_levels(&a.levels)?;
    if a.nmin == 0 || a.nmin > a.nmax {
        return Err(CliError::Usage("need 0 < nmin <= nmax".into()));
    }
    let tri = load_triangle(&a.element, &Some(a.abc.clone()), [0.5, 0.5, 1.0])?;
    let dens = ConstantDensity(1.0);
    let reference = relative_coordinate_double(&tri, &dens, &dens, 4)?;
    let policy: RulePolicy = a.rule.into();

    // integrate_double_identical parallelizes internally; keep n serial.
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for n in a.nmin..=a.nmax {
        let vals: Result<Vec<f64>, _> = levels
            .iter()
            .map(|&l| integrate_double_identical(&tri, &dens, &dens, l, n, policy))
            .collect();
        rows.push((n, vals?));
    }

    let mut csv = String::new();
    let mut header = vec!["n".to_string(), "M".to_string()];
    for l in &levels {
        header.push(format!("value_{}", l.label()));
        header.push(format!("rel_error_{}", l.label()));
    }
    let _ = writeln!(csv, "{}", fmt_row(&header));
    for (n, vals) in &rows {
        let m = n * n * n * n;
        let mut fields = vec![n.to_string(), m.to_string()];
        for v in vals {
            fields.push(sci(*v));
            fields.push(sci((v - reference.value).abs() / reference.value.abs()));
        }
        let _ = writeln!(csv, "{}", fmt_row(&fields));
    }
    write_output(&a.out, &csv)?;

    for (i, l) in levels.iter().enumerate() {
        let data: Vec<(usize, usize, f64)> = rows
            .iter()
            .map(|(n, vals)| (*n, n * n * n * n, vals[i]))
            .collect();
        let recs = convergence_records(&data, reference.value);
        match fitted_slope(&recs) {
            Some(s) => eprintln!("slope[{}] = {s:.3}", l.label()),
            None => eprintln!("slope[{}] = n/a (errors at roundoff)", l.label()),
        }
    }
    if a.oracle {
        eprintln!(
            "oracle = {} (error estimate {:.3e}, level {})",
            sci(reference.value),
            reference.estimated_error,
            reference.subdivision_count
        );
    }
    Ok(())
}

fn cmd_quad_demo(a: QuadDemoArgs) -> Result<(), CliError> {
    if a.nmin == 0 || a.nmin > a.nmax {
        return Err(CliError::Usage("need 0 < nmin <= nmax".into()));
    }
    let (mu, nu) = (a.mu, a.nu);
    let (map_mu, map_nu) = (a.map_mu.unwrap_or(mu), a.map_nu.unwrap_or(nu));
    let params = ConformalMapParams::new(map_mu, map_nu)?;
    let exact = exact_integral_munu(mu, nu);

    let mut csv = String::from("n,gauss_error,transplanted_error\n");
    for n in a.nmin..=a.nmax {
        let base = gauss_legendre(n)?;
        let gauss = base.apply(|t| f_munu(mu, nu, t));
        let trans = transplanted_rule(&base, &params).apply(|t| f_munu(mu, nu, t));
        let _ = writeln!(
            csv,
            "{},{},{}",
            n,
            sci((gauss - exact).abs()),
            sci((trans - exact).abs())
        );
    }
    write_output(&a.out, &csv)?;

    if let Ok(r) = predicted_rho(RhoCase::Gauss, mu, nu) {
        eprintln!("predicted rho (gauss) = {r:.6}");
    }
    if map_mu == mu && map_nu == nu {
        if let Ok(r) = predicted_rho(RhoCase::Matched, mu, nu) {
            eprintln!("predicted rho (transplanted, matched) = {r:.6}");
        }
    } else {
        let case = RhoCase::Mismatched {
            dmu: (mu - map_mu) / map_nu,
            dnu: nu / map_nu,
        };
        if let Ok(r) = predicted_rho(case, map_mu, map_nu) {
            eprintln!("predicted rho (transplanted, mismatched lower bound) = {r:.6}");
        }
    }
    Ok(())
}
