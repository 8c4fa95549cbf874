//! Assembled integral routines: the regularized single-layer integral over
//! one curved element, its Helmholtz variant, the double integral over
//! identical elements, and convergence bookkeeping.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::continuation::{edges, i_minus1, i_one, i_zero};
use crate::error::{Error, Result};
use crate::geometry::{metric_density, Density, RefPoint, SurfaceMap, SurfacePoint};
use crate::preimage::newton_locate;
use crate::quadrature::{
    gauss_legendre, transplanted_rule, triangle_rule, ConformalMapParams, Rule1D, TriangleRule,
};
use crate::taylor::{regularized_residual, RegLevel, TaylorData};

/// How the 1D edge integrals are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RulePolicy {
    /// Transplanted Gauss on near-singular edges, plain Gauss otherwise.
    Transplanted,
    /// Plain Gauss everywhere (for comparison studies).
    PlainGauss,
}

/// Edges closer than this (in reference distance) get the transplanted rule.
const NEAR_EDGE: f64 = 0.1;
/// Targets farther than this from the element, relative to its diameter (in
/// 3D) or in reference distance (in 2D), are handled by plain quadrature.
const FAR_FIELD_H: f64 = 0.5;
const FAR_FIELD_REF: f64 = 0.5;
/// 1D points per edge for a 2D parameter n (n^2 residual points).
const EDGE_FACTOR: usize = 10;

/// Sinh-map parameters for each edge, centered on the projection of xhat0
/// and scaled by twice the edge distance.
fn edge_map_params(xhat0: RefPoint) -> [(f64, f64); 3] {
    [
        (-1.0 + 2.0 * xhat0.x1, 2.0 * xhat0.x2),
        (-1.0 + 2.0 * xhat0.x2, 2.0 * (1.0 - xhat0.x1 - xhat0.x2) / std::f64::consts::SQRT_2),
        (-1.0 + 2.0 * (1.0 - xhat0.x2), 2.0 * xhat0.x1),
    ]
}

fn edge_rules(xhat0: RefPoint, base: &Rule1D, policy: RulePolicy) -> Result<[Rule1D; 3]> {
    let params = edge_map_params(xhat0);
    let es = edges(xhat0);
    let mut out: Vec<Rule1D> = Vec::with_capacity(3);
    for j in 0..3 {
        let use_transplanted =
            policy == RulePolicy::Transplanted && es[j].s.abs() < NEAR_EDGE;
        if use_transplanted {
            let (mu, nu) = params[j];
            let p = ConformalMapParams::new(mu, nu.abs().max(1e-300))?;
            out.push(transplanted_rule(base, &p));
        } else {
            out.push(base.clone());
        }
    }
    Ok(out.try_into().map_err(|_| Error::InvalidParameter("edge rules".into())).unwrap())
}

fn plain_layer_potential(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    rule: &TriangleRule,
) -> Result<f64> {
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let psi = metric_density(map, density, x)?;
        let r = (map.jet(x).f - x0).norm();
        if r == 0.0 {
            return Err(Error::SingularEvaluation);
        }
        acc += w * psi.v / r;
    }
    Ok(acc)
}

/// int_T phi(x) / |F(x) - x0| dS, by singularity subtraction through `level`
/// with the subtracted terms reduced to edge integrals. Far targets fall
/// back to plain triangle quadrature.
pub fn integrate_single(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    level: RegLevel,
    n: usize,
    policy: RulePolicy,
) -> Result<f64> {
    let rule = triangle_rule(n)?;
    integrate_single_with(map, density, x0, level, n, policy, &rule)
}

/// As `integrate_single` but reusing a prebuilt residual rule (the double
/// integral calls this in a loop).
pub fn integrate_single_with(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    level: RegLevel,
    n: usize,
    policy: RulePolicy,
    rule: &TriangleRule,
) -> Result<f64> {
    let loc = newton_locate(map, x0)?;
    let rho = map.diameter();
    if loc.h > FAR_FIELD_H * rho
        || loc.xhat0.distance_to_reference_triangle() > FAR_FIELD_REF
    {
        return plain_layer_potential(map, density, x0, rule);
    }

    let td = TaylorData::new(map, density, &loc)?;
    let mut total = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        match regularized_residual(map, density, x0, &td, level, x) {
            Ok(v) => total += w * v,
            // A node hitting the preimage exactly (the double integral does
            // this by construction): the residual is bounded there, and any
            // bounded value is consistent; use 0.
            Err(Error::SingularEvaluation) => {}
            Err(e) => return Err(e),
        }
    }

    // The level's own closed-form integral follows the requested policy; the
    // carried lower-order integrals always use transplanted rules near edges.
    // With plain rules everywhere, the O(eps log) near-edge quadrature error
    // of I_{-1} would mask the smaller intrinsic errors of I_0 and I_1.
    let base = gauss_legendre(EDGE_FACTOR * n)?;
    let top = edge_rules(td.xhat0, &base, policy)?;
    let top = [&top[0], &top[1], &top[2]];
    let low;
    let lower = if policy == RulePolicy::Transplanted || level == RegLevel::Tm1 {
        top
    } else {
        low = edge_rules(td.xhat0, &base, RulePolicy::Transplanted)?;
        [&low[0], &low[1], &low[2]]
    };
    match level {
        RegLevel::Tm1 => total += i_minus1(&td, &top),
        RegLevel::T0 => total += i_minus1(&td, &lower) + i_zero(&td, &top),
        RegLevel::T1 => {
            total += i_minus1(&td, &lower) + i_zero(&td, &lower) + i_one(&td, &top)
        }
    }
    Ok(total)
}

/// int_T phi(x) e^{ik|F(x) - x0|} / |F(x) - x0| dS: the smooth part
/// (e^{ikR} - 1)/R by plain quadrature, the 1/R part by `integrate_single`.
pub fn integrate_single_helmholtz(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    wavenumber: f64,
    level: RegLevel,
    n: usize,
    policy: RulePolicy,
) -> Result<Complex64> {
    let rule = triangle_rule(n)?;
    let mut smooth = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let psi = metric_density(map, density, x)?;
        let r = (map.jet(x).f - x0).norm();
        smooth += w * psi.v * smooth_kernel(wavenumber, r);
    }
    let singular = integrate_single_with(map, density, x0, level, n, policy, &rule)?;
    Ok(smooth + singular)
}

/// (e^{ikR} - 1)/R = ik e^{ikR/2} sinc(kR/2), which is well defined at R = 0.
fn smooth_kernel(k: f64, r: f64) -> Complex64 {
    let half = 0.5 * k * r;
    Complex64::new(0.0, k) * Complex64::new(0.0, half).exp() * sinc(half)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// int_T int_T phi(y) phi(x) / |F(x) - F(y)| dS(x) dS(y) over one element:
/// plain n^2-point quadrature in y, regularized integration in x.
pub fn integrate_double_identical(
    map: &dyn SurfaceMap,
    density_outer: &dyn Density,
    density_inner: &dyn Density,
    level: RegLevel,
    n: usize,
    policy: RulePolicy,
) -> Result<f64> {
    let outer = triangle_rule(n)?;
    let inner_rule = triangle_rule(n + 1)?;
    let terms: Result<Vec<f64>> = outer
        .nodes
        .par_iter()
        .zip(outer.weights.par_iter())
        .map(|(&y, &w)| {
            let psi = metric_density(map, density_outer, y)?;
            let x0 = map.jet(y).f;
            let inner = integrate_single_with(
                map,
                density_inner,
                x0,
                level,
                n,
                policy,
                &inner_rule,
            )?;
            Ok(w * psi.v * inner)
        })
        .collect();
    Ok(terms?.into_iter().sum())
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRecord {
    /// Method parameter (points per 2D direction).
    pub n: usize,
    /// Total number of 2D quadrature points.
    pub points: usize,
    pub value: f64,
    pub error: f64,
}

/// Records of (n, points, value) against a reference value.
pub fn convergence_records(
    values: &[(usize, usize, f64)],
    reference: f64,
) -> Vec<ConvergenceRecord> {
    values
        .iter()
        .map(|&(n, points, value)| ConvergenceRecord {
            n,
            points,
            value,
            error: (value - reference).abs(),
        })
        .collect()
}

/// Least-squares slope of log error against log points, fitted over the
/// final two thirds of the rows whose error is above roundoff.
pub fn fitted_slope(records: &[ConvergenceRecord]) -> Option<f64> {
    let usable: Vec<&ConvergenceRecord> =
        records.iter().filter(|r| r.error > 1e-13).collect();
    if usable.len() < 2 {
        return None;
    }
    let start = usable.len() / 3;
    let tail = &usable[start..];
    let m = tail.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for r in tail {
        let x = (r.points as f64).ln();
        let y = r.error.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((m * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConstantDensity, QuadraticTriangle, Vec3};

    fn exp_triangle() -> QuadraticTriangle {
        QuadraticTriangle::with_shifted_midnode(0.6, 0.7, 0.5)
    }

    #[test]
    fn flat_vertex_closed_form() {
        // Unit flat triangle, target at the right-angle vertex:
        // int_T dS/|x| = sqrt(2) ln(1 + sqrt(2)).
        let tri = QuadraticTriangle::flat_unit();
        let x0 = Vec3::new(0.0, 0.0, 0.0);
        let exact = std::f64::consts::SQRT_2 * (1.0 + std::f64::consts::SQRT_2).ln();
        for level in RegLevel::ALL {
            let v = integrate_single(
                &tri,
                &ConstantDensity(1.0),
                x0,
                level,
                12,
                RulePolicy::Transplanted,
            )
            .unwrap();
            assert!((v - exact).abs() < 1e-12, "{level:?}: {v} vs {exact}");
        }
    }

    #[test]
    fn levels_agree_on_curved_element() {
        // All three subtraction levels converge to the same integral.
        let tri = exp_triangle();
        let x0 = tri.jet(RefPoint::new(0.2, 0.4)).f;
        let vals: Vec<f64> = RegLevel::ALL
            .iter()
            .map(|&l| {
                integrate_single(
                    &tri,
                    &ConstantDensity(1.0),
                    x0,
                    l,
                    40,
                    RulePolicy::Transplanted,
                )
                .unwrap()
            })
            .collect();
        // T_{-1} converges slowly (kinked residual), higher levels faster.
        assert!((vals[0] - vals[2]).abs() < 1e-3 * vals[2].abs(), "{vals:?}");
        assert!((vals[1] - vals[2]).abs() < 1e-5 * vals[2].abs(), "{vals:?}");
    }

    #[test]
    fn rigid_motion_invariance() {
        let tri = exp_triangle();
        let dens = ConstantDensity(1.0);
        let xhat = RefPoint::new(0.3, 0.25);
        let x0 = tri.jet(xhat).f;
        let v0 = integrate_single(&tri, &dens, x0, RegLevel::T1, 20, RulePolicy::Transplanted)
            .unwrap();

        // Rotate about z by 0.7 and translate.
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let tr = Vec3::new(0.3, -1.2, 2.5);
        let rot = |p: Vec3| Vec3::new(c * p.x - s * p.y + tr.x, s * p.x + c * p.y + tr.y, p.z + tr.z);
        let moved = QuadraticTriangle::new(tri.control_points().map(rot));
        let x0m = rot(x0);
        let v1 = integrate_single(&moved, &dens, x0m, RegLevel::T1, 20, RulePolicy::Transplanted)
            .unwrap();
        assert!((v0 - v1).abs() < 1e-12 * v0.abs(), "{v0} vs {v1}");
    }

    #[test]
    fn scaling_covariance() {
        // Scaling the surface by s scales int phi/R by s (area s^2, R s^-1).
        let tri = exp_triangle();
        let dens = ConstantDensity(1.0);
        let x0 = tri.jet(RefPoint::new(0.3, 0.25)).f + Vec3::new(0.0, 0.0, 0.01);
        let v0 = integrate_single(&tri, &dens, x0, RegLevel::T1, 24, RulePolicy::Transplanted)
            .unwrap();
        let s = 3.7;
        let scaled = QuadraticTriangle::new(tri.control_points().map(|p| p * s));
        let v1 = integrate_single(&scaled, &dens, x0 * s, RegLevel::T1, 24, RulePolicy::Transplanted)
            .unwrap();
        assert!((v1 - s * v0).abs() < 1e-10 * v1.abs(), "{v1} vs {}", s * v0);
    }

    #[test]
    fn far_field_matches_subtraction() {
        // A target outside the far-field threshold: plain quadrature path,
        // checked against the subtraction path applied directly.
        let tri = exp_triangle();
        let dens = ConstantDensity(1.0);
        let x0 = tri.jet(RefPoint::new(0.3, 0.3)).f + Vec3::new(0.0, 0.0, 5.0);
        let far = integrate_single(&tri, &dens, x0, RegLevel::T1, 16, RulePolicy::Transplanted)
            .unwrap();
        let rule = triangle_rule(30).unwrap();
        let direct = plain_layer_potential(&tri, &dens, x0, &rule).unwrap();
        assert!((far - direct).abs() < 1e-11 * direct.abs());
    }

    #[test]
    fn helmholtz_reduces_to_laplace_at_zero_wavenumber() {
        let tri = exp_triangle();
        let dens = ConstantDensity(1.0);
        let x0 = tri.jet(RefPoint::new(0.2, 0.4)).f;
        let hz = integrate_single_helmholtz(
            &tri,
            &dens,
            x0,
            0.0,
            RegLevel::T1,
            16,
            RulePolicy::Transplanted,
        )
        .unwrap();
        let lp = integrate_single(&tri, &dens, x0, RegLevel::T1, 16, RulePolicy::Transplanted)
            .unwrap();
        assert!(hz.im.abs() < 1e-15);
        assert!((hz.re - lp).abs() < 1e-14 * lp.abs());
    }

    #[test]
    fn helmholtz_matches_brute_force_off_surface() {
        // Off-surface target far enough that plain quadrature of the full
        // oscillatory kernel converges.
        let tri = exp_triangle();
        let dens = ConstantDensity(1.0);
        let x0 = tri.jet(RefPoint::new(0.3, 0.3)).f + Vec3::new(0.1, -0.2, 0.8);
        let k = 2.0;
        let hz = integrate_single_helmholtz(
            &tri,
            &dens,
            x0,
            k,
            RegLevel::T1,
            24,
            RulePolicy::Transplanted,
        )
        .unwrap();
        let rule = triangle_rule(40).unwrap();
        let mut brute = Complex64::new(0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            let psi = metric_density(&tri, &dens, x).unwrap();
            let r = (tri.jet(x).f - x0).norm();
            brute += w * psi.v * Complex64::new(0.0, k * r).exp() / r;
        }
        assert!((hz - brute).norm() < 1e-10 * brute.norm(), "{hz} vs {brute}");
    }

    #[test]
    fn sinc_series_matches_direct() {
        for &x in &[9e-5f64, 1.0001e-4, 0.3] {
            let direct = x.sin() / x;
            assert!((sinc(x) - direct).abs() < 1e-15);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn double_integral_flat_reference() {
        // Flat unit triangle, constant densities: the double integral is a
        // fixed constant; two resolutions must agree.
        let tri = QuadraticTriangle::flat_unit();
        let dens = ConstantDensity(1.0);
        let a = integrate_double_identical(&tri, &dens, &dens, RegLevel::T1, 8, RulePolicy::Transplanted)
            .unwrap();
        let b = integrate_double_identical(&tri, &dens, &dens, RegLevel::T1, 14, RulePolicy::Transplanted)
            .unwrap();
        // The outer integrand has log-type derivative growth at the
        // boundary, so plain outer quadrature converges slowly.
        assert!((a - b).abs() < 5e-4 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let rows: Vec<(usize, usize, f64)> = (1..=12)
            .map(|n| (n, n * n, 1.0 + 3.0 * ((n * n) as f64).powf(-1.5)))
            .collect();
        let recs = convergence_records(&rows, 1.0);
        let slope = fitted_slope(&recs).unwrap();
        assert!((slope + 1.5).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_ignores_roundoff_plateau() {
        let mut rows: Vec<(usize, usize, f64)> = (1..=8)
            .map(|n| (n, n * n, 1.0 + ((n * n) as f64).powf(-2.0)))
            .collect();
        rows.push((20, 400, 1.0 + 1e-15));
        rows.push((25, 625, 1.0 - 1e-15));
        let recs = convergence_records(&rows, 1.0);
        let slope = fitted_slope(&recs).unwrap();
        assert!((slope + 2.0).abs() < 1e-10, "{slope}");
    }
}
