//! Slow reference integrators, independent of the subtraction/continuation
//! pipeline: a Duffy-split rule for the single integral and a relative-
//! coordinate (Sauter-Schwab style) rule for the coincident double integral.

use crate::error::Result;
use crate::geometry::{metric_density, Density, RefPoint, SurfaceMap, SurfacePoint};
use crate::preimage::newton_locate;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    pub value: f64,
    /// Difference between the two finest refinement levels.
    pub estimated_error: f64,
    /// Refinement level the value was computed at.
    pub subdivision_count: usize,
}

/// int_T phi(x)/|F(x) - x0| dS by splitting the reference triangle at the
/// preimage of x0 into three signed subtriangles and applying the Duffy
/// transform on each, with an n-point Gauss rule radially and an adaptive
/// Gauss rule in the angular variable (a near-edge singular point puts a
/// spike of width ~ dist(x0, edge) into the angular integrand, which a
/// fixed tensor rule cannot resolve).
fn duffy_value(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    split: RefPoint,
    n: usize,
) -> Result<f64> {
    struct Ray<'a> {
        map: &'a dyn SurfaceMap,
        density: &'a dyn Density,
        x0: SurfacePoint,
        p0: [f64; 2],
        e1: [f64; 2],
        e2: [f64; 2],
        g: crate::quadrature::Rule1D,
    }
    impl Ray<'_> {
        // Radial integral along direction e1 + v e2, Duffy factor u included.
        fn radial(&self, v: f64) -> Result<f64> {
            let mut acc = 0.0;
            for (&tu, &wu) in self.g.nodes.iter().zip(self.g.weights.iter()) {
                let u = 0.5 * (tu + 1.0);
                let x = RefPoint::new(
                    self.p0[0] + u * (self.e1[0] + v * self.e2[0]),
                    self.p0[1] + u * (self.e1[1] + v * self.e2[1]),
                );
                let psi = metric_density(self.map, self.density, x)?;
                let r = (self.map.jet(x).f - self.x0).norm();
                if r == 0.0 {
                    continue;
                }
                acc += 0.5 * wu * u * psi.v / r;
            }
            Ok(acc)
        }
        fn panel(&self, lo: f64, hi: f64) -> Result<f64> {
            let mut acc = 0.0;
            for (&t, &w) in self.g.nodes.iter().zip(self.g.weights.iter()) {
                let v = 0.5 * ((hi - lo) * t + hi + lo);
                acc += 0.5 * (hi - lo) * w * self.radial(v)?;
            }
            Ok(acc)
        }
        fn adaptive(&self, lo: f64, hi: f64, whole: f64, tol: f64, depth: usize) -> Result<f64> {
            let mid = 0.5 * (lo + hi);
            let left = self.panel(lo, mid)?;
            let right = self.panel(mid, hi)?;
            if (left + right - whole).abs() <= tol || depth == 0 {
                return Ok(left + right);
            }
            // Fixed per-panel tolerance: the accumulated error stays within a
            // modest multiple of tol and the recursion is guaranteed to stop.
            Ok(self.adaptive(lo, mid, left, tol, depth - 1)?
                + self.adaptive(mid, hi, right, tol, depth - 1)?)
        }
    }

    let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let p0 = [split.x1, split.x2];
    let mut total = 0.0;
    for j in 0..3 {
        let a = v[j];
        let b = v[(j + 1) % 3];
        let e1 = [a[0] - p0[0], a[1] - p0[1]];
        let e2 = [b[0] - a[0], b[1] - a[1]];
        // Twice the signed area; signs cancel for a split point outside.
        let jac2 = e1[0] * e2[1] - e1[1] * e2[0];
        if jac2 == 0.0 {
            continue;
        }
        let ray = Ray {
            map,
            density,
            x0,
            p0,
            e1,
            e2,
            g: gauss_legendre(n)?,
        };
        let whole = ray.panel(0.0, 1.0)?;
        total += jac2 * ray.adaptive(0.0, 1.0, whole, 1e-13 * whole.abs() + 1e-16, 40)?;
    }
    Ok(total)
}

/// Duffy reference for the single integral, refined until two consecutive
/// levels agree (or `level` caps out); `level` sets the finest radial order
/// 12 * 2^level.
pub fn duffy_single(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    level: usize,
) -> Result<OracleResult> {
    let split = newton_locate(map, x0)?.xhat0;
    let mut coarse = duffy_value(map, density, x0, split, 12)?;
    let mut fine = coarse;
    for l in 1..=level {
        fine = duffy_value(map, density, x0, split, 12 << l)?;
        if (fine - coarse).abs() <= 1e-14 * fine.abs() {
            return Ok(OracleResult {
                value: fine,
                estimated_error: (fine - coarse).abs(),
                subdivision_count: l,
            });
        }
        coarse = fine;
    }
    Ok(OracleResult {
        value: fine,
        estimated_error: (fine - coarse).abs(),
        subdivision_count: level,
    })
}

/// Map from the simplex {0 <= v <= u <= 1} to the reference triangle,
/// unit Jacobian.
fn simplex_to_ref(u: f64, v: f64) -> RefPoint {
    RefPoint::new(u - v, v)
}

/// The six relative-coordinate regions for the coincident case: each maps
/// (xi, e1, e2, e3) in [0,1]^4 to a pair of simplex points, with common
/// weight xi^3 e1^2 e2.
fn coincident_regions(xi: f64, e1: f64, e2: f64, e3: f64) -> [([f64; 2], [f64; 2]); 6] {
    let r1 = (
        [xi, xi * (1.0 - e1 + e1 * e2)],
        [xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)],
    );
    let r3 = (
        [xi, xi * e1 * (1.0 - e2 + e2 * e3)],
        [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)],
    );
    let r5 = (
        [xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)],
        [xi, xi * e1 * (1.0 - e2)],
    );
    [r1, (r1.1, r1.0), r3, (r3.1, r3.0), r5, (r5.1, r5.0)]
}

fn relative_coordinate_value(
    map: &dyn SurfaceMap,
    density_outer: &dyn Density,
    density_inner: &dyn Density,
    n: usize,
) -> Result<f64> {
    let g = gauss_legendre(n)?;
    let pts: Vec<(f64, f64)> = g
        .nodes
        .iter()
        .zip(g.weights.iter())
        .map(|(&t, &w)| (0.5 * (t + 1.0), 0.5 * w))
        .collect();
    let mut total = 0.0;
    for &(xi, wxi) in &pts {
        for &(e1, w1) in &pts {
            for &(e2, w2) in &pts {
                for &(e3, w3) in &pts {
                    let w = wxi * w1 * w2 * w3 * xi * xi * xi * e1 * e1 * e2;
                    for (sx, sy) in coincident_regions(xi, e1, e2, e3) {
                        let x = simplex_to_ref(sx[0], sx[1]);
                        let y = simplex_to_ref(sy[0], sy[1]);
                        let psi_x = metric_density(map, density_inner, x)?;
                        let psi_y = metric_density(map, density_outer, y)?;
                        let r = (map.jet(x).f - map.jet(y).f).norm();
                        if r == 0.0 {
                            continue;
                        }
                        total += w * psi_x.v * psi_y.v / r;
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Relative-coordinate reference for the coincident double integral; `level`
/// sets the finest per-axis order 6 * 2^level.
pub fn relative_coordinate_double(
    map: &dyn SurfaceMap,
    density_outer: &dyn Density,
    density_inner: &dyn Density,
    level: usize,
) -> Result<OracleResult> {
    let mut coarse = relative_coordinate_value(map, density_outer, density_inner, 6)?;
    let mut fine = coarse;
    for l in 1..=level {
        fine = relative_coordinate_value(map, density_outer, density_inner, 6 << l)?;
        if (fine - coarse).abs() <= 1e-14 * fine.abs() {
            return Ok(OracleResult {
                value: fine,
                estimated_error: (fine - coarse).abs(),
                subdivision_count: l,
            });
        }
        coarse = fine;
    }
    Ok(OracleResult {
        value: fine,
        estimated_error: (fine - coarse).abs(),
        subdivision_count: level,
    })
}
