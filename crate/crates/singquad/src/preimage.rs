//! Preimage of the (near-)singularity: minimize E(x) = |F(x) - x0|^2 over
//! the reference plane with a safeguarded Newton method.

use crate::error::{Error, Result};
use crate::geometry::{RefPoint, SurfaceMap, SurfacePoint, Vec3};

/// Location of the singularity in reference coordinates.
#[derive(Debug, Clone, Copy)]
pub struct SingularityLocation {
    /// Minimizer of E; its image is the closest point to x0 on the surface
    /// extension of the element (possibly outside the reference triangle).
    pub xhat0: RefPoint,
    /// Offset h = |F(xhat0) - x0| >= 0.
    pub h: f64,
    /// Unit vector with h * e_h = F(xhat0) - x0; absent when h is below
    /// 1e-14 * rho, in which case the singular branch h = 0 is taken.
    pub e_h: Option<Vec3>,
    pub iterations: usize,
    pub final_gradient_norm: f64,
}

/// Cost E = |F(x) - x0|^2 with exact gradient and Hessian assembled from the
/// map derivatives.
pub fn cost_grad_hessian(
    map: &dyn SurfaceMap,
    x0: SurfacePoint,
    x: RefPoint,
) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let jet = map.jet(x);
    let e = jet.f - x0;
    let [e1, e2] = jet.d1;
    let [e11, e12, e22] = jet.d2;
    let cost = e.norm_sq();
    let grad = [2.0 * e.dot(&e1), 2.0 * e.dot(&e2)];
    let h11 = 2.0 * (e.dot(&e11) + e1.dot(&e1));
    let h12 = 2.0 * (e.dot(&e12) + e1.dot(&e2));
    let h22 = 2.0 * (e.dot(&e22) + e2.dot(&e2));
    (cost, grad, [[h11, h12], [h12, h22]])
}

/// Smallest eigenvalue of a symmetric 2x2 matrix, in closed form.
fn min_eigenvalue(h: &[[f64; 2]; 2]) -> f64 {
    let mean = 0.5 * (h[0][0] + h[1][1]);
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    mean - (mean * mean - det).max(0.0).sqrt()
}

const MAX_ITER: usize = 50;
const BETA: f64 = 1e-3;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;

fn newton_from(
    map: &dyn SurfaceMap,
    x0: SurfacePoint,
    start: RefPoint,
    tol: f64,
) -> (RefPoint, f64, usize, bool) {
    let mut x = start;
    let (mut cost, mut grad, mut hess) = cost_grad_hessian(map, x0, x);
    let mut grad_norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    for iter in 0..MAX_ITER {
        if grad_norm <= tol {
            return (x, grad_norm, iter, true);
        }
        // Shift by tau*I when the Hessian is not (sufficiently) positive
        // definite; eigenvalues of the 2x2 matrix are closed-form.
        let tau = (BETA - min_eigenvalue(&hess)).max(0.0);
        let a = hess[0][0] + tau;
        let b = hess[0][1];
        let d = hess[1][1] + tau;
        let det = a * d - b * b;
        let p = [
            -(d * grad[0] - b * grad[1]) / det,
            -(-b * grad[0] + a * grad[1]) / det,
        ];
        let slope = grad[0] * p[0] + grad[1] * p[1];

        // Backtracking line search on the Armijo condition.
        let mut alpha = 1.0;
        let mut accepted = x;
        let mut accepted_cost = cost;
        for _ in 0..60 {
            let trial = RefPoint::new(x.x1 + alpha * p[0], x.x2 + alpha * p[1]);
            let (trial_cost, _, _) = cost_grad_hessian(map, x0, trial);
            if trial_cost <= cost + ARMIJO_C * alpha * slope {
                accepted = trial;
                accepted_cost = trial_cost;
                break;
            }
            alpha *= BACKTRACK;
        }
        if accepted_cost > cost {
            // Line search failed to descend at all.
            return (x, grad_norm, iter, false);
        }
        x = accepted;
        let (c, g, h) = cost_grad_hessian(map, x0, x);
        cost = c;
        grad = g;
        hess = h;
        grad_norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    }
    (x, grad_norm, MAX_ITER, grad_norm <= tol)
}

/// Locate the preimage of x0. Starts Newton at the origin, restarts once from
/// the centroid on failure, and errors with the best iterate otherwise.
pub fn newton_locate(map: &dyn SurfaceMap, x0: SurfacePoint) -> Result<SingularityLocation> {
    let rho = map.diameter();
    let tol = 1e-12 * rho * rho;

    let (mut x, mut gn, mut iters, mut ok) = newton_from(map, x0, RefPoint::new(0.0, 0.0), tol);
    if !ok {
        let (x2, gn2, it2, ok2) = newton_from(map, x0, RefPoint::new(1.0 / 3.0, 1.0 / 3.0), tol);
        if ok2 || gn2 < gn {
            x = x2;
            gn = gn2;
            iters += it2;
            ok = ok2;
        } else {
            iters += it2;
        }
    }
    if !ok {
        return Err(Error::NewtonNotConverged {
            x1: x.x1,
            x2: x.x2,
            grad_norm: gn,
            iterations: iters,
        });
    }

    let f = map.jet(x).f;
    let offset = f - x0;
    let h = offset.norm();
    let e_h = if h > 1e-14 * rho {
        Some(offset * (1.0 / h))
    } else {
        None
    };
    Ok(SingularityLocation {
        xhat0: x,
        h,
        e_h,
        iterations: iters,
        final_gradient_norm: gn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::QuadraticTriangle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exp_triangle() -> QuadraticTriangle {
        QuadraticTriangle::with_shifted_midnode(0.6, 0.7, 0.5)
    }

    #[test]
    fn zero_residual_cost() {
        let tri = exp_triangle();
        let x = RefPoint::new(0.3, 0.4);
        let x0 = tri.jet(x).f;
        let (e, g, _) = cost_grad_hessian(&tri, x0, x);
        assert!(e.abs() < 1e-28);
        assert!(g[0].abs() < 1e-14 && g[1].abs() < 1e-14);
    }

    #[test]
    fn flat_triangle_cost_is_analytic() {
        // x0 = (0,0,1): E = x1^2 + x2^2 + 1, grad = 2(x1, x2), H = 2I.
        let tri = QuadraticTriangle::flat_unit();
        let x0 = Vec3::new(0.0, 0.0, 1.0);
        let x = RefPoint::new(0.3, -0.2);
        let (e, g, h) = cost_grad_hessian(&tri, x0, x);
        assert!((e - (0.09 + 0.04 + 1.0)).abs() < 1e-14);
        assert!((g[0] - 0.6).abs() < 1e-14 && (g[1] + 0.4).abs() < 1e-14);
        assert!((h[0][0] - 2.0).abs() < 1e-14);
        assert!(h[0][1].abs() < 1e-14);
        assert!((h[1][1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let tri = exp_triangle();
        let x0 = tri.jet(RefPoint::new(0.2, 0.4)).f;
        let x = RefPoint::new(0.3, 0.3);
        let (_, g, _) = cost_grad_hessian(&tri, x0, x);
        let step = 1e-6;
        for dir in 0..2 {
            let (d1, d2) = if dir == 0 { (step, 0.0) } else { (0.0, step) };
            let (ep, _, _) = cost_grad_hessian(&tri, x0, RefPoint::new(x.x1 + d1, x.x2 + d2));
            let (em, _, _) = cost_grad_hessian(&tri, x0, RefPoint::new(x.x1 - d1, x.x2 - d2));
            let fd = (ep - em) / (2.0 * step);
            assert!((fd - g[dir]).abs() / g[dir].abs() < 1e-6);
        }
    }

    #[test]
    fn locates_on_surface_point() {
        let tri = exp_triangle();
        let x0 = tri.jet(RefPoint::new(0.2, 0.4)).f;
        let loc = newton_locate(&tri, x0).unwrap();
        assert!((loc.xhat0.x1 - 0.2).abs() < 1e-10);
        assert!((loc.xhat0.x2 - 0.4).abs() < 1e-10);
        assert!(loc.h <= 1e-12);
        assert!(loc.e_h.is_none());
    }

    #[test]
    fn locates_offset_point() {
        let tri = exp_triangle();
        let x0 = tri.jet(RefPoint::new(0.2, 0.4)).f + Vec3::new(0.0, 0.0, 1e-4);
        let loc = newton_locate(&tri, x0).unwrap();
        assert!(loc.h > 0.0 && loc.h <= 1.1e-4, "h = {}", loc.h);
        assert!((loc.xhat0.x1 - 0.2).abs() < 2e-4);
        assert!((loc.xhat0.x2 - 0.4).abs() < 2e-4);
        let e_h = loc.e_h.unwrap();
        assert!((e_h.norm() - 1.0).abs() < 1e-14);
        // h * e_h = F(xhat0) - x0.
        let f = tri.jet(loc.xhat0).f;
        assert!(((e_h * loc.h) - (f - x0)).norm() < 1e-16);
    }

    #[test]
    fn flat_triangle_orthogonal_offset_is_exact() {
        let tri = QuadraticTriangle::flat_unit();
        let (eps, delta) = (1e-3, 1e-5);
        let x0 = Vec3::new(0.5, eps, delta);
        let loc = newton_locate(&tri, x0).unwrap();
        assert!((loc.xhat0.x1 - 0.5).abs() < 1e-12);
        assert!((loc.xhat0.x2 - eps).abs() < 1e-12);
        assert!((loc.h - delta).abs() < 1e-15);
    }

    #[test]
    fn minimizer_is_orthogonal_to_tangent_plane() {
        let tri = exp_triangle();
        let rho = tri.diameter();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let base = RefPoint::new(rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.35));
            let jet = tri.jet(base);
            let n = jet.d1[0].cross(&jet.d1[1]);
            let x0 = jet.f + n * (1e-3 / n.norm());
            let loc = newton_locate(&tri, x0).unwrap();
            let at = tri.jet(loc.xhat0);
            let r = at.f - x0;
            for k in 0..2 {
                // The Newton stop is |grad E| <= 1e-12 rho^2, i.e.
                // |r . F_k| <= 0.5e-12 rho^2.
                assert!(
                    r.dot(&at.d1[k]).abs() <= 1e-12 * rho * rho,
                    "tangency violated"
                );
            }
        }
    }

    #[test]
    fn idempotent_on_interior_preimages() {
        let tri = exp_triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let x1: f64 = rng.gen_range(0.05..0.9);
            let x2: f64 = rng.gen_range(0.05..(0.95 - x1));
            let x0 = tri.jet(RefPoint::new(x1, x2)).f;
            let loc = newton_locate(&tri, x0).unwrap();
            assert!((loc.xhat0.x1 - x1).abs() < 1e-10);
            assert!((loc.xhat0.x2 - x2).abs() < 1e-10);
        }
    }
}
