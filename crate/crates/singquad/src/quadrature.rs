//! 1D Gauss-Legendre rules, the collapsed-square triangle rule, transplanted
//! rules built from the sinh conformal map, and the predicted convergence
//! parameters for plain/transplanted Gauss on near-singular integrands.

use crate::error::{Error, Result};
use crate::geometry::RefPoint;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Quadrature rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Legendre polynomial P_n and its derivative at x.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// n-point Gauss-Legendre rule, nodes to machine precision via Newton
/// iteration from the Chebyshev-like asymptotic initial guesses.
pub fn gauss_legendre(n: usize) -> Result<Rule1D> {
    if n == 0 {
        return Err(Error::InvalidParameter("gauss_legendre requires n >= 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Enforce symmetry exactly.
        nodes[n - 1 - k] = x;
        nodes[k] = -x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    Ok(Rule1D { nodes, weights })
}

/// Quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub nodes: Vec<RefPoint>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply(&self, f: impl Fn(RefPoint) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// n^2-point rule on the reference triangle obtained by collapsing the
/// tensor-product Gauss rule on the square:
/// X = (1/2 (1 - t_i), 1/4 (1 + t_i)(1 - t_j)), W = 1/8 w_i (1 + t_i) w_j.
pub fn triangle_rule(n: usize) -> Result<TriangleRule> {
    let g = gauss_legendre(n)?;
    let mut nodes = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let ti = g.nodes[i];
        for j in 0..n {
            let tj = g.nodes[j];
            nodes.push(RefPoint::new(
                0.5 * (1.0 - ti),
                0.25 * (1.0 + ti) * (1.0 - tj),
            ));
            weights.push(0.125 * g.weights[i] * (1.0 + ti) * g.weights[j]);
        }
    }
    Ok(TriangleRule { nodes, weights })
}

/// Parameters of the sinh conformal map g_{mu,nu}, which sends [-1,1] to
/// itself and pushes the singularities mu +- i nu away from the interval.
#[derive(Debug, Clone, Copy)]
pub struct ConformalMapParams {
    pub mu: f64,
    pub nu: f64,
    /// arcsinh((1 - mu)/nu)
    pub a: f64,
    /// arcsinh((1 + mu)/nu)
    pub b: f64,
}

impl ConformalMapParams {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "conformal map requires nu > 0, got {nu}"
            )));
        }
        Ok(Self {
            mu,
            nu,
            a: ((1.0 - mu) / nu).asinh(),
            b: ((1.0 + mu) / nu).asinh(),
        })
    }

    /// g(z) = mu + nu sinh[(a + b)(z - 1)/2 + a] and its derivative.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        let s = 0.5 * (self.a + self.b);
        let arg = s * (z - 1.0) + self.a;
        (self.mu + self.nu * arg.sinh(), self.nu * s * arg.cosh())
    }
}

/// Transplanted rule: nodes g(t_k), weights w_k g'(t_k). Applying it to f
/// realizes sum_k w_k g'(t_k) f(g(t_k)).
pub fn transplanted_rule(base: &Rule1D, params: &ConformalMapParams) -> Rule1D {
    let mut nodes = Vec::with_capacity(base.len());
    let mut weights = Vec::with_capacity(base.len());
    for (&t, &w) in base.nodes.iter().zip(&base.weights) {
        let (g, dg) = params.eval(t);
        nodes.push(g);
        weights.push(w * dg);
    }
    Rule1D { nodes, weights }
}

/// The model integrand 1/sqrt((t - mu)^2 + nu^2).
pub fn f_munu(mu: f64, nu: f64, t: f64) -> f64 {
    1.0 / ((t - mu) * (t - mu) + nu * nu).sqrt()
}

/// Exact integral of [`f_munu`] over [-1, 1].
pub fn exact_integral_munu(mu: f64, nu: f64) -> f64 {
    ((1.0 - mu) / nu).asinh() + ((1.0 + mu) / nu).asinh()
}

fn rho0(x: f64) -> f64 {
    x + (1.0 + x * x).sqrt()
}

fn rho1(x: f64) -> f64 {
    rho0(x) + (2.0 * x * rho0(x)).sqrt()
}

fn c_nu(nu: f64) -> f64 {
    (PI / 2.0) / (2.0 / nu).asinh()
}

/// Which rule/integrand pairing a convergence parameter is requested for.
#[derive(Debug, Clone, Copy)]
pub enum RhoCase {
    /// Transplanted rule g_{mu,nu} applied to f_{mu,nu}.
    Matched,
    /// Plain Gauss applied to f_{mu,nu}.
    Gauss,
    /// Transplanted rule g_{mu,nu} applied to f_{mu',nu'} with
    /// mu' = mu + dmu * nu and nu' = dnu * nu. The returned rho is a
    /// lower bound.
    Mismatched { dmu: f64, dnu: f64 },
}

/// Convergence parameter rho such that the n-point error decays like
/// O(rho^{-2n}). For intermediate mu the bracketing lower bound is returned;
/// the mismatched case always yields a lower bound.
pub fn predicted_rho(case: RhoCase, mu: f64, nu: f64) -> Result<f64> {
    if !(mu.abs() <= 1.0) || !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "predicted_rho requires |mu| <= 1 and 0 < nu < 1, got mu={mu}, nu={nu}"
        )));
    }
    let rho = match case {
        RhoCase::Matched => {
            if mu == 0.0 {
                rho0(c_nu(2.0 * nu))
            } else if mu.abs() == 1.0 {
                rho1(c_nu(nu))
            } else {
                rho0(c_nu(2.0 * nu))
            }
        }
        RhoCase::Gauss => {
            if mu == 0.0 {
                rho0(nu)
            } else if mu.abs() == 1.0 {
                rho1(nu / 2.0)
            } else {
                rho0(nu)
            }
        }
        RhoCase::Mismatched { dmu, dnu } => {
            if !(dnu > 0.0) {
                return Err(Error::InvalidParameter("mismatched case requires dnu > 0".into()));
            }
            let im = Complex64::new(dmu, dnu).asinh().im / (PI / 2.0);
            if mu.abs() == 1.0 {
                rho0(2.0 * im * c_nu(nu))
            } else {
                rho0(im * c_nu(2.0 * nu))
            }
        }
    };
    Ok(rho)
}
