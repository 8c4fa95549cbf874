//! Reduction of the subtraction-term integrals I_{-1}, I_0, I_1 over the
//! reference triangle to one-dimensional edge integrals.
//!
//! For a term P_m(dx)/D^p with P_m homogeneous of degree m and
//! D = sqrt(|J0 dx|^2 + h^2), the divergence identity gives
//!   int_T P_m/D^p = sum_j s_j int_{edge j} P_m(dx(t)) K_{m,p}(y(t), h) |dx'(t)| dt,
//! where s_j is the signed distance from xhat0 to edge j, y = |J0 dx| and
//!   K_{m,p}(y, h) = int_0^1 u^{m+1} (u^2 y^2 + h^2)^{-p/2} du.
//! The kernels below are closed forms of K_{m,p} arranged to avoid
//! cancellation for y << h; the two asinh-bearing ones switch to series.

use crate::geometry::RefPoint;
use crate::quadrature::Rule1D;
use crate::taylor::{monomials, TaylorData};

/// Edges below this distance contribute nothing and are skipped, which also
/// avoids 0 * inf when xhat0 lies exactly on an edge.
const EDGE_SKIP: f64 = 1e-300;

/// One edge of the reference triangle, seen from xhat0: signed distance,
/// shifted parametrization dx(t) = start + dir (t+1)/2 for t in [-1, 1],
/// and the parametrization speed.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub s: f64,
    pub start: [f64; 2],
    pub dir: [f64; 2],
    pub speed: f64,
}

impl Edge {
    pub fn point(&self, t: f64) -> [f64; 2] {
        let u = 0.5 * (t + 1.0);
        [self.start[0] + u * self.dir[0], self.start[1] + u * self.dir[1]]
    }
}

/// The three edges of the reference triangle relative to xhat0, in the order
/// bottom (x2 = 0), hypotenuse (x1 + x2 = 1), left (x1 = 0).
pub fn edges(xhat0: RefPoint) -> [Edge; 3] {
    let (x0, y0) = (xhat0.x1, xhat0.x2);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        Edge {
            s: y0,
            start: [-x0, -y0],
            dir: [1.0, 0.0],
            speed: 0.5,
        },
        Edge {
            s: r * (1.0 - x0 - y0),
            start: [1.0 - x0, -y0],
            dir: [-1.0, 1.0],
            speed: r,
        },
        Edge {
            s: x0,
            start: [-x0, 1.0 - y0],
            dir: [0.0, -1.0],
            speed: 0.5,
        },
    ]
}

pub mod kernels {
    //! Closed forms of K_{m,p}(y, h) for the (m, p) pairs that occur.
    //! Throughout W = sqrt(y^2 + h^2) and S = h + W; S is the stable stand-in
    //! for (W - h) via W - h = y^2 / S.

    /// (m, p) = (0, 1): the T_{-1} kernel.
    pub fn km1(y: f64, h: f64) -> f64 {
        1.0 / (h + (y * y + h * h).sqrt())
    }

    /// (m, p) = (1, 1): the psi'_0 kernel,
    /// [y W - h^2 asinh(y/h)] / (2 y^3).
    pub fn k_psi0(y: f64, h: f64) -> f64 {
        if h == 0.0 {
            return 1.0 / (2.0 * y);
        }
        let q = y / h;
        if q < 0.5 {
            // [q sqrt(1+q^2) - asinh(q)] / q^3 = sum 2 (-1)^k c_k q^{2k}/(2k+3),
            // summed with the q^3 already divided out so tiny q cannot underflow.
            let q2 = q * q;
            let mut c = 1.0;
            let mut qpow = 1.0;
            let mut sum = 0.0;
            for k in 0..60 {
                let term = 2.0 * c * qpow / (2 * k + 3) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
                c *= -((2 * k + 1) as f64) / ((2 * k + 2) as f64);
                qpow *= q2;
            }
            return sum / (2.0 * h);
        }
        let w = (y * y + h * h).sqrt();
        (y * w - h * h * (y / h).asinh()) / (2.0 * y * y * y)
    }

    /// (m, p) = (2, 3): the a-sum kernel, 1 / (S^2 W).
    pub fn k_a(y: f64, h: f64) -> f64 {
        let w = (y * y + h * h).sqrt();
        let s = h + w;
        1.0 / (s * s * w)
    }

    /// (m, p) = (3, 3): the c- and e-sum kernel,
    /// [(y^3 + 3 h^2 y)/W - 3 h^2 asinh(y/h)] / (2 y^5).
    pub fn k_c(y: f64, h: f64) -> f64 {
        if h == 0.0 {
            return 1.0 / (2.0 * y * y * y);
        }
        let q = y / h;
        if q < 0.5 {
            // [(q^3 + 3q)/sqrt(1+q^2) - 3 asinh(q)] / q^5
            //   = sum 2 b_k q^{2k}/(2k+5), with the q^5 divided out.
            let q2 = q * q;
            let mut b = 1.0;
            let mut qpow = 1.0;
            let mut sum = 0.0;
            for k in 0..60 {
                let term = 2.0 * b * qpow / (2 * k + 5) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
                b *= -((2 * k + 3) as f64) / ((2 * k + 2) as f64);
                qpow *= q2;
            }
            return sum / (2.0 * h * h * h);
        }
        let w = (y * y + h * h).sqrt();
        ((y * y * y + 3.0 * h * h * y) / w - 3.0 * h * h * (y / h).asinh())
            / (2.0 * y * y * y * y * y)
    }

    /// (m, p) = (2, 1): the psi''_0 kernel, (W + 2h) / (3 S^2).
    pub fn k_psi1(y: f64, h: f64) -> f64 {
        let w = (y * y + h * h).sqrt();
        let s = h + w;
        (w + 2.0 * h) / (3.0 * s * s)
    }

    /// (m, p) = (4, 5): the f-sum kernel, (3W + h) / (3 S^3 W^3).
    pub fn k_f(y: f64, h: f64) -> f64 {
        let w = (y * y + h * h).sqrt();
        let s = h + w;
        (3.0 * w + h) / (3.0 * s * s * s * w * w * w)
    }

    /// (m, p) = (4, 3): the g-sum kernel, (W + 3h) / (3 S^3 W).
    pub fn k_g(y: f64, h: f64) -> f64 {
        let w = (y * y + h * h).sqrt();
        let s = h + w;
        (w + 3.0 * h) / (3.0 * s * s * s * w)
    }

    /// (m, p) = (6, 5): the h-sum kernel, (W^2 + 4hW + h^2) / (3 S^4 W^3).
    pub fn k_h(y: f64, h: f64) -> f64 {
        let w = (y * y + h * h).sqrt();
        let s = h + w;
        (w * w + 4.0 * h * w + h * h) / (3.0 * s * s * s * s * w * w * w)
    }
}

fn edge_integral<F: Fn(f64, [f64; 2]) -> f64>(
    edge: &Edge,
    rule: &Rule1D,
    taylor: &TaylorData,
    integrand: F,
) -> f64 {
    let mut acc = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let dx = edge.point(t);
        let jdx = taylor.j0[0] * dx[0] + taylor.j0[1] * dx[1];
        acc += w * integrand(jdx.norm(), dx);
    }
    edge.s * edge.speed * acc
}

/// int_T T_{-1} dx via the edge reduction, one 1D rule per edge.
pub fn i_minus1(taylor: &TaylorData, rules: &[&Rule1D; 3]) -> f64 {
    let h = taylor.h;
    edges(taylor.xhat0)
        .iter()
        .zip(rules)
        .filter(|(e, _)| e.s.abs() >= EDGE_SKIP)
        .map(|(e, r)| edge_integral(e, r, taylor, |y, _| taylor.psi0 * kernels::km1(y, h)))
        .sum()
}

/// int_T T_0 dx via the edge reduction.
pub fn i_zero(taylor: &TaylorData, rules: &[&Rule1D; 3]) -> f64 {
    let h = taylor.h;
    edges(taylor.xhat0)
        .iter()
        .zip(rules)
        .filter(|(e, _)| e.s.abs() >= EDGE_SKIP)
        .map(|(e, r)| {
            edge_integral(e, r, taylor, |y, dx| {
                let mut v = taylor.psi_prime(dx[0], dx[1]) * kernels::k_psi0(y, h);
                if h > 0.0 {
                    let m3 = monomials::<3>(dx[0], dx[1]);
                    let sa: f64 = (0..3).map(|i| taylor.a[i] * m3[i]).sum();
                    v -= 0.5 * h * taylor.psi0 * sa * kernels::k_a(y, h);
                }
                let m4 = monomials::<4>(dx[0], dx[1]);
                let sc: f64 = (0..4).map(|i| taylor.c[i] * m4[i]).sum();
                v - 0.5 * taylor.psi0 * sc * kernels::k_c(y, h)
            })
        })
        .sum()
}

/// int_T T_1 dx via the edge reduction.
pub fn i_one(taylor: &TaylorData, rules: &[&Rule1D; 3]) -> f64 {
    let h = taylor.h;
    edges(taylor.xhat0)
        .iter()
        .zip(rules)
        .filter(|(e, _)| e.s.abs() >= EDGE_SKIP)
        .map(|(e, r)| {
            edge_integral(e, r, taylor, |y, dx| {
                let mut v = taylor.psi_second(dx[0], dx[1]) * kernels::k_psi1(y, h);
                let m5 = monomials::<5>(dx[0], dx[1]);
                if h > 0.0 {
                    let m4 = monomials::<4>(dx[0], dx[1]);
                    let se: f64 = (0..4).map(|i| taylor.e[i] * m4[i]).sum();
                    v += h * se * kernels::k_c(y, h);
                    let sf: f64 = (0..5).map(|i| taylor.f[i] * m5[i]).sum();
                    v += h * h * sf * kernels::k_f(y, h);
                }
                let sg: f64 = (0..5).map(|i| taylor.g[i] * m5[i]).sum();
                v += sg * kernels::k_g(y, h);
                let m7 = monomials::<7>(dx[0], dx[1]);
                let sh: f64 = (0..7).map(|i| taylor.hc[i] * m7[i]).sum();
                v + sh * kernels::k_h(y, h)
            })
        })
        .sum()
}

/// I_l for a single order l in {-1, 0, 1}.
pub fn edge_integral_for(taylor: &TaylorData, order: i32, rules: &[&Rule1D; 3]) -> f64 {
    match order {
        -1 => i_minus1(taylor, rules),
        0 => i_zero(taylor, rules),
        1 => i_one(taylor, rules),
        _ => panic!("expansion order {order} not supported"),
    }
}
