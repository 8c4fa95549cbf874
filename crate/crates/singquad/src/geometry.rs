//! Reference triangle, quadratic basis functions, the curved-triangle map F
//! and the metric density psi = phi * |J1 x J2|.

use crate::error::{Error, Result};
use std::ops::{Add, Mul, Neg, Sub};

/// Point in the reference triangle's plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub x1: f64,
    pub x2: f64,
}

impl RefPoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Membership in the closed reference triangle.
    pub fn in_reference_triangle(&self) -> bool {
        self.x1 >= 0.0 && self.x2 >= 0.0 && self.x1 + self.x2 <= 1.0
    }

    /// Euclidean distance to the closed reference triangle (zero inside).
    pub fn distance_to_reference_triangle(&self) -> f64 {
        let (x, y) = (self.x1, self.x2);
        if self.in_reference_triangle() {
            return 0.0;
        }
        let verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        let mut d2 = f64::INFINITY;
        for i in 0..3 {
            let (ax, ay) = verts[i];
            let (bx, by) = verts[(i + 1) % 3];
            let (ex, ey) = (bx - ax, by - ay);
            let t = ((x - ax) * ex + (y - ay) * ey) / (ex * ex + ey * ey);
            let t = t.clamp(0.0, 1.0);
            let (px, py) = (ax + t * ex, ay + t * ey);
            d2 = d2.min((x - px) * (x - px) + (y - py) * (y - py));
        }
        d2.sqrt()
    }
}

/// Point in 3D space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Alias used where a point (rather than a direction) is meant.
pub type SurfacePoint = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Map value together with its partial derivatives up to third order.
///
/// Second partials are ordered (11, 12, 22) and third partials
/// (111, 112, 122, 222).
#[derive(Debug, Clone, Copy)]
pub struct MapJet {
    pub f: Vec3,
    pub d1: [Vec3; 2],
    pub d2: [Vec3; 3],
    pub d3: [Vec3; 4],
}

impl MapJet {
    pub fn jacobian(&self) -> [Vec3; 2] {
        self.d1
    }
}

/// A polynomial map from the reference triangle to a curved triangle in 3D.
///
/// Elements of any degree can be plugged in through this trait; only the
/// quadratic case ships with built-in basis formulas.
pub trait SurfaceMap: Sync {
    /// Value and all partial derivatives through third order at `x`.
    fn jet(&self, x: RefPoint) -> MapJet;

    /// Polynomial degree of the map.
    fn degree(&self) -> usize;

    /// Element diameter estimate used for near/far classification and
    /// scale-invariant tolerances. Exactness is not required.
    fn diameter(&self) -> f64;
}

/// Scalar value with first and second partial derivatives (11, 12, 22).
#[derive(Debug, Clone, Copy)]
pub struct ScalarJet {
    pub v: f64,
    pub d1: [f64; 2],
    pub d2: [f64; 3],
}

impl ScalarJet {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            d1: [0.0, 0.0],
            d2: [0.0, 0.0, 0.0],
        }
    }
}

/// Polynomial density phi on the reference triangle.
pub trait Density: Sync {
    fn jet(&self, x: RefPoint) -> ScalarJet;
    fn degree(&self) -> usize;
}

/// phi identically equal to a constant.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDensity(pub f64);

impl Density for ConstantDensity {
    fn jet(&self, _x: RefPoint) -> ScalarJet {
        ScalarJet::constant(self.0)
    }
    fn degree(&self) -> usize {
        0
    }
}

/// phi equal to the j-th quadratic basis function, j in 1..=6.
#[derive(Debug, Clone, Copy)]
pub struct BasisDensity(pub usize);

impl Density for BasisDensity {
    fn jet(&self, x: RefPoint) -> ScalarJet {
        let (v, d1) = basis_eval(self.0, x);
        ScalarJet {
            v,
            d1,
            d2: basis_second_partials(self.0),
        }
    }
    fn degree(&self) -> usize {
        2
    }
}

/// Value and gradient of the j-th quadratic basis function, j in 1..=6.
///
/// Nodes are ordered vertices 1..3, then midedge 4 between a1a2, 5 between
/// a2a3 and 6 between a1a3, so that phi_i(a_j) = delta_ij.
///
/// Panics if `j` is outside 1..=6.
pub fn basis_eval(j: usize, x: RefPoint) -> (f64, [f64; 2]) {
    let l1 = 1.0 - x.x1 - x.x2;
    let l2 = x.x1;
    let l3 = x.x2;
    match j {
        1 => (l1 * (2.0 * l1 - 1.0), [1.0 - 4.0 * l1, 1.0 - 4.0 * l1]),
        2 => (l2 * (2.0 * l2 - 1.0), [4.0 * l2 - 1.0, 0.0]),
        3 => (l3 * (2.0 * l3 - 1.0), [0.0, 4.0 * l3 - 1.0]),
        4 => (4.0 * l1 * l2, [4.0 * (l1 - l2), -4.0 * l2]),
        5 => (4.0 * l2 * l3, [4.0 * l3, 4.0 * l2]),
        6 => (4.0 * l1 * l3, [-4.0 * l3, 4.0 * (l1 - l3)]),
        _ => panic!("basis index {j} out of range 1..=6"),
    }
}

/// Constant second partials (11, 12, 22) of the j-th quadratic basis function.
pub fn basis_second_partials(j: usize) -> [f64; 3] {
    match j {
        1 => [4.0, 4.0, 4.0],
        2 => [4.0, 0.0, 0.0],
        3 => [0.0, 0.0, 4.0],
        4 => [-8.0, -4.0, 0.0],
        5 => [0.0, 4.0, 0.0],
        6 => [0.0, -4.0, -8.0],
        _ => panic!("basis index {j} out of range 1..=6"),
    }
}

/// Curved quadratic triangle defined by six control points.
#[derive(Debug, Clone)]
pub struct QuadraticTriangle {
    points: [Vec3; 6],
    diameter: f64,
}

impl QuadraticTriangle {
    pub fn new(points: [Vec3; 6]) -> Self {
        let mut d = 0.0f64;
        for i in 0..6 {
            for k in (i + 1)..6 {
                d = d.max((points[i] - points[k]).norm());
            }
        }
        Self {
            points,
            diameter: 1.1 * d,
        }
    }

    /// The triangle used in the numerical experiments: flat unit triangle
    /// except for the a2a3 midedge node placed at (a, b, c).
    pub fn with_shifted_midnode(a: f64, b: f64, c: f64) -> Self {
        Self::new([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(a, b, c),
            Vec3::new(0.0, 0.5, 0.0),
        ])
    }

    /// Flat unit right triangle (the identity embedding of the reference
    /// triangle in the z = 0 plane).
    pub fn flat_unit() -> Self {
        Self::with_shifted_midnode(0.5, 0.5, 0.0)
    }

    pub fn control_points(&self) -> &[Vec3; 6] {
        &self.points
    }
}

impl SurfaceMap for QuadraticTriangle {
    fn jet(&self, x: RefPoint) -> MapJet {
        let mut f = Vec3::ZERO;
        let mut d1 = [Vec3::ZERO; 2];
        let mut d2 = [Vec3::ZERO; 3];
        for j in 1..=6 {
            let (v, g) = basis_eval(j, x);
            let s = basis_second_partials(j);
            let a = self.points[j - 1];
            f = f + a * v;
            d1[0] = d1[0] + a * g[0];
            d1[1] = d1[1] + a * g[1];
            for k in 0..3 {
                d2[k] = d2[k] + a * s[k];
            }
        }
        MapJet {
            f,
            d1,
            d2,
            d3: [Vec3::ZERO; 4], // third partials vanish for q = 2
        }
    }

    fn degree(&self) -> usize {
        2
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }
}

/// Value and first/second partials of psi = phi * |J1 x J2|.
///
/// All derivatives come from the map's analytic derivatives via product and
/// quotient rules. Fails when |J1 x J2| falls below 1e-12 * rho^2.
pub fn metric_density(map: &dyn SurfaceMap, density: &dyn Density, x: RefPoint) -> Result<ScalarJet> {
    let jet = map.jet(x);
    let phi = density.jet(x);
    psi_from_jets(&jet, &phi, map.diameter())
}

/// Same as [`metric_density`] but reusing an already computed map jet.
pub fn psi_from_jets(jet: &MapJet, phi: &ScalarJet, diameter: f64) -> Result<ScalarJet> {
    let [j1, j2] = jet.d1;
    let [f11, f12, f22] = jet.d2;
    let [f111, f112, f122, f222] = jet.d3;

    let n = j1.cross(&j2);
    let nn = n.norm();
    let tol = 1e-12 * diameter * diameter;
    if nn < tol {
        return Err(Error::DegenerateElement { value: nn, tol });
    }

    // n = J1 x J2; first partials of n.
    let n_1 = f11.cross(&j2) + j1.cross(&f12);
    let n_2 = f12.cross(&j2) + j1.cross(&f22);
    // Second partials of n.
    let n_11 = f111.cross(&j2) + f11.cross(&f12) + f11.cross(&f12) + j1.cross(&f112);
    let n_12 = f112.cross(&j2) + f11.cross(&f22) + f12.cross(&f12) + j1.cross(&f122);
    let n_22 = f122.cross(&j2) + f12.cross(&f22) + f12.cross(&f22) + j1.cross(&f222);

    // N = |n|, with N_i = (n . n_i)/N and
    // N_ij = (n_i . n_j + n . n_ij)/N - (n . n_i)(n . n_j)/N^3.
    let big_n = nn;
    let nd = [n.dot(&n_1), n.dot(&n_2)];
    let n_i = [nd[0] / big_n, nd[1] / big_n];
    let second = |ni: &Vec3, nj: &Vec3, nij: &Vec3, di: f64, dj: f64| {
        (ni.dot(nj) + n.dot(nij)) / big_n - di * dj / big_n
    };
    let n_ij = [
        second(&n_1, &n_1, &n_11, n_i[0], n_i[0]),
        second(&n_1, &n_2, &n_12, n_i[0], n_i[1]),
        second(&n_2, &n_2, &n_22, n_i[1], n_i[1]),
    ];

    // psi = phi * N.
    let v = phi.v * big_n;
    let d1 = [
        phi.d1[0] * big_n + phi.v * n_i[0],
        phi.d1[1] * big_n + phi.v * n_i[1],
    ];
    let d2 = [
        phi.d2[0] * big_n + 2.0 * phi.d1[0] * n_i[0] + phi.v * n_ij[0],
        phi.d2[1] * big_n + phi.d1[0] * n_i[1] + phi.d1[1] * n_i[0] + phi.v * n_ij[1],
        phi.d2[2] * big_n + 2.0 * phi.d1[1] * n_i[1] + phi.v * n_ij[2],
    ];
    Ok(ScalarJet { v, d1, d2 })
}
