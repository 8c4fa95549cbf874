//! Asymptotic expansion of psi/R at the preimage point: the coefficient sets
//! of the R^2 and psi R^{-1} expansions, the subtraction terms T_{-1}, T_0,
//! T_1, and the regularized residual integrand.

use crate::error::{Error, Result};
use crate::geometry::{metric_density, Density, MapJet, RefPoint, ScalarJet, SurfaceMap, SurfacePoint, Vec3};
use crate::preimage::SingularityLocation;

/// How many asymptotic terms are subtracted from psi/R.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegLevel {
    /// Subtract T_{-1} only.
    Tm1,
    /// Subtract T_{-1} and T_0.
    T0,
    /// Subtract T_{-1}, T_0 and T_1.
    T1,
}

impl RegLevel {
    pub const ALL: [RegLevel; 3] = [RegLevel::Tm1, RegLevel::T0, RegLevel::T1];

    pub fn label(&self) -> &'static str {
        match self {
            RegLevel::Tm1 => "tm1",
            RegLevel::T0 => "t0",
            RegLevel::T1 => "t1",
        }
    }
}

/// Expansion data at the preimage point, computed once per (element, x0)
/// pair and reused by the continuation reduction and the 2D residual.
#[derive(Debug, Clone)]
pub struct TaylorData {
    pub xhat0: RefPoint,
    pub h: f64,
    pub e_h: Option<Vec3>,
    /// Jacobian columns at xhat0.
    pub j0: [Vec3; 2],
    pub psi0: f64,
    /// First partials of psi at xhat0.
    pub dpsi: [f64; 2],
    /// Second partials (11, 12, 22) of psi at xhat0.
    pub d2psi: [f64; 3],
    /// R^2 expansion coefficients.
    pub a: [f64; 3],
    pub b: [f64; 4],
    pub c: [f64; 4],
    pub d: [f64; 5],
    /// psi R^{-1} expansion coefficients (hc to avoid clashing with h).
    pub e: [f64; 4],
    pub f: [f64; 5],
    pub g: [f64; 5],
    pub hc: [f64; 7],
}

/// Coefficients of the R^2 Taylor expansion at xhat0. All partials are
/// evaluated at xhat0; the a and b sets vanish when e_h is absent (h = 0).
pub fn r2_coeffs(jet: &MapJet, e_h: Option<Vec3>) -> ([f64; 3], [f64; 4], [f64; 4], [f64; 5]) {
    let [f1, f2] = jet.d1;
    let [f11, f12, f22] = jet.d2;
    let [f111, f112, f122, f222] = jet.d3;

    let (a, b) = match e_h {
        Some(eh) => (
            [eh.dot(&f11), 2.0 * eh.dot(&f12), eh.dot(&f22)],
            [
                eh.dot(&f111) / 3.0,
                eh.dot(&f112),
                eh.dot(&f122),
                eh.dot(&f222) / 3.0,
            ],
        ),
        None => ([0.0; 3], [0.0; 4]),
    };

    let c = [
        f1.dot(&f11),
        2.0 * f1.dot(&f12) + f2.dot(&f11),
        2.0 * f2.dot(&f12) + f1.dot(&f22),
        f2.dot(&f22),
    ];
    let d = [
        f1.dot(&f111) / 3.0 + f11.dot(&f11) / 4.0,
        f2.dot(&f111) / 3.0 + f1.dot(&f112) + f11.dot(&f12),
        f11.dot(&f22) / 2.0 + f1.dot(&f122) + f2.dot(&f112) + f12.dot(&f12),
        f1.dot(&f222) / 3.0 + f2.dot(&f122) + f22.dot(&f12),
        f2.dot(&f222) / 3.0 + f22.dot(&f22) / 4.0,
    ];
    (a, b, c, d)
}

/// Coefficients of the psi R^{-1} expansion, assembled from the R^2 sets and
/// the psi derivatives at xhat0.
#[allow(clippy::too_many_arguments)]
pub fn psi_r_coeffs(
    a: &[f64; 3],
    b: &[f64; 4],
    c: &[f64; 4],
    d: &[f64; 5],
    psi0: f64,
    dpsi: &[f64; 2],
) -> ([f64; 4], [f64; 5], [f64; 5], [f64; 7]) {
    let [p1, p2] = *dpsi;
    let e = [
        -0.5 * (a[0] * p1 + b[0] * psi0),
        -0.5 * (a[1] * p1 + a[0] * p2 + b[1] * psi0),
        -0.5 * (a[2] * p1 + a[1] * p2 + b[2] * psi0),
        -0.5 * (a[2] * p2 + b[3] * psi0),
    ];
    let f = [
        0.375 * psi0 * a[0] * a[0],
        0.375 * psi0 * 2.0 * a[0] * a[1],
        0.375 * psi0 * (a[1] * a[1] + 2.0 * a[0] * a[2]),
        0.375 * psi0 * 2.0 * a[1] * a[2],
        0.375 * psi0 * a[2] * a[2],
    ];
    let g = [
        -0.5 * (c[0] * p1 + d[0] * psi0),
        -0.5 * (c[1] * p1 + c[0] * p2 + d[1] * psi0),
        -0.5 * (c[2] * p1 + c[1] * p2 + d[2] * psi0),
        -0.5 * (c[3] * p1 + c[2] * p2 + d[3] * psi0),
        -0.5 * (c[3] * p2 + d[4] * psi0),
    ];
    let hc = [
        0.375 * psi0 * c[0] * c[0],
        0.375 * psi0 * 2.0 * c[0] * c[1],
        0.375 * psi0 * (c[1] * c[1] + 2.0 * c[0] * c[2]),
        0.375 * psi0 * (2.0 * c[0] * c[3] + 2.0 * c[1] * c[2]),
        0.375 * psi0 * (c[2] * c[2] + 2.0 * c[1] * c[3]),
        0.375 * psi0 * 2.0 * c[2] * c[3],
        0.375 * psi0 * c[3] * c[3],
    ];
    (e, f, g, hc)
}

impl TaylorData {
    pub fn new(
        map: &dyn SurfaceMap,
        density: &dyn Density,
        loc: &SingularityLocation,
    ) -> Result<Self> {
        let jet = map.jet(loc.xhat0);
        let psi = metric_density(map, density, loc.xhat0)?;
        Ok(Self::from_jets(&jet, &psi, loc))
    }

    pub fn from_jets(jet: &MapJet, psi: &ScalarJet, loc: &SingularityLocation) -> Self {
        let (a, b, c, d) = r2_coeffs(jet, loc.e_h);
        let (e, f, g, hc) = psi_r_coeffs(&a, &b, &c, &d, psi.v, &psi.d1);
        Self {
            xhat0: loc.xhat0,
            h: if loc.e_h.is_some() { loc.h } else { 0.0 },
            e_h: loc.e_h,
            j0: jet.d1,
            psi0: psi.v,
            dpsi: psi.d1,
            d2psi: psi.d2,
            a,
            b,
            c,
            d,
            e,
            f,
            g,
            hc,
        }
    }

    /// |J0 dx|^2 for the shifted coordinate dx = x - xhat0.
    fn jac_norm_sq(&self, dx1: f64, dx2: f64) -> f64 {
        let v = self.j0[0] * dx1 + self.j0[1] * dx2;
        v.norm_sq()
    }

    /// psi'_0(dx), the first-order psi variation.
    pub fn psi_prime(&self, dx1: f64, dx2: f64) -> f64 {
        self.dpsi[0] * dx1 + self.dpsi[1] * dx2
    }

    /// psi''_0(dx), the second-order psi variation.
    pub fn psi_second(&self, dx1: f64, dx2: f64) -> f64 {
        0.5 * self.d2psi[0] * dx1 * dx1
            + self.d2psi[1] * dx1 * dx2
            + 0.5 * self.d2psi[2] * dx2 * dx2
    }

    /// T_{-1}(x, h) = psi0 / sqrt(|J0 dx|^2 + h^2).
    pub fn t_minus1(&self, x: RefPoint) -> Result<f64> {
        let (dx1, dx2) = (x.x1 - self.xhat0.x1, x.x2 - self.xhat0.x2);
        let d2 = self.jac_norm_sq(dx1, dx2) + self.h * self.h;
        if d2 == 0.0 {
            return Err(Error::SingularEvaluation);
        }
        Ok(self.psi0 / d2.sqrt())
    }

    /// T_0(x, h), the O(1) term.
    pub fn t_zero(&self, x: RefPoint) -> Result<f64> {
        let (dx1, dx2) = (x.x1 - self.xhat0.x1, x.x2 - self.xhat0.x2);
        let d2 = self.jac_norm_sq(dx1, dx2) + self.h * self.h;
        if d2 == 0.0 {
            return Err(Error::SingularEvaluation);
        }
        let den1 = d2.sqrt();
        let den3 = d2 * den1;
        let mut v = self.psi_prime(dx1, dx2) / den1;
        if self.h > 0.0 {
            let m3 = monomials::<3>(dx1, dx2);
            let s: f64 = (0..3).map(|i| self.a[i] * m3[i]).sum();
            v -= 0.5 * self.h * self.psi0 * s / den3;
        }
        let m4 = monomials::<4>(dx1, dx2);
        let s: f64 = (0..4).map(|i| self.c[i] * m4[i]).sum();
        v -= 0.5 * self.psi0 * s / den3;
        Ok(v)
    }

    /// T_1(x, h), the O(dx) term.
    pub fn t_one(&self, x: RefPoint) -> Result<f64> {
        let (dx1, dx2) = (x.x1 - self.xhat0.x1, x.x2 - self.xhat0.x2);
        let d2 = self.jac_norm_sq(dx1, dx2) + self.h * self.h;
        if d2 == 0.0 {
            return Err(Error::SingularEvaluation);
        }
        let den1 = d2.sqrt();
        let den3 = d2 * den1;
        let den5 = d2 * den3;
        let mut v = self.psi_second(dx1, dx2) / den1;
        let m5 = monomials::<5>(dx1, dx2);
        if self.h > 0.0 {
            let m4 = monomials::<4>(dx1, dx2);
            let se: f64 = (0..4).map(|i| self.e[i] * m4[i]).sum();
            v += self.h * se / den3;
            let sf: f64 = (0..5).map(|i| self.f[i] * m5[i]).sum();
            v += self.h * self.h * sf / den5;
        }
        let sg: f64 = (0..5).map(|i| self.g[i] * m5[i]).sum();
        v += sg / den3;
        let m7 = monomials::<7>(dx1, dx2);
        let sh: f64 = (0..7).map(|i| self.hc[i] * m7[i]).sum();
        v += sh / den5;
        Ok(v)
    }

    /// T_l for a single order l in {-1, 0, 1}.
    pub fn term(&self, order: i32, x: RefPoint) -> Result<f64> {
        match order {
            -1 => self.t_minus1(x),
            0 => self.t_zero(x),
            1 => self.t_one(x),
            _ => Err(Error::InvalidParameter(format!(
                "expansion order {order} not supported"
            ))),
        }
    }

    /// Sum of the subtraction terms through `level`.
    pub fn subtracted_sum(&self, level: RegLevel, x: RefPoint) -> Result<f64> {
        let mut v = self.t_minus1(x)?;
        if matches!(level, RegLevel::T0 | RegLevel::T1) {
            v += self.t_zero(x)?;
        }
        if matches!(level, RegLevel::T1) {
            v += self.t_one(x)?;
        }
        Ok(v)
    }
}

/// [dx1^{D-1}, dx1^{D-2} dx2, ..., dx2^{D-1}]: the degree-(D-1) monomials in
/// the order the coefficient sets are indexed.
pub(crate) fn monomials<const D: usize>(dx1: f64, dx2: f64) -> [f64; D] {
    let mut out = [0.0; D];
    let mut p1 = [0.0; D];
    let mut v = 1.0;
    for p in p1.iter_mut() {
        *p = v;
        v *= dx1;
    }
    let mut v2 = 1.0;
    for i in 0..D {
        out[i] = p1[D - 1 - i] * v2;
        v2 *= dx2;
    }
    out
}

/// psi(x)/|F(x) - x0| minus the subtraction terms through `level`.
pub fn regularized_residual(
    map: &dyn SurfaceMap,
    density: &dyn Density,
    x0: SurfacePoint,
    taylor: &TaylorData,
    level: RegLevel,
    x: RefPoint,
) -> Result<f64> {
    let psi = metric_density(map, density, x)?;
    let r = (map.jet(x).f - x0).norm();
    if r == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(psi.v / r - taylor.subtracted_sum(level, x)?)
}
