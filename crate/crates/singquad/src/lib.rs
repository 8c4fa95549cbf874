//! Weakly singular and near-singular surface integrals over curved
//! quadratic triangles, via singularity subtraction with the subtracted
//! terms reduced to edge integrals and evaluated by transplanted Gauss
//! quadrature.

pub mod continuation;
pub mod error;
pub mod geometry;
pub mod integrals;
pub mod oracle;
pub mod preimage;
pub mod quadrature;
pub mod taylor;

pub use error::{Error, Result};
pub use geometry::{
    BasisDensity, ConstantDensity, Density, MapJet, QuadraticTriangle, RefPoint, ScalarJet,
    SurfaceMap, SurfacePoint, Vec3,
};
pub use integrals::{
    convergence_records, fitted_slope, integrate_double_identical, integrate_single,
    integrate_single_helmholtz, ConvergenceRecord, RulePolicy,
};
pub use oracle::{duffy_single, relative_coordinate_double, OracleResult};
pub use preimage::{newton_locate, SingularityLocation};
pub use quadrature::{
    gauss_legendre, predicted_rho, transplanted_rule, triangle_rule, ConformalMapParams,
    RhoCase, Rule1D, TriangleRule,
};
pub use taylor::{RegLevel, TaylorData};
