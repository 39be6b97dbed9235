//! Parameters, mapped quadrature grids, discrete fields, integration and
//! differentiation — the substrate every other module consumes.

pub mod field;
pub mod grid;
pub mod io;
pub mod kv;
pub mod params;
pub mod quadrature;

pub use field::{
    differentiate, hessian, integrate, profile_gradient, AxisStretched, Combination, Dilated, FarField, Field,
    FieldKind, GradField, Hessian, Profile, Translated,
};
pub use grid::{sphere_area, Grid, GridSpec, SingularMassReport};
pub use kv::KvDocument;
pub use params::{ParamWarning, Params};
