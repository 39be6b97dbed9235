//! Nodal fields on a [`Grid`], their gradients, and quadrature.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Grid, Stencil};
use super::quadrature::{fornberg_weights, pairwise_sum};
use crate::error::{Error, Result};
use crate::manifold::ExtremalParams;

/// A cylindrically symmetric function known in closed form.
///
/// Fields built from a profile carry exact gradients and can be resampled
/// exactly under dilations and translations.
pub trait Profile: fmt::Debug + Send + Sync {
    fn value(&self, r: f64, z: &[f64]) -> f64;

    /// Writes `∂/∂z_j` into `d_z` and returns `∂/∂r`.
    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64;
}

/// Semantic tag of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Generic,
    Extremal(ExtremalParams),
    /// Index into the tangent basis `[v, ∂_λv, ∂_{z′₁}v, …]`.
    Tangent(usize),
}

/// How a field behaves beyond the mapped domain, which selects the stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    /// Tends to zero at infinity: parameter-space stencils with zero ghost values.
    Decaying,
    /// No assumption: physical-space stencils, exact on polynomials of degree ≤ 4.
    Open,
}

/// Gradient samples in cylindrical components.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    pub d_r: Vec<f64>,
    pub d_z: Vec<Vec<f64>>,
    pub magnitude: Vec<f64>,
}

impl GradField {
    pub fn new(d_r: Vec<f64>, d_z: Vec<Vec<f64>>) -> GradField {
        let magnitude = (0..d_r.len())
            .map(|i| {
                let s: f64 = d_r[i] * d_r[i] + d_z.iter().map(|c| c[i] * c[i]).sum::<f64>();
                s.sqrt()
            })
            .collect();
        GradField { d_r, d_z, magnitude }
    }

    pub fn len(&self) -> usize {
        self.d_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_r.is_empty()
    }

    /// Componentwise `self − other`.
    pub fn sub(&self, other: &GradField) -> GradField {
        let d_r = self.d_r.iter().zip(&other.d_r).map(|(a, b)| a - b).collect();
        let d_z = self
            .d_z
            .iter()
            .zip(&other.d_z)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        GradField::new(d_r, d_z)
    }
}

/// Nodal samples of a cylindrically symmetric function on a grid.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    kind: FieldKind,
    far_field: FarField,
    profile: Option<Arc<dyn Profile>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid.resolution_label())
            .field("kind", &self.kind)
            .field("far_field", &self.far_field)
            .field("profile", &self.profile)
            .finish_non_exhaustive()
    }
}

impl Field {
    /// Wraps nodal values, rejecting non-finite entries.
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>, far_field: FarField) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&grid, &values)?;
        Ok(Field {
            grid,
            values,
            kind: FieldKind::Generic,
            far_field,
            profile: None,
        })
    }

    /// Samples `f(r, z)` at every node.
    pub fn from_fn(grid: Arc<Grid>, far_field: FarField, f: impl Fn(f64, &[f64]) -> f64) -> Result<Field> {
        let mut z = vec![0.0; grid.m()];
        let values = (0..grid.len())
            .map(|i| {
                grid.z_at(i, &mut z);
                f(grid.r()[i], &z)
            })
            .collect();
        Field::from_values(grid, values, far_field)
    }

    /// Samples a closed-form profile; the field keeps it for exact gradients.
    pub fn from_profile(grid: Arc<Grid>, profile: Arc<dyn Profile>) -> Result<Field> {
        let p = profile.clone();
        let mut field = Field::from_fn(grid, FarField::Decaying, move |r, z| p.value(r, z))?;
        field.profile = Some(profile);
        Ok(field)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Field> {
        let n = grid.len();
        Field::from_values(grid, vec![c; n], FarField::Open)
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
            kind: FieldKind::Generic,
            far_field: FarField::Decaying,
            profile: Some(Arc::new(Combination { terms: Vec::new() })),
        }
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Field {
        self.kind = kind;
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn far_field(&self) -> FarField {
        self.far_field
    }

    pub fn profile(&self) -> Option<&Arc<dyn Profile>> {
        self.profile.as_ref()
    }

    /// Drops the closed form so derivatives come from finite differences.
    pub fn without_profile(mut self) -> Field {
        self.profile = None;
        self
    }

    /// Exact gradient when the field has a profile, finite differences otherwise.
    pub fn gradient(&self) -> GradField {
        match &self.profile {
            Some(p) => profile_gradient(&self.grid, p.as_ref()),
            None => differentiate(self),
        }
    }

    /// `Σ cᵢ·fieldᵢ`; the closed form survives when every term has one.
    pub fn combine(terms: &[(f64, &Field)]) -> Result<Field> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Degenerate("empty linear combination".into()))?;
        let grid = first.grid.clone();
        if terms.iter().any(|(_, f)| !f.grid.same_as(&grid)) {
            return Err(Error::GridMismatch);
        }
        let mut values = vec![0.0; grid.len()];
        for (c, f) in terms {
            for (acc, v) in values.iter_mut().zip(&f.values) {
                *acc += c * v;
            }
        }
        let far_field = if terms.iter().all(|(_, f)| f.far_field == FarField::Decaying) {
            FarField::Decaying
        } else {
            FarField::Open
        };
        let profile = terms
            .iter()
            .map(|(c, f)| f.profile.clone().map(|p| (*c, p)))
            .collect::<Option<Vec<_>>>()
            .map(|terms| Arc::new(Combination { terms }) as Arc<dyn Profile>);
        check_finite(&grid, &values)?;
        Ok(Field {
            grid,
            values,
            kind: FieldKind::Generic,
            far_field,
            profile,
        })
    }

    pub fn scaled(&self, c: f64) -> Result<Field> {
        Field::combine(&[(c, self)])
    }

    /// `self − other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        Field::combine(&[(1.0, self), (-1.0, other)])
    }

    /// Evaluates the field at an arbitrary point by tensor Lagrange
    /// interpolation (six points per axis in the mapped parameter).
    ///
    /// Returns `None` when the point lies beyond the outermost nodes of a
    /// field without a zero far-field.
    pub fn interpolate(&self, r: f64, z: &[f64]) -> Option<f64> {
        if let Some(p) = &self.profile {
            return Some(p.value(r, z));
        }
        let g = &self.grid;
        let decaying = self.far_field == FarField::Decaying;
        let mut per_axis = Vec::with_capacity(1 + g.m());
        let (lr, lz) = g.map_scales();
        per_axis.push(lagrange_row(&g.radial_axis().param, r / (lr + r), None, decaying.then_some(1.0))?);
        for &zj in z {
            let s = 2.0 * zj / (lz + (lz * lz + 4.0 * zj * zj).sqrt());
            let ax = g.axial_axis()?;
            per_axis.push(lagrange_row(&ax.param, s, decaying.then_some(-1.0), decaying.then_some(1.0))?);
        }
        let mut acc = 0.0;
        tensor_accumulate(g, &self.values, &per_axis, 0, 0, 1.0, &mut acc);
        Some(acc)
    }
}

fn tensor_accumulate(
    g: &Grid,
    values: &[f64],
    rows: &[Vec<(usize, f64)>],
    dir: usize,
    base: usize,
    weight: f64,
    acc: &mut f64,
) {
    if dir == rows.len() {
        *acc += weight * values[base];
        return;
    }
    let stride = g.stride(dir);
    for &(j, w) in &rows[dir] {
        tensor_accumulate(g, values, rows, dir + 1, base + j * stride, weight * w, acc);
    }
}

/// Interpolation weights at parameter `x` from a six-point window of
/// `param`, optionally padded with zero-valued ghost nodes.
fn lagrange_row(param: &[f64], x: f64, lo: Option<f64>, hi: Option<f64>) -> Option<Vec<(usize, f64)>> {
    let mut ext: Vec<(f64, Option<usize>)> = Vec::with_capacity(param.len() + 2);
    if let Some(g) = lo {
        ext.push((g, None));
    }
    ext.extend(param.iter().enumerate().map(|(i, &t)| (t, Some(i))));
    if let Some(g) = hi {
        ext.push((g, None));
    }
    let first = ext.first()?.0;
    let last = ext.last()?.0;
    if x < first || x > last {
        return None;
    }
    let pos = ext.partition_point(|&(t, _)| t < x);
    let len = 6.min(ext.len());
    let start = (pos as isize - 3).clamp(0, (ext.len() - len) as isize) as usize;
    let xs: Vec<f64> = ext[start..start + len].iter().map(|e| e.0).collect();
    let w = fornberg_weights(x, &xs, 0);
    Some(
        (start..start + len)
            .zip(&w[0])
            .filter_map(|(q, &wq)| ext[q].1.map(|j| (j, wq)))
            .collect(),
    )
}

fn check_finite(grid: &Grid, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(node) => {
            let (r, z) = grid.coords(node);
            Err(Error::NonFinite {
                node,
                r,
                z,
                value: values[node],
            })
        }
    }
}

/// `Σ quad_weights·integrand` with pairwise summation; rejects non-finite samples.
pub fn integrate(grid: &Grid, integrand: &[f64]) -> Result<f64> {
    if integrand.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "integrand has {} samples for {} nodes",
            integrand.len(),
            grid.len()
        )));
    }
    check_finite(grid, integrand)?;
    let terms: Vec<f64> = grid
        .quad_weights()
        .iter()
        .zip(integrand)
        .map(|(w, f)| w * f)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Samples the exact gradient of a profile.
pub fn profile_gradient(grid: &Grid, profile: &dyn Profile) -> GradField {
    let m = grid.m();
    let n = grid.len();
    let mut d_r = Vec::with_capacity(n);
    let mut d_z = vec![Vec::with_capacity(n); m];
    let mut z = vec![0.0; m];
    let mut dz = vec![0.0; m];
    for i in 0..n {
        grid.z_at(i, &mut z);
        d_r.push(profile.gradient(grid.r()[i], &z, &mut dz));
        for (col, v) in d_z.iter_mut().zip(&dz) {
            col.push(*v);
        }
    }
    GradField::new(d_r, d_z)
}

/// Fourth-order finite-difference gradient of the nodal values.
///
/// Decaying fields use stencils in the mapped parameter (with the zero limit
/// as a ghost node at infinity, one-sided at `r → 0`); open fields use
/// stencils in physical coordinates.
pub fn differentiate(field: &Field) -> GradField {
    let g = field.grid();
    let d_r = first_derivative(g, field.values(), 0, field.far_field());
    let d_z = (1..=g.m())
        .map(|dir| first_derivative(g, field.values(), dir, field.far_field()))
        .collect();
    GradField::new(d_r, d_z)
}

fn apply_stencils(g: &Grid, values: &[f64], dir: usize, stencils: &[Stencil], scale: impl Fn(usize) -> f64) -> Vec<f64> {
    let stride = g.stride(dir);
    (0..g.len())
        .map(|idx| {
            let pos = g.position(idx, dir);
            let base = idx - pos * stride;
            scale(pos) * stencils[pos].apply(values, base, stride)
        })
        .collect()
}

/// First derivative along direction `dir` (0 = r, j = z_j).
pub fn first_derivative(g: &Grid, values: &[f64], dir: usize, far: FarField) -> Vec<f64> {
    let axis = g.axis(dir);
    match far {
        FarField::Decaying => apply_stencils(g, values, dir, &axis.stencils.decaying_first, |i| axis.dparam[i]),
        FarField::Open => apply_stencils(g, values, dir, &axis.stencils.open_first, |_| 1.0),
    }
}

/// Second derivative along direction `dir`.
pub fn second_derivative(g: &Grid, values: &[f64], dir: usize, far: FarField) -> Vec<f64> {
    let axis = g.axis(dir);
    match far {
        FarField::Decaying => {
            let d2 = apply_stencils(g, values, dir, &axis.stencils.decaying_second, |i| axis.dparam[i].powi(2));
            let d1 = apply_stencils(g, values, dir, &axis.stencils.decaying_first, |i| axis.d2param[i]);
            d2.iter().zip(&d1).map(|(a, b)| a + b).collect()
        }
        FarField::Open => apply_stencils(g, values, dir, &axis.stencils.open_second, |_| 1.0),
    }
}

/// First and second derivatives of a field in all directions.
#[derive(Debug, Clone)]
pub struct Hessian {
    /// `first[d]`: derivative along direction `d` (0 = r).
    pub first: Vec<Vec<f64>>,
    /// `second[a][b]`: mixed derivative, symmetric in `(a, b)`.
    pub second: Vec<Vec<Vec<f64>>>,
}

/// Finite-difference first and second derivatives (mixed terms by
/// composing first-derivative operators).
pub fn hessian(field: &Field) -> Hessian {
    let g = field.grid();
    let far = field.far_field();
    let dims = 1 + g.m();
    let first: Vec<Vec<f64>> = (0..dims).map(|d| first_derivative(g, field.values(), d, far)).collect();
    let mut second = vec![vec![Vec::new(); dims]; dims];
    for a in 0..dims {
        second[a][a] = second_derivative(g, field.values(), a, far);
        for b in 0..a {
            let mixed = first_derivative(g, &first[b], a, far);
            second[b][a] = mixed.clone();
            second[a][b] = mixed;
        }
    }
    Hessian { first, second }
}

/// `Σ cᵢ·profileᵢ`.
#[derive(Debug, Clone)]
pub struct Combination {
    pub terms: Vec<(f64, Arc<dyn Profile>)>,
}

impl Profile for Combination {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        self.terms.iter().map(|(c, p)| c * p.value(r, z)).sum()
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        d_z.iter_mut().for_each(|d| *d = 0.0);
        let mut tmp = vec![0.0; d_z.len()];
        let mut d_r = 0.0;
        for (c, p) in &self.terms {
            d_r += c * p.gradient(r, z, &mut tmp);
            for (d, t) in d_z.iter_mut().zip(&tmp) {
                *d += c * t;
            }
        }
        d_r
    }
}

/// `σ^{−w}·u(x/σ)` for a dilation weight `w`.
#[derive(Debug, Clone)]
pub struct Dilated {
    pub inner: Arc<dyn Profile>,
    pub sigma: f64,
    pub weight: f64,
}

impl Profile for Dilated {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        let zs: Vec<f64> = z.iter().map(|x| x / self.sigma).collect();
        self.sigma.powf(-self.weight) * self.inner.value(r / self.sigma, &zs)
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        let zs: Vec<f64> = z.iter().map(|x| x / self.sigma).collect();
        let c = self.sigma.powf(-self.weight - 1.0);
        let d_r = self.inner.gradient(r / self.sigma, &zs, d_z);
        d_z.iter_mut().for_each(|d| *d *= c);
        c * d_r
    }
}

/// `u(r, z − shift)`.
#[derive(Debug, Clone)]
pub struct Translated {
    pub inner: Arc<dyn Profile>,
    pub shift: Vec<f64>,
}

impl Profile for Translated {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        let zs: Vec<f64> = z.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        self.inner.value(r, &zs)
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        let zs: Vec<f64> = z.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        self.inner.gradient(r, &zs, d_z)
    }
}

/// `u(r, …, c·z_axis, …)`: stretch of one translation axis.
#[derive(Debug, Clone)]
pub struct AxisStretched {
    pub inner: Arc<dyn Profile>,
    pub axis: usize,
    pub factor: f64,
}

impl Profile for AxisStretched {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        let mut zs = z.to_vec();
        zs[self.axis] *= self.factor;
        self.inner.value(r, &zs)
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        let mut zs = z.to_vec();
        zs[self.axis] *= self.factor;
        let d_r = self.inner.gradient(r, &zs, d_z);
        d_z[self.axis] *= self.factor;
        d_r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{GridSpec, Params};
    use approx::assert_relative_eq;

    fn grid(nr: usize, nz: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Params::new(4, 2.0, 3).unwrap(), GridSpec::new(nr, nz)).unwrap())
    }

    #[derive(Debug)]
    struct Gauss;
    impl Profile for Gauss {
        fn value(&self, r: f64, z: &[f64]) -> f64 {
            (-(r * r + z[0] * z[0])).exp()
        }
        fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
            let v = self.value(r, z);
            d_z[0] = -2.0 * z[0] * v;
            -2.0 * r * v
        }
    }

    #[test]
    fn zero_integrand_is_exactly_zero() {
        let g = grid(16, 24);
        assert_eq!(integrate(&g, &vec![0.0; g.len()]).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_names_node() {
        let g = grid(16, 24);
        let mut f = vec![1.0; g.len()];
        f[37] = f64::NAN;
        match integrate(&g, &f) {
            Err(Error::NonFinite { node, .. }) => assert_eq!(node, 37),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Field::from_values(g.clone(), f, FarField::Decaying).is_err());
    }

    #[test]
    fn gaussian_integral() {
        // ∫_{ℝ⁴} e^{−|x|²} dx = π².
        let g = grid(48, 96);
        let f = Field::from_profile(g.clone(), Arc::new(Gauss)).unwrap();
        let val = integrate(&g, f.values()).unwrap();
        assert_relative_eq!(val, std::f64::consts::PI.powi(2), max_relative = 1e-10);
    }

    #[test]
    fn constant_and_linear_derivatives() {
        let g = grid(16, 24);
        let c = Field::constant(g.clone(), 3.5).unwrap();
        let dc = differentiate(&c);
        assert!(dc.d_r.iter().chain(&dc.d_z[0]).all(|d| d.abs() < 1e-12 * 3.5_f64.max(1.0) * 1e3));
        let lin = Field::from_fn(g.clone(), FarField::Open, |_, z| z[0]).unwrap();
        let dl = differentiate(&lin);
        let nr = g.spec().nodes_r;
        let nz = g.spec().nodes_z;
        for j in 2..nz - 2 {
            for i in 0..nr {
                let idx = i + nr * j;
                assert!((dl.d_z[0][idx] - 1.0).abs() < 1e-8, "node {idx}: {}", dl.d_z[0][idx]);
                assert!(dl.d_r[idx].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn finite_differences_match_exact_gradient() {
        let g = grid(48, 96);
        let exact = Field::from_profile(g.clone(), Arc::new(Gauss)).unwrap();
        let fd = differentiate(&exact);
        let ex = exact.gradient();
        let err: f64 = fd.magnitude.iter().zip(&ex.magnitude).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "max gradient error {err}");
    }

    #[test]
    fn second_derivatives_of_gaussian() {
        let g = grid(48, 96);
        let f = Field::from_profile(g.clone(), Arc::new(Gauss)).unwrap().without_profile();
        let h = hessian(&f);
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let (r, z) = (g.r()[i], g.z(0)[i]);
            let v = (-(r * r + z * z)).exp();
            worst = worst
                .max((h.second[0][0][i] - (4.0 * r * r - 2.0) * v).abs())
                .max((h.second[1][1][i] - (4.0 * z * z - 2.0) * v).abs())
                .max((h.second[0][1][i] - 4.0 * r * z * v).abs());
        }
        assert!(worst < 5e-3, "worst second-derivative error {worst}");
    }

    #[test]
    fn combination_keeps_profile() {
        let g = grid(16, 24);
        let a = Field::from_profile(g.clone(), Arc::new(Gauss)).unwrap();
        let b = Field::combine(&[(2.0, &a), (-0.5, &a)]).unwrap();
        assert!(b.profile().is_some());
        for (x, y) in b.values().iter().zip(a.values()) {
            assert_relative_eq!(*x, 1.5 * y, epsilon = 1e-15);
        }
        let fd_only = a.clone().without_profile();
        assert!(Field::combine(&[(1.0, &a), (1.0, &fd_only)]).unwrap().profile().is_none());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_smooth_values() {
        let g = grid(32, 64);
        let f = Field::from_profile(g.clone(), Arc::new(Gauss)).unwrap().without_profile();
        let idx = 7 + 32 * 30;
        let (r, z) = g.coords(idx);
        assert_relative_eq!(f.interpolate(r, &z).unwrap(), f.values()[idx], epsilon = 1e-13);
        let v = f.interpolate(0.9, &[0.3]).unwrap();
        assert_relative_eq!(v, (-(0.81_f64 + 0.09)).exp(), max_relative = 1e-5);
    }
}
