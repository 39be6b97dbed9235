//! Closed-form extremals `v_{a,λ,z′}`, their gradients, the tangent space of
//! the extremal manifold, and the sharp constant.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::{Field, FieldKind, Grid, Params, Profile};
use crate::error::{Error, Result};
use crate::functionals::{grad_norm_p, weighted_inner, weighted_lpstar_norm};

/// Manifold coordinates: amplitude `a ≠ 0`, dilation `λ > 0`, translation `z′ ∈ ℝᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalParams {
    pub a: f64,
    pub lambda: f64,
    pub z_prime: Vec<f64>,
}

impl ExtremalParams {
    pub fn new(a: f64, lambda: f64, z_prime: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::InvalidParams(format!("amplitude a = {a} must be finite and nonzero")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("dilation λ = {lambda} must be positive")));
        }
        if z_prime.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParams(format!("translation {z_prime:?} must be finite")));
        }
        Ok(ExtremalParams { a, lambda, z_prime })
    }

    /// The base point `(1, 1, 0)`.
    pub fn unit(m: usize) -> Self {
        ExtremalParams {
            a: 1.0,
            lambda: 1.0,
            z_prime: vec![0.0; m],
        }
    }

    pub fn m(&self) -> usize {
        self.z_prime.len()
    }

    /// Checks the translation dimension against `params`.
    pub fn check(&self, params: &Params) -> Result<()> {
        if self.m() != params.m() {
            return Err(Error::InvalidParams(format!(
                "translation has {} components, expected m = {}",
                self.m(),
                params.m()
            )));
        }
        ExtremalParams::new(self.a, self.lambda, self.z_prime.clone()).map(|_| ())
    }

    /// Optimizer coordinates `(a, ln λ, z′)`.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut x = vec![self.a, self.lambda.ln()];
        x.extend(&self.z_prime);
        x
    }

    pub fn from_coords(x: &[f64]) -> Self {
        ExtremalParams {
            a: x[0],
            lambda: x[1].exp(),
            z_prime: x[2..].to_vec(),
        }
    }
}

impl fmt::Display for ExtremalParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let zs: Vec<String> = self.z_prime.iter().map(|z| z.to_string()).collect();
        write!(f, "a={},lambda={},zprime={}", self.a, self.lambda, zs.join(":"))
    }
}

impl FromStr for ExtremalParams {
    type Err = Error;

    /// Accepts `a=…,lambda=…,zprime=z1:z2…` or the positional `a,λ,z1,z2…`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("cannot parse extremal parameters `{text}`: {what}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
        let parts: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if parts.iter().all(|p| p.contains('=')) {
            let (mut a, mut lambda, mut z) = (None, None, Vec::new());
            for part in parts {
                let (k, v) = part.split_once('=').expect("checked above");
                match k.trim() {
                    "a" => a = Some(num(v)?),
                    "lambda" | "λ" => lambda = Some(num(v)?),
                    "zprime" | "z′" | "z'" => {
                        z = v
                            .split(':')
                            .filter(|s| !s.trim().is_empty())
                            .map(num)
                            .collect::<Result<_>>()?
                    }
                    other => return Err(bad(other)),
                }
            }
            ExtremalParams::new(a.ok_or_else(|| bad("missing a"))?, lambda.ok_or_else(|| bad("missing lambda"))?, z)
        } else {
            if parts.len() < 2 {
                return Err(bad("need at least a and lambda"));
            }
            let vals = parts.iter().map(|p| num(p)).collect::<Result<Vec<_>>>()?;
            ExtremalParams::new(vals[0], vals[1], vals[2..].to_vec())
        }
    }
}

/// Shared algebra of `v = a·λ^q·W^{−e}` with `W = (1+λr)² + |λz − z′|²`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    q: f64,
    e: f64,
}

impl Kernel {
    fn new(params: &Params) -> Self {
        Kernel {
            q: params.dilation_exponent(),
            e: params.profile_exponent(),
        }
    }

    /// Returns `(P = 1+λr, W)` and fills `zs[i] = λz_i − z′_i`.
    #[inline]
    fn bracket(&self, th: &ExtremalParams, r: f64, z: &[f64], zs: &mut [f64]) -> (f64, f64) {
        let p = 1.0 + th.lambda * r;
        let mut w = p * p;
        for ((o, zi), zp) in zs.iter_mut().zip(z).zip(&th.z_prime) {
            *o = th.lambda * zi - zp;
            w += *o * *o;
        }
        (p, w)
    }
}

/// `v_{a,λ,z′}(r, z) = a·λ^{(n−p)/p}·[(1+λr)² + |λz − z′|²]^{−(n−p)/(2(p−1))}`.
pub fn extremal_eval(params: &Params, th: &ExtremalParams, r: f64, z: &[f64]) -> f64 {
    let k = Kernel::new(params);
    let mut zs = vec![0.0; z.len()];
    let (_, w) = k.bracket(th, r, z, &mut zs);
    th.a * th.lambda.powf(k.q) * w.powf(-k.e)
}

/// Extremal gradient in cylindrical components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalGradient {
    pub d_r: f64,
    pub d_z: Vec<f64>,
    pub magnitude: f64,
    /// False at `r = 0`, where the radial unit vector `y/|y|` is undefined
    /// (the magnitude is still the one-sided limit).
    pub direction_defined: bool,
}

/// Closed-form gradient: radial part ∝ `(1+λr)`, axial parts ∝ `(λz − z′)`.
pub fn extremal_gradient(params: &Params, th: &ExtremalParams, r: f64, z: &[f64]) -> ExtremalGradient {
    let mut d_z = vec![0.0; z.len()];
    let d_r = ExtremalProfile::new(*params, th.clone()).gradient(r, z, &mut d_z);
    let magnitude = (d_r * d_r + d_z.iter().map(|d| d * d).sum::<f64>()).sqrt();
    ExtremalGradient {
        d_r,
        d_z,
        magnitude,
        direction_defined: r > 0.0,
    }
}

/// The extremal as a [`Profile`].
#[derive(Debug, Clone)]
pub struct ExtremalProfile {
    params: Params,
    theta: ExtremalParams,
}

impl ExtremalProfile {
    pub fn new(params: Params, theta: ExtremalParams) -> Self {
        ExtremalProfile { params, theta }
    }
}

impl Profile for ExtremalProfile {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        extremal_eval(&self.params, &self.theta, r, z)
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        let k = Kernel::new(&self.params);
        let th = &self.theta;
        let (p, w) = k.bracket(th, r, z, d_z);
        let c = -2.0 * k.e * th.a * th.lambda.powf(k.q) * th.lambda * w.powf(-k.e - 1.0);
        d_z.iter_mut().for_each(|d| *d *= c);
        c * p
    }
}

/// Which tangent direction of the manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentDirection {
    /// `∂_λ v`.
    Dilation,
    /// `∂_{z′_i} v`.
    Translation(usize),
}

/// Closed-form tangent field `∂_λ v_θ` or `∂_{z′_i} v_θ` as a [`Profile`].
#[derive(Debug, Clone)]
pub struct TangentProfile {
    params: Params,
    theta: ExtremalParams,
    direction: TangentDirection,
}

impl TangentProfile {
    pub fn new(params: Params, theta: ExtremalParams, direction: TangentDirection) -> Self {
        TangentProfile {
            params,
            theta,
            direction,
        }
    }

    /// Value and gradient together (`d_z` receives axial components).
    fn eval(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> (f64, f64) {
        let k = Kernel::new(&self.params);
        let th = &self.theta;
        let lam = th.lambda;
        let mut zs = vec![0.0; z.len()];
        let (p, w) = k.bracket(th, r, z, &mut zs);
        let c0 = th.a * lam.powf(k.q);
        let e = k.e;
        let we = w.powf(-e);
        let we1 = we / w;
        let we2 = we1 / w;
        match self.direction {
            TangentDirection::Dilation => {
                // ∂_λ v = a q λ^{q−1} W^{−e} − e c0 W^{−e−1} Λ,  Λ = ∂_λ W.
                let lam_w = 2.0 * (p * r + zs.iter().zip(z).map(|(a, b)| a * b).sum::<f64>());
                let cq = th.a * k.q * lam.powf(k.q - 1.0);
                let value = cq * we - e * c0 * we1 * lam_w;
                let grad = |w_x: f64, lam_x: f64| -> f64 {
                    cq * (-e) * we1 * w_x - e * c0 * ((-e - 1.0) * we2 * w_x * lam_w + we1 * lam_x)
                };
                let d_r = grad(2.0 * lam * p, 2.0 * (lam * r + p));
                for (i, d) in d_z.iter_mut().enumerate() {
                    *d = grad(2.0 * lam * zs[i], 2.0 * (lam * z[i] + zs[i]));
                }
                (value, d_r)
            }
            TangentDirection::Translation(i) => {
                // ∂_{z′_i} v = 2e c0 W^{−e−1} (λz_i − z′_i).
                let c = 2.0 * e * c0;
                let value = c * we1 * zs[i];
                let d_r = c * (-e - 1.0) * we2 * 2.0 * lam * p * zs[i];
                for (j, d) in d_z.iter_mut().enumerate() {
                    *d = c * (-e - 1.0) * we2 * 2.0 * lam * zs[j] * zs[i];
                    if i == j {
                        *d += c * we1 * lam;
                    }
                }
                (value, d_r)
            }
        }
    }
}

impl Profile for TangentProfile {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        let mut scratch = vec![0.0; z.len()];
        self.eval(r, z, &mut scratch).0
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        self.eval(r, z, d_z).1
    }
}

/// Samples `v_θ` on the grid (tagged, with exact gradient).
pub fn extremal_field(grid: &Arc<Grid>, th: &ExtremalParams) -> Result<Field> {
    th.check(grid.params())?;
    let profile = Arc::new(ExtremalProfile::new(*grid.params(), th.clone()));
    Ok(Field::from_profile(grid.clone(), profile)?.with_kind(FieldKind::Extremal(th.clone())))
}

/// Samples a tangent field on the grid.
pub fn tangent_field(grid: &Arc<Grid>, th: &ExtremalParams, direction: TangentDirection) -> Result<Field> {
    th.check(grid.params())?;
    let index = match direction {
        TangentDirection::Dilation => 1,
        TangentDirection::Translation(i) => {
            if i >= th.m() {
                return Err(Error::InvalidParams(format!("translation axis {i} out of range")));
            }
            2 + i
        }
    };
    let profile = Arc::new(TangentProfile::new(*grid.params(), th.clone(), direction));
    Ok(Field::from_profile(grid.clone(), profile)?.with_kind(FieldKind::Tangent(index)))
}

/// Basis `[v, ∂_λv, ∂_{z′₁}v, …]` of the tangent space and its weighted Gram matrix.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    pub theta: ExtremalParams,
    pub fields: Vec<Field>,
    /// `gram[(i, j)] = ⟨fields[i], fields[j]⟩_*` with the weight `|y|⁻¹|v_θ|^{p₁*−2}`.
    pub gram: DMatrix<f64>,
}

impl TangentBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// The extremal itself (first basis element).
    pub fn extremal(&self) -> &Field {
        &self.fields[0]
    }

    /// Whether the Gram matrix admits a Cholesky factorization.
    pub fn gram_is_positive_definite(&self) -> bool {
        self.gram.clone().cholesky().is_some()
    }
}

/// Closed-form tangent fields at `θ` sampled on the grid, plus their Gram matrix.
pub fn tangent_basis(grid: &Arc<Grid>, th: &ExtremalParams) -> Result<TangentBasis> {
    let v = extremal_field(grid, th)?;
    let mut fields = vec![v.clone().with_kind(FieldKind::Tangent(0))];
    fields.push(tangent_field(grid, th, TangentDirection::Dilation)?);
    for i in 0..th.m() {
        fields.push(tangent_field(grid, th, TangentDirection::Translation(i))?);
    }
    let d = fields.len();
    let mut gram = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let g = weighted_inner(&v, &fields[i], &fields[j])?;
            if !g.is_finite() {
                return Err(Error::Degenerate(format!("Gram entry ({i}, {j}) is not finite")));
            }
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    Ok(TangentBasis {
        theta: th.clone(),
        fields,
        gram,
    })
}

/// `S = ‖Dv‖_{L^p} / ‖v‖_{L^{p₁*},|y|⁻¹}` for `v = v_{1,1,0}` by quadrature.
pub fn sharp_constant(grid: &Arc<Grid>) -> Result<f64> {
    sharp_constant_at(grid, &ExtremalParams::unit(grid.m()))
}

/// The same quotient evaluated on `v_θ`; invariant in `θ` up to quadrature error.
pub fn sharp_constant_at(grid: &Arc<Grid>, th: &ExtremalParams) -> Result<f64> {
    let v = extremal_field(grid, th)?;
    Ok(grad_norm_p(&v)? / weighted_lpstar_norm(&v)?)
}
