//! Weighted norms, the deficit, the weighted inner product and the
//! stability right-hand side.

use serde::{Deserialize, Serialize};

use crate::domain::{integrate, Field, GradField, Grid};
use crate::error::{Error, Result};
use crate::manifold::{extremal_field, ExtremalParams};

/// `δ(u) = ‖Du‖_p / ‖u‖_{p₁*,|y|⁻¹} − S` with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub grad_norm: f64,
    pub weighted_norm: f64,
    #[serde(rename = "sharp_S")]
    pub sharp_s: f64,
    pub deficit: f64,
}

fn grad_power_integral(grid: &Grid, grad: &GradField, p: f64) -> Result<f64> {
    let integrand: Vec<f64> = grad.magnitude.iter().map(|g| g.powf(p)).collect();
    integrate(grid, &integrand)
}

/// `∫|Du|^p`.
pub fn grad_energy(u: &Field) -> Result<f64> {
    grad_power_integral(u.grid(), &u.gradient(), u.grid().params().p())
}

/// `(∫|Du|^p)^{1/p}`.
pub fn grad_norm_p(u: &Field) -> Result<f64> {
    Ok(grad_energy(u)?.powf(1.0 / u.grid().params().p()))
}

/// `(∫|Dg|^p)^{1/p}` for an already computed gradient.
pub fn grad_norm_of(grid: &Grid, grad: &GradField) -> Result<f64> {
    let p = grid.params().p();
    Ok(grad_power_integral(grid, grad, p)?.powf(1.0 / p))
}

/// `∫|y|⁻¹|u|^{p₁*}`.
pub fn weighted_energy(u: &Field) -> Result<f64> {
    let g = u.grid();
    let q = g.params().p1_star();
    let integrand: Vec<f64> = u.values().iter().zip(g.r()).map(|(v, r)| v.abs().powf(q) / r).collect();
    integrate(g, &integrand)
}

/// `(∫|y|⁻¹|u|^{p₁*})^{1/p₁*}`.
pub fn weighted_lpstar_norm(u: &Field) -> Result<f64> {
    Ok(weighted_energy(u)?.powf(1.0 / u.grid().params().p1_star()))
}

/// Deficit of `u` against a shared sharp constant.
pub fn deficit(u: &Field, sharp_s: f64) -> Result<DeficitReport> {
    let weighted_norm = weighted_lpstar_norm(u)?;
    if weighted_norm == 0.0 {
        return Err(Error::Degenerate("weighted norm vanishes; the deficit is undefined".into()));
    }
    let grad_norm = grad_norm_p(u)?;
    Ok(DeficitReport {
        grad_norm,
        weighted_norm,
        sharp_s,
        deficit: grad_norm / weighted_norm - sharp_s,
    })
}

/// Nodal weight `|y|⁻¹|v|^{p₁*−2}` of the pairing `⟨·,·⟩_*`.
pub fn inner_weight(v: &Field) -> Vec<f64> {
    let g = v.grid();
    let q = g.params().p1_star();
    v.values().iter().zip(g.r()).map(|(v, r)| v.abs().powf(q - 2.0) / r).collect()
}

/// `⟨f, g⟩_* = ∫|y|⁻¹|v|^{p₁*−2} f g`.
pub fn weighted_inner(v: &Field, f: &Field, g: &Field) -> Result<f64> {
    let grid = v.grid();
    if !f.grid().same_as(grid) || !g.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    weighted_inner_values(grid, &inner_weight(v), f.values(), g.values())
}

/// `⟨f, g⟩_*` from a precomputed weight and raw nodal values.
pub fn weighted_inner_values(grid: &Grid, weight: &[f64], f: &[f64], g: &[f64]) -> Result<f64> {
    let integrand: Vec<f64> = weight.iter().zip(f).zip(g).map(|((w, a), b)| w * (a * b)).collect();
    integrate(grid, &integrand)
}

/// `‖D(u − v_θ)‖_p`.
pub fn grad_distance(u: &Field, th: &ExtremalParams) -> Result<f64> {
    let v = extremal_field(u.grid(), th)?;
    let diff = u.gradient().sub(&v.gradient());
    grad_norm_of(u.grid(), &diff)
}

/// `(‖D(u − v_θ)‖_p / ‖Du‖_p)^γ` with `γ = max{2, p}`.
pub fn stability_rhs(u: &Field, th_min: &ExtremalParams) -> Result<f64> {
    let denom = grad_norm_p(u)?;
    if denom == 0.0 {
        return Err(Error::Degenerate("‖Du‖_p vanishes".into()));
    }
    let gamma = u.grid().params().stability_exponent();
    Ok((grad_distance(u, th_min)? / denom).powf(gamma))
}
