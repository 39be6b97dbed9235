//! Weak-form discretization of the linearized operator at an extremal.
//!
//! The quadratic form `∫|Dv|^{p−2}|Dφ|² + (p−2)∫|Dv|^{p−4}(Dv·Dφ)²` is
//! assembled node by node from fourth-order parameter-space gradient
//! stencils, averaged over the forward- and backward-biased stencil pair
//! (a single centered stencil has a checkerboard null mode). The mass form
//! `∫|y|⁻¹|v|^{p₁*−2}φ²` is lumped on the quadrature nodes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::band::{BandMatrix, SymBandMatrix};
use crate::domain::{profile_gradient, Grid, Profile};
use crate::error::{Error, Result};
use crate::manifold::{ExtremalParams, ExtremalProfile};

/// Assembled forms and their diagnostics.
#[derive(Debug, Clone)]
pub struct LinearizedForms {
    pub grid: Arc<Grid>,
    pub theta: ExtremalParams,
    /// `∫|Dv|^{p−2}|Dφ|²` (before symmetrization).
    pub isotropic: BandMatrix,
    /// `(p−2)∫|Dv|^{p−4}(Dv·Dφ)²` (before symmetrization; negative for p < 2).
    pub anisotropic: BandMatrix,
    /// Symmetrized total stiffness `A`.
    pub stiffness: SymBandMatrix,
    /// Lumped mass diagonal `B`.
    pub mass: Vec<f64>,
    pub diagnostics: FormDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormDiagnostics {
    /// `max|A − Aᵀ| / max|A|` before symmetrization.
    pub relative_asymmetry: f64,
    /// Smallest nodal eigenvalue of the coefficient `|Dv|^{p−2}(I + (p−2)êêᵀ)`,
    /// i.e. `|Dv|^{p−2}·min{1, p−1}`; positive means the form is coercive nodewise.
    pub min_coefficient: f64,
    pub min_coefficient_node: usize,
    pub bandwidth: usize,
}

/// Band half-width covering every product of two gradient stencils.
fn stiffness_bandwidth(grid: &Grid) -> usize {
    let mut strides: Vec<usize> = (0..=grid.m()).map(|d| grid.stride(d)).collect();
    strides.sort_unstable_by(|a, b| b.cmp(a));
    let top = strides[0];
    let second = strides.get(1).copied().unwrap_or(0);
    4 * (top + second).max(top)
}

/// Gradient stencil of node `idx` along `dir` with the given bias, as global
/// `(node, coefficient)` pairs.
fn gradient_row(grid: &Grid, idx: usize, dir: usize, bias: usize, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let axis = grid.axis(dir);
    let stride = grid.stride(dir);
    let pos = grid.position(idx, dir);
    let base = idx - pos * stride;
    let scale = axis.dparam[pos];
    for &(j, w) in &axis.stencils.biased[bias][pos].entries {
        out.push((base + j * stride, w * scale));
    }
}

fn add_outer(mat: &mut BandMatrix, coef: f64, a: &[(usize, f64)], b: &[(usize, f64)]) {
    for &(i, gi) in a {
        for &(j, gj) in b {
            mat.add(i, j, coef * gi * gj);
        }
    }
}

/// Assembles `A` (weak linearized form) and the lumped `B` at `v_θ`.
pub fn assemble_forms(grid: &Arc<Grid>, th: &ExtremalParams) -> Result<LinearizedForms> {
    th.check(grid.params())?;
    let params = *grid.params();
    let p = params.p();
    let q = params.p1_star();
    let n = grid.len();
    let dims = 1 + grid.m();
    let profile = ExtremalProfile::new(params, th.clone());
    let grad = profile_gradient(grid, &profile);
    let bw = stiffness_bandwidth(grid);
    let mut iso = BandMatrix::zeros(n, bw);
    let mut aniso = BandMatrix::zeros(n, bw);
    let mut mass = Vec::with_capacity(n);
    let mut min_coef = (f64::INFINITY, 0);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dims];
    let mut directional: Vec<(usize, f64)> = Vec::new();
    let mut z = vec![0.0; grid.m()];
    for idx in 0..n {
        let w = grid.quad_weights()[idx];
        let r = grid.r()[idx];
        let mag = grad.magnitude[idx];
        grid.z_at(idx, &mut z);
        let v = profile.value(r, &z);
        let b = w * v.abs().powf(q - 2.0) / r;
        let coef = mag.powf(p - 2.0);
        if !(mag > 0.0) || !coef.is_finite() || !b.is_finite() || !(b > 0.0) {
            return Err(Error::NonFinite {
                node: idx,
                r,
                z: z.clone(),
                value: if b.is_finite() { coef } else { b },
            });
        }
        mass.push(b);
        let node_min = coef * (p - 1.0).min(1.0);
        if node_min < min_coef.0 {
            min_coef = (node_min, idx);
        }
        let mut unit = vec![grad.d_r[idx] / mag];
        unit.extend(grad.d_z.iter().map(|c| c[idx] / mag));
        for bias in 0..2 {
            for (dir, row) in rows.iter_mut().enumerate() {
                gradient_row(grid, idx, dir, bias, row);
            }
            for row in &rows {
                add_outer(&mut iso, 0.5 * w * coef, row, row);
            }
            if p != 2.0 {
                directional.clear();
                for (row, e) in rows.iter().zip(&unit) {
                    directional.extend(row.iter().map(|&(j, g)| (j, g * e)));
                }
                add_outer(&mut aniso, 0.5 * w * (p - 2.0) * coef, &directional, &directional);
            }
        }
    }
    let total = iso.add_scaled(1.0, &aniso);
    let scale = total.max_abs();
    let diagnostics = FormDiagnostics {
        relative_asymmetry: if scale > 0.0 { total.max_asymmetry() / scale } else { 0.0 },
        min_coefficient: min_coef.0,
        min_coefficient_node: min_coef.1,
        bandwidth: bw,
    };
    Ok(LinearizedForms {
        grid: grid.clone(),
        theta: th.clone(),
        stiffness: total.symmetrized(),
        isotropic: iso,
        anisotropic: aniso,
        mass,
        diagnostics,
    })
}

impl LinearizedForms {
    /// `φᵀAφ / φᵀBφ`.
    pub fn rayleigh_quotient(&self, phi: &[f64]) -> f64 {
        let num = self.stiffness.bilinear(phi, phi);
        let den: f64 = phi.iter().zip(&self.mass).map(|(x, b)| b * x * x).sum();
        num / den
    }

    /// `φᵀBψ`.
    pub fn mass_inner(&self, phi: &[f64], psi: &[f64]) -> f64 {
        phi.iter().zip(psi).zip(&self.mass).map(|((a, b), m)| m * a * b).sum()
    }
}
