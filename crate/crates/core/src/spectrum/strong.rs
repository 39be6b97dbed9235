//! Strong form of the linearized operator at `v_{a,1,0}`, used as an
//! independent verification channel for the weak discretization.
//!
//! With `W = (1+r)² + |z|²`, `x̃ = ((1+r)ŷ, z)` and `c = (n−p)/(p−1)`:
//!
//! `L_vφ = −C W^{−α}Δφ − (p−2)(k−1)C W^{−β}(1/r)x̃·Dφ − (p−2)C W^{−β}Σx̃_ix̃_j∂_{ij}φ`
//!
//! where `C = |a|^{p−2}c^{p−2}`, `α = (n−1)(p−2)/(2(p−1))` and
//! `β = (n(p−2)+p)/(2(p−1))`.

use serde::{Deserialize, Serialize};

use crate::domain::{hessian, integrate, Field, Grid};
use crate::error::{Error, Result};
use crate::manifold::{extremal_field, ExtremalParams};

/// Coarsest resolution per axis at which the second-derivative stencils are trusted.
const MIN_TRUSTED_NODES: usize = 32;

fn require_normalized(grid: &Grid, th: &ExtremalParams) -> Result<()> {
    th.check(grid.params())?;
    if th.lambda != 1.0 || th.z_prime.iter().any(|z| *z != 0.0) {
        return Err(Error::Precondition(format!(
            "the strong form is implemented at λ = 1, z′ = 0 only (got {th})"
        )));
    }
    Ok(())
}

/// Nodal values of `L_vφ` from finite-difference derivatives of `φ`.
pub fn apply_linearized_strong(th: &ExtremalParams, phi: &Field) -> Result<Field> {
    let g = phi.grid();
    require_normalized(g, th)?;
    let params = g.params();
    let (n, p, k) = (params.n() as f64, params.p(), params.k() as f64);
    let c = (n - p) / (p - 1.0);
    let coef = th.a.abs().powf(p - 2.0) * c.powf(p - 2.0);
    let alpha = (n - 1.0) * (p - 2.0) / (2.0 * (p - 1.0));
    let beta = (n * (p - 2.0) + p) / (2.0 * (p - 1.0));
    let h = hessian(&phi.clone().without_profile());
    let m = g.m();
    let mut z = vec![0.0; m];
    let values = (0..g.len())
        .map(|i| {
            let r = g.r()[i];
            g.z_at(i, &mut z);
            let pr = 1.0 + r;
            let w = pr * pr + z.iter().map(|x| x * x).sum::<f64>();
            let d_r = h.first[0][i];
            let d_rr = h.second[0][0][i];
            let mut lap = d_rr + (k - 1.0) / r * d_r;
            let mut xd = pr * d_r;
            let mut quad = pr * pr * d_rr;
            for a in 0..m {
                lap += h.second[a + 1][a + 1][i];
                xd += z[a] * h.first[a + 1][i];
                quad += 2.0 * pr * z[a] * h.second[0][a + 1][i];
                for b in 0..m {
                    quad += z[a] * z[b] * h.second[a + 1][b + 1][i];
                }
            }
            let wb = w.powf(-beta);
            -coef * w.powf(-alpha) * lap - (p - 2.0) * (k - 1.0) * coef * wb / r * xd - (p - 2.0) * coef * wb * quad
        })
        .collect();
    Field::from_values(g.clone(), values, phi.far_field())
}

/// Relative residual of `L_vφ = α|y|⁻¹|v|^{p₁*−2}φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongResidual {
    /// `‖L_vφ − α w φ‖ / ‖α w φ‖` in the grid-measure `L²`, `w = |y|⁻¹|v|^{p₁*−2}`.
    pub relative: f64,
    pub eigenvalue: f64,
    pub warnings: Vec<String>,
}

/// Evaluates the eigen-equation residual of `φ` with eigenvalue `alpha`.
pub fn strong_residual(th: &ExtremalParams, phi: &Field, alpha: f64) -> Result<StrongResidual> {
    let g = phi.grid();
    let lphi = apply_linearized_strong(th, phi)?;
    let v = extremal_field(g, th)?;
    let q = g.params().p1_star();
    let mut num = Vec::with_capacity(g.len());
    let mut den = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let rhs = alpha * v.values()[i].abs().powf(q - 2.0) / g.r()[i] * phi.values()[i];
        num.push((lphi.values()[i] - rhs).powi(2));
        den.push(rhs * rhs);
    }
    let den = integrate(g, &den)?;
    if den == 0.0 {
        return Err(Error::Degenerate("residual reference vanishes".into()));
    }
    let mut warnings = Vec::new();
    let res = g.resolution();
    if res.iter().any(|&c| c < MIN_TRUSTED_NODES) {
        warnings.push(format!(
            "resolution {} is below {MIN_TRUSTED_NODES} nodes per axis; second derivatives are under-resolved",
            g.resolution_label()
        ));
    }
    Ok(StrongResidual {
        relative: (integrate(g, &num)? / den).sqrt(),
        eigenvalue: alpha,
        warnings,
    })
}
