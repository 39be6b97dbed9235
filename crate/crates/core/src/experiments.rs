//! Sharpness exponents of the stability inequality, the empirical stability
//! constant, and dilation invariance.
//!
//! Two families probe the exponent `γ = max{2, p}`:
//! * anisotropic stretches `u_i(r, z) = v(r, …, (1 + 1/i) z_m)`, whose deficit
//!   decays like `i^{−2}`;
//! * far-away bumps `v + εφ`, whose deficit decays like `ε^p`.

use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::domain::{AxisStretched, Combination, Dilated, Field, Grid, Profile};
use crate::error::{Error, Result};
use crate::functionals::{deficit, grad_energy, grad_norm_p, weighted_inner, weighted_lpstar_norm, DeficitReport};
use crate::manifold::{
    extremal_eval, sharp_constant, tangent_basis, ExtremalParams, ExtremalProfile, TangentDirection, TangentProfile,
};
use crate::projection::{nearest_extremal, ProjectionOptions};
use crate::spectrum::GaussianBlobs;

/// Fewest points accepted by [`DecayFit::fit`].
pub const MIN_FIT_POINTS: usize = 5;

/// Ordinary least squares of `ln y` against `ln x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub slope_ci: f64,
    pub r_squared: f64,
}

impl DecayFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<DecayFit> {
        if xs.len() != ys.len() {
            return Err(Error::Precondition(format!("{} abscissae for {} ordinates", xs.len(), ys.len())));
        }
        if xs.len() < MIN_FIT_POINTS {
            return Err(Error::Precondition(format!(
                "a decay fit needs at least {MIN_FIT_POINTS} points, got {}",
                xs.len()
            )));
        }
        if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0 && **y > 0.0) || !x.is_finite() || !y.is_finite()) {
            return Err(Error::Degenerate(format!("log–log fit needs positive finite data, got ({x}, {y})")));
        }
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Degenerate("all abscissae coincide".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
        let dof = n - 2.0;
        let t = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Degenerate(format!("Student t with {dof} degrees of freedom: {e}")))?
            .inverse_cdf(0.975);
        let slope_ci = t * (ss_res / dof / sxx).sqrt();
        Ok(DecayFit {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slope,
            intercept,
            slope_ci,
            r_squared,
        })
    }
}

fn unit_extremal(grid: &Grid) -> Arc<dyn Profile> {
    Arc::new(ExtremalProfile::new(*grid.params(), ExtremalParams::unit(grid.m())))
}

/// `(‖D(u − v_θ)‖_p / ‖Du‖_p)^γ` at the nearest extremal, from a start at `v_{1,1,0}`.
fn projected_rhs(u: &Field, opts: &ProjectionOptions) -> Result<(f64, ExtremalParams, bool)> {
    let g = u.grid();
    let proj = nearest_extremal(u, &ExtremalParams::unit(g.m()), opts)?;
    let gamma = g.params().stability_exponent();
    let rhs = (proj.distance / grad_norm_p(u)?).powf(gamma);
    Ok((rhs, proj.theta, proj.converged))
}

fn is_monotone_decreasing(ys: &[f64]) -> bool {
    ys.windows(2).all(|w| w[1] <= w[0])
}

// ---------------------------------------------------------------------------
// Anisotropic family

/// `v_{1,1,0}` with its last axial coordinate stretched by `1 + 1/i`.
pub fn anisotropic_member(grid: &Arc<Grid>, i: u32) -> Result<Field> {
    if grid.m() == 0 {
        return Err(Error::Precondition("the anisotropic family stretches an axial coordinate; k = n has none".into()));
    }
    if i == 0 {
        return Err(Error::Precondition("the stretch index must be positive".into()));
    }
    let profile = AxisStretched {
        inner: unit_extremal(grid),
        axis: grid.m() - 1,
        factor: 1.0 + 1.0 / i as f64,
    };
    Field::from_profile(grid.clone(), Arc::new(profile))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicMember {
    pub i: u32,
    pub deficit: f64,
    pub rhs: f64,
    pub theta: ExtremalParams,
    pub projection_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicStudy {
    pub members: Vec<AnisotropicMember>,
    /// `δ(u_i)` against `1/i`.
    pub deficit_fit: DecayFit,
    /// Projected right-hand side against `1/i`.
    pub rhs_fit: DecayFit,
    pub deficit_monotone: bool,
    /// Some projection did not certify convergence.
    pub partial: bool,
    pub warnings: Vec<String>,
}

pub fn sharpness_anisotropic(grid: &Arc<Grid>, i_values: &[u32], opts: &ProjectionOptions) -> Result<AnisotropicStudy> {
    let s = sharp_constant(grid)?;
    let mut sorted = i_values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let members: Vec<AnisotropicMember> = sorted
        .par_iter()
        .map(|&i| {
            let u = anisotropic_member(grid, i)?;
            let d = deficit(&u, s)?.deficit;
            let (rhs, theta, projection_converged) = projected_rhs(&u, opts)?;
            Ok(AnisotropicMember {
                i,
                deficit: d,
                rhs,
                theta,
                projection_converged,
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = members.iter().map(|m| 1.0 / m.i as f64).collect();
    let deficits: Vec<f64> = members.iter().map(|m| m.deficit).collect();
    let rhs: Vec<f64> = members.iter().map(|m| m.rhs).collect();
    let partial = members.iter().any(|m| !m.projection_converged);
    let mut warnings = Vec::new();
    if partial {
        let bad: Vec<u32> = members.iter().filter(|m| !m.projection_converged).map(|m| m.i).collect();
        warnings.push(format!("projection did not converge for i = {bad:?}"));
    }
    Ok(AnisotropicStudy {
        deficit_fit: DecayFit::fit(&xs, &deficits)?,
        rhs_fit: DecayFit::fit(&xs, &rhs)?,
        deficit_monotone: is_monotone_decreasing(&deficits),
        members,
        partial,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Bump family

/// Placement of the ring bump `ψ((r − r₀)/h_r)·Πⱼψ((z_j − z₀ⱼ)/h_z)` with
/// `ψ(x) = exp(−1/(1 − x²))`, centered at `z₀ = (center_z, 0, …)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center_r: f64,
    pub half_width_r: f64,
    pub center_z: f64,
    pub half_width_z: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec {
            center_r: 2.5,
            half_width_r: 0.5,
            center_z: 20.0,
            half_width_z: 0.5,
        }
    }
}

impl BumpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_r > 0.0 && self.half_width_z > 0.0) {
            return Err(Error::Precondition("bump half-widths must be positive".into()));
        }
        if !(self.center_r - self.half_width_r > 0.0) {
            return Err(Error::Precondition(format!(
                "bump support must stay off the singular set r = 0 (r₀ − h_r = {})",
                self.center_r - self.half_width_r
            )));
        }
        Ok(())
    }

    /// `max v_{1,1,0}` over the support (attained at its corner nearest the origin).
    pub fn max_extremal_on_support(&self, grid: &Grid) -> f64 {
        let m = grid.m();
        let mut z = vec![0.0; m];
        if m > 0 {
            z[0] = (self.center_z.abs() - self.half_width_z).max(0.0);
        }
        extremal_eval(grid.params(), &ExtremalParams::unit(m), self.center_r - self.half_width_r, &z)
    }
}

fn cutoff(x: f64) -> (f64, f64) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - x * x;
    let v = (-1.0 / d).exp();
    (v, v * (-2.0 * x / (d * d)))
}

/// Smooth compactly supported ring profile.
#[derive(Debug, Clone)]
pub struct RingBump {
    pub spec: BumpSpec,
}

impl RingBump {
    fn factors(&self, r: f64, z: &[f64]) -> (Vec<(f64, f64)>, (f64, f64)) {
        let s = &self.spec;
        let (a, da) = cutoff((r - s.center_r) / s.half_width_r);
        let zs = z
            .iter()
            .enumerate()
            .map(|(j, &zj)| {
                let c = if j == 0 { s.center_z } else { 0.0 };
                let (b, db) = cutoff((zj - c) / s.half_width_z);
                (b, db / s.half_width_z)
            })
            .collect();
        (zs, (a, da / s.half_width_r))
    }
}

impl Profile for RingBump {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        let (zs, (a, _)) = self.factors(r, z);
        a * zs.iter().map(|f| f.0).product::<f64>()
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        let (zs, (a, da)) = self.factors(r, z);
        let all: f64 = zs.iter().map(|f| f.0).product();
        for (j, d) in d_z.iter_mut().enumerate() {
            let others: f64 = zs.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, f)| f.0).product();
            *d = a * zs[j].1 * others;
        }
        da * all
    }
}

/// The bump rescaled so that `‖Dφ‖_p = ‖Dv‖_p` on the grid, with the scale
/// factor and the number of grid nodes inside its support.
pub fn normalized_bump(grid: &Arc<Grid>, spec: &BumpSpec) -> Result<(Arc<dyn Profile>, f64, usize)> {
    spec.validate()?;
    let raw: Arc<dyn Profile> = Arc::new(RingBump { spec: *spec });
    let field = Field::from_profile(grid.clone(), raw.clone())?;
    let support_nodes = field.values().iter().filter(|v| **v > 0.0).count();
    if support_nodes == 0 {
        return Err(Error::Precondition(format!(
            "the bump support contains no grid nodes at resolution {}; refine the axial axis",
            grid.resolution_label()
        )));
    }
    let v = Field::from_profile(grid.clone(), unit_extremal(grid))?;
    let scale = grad_norm_p(&v)? / grad_norm_p(&field)?;
    let profile: Arc<dyn Profile> = Arc::new(Combination { terms: vec![(scale, raw)] });
    Ok((profile, scale, support_nodes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpMember {
    pub epsilon: f64,
    pub deficit: f64,
    /// `|‖D(v+εφ)‖ᵖ − ‖Dv‖ᵖ − εᵖ‖Dφ‖ᵖ| / (εᵖ‖Dφ‖ᵖ)`.
    pub cross_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpStudy {
    pub spec: BumpSpec,
    pub members: Vec<BumpMember>,
    /// Over the members with `ε > 0`.
    pub fit: DecayFit,
    pub normalization: f64,
    pub support_nodes: usize,
    pub max_extremal_on_support: f64,
    pub max_cross_term: f64,
    pub deficit_monotone: bool,
    pub warnings: Vec<String>,
}

/// Lower edge of the admissible `ε` window relative to `max v` on the support.
const WINDOW_FACTOR: f64 = 10.0;

pub fn sharpness_bump(grid: &Arc<Grid>, eps_values: &[f64], spec: &BumpSpec) -> Result<BumpStudy> {
    if let Some(e) = eps_values.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(Error::Precondition(format!("bump amplitudes must be non-negative, got {e}")));
    }
    let s = sharp_constant(grid)?;
    let (phi, normalization, support_nodes) = normalized_bump(grid, spec)?;
    let v = unit_extremal(grid);
    let v_energy = grad_energy(&Field::from_profile(grid.clone(), v.clone())?)?;
    let phi_energy = grad_energy(&Field::from_profile(grid.clone(), phi.clone())?)?;
    let p = grid.params().p();
    let max_v = spec.max_extremal_on_support(grid);
    let mut eps = eps_values.to_vec();
    eps.sort_by(f64::total_cmp);
    let members: Vec<BumpMember> = eps
        .par_iter()
        .map(|&e| {
            let u = Field::from_profile(
                grid.clone(),
                Arc::new(Combination {
                    terms: vec![(1.0, v.clone()), (e, phi.clone())],
                }),
            )?;
            let d = deficit(&u, s)?.deficit;
            let cross_term = if e > 0.0 {
                let lead = e.powf(p) * phi_energy;
                (grad_energy(&u)? - v_energy - lead).abs() / lead
            } else {
                0.0
            };
            Ok(BumpMember {
                epsilon: e,
                deficit: d,
                cross_term,
            })
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    for m in &members {
        if m.epsilon > 0.0 && m.epsilon <= WINDOW_FACTOR * max_v {
            warnings.push(format!(
                "ε = {} is below the window: max v on the support is {max_v:.3e}",
                m.epsilon
            ));
        }
    }
    let fitted: Vec<&BumpMember> = members.iter().filter(|m| m.epsilon > 0.0).collect();
    let xs: Vec<f64> = fitted.iter().map(|m| m.epsilon).collect();
    let ys: Vec<f64> = fitted.iter().map(|m| m.deficit).collect();
    let mut increasing = ys.clone();
    increasing.reverse();
    Ok(BumpStudy {
        spec: *spec,
        fit: DecayFit::fit(&xs, &ys)?,
        normalization,
        support_nodes,
        max_extremal_on_support: max_v,
        max_cross_term: fitted.iter().map(|m| m.cross_term).fold(0.0, f64::max),
        deficit_monotone: is_monotone_decreasing(&increasing),
        members,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Stability ratio scan

/// A family of perturbations of `v_{1,1,0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Anisotropic { i_values: Vec<u32> },
    Bump { spec: BumpSpec, eps_values: Vec<f64> },
    /// `v + εφ` with Gaussian-blob `φ` made `⟨·,·⟩_*`-orthogonal to the tangent
    /// space and scaled to `‖Dφ‖_p = ‖Dv‖_p`.
    RandomOrthogonal { count: usize, eps_values: Vec<f64>, seed: u64 },
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::Anisotropic { .. } => "anisotropic",
            Family::Bump { .. } => "bump",
            Family::RandomOrthogonal { .. } => "random_orthogonal",
        }
    }
}

/// Both sharpness families plus random tangent-orthogonal perturbations. The
/// bump sits at `z₀ = 4`, close enough to be resolved on default grids.
pub fn default_families() -> Vec<Family> {
    vec![
        Family::Anisotropic {
            i_values: vec![4, 6, 8, 12, 16, 24],
        },
        Family::Bump {
            spec: BumpSpec {
                center_z: 4.0,
                ..BumpSpec::default()
            },
            eps_values: vec![0.05, 0.1, 0.2, 0.3],
        },
        Family::RandomOrthogonal {
            count: 4,
            eps_values: vec![0.05, 0.1, 0.2],
            seed: 7,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMember {
    pub family: String,
    /// `i`, `ε`, or `ε` respectively.
    pub parameter: f64,
    /// Sample index within a random family.
    pub sample: Option<usize>,
    pub deficit: f64,
    /// `δ/S`.
    pub relative_deficit: f64,
    pub rhs: f64,
    /// `δ/rhs`; `None` for the excluded `0/0` case.
    pub ratio: Option<f64>,
    pub theta: ExtremalParams,
    pub projection_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScan {
    pub members: Vec<StabilityMember>,
    /// Empirical stability constant `ĉ = min δ/rhs`.
    pub c_hat: Option<f64>,
    #[serde(rename = "sharp_S")]
    pub sharp_s: f64,
    /// Members with `rhs = 0 < δ`.
    pub anomalies: Vec<String>,
    /// Members with `δ < −tolerance·S`.
    pub inequality_violations: usize,
    pub violation_tolerance: f64,
    pub partial: bool,
}

/// Tangent-orthogonal random perturbation profiles, scaled to `‖Dφ‖_p = ‖Dv‖_p`.
pub fn random_orthogonal_profiles(grid: &Arc<Grid>, count: usize, seed: u64) -> Result<Vec<Arc<dyn Profile>>> {
    let params = *grid.params();
    let th = ExtremalParams::unit(grid.m());
    let basis = tangent_basis(grid, &th)?;
    let chol = basis
        .gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("tangent Gram matrix is not positive definite".into()))?;
    let mut tangents: Vec<Arc<dyn Profile>> = vec![unit_extremal(grid)];
    tangents.push(Arc::new(TangentProfile::new(params, th.clone(), TangentDirection::Dilation)));
    for i in 0..grid.m() {
        tangents.push(Arc::new(TangentProfile::new(params, th.clone(), TangentDirection::Translation(i))));
    }
    let v_norm = grad_norm_p(basis.extremal())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let blobs: Arc<dyn Profile> = Arc::new(GaussianBlobs::sample(&mut rng, grid.m()));
            let field = Field::from_profile(grid.clone(), blobs.clone())?;
            let rhs = DVector::from_iterator(
                basis.len(),
                basis.fields.iter().map(|t| weighted_inner(basis.extremal(), &field, t)).collect::<Result<Vec<_>>>()?,
            );
            let c = chol.solve(&rhs);
            let mut terms = vec![(1.0, blobs)];
            terms.extend(tangents.iter().zip(c.iter()).map(|(t, cj)| (-cj, t.clone())));
            let phi: Arc<dyn Profile> = Arc::new(Combination { terms });
            let scale = v_norm / grad_norm_p(&Field::from_profile(grid.clone(), phi.clone())?)?;
            Ok(Arc::new(Combination { terms: vec![(scale, phi)] }) as Arc<dyn Profile>)
        })
        .collect()
}

/// Relative tolerance on `δ ≥ 0`.
pub const VIOLATION_TOLERANCE: f64 = 1e-6;

pub fn stability_ratio_scan(grid: &Arc<Grid>, families: &[Family], opts: &ProjectionOptions) -> Result<StabilityScan> {
    let s = sharp_constant(grid)?;
    let v = unit_extremal(grid);
    let mut jobs: Vec<(&'static str, f64, Option<usize>, Arc<dyn Profile>)> = Vec::new();
    for family in families {
        let label = family.label();
        match family {
            Family::Anisotropic { i_values } => {
                for &i in i_values {
                    let u = anisotropic_member(grid, i)?;
                    let profile = u.profile().cloned().expect("anisotropic members carry a profile");
                    jobs.push((label, i as f64, None, profile));
                }
            }
            Family::Bump { spec, eps_values } => {
                let (phi, _, _) = normalized_bump(grid, spec)?;
                for &e in eps_values {
                    jobs.push((label, e, None, Arc::new(Combination { terms: vec![(1.0, v.clone()), (e, phi.clone())] })));
                }
            }
            Family::RandomOrthogonal { count, eps_values, seed } => {
                for (idx, phi) in random_orthogonal_profiles(grid, *count, *seed)?.into_iter().enumerate() {
                    for &e in eps_values {
                        jobs.push((
                            label,
                            e,
                            Some(idx),
                            Arc::new(Combination { terms: vec![(1.0, v.clone()), (e, phi.clone())] }),
                        ));
                    }
                }
            }
        }
    }
    let members: Vec<StabilityMember> = jobs
        .into_par_iter()
        .map(|(family, parameter, sample, profile)| {
            let u = Field::from_profile(grid.clone(), profile)?;
            let d = deficit(&u, s)?.deficit;
            let (rhs, theta, projection_converged) = projected_rhs(&u, opts)?;
            let ratio = if rhs > 0.0 { Some(d / rhs) } else { None };
            Ok(StabilityMember {
                family: family.to_string(),
                parameter,
                sample,
                deficit: d,
                relative_deficit: d / s,
                rhs,
                ratio,
                theta,
                projection_converged,
            })
        })
        .collect::<Result<_>>()?;
    let anomalies = members
        .iter()
        .filter(|m| m.rhs == 0.0 && m.deficit > 0.0)
        .map(|m| format!("{} at {}: rhs = 0 with δ = {:e}", m.family, m.parameter, m.deficit))
        .collect();
    Ok(StabilityScan {
        c_hat: members.iter().filter_map(|m| m.ratio).reduce(f64::min),
        sharp_s: s,
        anomalies,
        inequality_violations: members.iter().filter(|m| m.relative_deficit < -VIOLATION_TOLERANCE).count(),
        violation_tolerance: VIOLATION_TOLERANCE,
        partial: members.iter().any(|m| !m.projection_converged),
        members,
    })
}

// ---------------------------------------------------------------------------
// Dilation invariance

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationMember {
    pub sigma: f64,
    pub report: DeficitReport,
    pub grad_norm_rel_change: f64,
    pub weighted_norm_rel_change: f64,
    /// `|δ(u_σ) − δ(u)|`.
    pub deficit_change: f64,
    /// Nodes whose preimage fell outside the mapped range (resampled fields only).
    pub out_of_range: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationSuite {
    pub base: DeficitReport,
    pub members: Vec<DilationMember>,
    /// Largest of the three changes over all members.
    pub max_change: f64,
    pub warnings: Vec<String>,
}

/// `u_σ(x) = σ^{−(n−p)/p} u(x/σ)`: exact through the profile when `u` has one,
/// otherwise resampled by interpolation; returns the count of nodes whose
/// preimage left the mapped range (set to zero).
pub fn dilate(u: &Field, sigma: f64) -> Result<(Field, usize)> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Precondition(format!("dilation factor must be positive, got {sigma}")));
    }
    let g = u.grid();
    if sigma == 1.0 {
        return Ok((u.clone(), 0));
    }
    let weight = g.params().dilation_exponent();
    if let Some(p) = u.profile() {
        let dil = Dilated {
            inner: p.clone(),
            sigma,
            weight,
        };
        return Ok((Field::from_profile(g.clone(), Arc::new(dil))?, 0));
    }
    let mut misses = 0;
    let mut z = vec![0.0; g.m()];
    let scale = sigma.powf(-weight);
    let values = (0..g.len())
        .map(|i| {
            g.z_at(i, &mut z);
            z.iter_mut().for_each(|x| *x /= sigma);
            match u.interpolate(g.r()[i] / sigma, &z) {
                Some(val) => scale * val,
                None => {
                    misses += 1;
                    0.0
                }
            }
        })
        .collect();
    Ok((Field::from_values(g.clone(), values, u.far_field())?, misses))
}

pub fn dilation_invariance_suite(u: &Field, sigmas: &[f64]) -> Result<DilationSuite> {
    let s = sharp_constant(u.grid())?;
    let base = deficit(u, s)?;
    let mut warnings = Vec::new();
    let members: Vec<DilationMember> = sigmas
        .iter()
        .map(|&sigma| {
            let (us, out_of_range) = dilate(u, sigma)?;
            let gn = grad_norm_p(&us)?;
            let wn = weighted_lpstar_norm(&us)?;
            let report = deficit(&us, s)?;
            Ok(DilationMember {
                sigma,
                grad_norm_rel_change: (gn - base.grad_norm).abs() / base.grad_norm,
                weighted_norm_rel_change: (wn - base.weighted_norm).abs() / base.weighted_norm,
                deficit_change: (report.deficit - base.deficit).abs(),
                report,
                out_of_range,
            })
        })
        .collect::<Result<_>>()?;
    for m in &members {
        if m.out_of_range > 0 {
            warnings.push(format!(
                "σ = {}: {} nodes resampled outside the mapped range",
                m.sigma, m.out_of_range
            ));
        }
    }
    let max_change = members
        .iter()
        .map(|m| m.grad_norm_rel_change.max(m.weighted_norm_rel_change).max(m.deficit_change))
        .fold(0.0, f64::max);
    Ok(DilationSuite {
        base,
        members,
        max_change,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{GridSpec, Params};

    fn grid(p: f64, nr: usize, nz: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Params::new(4, p, 3).unwrap(), GridSpec::new(nr, nz)).unwrap())
    }

    #[test]
    fn fit_recovers_power_law() {
        let xs: Vec<f64> = (1..=6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.7)).collect();
        let f = DecayFit::fit(&xs, &ys).unwrap();
        assert!((f.slope + 1.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.r_squared > 1.0 - 1e-12);
        assert!(f.slope_ci < 1e-10);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(DecayFit::fit(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(DecayFit::fit(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 0.0, 4.0, 5.0]).is_err());
        assert!(DecayFit::fit(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn bump_gradient_matches_difference_quotient() {
        let b = RingBump {
            spec: BumpSpec {
                center_z: 1.0,
                ..BumpSpec::default()
            },
        };
        let (r, z, h) = (2.3, [1.2], 1e-6);
        let mut d_z = [0.0];
        let d_r = b.gradient(r, &z, &mut d_z);
        let fd_r = (b.value(r + h, &z) - b.value(r - h, &z)) / (2.0 * h);
        let fd_z = (b.value(r, &[z[0] + h]) - b.value(r, &[z[0] - h])) / (2.0 * h);
        assert!((d_r - fd_r).abs() < 1e-7 && (d_z[0] - fd_z).abs() < 1e-7);
        assert_eq!(b.value(3.0, &z), 0.0);
        assert_eq!(b.value(2.5, &[1.5]), 0.0);
    }

    #[test]
    fn zero_amplitude_has_zero_deficit() {
        let g = grid(2.0, 48, 96);
        let spec = BumpSpec {
            center_z: 4.0,
            ..BumpSpec::default()
        };
        let st = sharpness_bump(&g, &[0.0, 0.05, 0.08, 0.12, 0.2, 0.3], &spec).unwrap();
        assert!(st.members[0].deficit.abs() <= 1e-8);
        assert_eq!(st.fit.xs.len(), 5);
    }

    #[test]
    fn unresolved_bump_is_rejected() {
        let g = grid(2.0, 12, 16);
        assert!(matches!(normalized_bump(&g, &BumpSpec::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn unit_dilation_is_exact() {
        let g = grid(2.0, 32, 64);
        let v = Field::from_profile(g.clone(), unit_extremal(&g)).unwrap();
        let suite = dilation_invariance_suite(&v, &[1.0]).unwrap();
        assert_eq!(suite.max_change, 0.0);
        let raw = v.clone().without_profile();
        let suite = dilation_invariance_suite(&raw, &[1.0]).unwrap();
        assert_eq!(suite.max_change, 0.0);
    }

    #[test]
    fn random_perturbations_are_tangent_orthogonal() {
        let g = grid(2.0, 32, 64);
        let th = ExtremalParams::unit(1);
        let basis = tangent_basis(&g, &th).unwrap();
        for phi in random_orthogonal_profiles(&g, 3, 11).unwrap() {
            let f = Field::from_profile(g.clone(), phi).unwrap();
            let nf = weighted_inner(basis.extremal(), &f, &f).unwrap().sqrt();
            for t in &basis.fields {
                let nt = weighted_inner(basis.extremal(), t, t).unwrap().sqrt();
                assert!(weighted_inner(basis.extremal(), &f, t).unwrap().abs() <= 1e-10 * nf * nt);
            }
        }
    }
}
