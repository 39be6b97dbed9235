//! Spectrum of the linearized operator at an extremal: weak-form assembly,
//! generalized eigensolve, comparison with the closed-form eigenvalues
//! `(p−1)Sᵖ‖v‖^{p−p₁*}` and `(p₁*−1)Sᵖ‖v‖^{p−p₁*}`, the spectral gap above
//! the tangent cluster, and Rayleigh/Poincaré sampling.

pub mod band;
pub mod eigen;
pub mod forms;
pub mod strong;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use band::{BandCholesky, BandMatrix, SymBandMatrix};
pub use eigen::{eigs, eigs_dense, EigenOptions, EigenSolution};
pub use forms::{assemble_forms, FormDiagnostics, LinearizedForms};
pub use strong::{apply_linearized_strong, strong_residual, StrongResidual};

use crate::domain::{FarField, Field, Grid, Profile};
use crate::error::{Error, Result};
use crate::functionals::weighted_lpstar_norm;
use crate::manifold::{extremal_field, sharp_constant, ExtremalParams, TangentBasis};

/// Sorted eigenpairs of the discrete linearized operator plus the scale
/// factors of the closed-form eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub theta: ExtremalParams,
    pub eigenvalues: Vec<f64>,
    /// `αᵢ / (Sᵖ‖v‖^{p−p₁*})`, to be compared with `p−1` and `p₁*−1`.
    pub scaled_eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<Field>,
    #[serde(rename = "sharp_S")]
    pub sharp_s: f64,
    /// `‖v‖^{p−p₁*}` in the weighted `L^{p₁*}` norm.
    pub norm_factor: f64,
    /// Reduced-coordinate residuals `‖Ax − αBx‖_{B⁻¹} / ‖Bx‖_{B⁻¹}`.
    pub residuals: Vec<f64>,
    /// `max |XᵀBX − I|`.
    pub gram_error: f64,
    pub grid_resolution: String,
    pub iterations: usize,
    pub converged: bool,
    pub forms: FormDiagnostics,
}

/// Assembles the forms at `v_θ` and computes the lowest `count` eigenpairs.
pub fn linearized_spectrum(
    grid: &Arc<Grid>,
    th: &ExtremalParams,
    count: usize,
    opts: &EigenOptions,
) -> Result<(SpectralResult, LinearizedForms)> {
    let forms = assemble_forms(grid, th)?;
    let sol = eigs(&forms.stiffness, &forms.mass, count, opts)?;
    let result = spectral_result(grid, th, &forms, sol)?;
    Ok((result, forms))
}

/// Packages an eigen-solution of `forms` with the closed-form scale factors.
pub fn spectral_result(grid: &Arc<Grid>, th: &ExtremalParams, forms: &LinearizedForms, sol: EigenSolution) -> Result<SpectralResult> {
    let params = grid.params();
    let s = sharp_constant(grid)?;
    let v = extremal_field(grid, th)?;
    let norm_factor = weighted_lpstar_norm(&v)?.powf(params.p() - params.p1_star());
    let scale = s.powf(params.p()) * norm_factor;
    let eigenvectors = sol
        .vectors
        .into_iter()
        .map(|x| Field::from_values(grid.clone(), x, FarField::Decaying))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralResult {
        theta: th.clone(),
        scaled_eigenvalues: sol.values.iter().map(|a| a / scale).collect(),
        eigenvalues: sol.values,
        eigenvectors,
        sharp_s: s,
        norm_factor,
        residuals: sol.residuals,
        gram_error: sol.gram_error,
        grid_resolution: grid.resolution_label(),
        iterations: sol.iterations,
        converged: sol.converged,
        forms: forms.diagnostics.clone(),
    })
}

/// Tolerances for [`verify_eigen_structure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenTolerances {
    pub first: f64,
    pub second: f64,
    pub ratio: f64,
    pub min_cosine: f64,
}

impl Default for EigenTolerances {
    fn default() -> Self {
        EigenTolerances {
            first: 0.02,
            second: 0.03,
            ratio: 0.03,
            min_cosine: 0.99,
        }
    }
}

/// Comparison of a computed spectrum with the closed-form eigen-structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    pub expected_first: f64,
    pub expected_second: f64,
    pub first_rel_error: f64,
    /// One entry per member of the second cluster (size `m+1`).
    pub second_rel_errors: Vec<f64>,
    /// Mean of the second cluster over the first eigenvalue, and its target `(p₁*−1)/(p−1)`.
    pub ratio: f64,
    pub expected_ratio: f64,
    pub ratio_rel_error: f64,
    /// `|⟨x₁, v⟩_B| / ‖v‖_B`.
    pub first_cosine: f64,
    /// Principal-angle cosines between the computed second eigenspace and
    /// `span{∂_λv, ∂_{z′}v}`, descending.
    pub second_cosines: Vec<f64>,
    pub tolerances: EigenTolerances,
    pub pass_first: bool,
    pub pass_second: bool,
    pub pass_ratio: bool,
    pub pass_alignment: bool,
}

impl EigenCheck {
    pub fn passed(&self) -> bool {
        self.pass_first && self.pass_second && self.pass_ratio && self.pass_alignment
    }
}

fn b_inner(b: &[f64], x: &[f64], y: &[f64]) -> f64 {
    b.iter().zip(x).zip(y).map(|((b, x), y)| b * x * y).sum()
}

/// `B`-orthonormal basis of the given vectors (Gram–Schmidt, twice).
fn b_orthonormalize(b: &[f64], vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = b_inner(b, q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = b_inner(b, &w, &w).sqrt();
        if !(norm > 1e-300) {
            return Err(Error::Degenerate("linearly dependent vectors in B-orthonormalization".into()));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        out.push(w);
    }
    Ok(out)
}

/// Cosines of the principal angles between two spans in the `B` inner product.
pub fn principal_cosines(b: &[f64], left: &[Vec<f64>], right: &[Vec<f64>]) -> Result<Vec<f64>> {
    let ql = b_orthonormalize(b, left)?;
    let qr = b_orthonormalize(b, right)?;
    let m = DMatrix::from_fn(ql.len(), qr.len(), |i, j| b_inner(b, &ql[i], &qr[j]));
    let mut s: Vec<f64> = m.singular_values().iter().map(|x| x.min(1.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Checks eigenvalues and eigenspaces against the closed-form first two
/// eigenvalues and the tangent space.
pub fn verify_eigen_structure(result: &SpectralResult, forms: &LinearizedForms, basis: &TangentBasis, tol: EigenTolerances) -> Result<EigenCheck> {
    let grid = forms.grid.clone();
    if basis.theta != result.theta || !basis.fields[0].grid().same_as(&grid) {
        return Err(Error::GridMismatch);
    }
    let params = grid.params();
    let m = basis.len() - 2;
    if result.eigenvalues.len() < m + 2 {
        return Err(Error::Precondition(format!(
            "need at least {} eigenpairs to check the first two eigenspaces",
            m + 2
        )));
    }
    let (p, q) = (params.p(), params.p1_star());
    let scale = result.sharp_s.powf(p) * result.norm_factor;
    let expected_first = (p - 1.0) * scale;
    let expected_second = (q - 1.0) * scale;
    let alphas = &result.eigenvalues;
    let first_rel_error = (alphas[0] / expected_first - 1.0).abs();
    let cluster = &alphas[1..m + 2];
    let second_rel_errors: Vec<f64> = cluster.iter().map(|a| (a / expected_second - 1.0).abs()).collect();
    let ratio = cluster.iter().sum::<f64>() / cluster.len() as f64 / alphas[0];
    let expected_ratio = (q - 1.0) / (p - 1.0);
    let ratio_rel_error = (ratio / expected_ratio - 1.0).abs();

    let b = &forms.mass;
    let v = basis.fields[0].values();
    let x1 = result.eigenvectors[0].values();
    let first_cosine = b_inner(b, x1, v).abs() / (b_inner(b, v, v) * b_inner(b, x1, x1)).sqrt();
    let computed: Vec<Vec<f64>> = result.eigenvectors[1..m + 2].iter().map(|f| f.values().to_vec()).collect();
    let tangents: Vec<Vec<f64>> = basis.fields[1..].iter().map(|f| f.values().to_vec()).collect();
    let second_cosines = principal_cosines(b, &computed, &tangents)?;
    let min_cos = second_cosines.iter().copied().fold(first_cosine, f64::min);
    Ok(EigenCheck {
        expected_first,
        expected_second,
        first_rel_error,
        pass_first: first_rel_error <= tol.first,
        pass_second: second_rel_errors.iter().all(|e| *e <= tol.second),
        second_rel_errors,
        ratio,
        expected_ratio,
        pass_ratio: ratio_rel_error <= tol.ratio,
        ratio_rel_error,
        first_cosine,
        second_cosines,
        pass_alignment: min_cos >= tol.min_cosine,
        tolerances: tol,
    })
}

/// Discrete spectral gap above the second cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    /// `(α_next − α₂)/2`.
    pub lambda_hat: f64,
    /// Mean of the second cluster.
    pub alpha2: f64,
    pub cluster: Vec<f64>,
    /// First eigenvalue above the cluster.
    pub alpha_next: f64,
    /// `α_next / α₂`.
    pub separation_ratio: f64,
}

/// Groups eigenvalues whose consecutive relative gaps are below `rel_gap`.
pub fn cluster_eigenvalues(values: &[f64], rel_gap: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some(c) if (v - c[c.len() - 1]).abs() <= rel_gap * v.abs() => c.push(v),
            _ => out.push(vec![v]),
        }
    }
    out
}

/// `λ̂ = (α_{m+3} − α₂)/2` after checking that eigenvalues `2..=m+2` form an
/// isolated cluster of size `m+1` at relative gap `rel_gap`.
pub fn spectral_gap_estimate(eigenvalues: &[f64], m: usize, rel_gap: f64) -> Result<GapEstimate> {
    if eigenvalues.len() < m + 3 {
        return Err(Error::Precondition(format!(
            "the gap estimate needs at least m+3 = {} eigenvalues, got {}",
            m + 3,
            eigenvalues.len()
        )));
    }
    let clusters = cluster_eigenvalues(eigenvalues, rel_gap);
    if clusters.len() < 3 || clusters[0].len() != 1 || clusters[1].len() != m + 1 {
        return Err(Error::Cluster(eigenvalues.to_vec()));
    }
    let cluster = clusters[1].clone();
    let alpha2 = cluster.iter().sum::<f64>() / cluster.len() as f64;
    let alpha_next = clusters[2][0];
    Ok(GapEstimate {
        lambda_hat: 0.5 * (alpha_next - alpha2),
        alpha2,
        cluster,
        alpha_next,
        separation_ratio: alpha_next / alpha2,
    })
}

/// Sum of Gaussian blobs `Σ cᵢ exp(−|(r, z) − (r₀ᵢ, z₀ᵢ)|²/sᵢ²)` in the reduced
/// half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlobs {
    /// `(c, r₀, z₀, s)` per blob.
    pub blobs: Vec<(f64, f64, Vec<f64>, f64)>,
}

impl GaussianBlobs {
    /// Three blobs with coefficients in `[−1, 1)`, centers in `[0, 3) × [−3, 3)^m`
    /// and widths in `[0.5, 2)`.
    pub fn sample(rng: &mut impl Rng, m: usize) -> Self {
        let blobs = (0..3)
            .map(|_| {
                let c = rng.gen_range(-1.0..1.0);
                let r0 = rng.gen_range(0.0..3.0);
                let z0 = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let s = rng.gen_range(0.5..2.0);
                (c, r0, z0, s)
            })
            .collect();
        GaussianBlobs { blobs }
    }
}

impl Profile for GaussianBlobs {
    fn value(&self, r: f64, z: &[f64]) -> f64 {
        self.blobs
            .iter()
            .map(|(c, r0, z0, s)| {
                let d2 = (r - r0).powi(2) + z.iter().zip(z0).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                c * (-d2 / (s * s)).exp()
            })
            .sum()
    }

    fn gradient(&self, r: f64, z: &[f64], d_z: &mut [f64]) -> f64 {
        d_z.iter_mut().for_each(|d| *d = 0.0);
        let mut d_r = 0.0;
        for (c, r0, z0, s) in &self.blobs {
            let d2 = (r - r0).powi(2) + z.iter().zip(z0).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let g = -2.0 * c * (-d2 / (s * s)).exp() / (s * s);
            d_r += g * (r - r0);
            for ((d, a), b) in d_z.iter_mut().zip(z).zip(z0) {
                *d += g * (a - b);
            }
        }
        d_r
    }
}

/// Seeded smooth decaying test fields: nodal values of [`GaussianBlobs::sample`].
pub fn random_test_fields(grid: &Grid, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = grid.m();
    let mut z = vec![0.0; m];
    (0..count)
        .map(|_| {
            let blobs = GaussianBlobs::sample(&mut rng, m);
            (0..grid.len())
                .map(|i| {
                    grid.z_at(i, &mut z);
                    blobs.value(grid.r()[i], &z)
                })
                .collect()
        })
        .collect()
}

/// Rayleigh quotients of random fields made `B`-orthogonal to the tangent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub samples: usize,
    pub min_quotient: f64,
    /// `α₂ + λ̂`.
    pub bound: f64,
    /// Samples with quotient below `bound·(1 − slack)`.
    pub violations: usize,
    pub slack: f64,
    /// Largest normalized orthogonality residual over the samples.
    pub max_orthogonality_residual: f64,
    pub seed: u64,
}

pub fn rayleigh_bound_check(
    forms: &LinearizedForms,
    basis: &TangentBasis,
    gap: &GapEstimate,
    samples: usize,
    slack: f64,
    seed: u64,
) -> Result<RayleighReport> {
    let b = &forms.mass;
    let tangents: Vec<Vec<f64>> = basis.fields.iter().map(|f| f.values().to_vec()).collect();
    let q = b_orthonormalize(b, &tangents)?;
    let bound = gap.alpha2 + gap.lambda_hat;
    let mut min_quotient = f64::INFINITY;
    let mut worst_res: f64 = 0.0;
    let mut violations = 0;
    for mut phi in random_test_fields(&forms.grid, samples, seed) {
        for _ in 0..2 {
            for t in &q {
                let c = b_inner(b, t, &phi);
                phi.iter_mut().zip(t).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = b_inner(b, &phi, &phi).sqrt();
        for t in &tangents {
            let cos = b_inner(b, &phi, t).abs() / (norm * b_inner(b, t, t).sqrt());
            worst_res = worst_res.max(cos);
        }
        let rq = forms.rayleigh_quotient(&phi);
        min_quotient = min_quotient.min(rq);
        if rq < bound * (1.0 - slack) {
            violations += 1;
        }
    }
    Ok(RayleighReport {
        samples,
        min_quotient,
        bound,
        violations,
        slack,
        max_orthogonality_residual: worst_res,
        seed,
    })
}

/// Empirical constant of `∫|y|⁻¹|v|^{p₁*−2}φ² ≤ C∫|Dv|^{p−2}|Dφ|²` over random fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareEstimate {
    pub samples: usize,
    pub max_ratio: f64,
    pub seed: u64,
}

pub fn poincare_estimate(forms: &LinearizedForms, samples: usize, seed: u64) -> Result<PoincareEstimate> {
    let iso = forms.isotropic.symmetrized();
    let mut max_ratio: f64 = 0.0;
    for phi in random_test_fields(&forms.grid, samples, seed) {
        let den = iso.bilinear(&phi, &phi);
        if !(den > 0.0) {
            return Err(Error::Degenerate("vanishing Dirichlet energy for a nonzero test field".into()));
        }
        max_ratio = max_ratio.max(b_inner(&forms.mass, &phi, &phi) / den);
    }
    Ok(PoincareEstimate { samples, max_ratio, seed })
}
