//! Lowest eigenpairs of the symmetric-definite pencil `A x = α B x` with
//! diagonal `B`.
//!
//! The pencil is reduced to `C = D A D`, `D = B^{−1/2}`, and solved by block
//! inverse subspace iteration on a banded Cholesky factor of `C`. The block
//! is re-orthonormalized by modified Gram–Schmidt (applied twice) and
//! rotated by Rayleigh–Ritz every sweep. `C` spans many orders of magnitude
//! between the core and the far field, so Householder QR is avoided: its
//! rounding leaks into the tiny far-field components and stalls residuals.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::band::{BandCholesky, SymBandMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Block size; `None` picks `max(count + 10, 2·count)`.
    pub block: Option<usize>,
    pub max_iterations: usize,
    /// Stop once every wanted residual is below `tolerance·max(1, |α|)`.
    pub tolerance: f64,
    /// The reduced residual has a rounding floor near `eps·‖|C||y|‖`, which
    /// is large where the mass is small. If the residuals stagnate first, the
    /// run still counts as converged when they sit below
    /// `stall_tolerance·max(1, |α|)`.
    pub stall_tolerance: f64,
    pub refinement_steps: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            block: None,
            max_iterations: 400,
            tolerance: 1e-12,
            stall_tolerance: 1e-8,
            refinement_steps: 2,
            seed: 17,
        }
    }
}

/// Eigenpairs of the pencil with `B`-orthonormal vectors.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    /// Eigenvectors `x` in nodal coordinates, `xᵀBx = 1`.
    pub vectors: Vec<Vec<f64>>,
    /// `‖Ax − αBx‖_{B⁻¹} / ‖Bx‖_{B⁻¹} = ‖Cy − αy‖ / ‖y‖` with `y = B^{1/2}x`,
    /// the dual of the `B`-norm the vectors are normalized in. Euclidean
    /// norms are dominated by rounding on the outermost shell, where either
    /// `B` or `A/B` is extreme.
    pub residuals: Vec<f64>,
    /// `max |XᵀBX − I|`.
    pub gram_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt, twice.
fn orthonormalize(block: &mut [Vec<f64>]) -> Result<()> {
    for _ in 0..2 {
        for j in 0..block.len() {
            let (done, rest) = block.split_at_mut(j);
            let col = &mut rest[0];
            for prev in done.iter() {
                let c = dot(prev, col);
                col.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
            }
            let norm = dot(col, col).sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Eigen(format!("block vector {j} collapsed during orthonormalization")));
            }
            col.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(())
}

/// Rotates the block onto Ritz vectors; returns ascending Ritz values.
fn rayleigh_ritz(c: &SymBandMatrix, block: &mut Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let b = block.len();
    let n = c.size();
    let mut cy = vec![vec![0.0; n]; b];
    for (y, out) in block.iter().zip(cy.iter_mut()) {
        c.matvec_compensated(y, out);
    }
    let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&block[i], &cy[j]) + dot(&block[j], &cy[i])));
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("Rayleigh–Ritz eigensolve did not converge".into()))?;
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let rotated: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut out = vec![0.0; n];
            for (i, y) in block.iter().enumerate() {
                let q = eig.eigenvectors[(i, k)];
                out.iter_mut().zip(y).for_each(|(o, v)| *o += q * v);
            }
            out
        })
        .collect();
    *block = rotated;
    Ok(order.iter().map(|&k| eig.eigenvalues[k]).collect())
}

fn validate(a: &SymBandMatrix, b: &[f64], count: usize) -> Result<Vec<f64>> {
    if b.len() != a.size() {
        return Err(Error::Eigen(format!("mass diagonal has {} entries for a {}×{} matrix", b.len(), a.size(), a.size())));
    }
    if count == 0 || count > a.size() {
        return Err(Error::Precondition(format!("cannot request {count} eigenpairs of a {}-dimensional problem", a.size())));
    }
    if let Some(i) = b.iter().position(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::Eigen(format!("mass entry {i} = {:e} is not positive", b[i])));
    }
    Ok(b.iter().map(|x| 1.0 / x.sqrt()).collect())
}

/// Sweeps without halving the worst residual before declaring a floor.
const STALL_SWEEPS: usize = 8;

/// Inverse sweeps on the wanted vectors alone after the block iteration.
const FINAL_SWEEPS: usize = 2;

/// Reduced residual `‖Cy − αy‖ / ‖y‖` with compensated products.
fn residual(c: &SymBandMatrix, alpha: f64, y: &[f64], cy: &mut [f64]) -> f64 {
    c.matvec_compensated(y, cy);
    cy.iter().zip(y).map(|(a, b)| (a - alpha * b).powi(2)).sum::<f64>().sqrt() / dot(y, y).sqrt()
}

fn finish(c: &SymBandMatrix, d: &[f64], values: Vec<f64>, ys: Vec<Vec<f64>>, iterations: usize, converged: bool) -> EigenSolution {
    let n = c.size();
    let mut cy = vec![0.0; n];
    let residuals = values
        .iter()
        .zip(&ys)
        .map(|(alpha, y)| residual(c, *alpha, y, &mut cy))
        .collect();
    let mut gram_error: f64 = 0.0;
    for i in 0..ys.len() {
        for j in 0..ys.len() {
            let g = dot(&ys[i], &ys[j]) - if i == j { 1.0 } else { 0.0 };
            gram_error = gram_error.max(g.abs());
        }
    }
    let vectors = ys.iter().map(|y| y.iter().zip(d).map(|(a, b)| a * b).collect()).collect();
    EigenSolution {
        values,
        vectors,
        residuals,
        gram_error,
        iterations,
        converged,
    }
}

/// Lowest `count` eigenpairs by block inverse subspace iteration.
pub fn eigs(a: &SymBandMatrix, b: &[f64], count: usize, opts: &EigenOptions) -> Result<EigenSolution> {
    let d = validate(a, b, count)?;
    let n = a.size();
    let c = a.congruence(&d);
    let factor: BandCholesky = c.cholesky()?;
    let block_size = opts.block.unwrap_or((count + 10).max(2 * count)).clamp(count, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = (0..block_size).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    orthonormalize(&mut block)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut values = Vec::new();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut scratch = vec![0.0; n];
    while iterations < opts.max_iterations {
        iterations += 1;
        for y in block.iter_mut() {
            *y = factor.solve_refined(&c, y, opts.refinement_steps);
        }
        orthonormalize(&mut block)?;
        values = rayleigh_ritz(&c, &mut block)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen(format!("non-finite Ritz values {values:?}")));
        }
        let worst = (0..count)
            .map(|i| residual(&c, values[i], &block[i], &mut scratch) / values[i].abs().max(1.0))
            .fold(0.0, f64::max);
        if worst <= opts.tolerance {
            converged = true;
            break;
        }
        // Stop at the rounding floor: no progress for several sweeps.
        if worst < 0.5 * best {
            best = worst;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_SWEEPS {
                converged = best <= opts.stall_tolerance;
                break;
            }
        }
    }
    // The full-block rotation mixes eps-sized pieces of the unconverged
    // high modes into the wanted vectors; inverse solves on the wanted
    // vectors alone damp that contamination by α_wanted/α_high.
    block.truncate(count);
    for _ in 0..FINAL_SWEEPS {
        for y in block.iter_mut() {
            *y = factor.solve_refined(&c, y, opts.refinement_steps);
        }
        orthonormalize(&mut block)?;
        values = rayleigh_ritz(&c, &mut block)?;
    }
    Ok(finish(&c, &d, values, block, iterations, converged))
}

/// Dense reference solve of the reduced problem (small grids only).
pub fn eigs_dense(a: &SymBandMatrix, b: &[f64], count: usize) -> Result<EigenSolution> {
    let d = validate(a, b, count)?;
    let c = a.congruence(&d);
    let eig = SymmetricEigen::try_new(c.to_dense(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen("dense eigensolve did not converge".into()))?;
    let mut order: Vec<usize> = (0..c.size()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order[..count].iter().map(|&k| eig.eigenvalues[k]).collect();
    let ys = order[..count]
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    Ok(finish(&c, &d, values, ys, 1, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SymBandMatrix {
        let mut a = SymBandMatrix::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn identity_pencil() {
        let n = 40;
        let mut a = SymBandMatrix::zeros(n, 0);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        for i in 0..n {
            a.set(i, i, b[i]);
        }
        let sol = eigs(&a, &b, 4, &EigenOptions::default()).unwrap();
        for v in &sol.values {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 200;
        let a = tridiag(n);
        let sol = eigs(&a, &vec![1.0; n], 5, &EigenOptions::default()).unwrap();
        for (j, v) in sol.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12 * exact.max(1e-3) * 1e3, "{v} vs {exact}");
        }
        assert!(sol.gram_error < 1e-12);
        assert!(sol.residuals.iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn dense_and_iterative_agree() {
        let n = 60;
        let a = tridiag(n);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i as f64).sin()).collect();
        let it = eigs(&a, &b, 4, &EigenOptions::default()).unwrap();
        let de = eigs_dense(&a, &b, 4).unwrap();
        for (x, y) in it.values.iter().zip(&de.values) {
            assert!((x - y).abs() < 1e-11 * y);
        }
    }

    #[test]
    fn bad_requests() {
        let a = tridiag(5);
        assert!(eigs(&a, &[1.0; 5], 0, &EigenOptions::default()).is_err());
        assert!(eigs(&a, &[1.0; 5], 6, &EigenOptions::default()).is_err());
        assert!(eigs(&a, &[1.0, 1.0, -1.0, 1.0, 1.0], 2, &EigenOptions::default()).is_err());
    }
}
