//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so every line reaches the
//! terminal under `cargo test`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use hsm_core::domain::{Grid, GridSpec, Params};
use hsm_core::experiments::{
    default_families, dilation_invariance_suite, sharpness_anisotropic, sharpness_bump, stability_ratio_scan, BumpSpec,
};
use hsm_core::functionals::weighted_lpstar_norm;
use hsm_core::ineqlab::{
    check_ckn, check_fz21, check_fz24, check_hardy_sobolev, check_theta_bounds, check_weighted_hardy, fz21_point,
    CknExponents, IneqCheckReport, MuRange, WeightBranch,
};
use hsm_core::manifold::{
    extremal_field, sharp_constant, sharp_constant_at, tangent_basis, tangent_field, ExtremalParams, TangentDirection,
};
use hsm_core::projection::{nearest_extremal, orthogonal_select, ProjectionOptions};
use hsm_core::spectrum::{
    linearized_spectrum, rayleigh_bound_check, spectral_gap_estimate, strong_residual, verify_eigen_structure, EigenOptions,
    EigenTolerances, LinearizedForms, SpectralResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPONENTS: [f64; 3] = [1.5, 2.0, 2.5];
const ANISOTROPIC_I: [u32; 7] = [4, 6, 8, 12, 16, 24, 32];
const BUMP_EPS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];
const SAMPLES: usize = 100_000;

type Outcome = Result<(bool, String), hsm_core::Error>;

fn grid(p: f64, nr: usize, nz: usize) -> Arc<Grid> {
    Arc::new(Grid::new(Params::new(4, p, 3).unwrap(), GridSpec::new(nr, nz)).unwrap())
}

struct Spectrum {
    p: f64,
    grid: Arc<Grid>,
    result: SpectralResult,
    forms: LinearizedForms,
}

fn spectra() -> Result<Vec<Spectrum>, hsm_core::Error> {
    EXPONENTS
        .iter()
        .map(|&p| {
            let grid = grid(p, 48, 96);
            let (result, forms) = linearized_spectrum(&grid, &ExtremalParams::unit(1), 6, &EigenOptions::default())?;
            Ok(Spectrum { p, grid, result, forms })
        })
        .collect()
}

fn tolerances(p: f64) -> EigenTolerances {
    if p == 2.0 {
        EigenTolerances::default()
    } else {
        EigenTolerances {
            first: 0.05,
            second: 0.05,
            ratio: 0.05,
            ..EigenTolerances::default()
        }
    }
}

fn eigenvalue_formulas(spectra: &[Spectrum]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in spectra {
        let basis = tangent_basis(&s.grid, &s.result.theta)?;
        let c = verify_eigen_structure(&s.result, &s.forms, &basis, tolerances(s.p))?;
        let min_cos = c.second_cosines.iter().copied().fold(c.first_cosine, f64::min);
        let worst_second = c.second_rel_errors.iter().copied().fold(0.0, f64::max);
        ok &= c.passed() && s.result.converged;
        parts.push(format!(
            "p={}: α₁ err {:.2e}, α₂ err {:.2e}, min cos {:.5}",
            s.p, c.first_rel_error, worst_second, min_cos
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn eigenvalue_ratio(spectra: &[Spectrum]) -> Outcome {
    let s = spectra.iter().find(|s| s.p == 2.0).unwrap();
    let basis = tangent_basis(&s.grid, &s.result.theta)?;
    let c = verify_eigen_structure(&s.result, &s.forms, &basis, EigenTolerances::default())?;
    Ok((
        c.ratio_rel_error <= 0.03,
        format!("α₂/α₁ = {:.4} (want {:.4}, err {:.2e})", c.ratio, c.expected_ratio, c.ratio_rel_error),
    ))
}

fn anisotropic_sharpness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in EXPONENTS {
        let study = sharpness_anisotropic(&grid(p, 48, 96), &ANISOTROPIC_I, &ProjectionOptions::default())?;
        let fit = &study.deficit_fit;
        ok &= (fit.slope - 2.0).abs() <= 0.15 && fit.r_squared >= 0.99;
        parts.push(format!("p={p}: slope {:.3}, r² {:.5}", fit.slope, fit.r_squared));
    }
    Ok((ok, parts.join("; ")))
}

fn bump_sharpness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in EXPONENTS {
        let study = sharpness_bump(&grid(p, 64, 384), &BUMP_EPS, &BumpSpec::default())?;
        let fit = &study.fit;
        ok &= (fit.slope - p).abs() <= 0.1 && fit.r_squared >= 0.99;
        parts.push(format!("p={p}: slope {:.3}, r² {:.5}", fit.slope, fit.r_squared));
    }
    Ok((ok, parts.join("; ")))
}

fn stability_inequality() -> Outcome {
    let families = default_families();
    let opts = ProjectionOptions::default();
    let coarse = stability_ratio_scan(&grid(2.0, 48, 96), &families, &opts)?;
    let fine = stability_ratio_scan(&grid(2.0, 64, 128), &families, &opts)?;
    let (Some(c1), Some(c2)) = (coarse.c_hat, fine.c_hat) else {
        return Ok((false, "no admissible members".into()));
    };
    let drift = (c2 / c1 - 1.0).abs();
    let violations = coarse.inequality_violations + fine.inequality_violations;
    Ok((
        c1 > 0.0 && c2 > 0.0 && drift <= 0.3 && violations == 0 && !coarse.partial && !fine.partial,
        format!("ĉ = {c1:.4} (48×96), {c2:.4} (64×128), drift {drift:.3}, {violations} violations"),
    ))
}

fn projection() -> Outcome {
    let grid = grid(2.0, 48, 96);
    let target = ExtremalParams::new(1.3, 0.7, vec![0.5])?;
    let u = extremal_field(&grid, &target)?;
    let start = ExtremalParams::unit(1);
    let opts = ProjectionOptions::default();
    let near = nearest_extremal(&u, &start, &opts)?;
    let ortho = orthogonal_select(&u, &start, &opts)?;
    let err_near = parameter_error(&near.theta, &target);
    let err_ortho = parameter_error(&ortho.theta, &target);
    let residual = ortho.ortho_residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok((
        err_near <= 1e-4
            && err_ortho <= 1e-4
            && near.distance <= 1e-5
            && ortho.converged
            && ortho.ortho_residuals.len() == 3
            && residual <= 1e-6,
        format!(
            "parameter error {err_near:.2e} (distance), {err_ortho:.2e} (orthogonal), distance {:.2e}, \
             max orthogonality residual {residual:.2e}",
            near.distance
        ),
    ))
}

fn parameter_error(got: &ExtremalParams, want: &ExtremalParams) -> f64 {
    let mut err = (got.a - want.a).abs().max((got.lambda - want.lambda).abs());
    for (a, b) in got.z_prime.iter().zip(&want.z_prime) {
        err = err.max((a - b).abs());
    }
    err
}

fn strong_residuals_at(nr: usize, nz: usize) -> Result<(f64, f64), hsm_core::Error> {
    let grid = grid(2.0, nr, nz);
    let params = *grid.params();
    let th = ExtremalParams::unit(1);
    let v = extremal_field(&grid, &th)?;
    let scale = sharp_constant(&grid)?.powf(params.p()) * weighted_lpstar_norm(&v)?.powf(params.p() - params.p1_star());
    let el = strong_residual(&th, &v, (params.p() - 1.0) * scale)?;
    let dv = tangent_field(&grid, &th, TangentDirection::Dilation)?;
    let lin = strong_residual(&th, &dv, (params.p1_star() - 1.0) * scale)?;
    Ok((el.relative, lin.relative))
}

fn euler_lagrange_residuals() -> Outcome {
    let (el1, lin1) = strong_residuals_at(48, 96)?;
    let (el2, lin2) = strong_residuals_at(64, 128)?;
    Ok((
        el1 <= 1e-2 && lin1 <= 1e-2 && el2 < el1 && lin2 < lin1,
        format!("extremal {el1:.2e} → {el2:.2e}, dilation mode {lin1:.2e} → {lin2:.2e}"),
    ))
}

fn invariance() -> Outcome {
    let grid = grid(2.0, 96, 192);
    let v = extremal_field(&grid, &ExtremalParams::unit(1))?;
    let suite = dilation_invariance_suite(&v, &[0.5, 2.0])?;
    let thetas = [
        ExtremalParams::unit(1),
        ExtremalParams::new(1.3, 0.7, vec![0.5])?,
        ExtremalParams::new(-2.0, 1.5, vec![-1.0])?,
        ExtremalParams::new(2.0, 1.0, vec![0.0])?,
        ExtremalParams::new(1.0, 3.0, vec![0.0])?,
    ];
    let values = thetas
        .iter()
        .map(|th| sharp_constant_at(&grid, th))
        .collect::<Result<Vec<f64>, _>>()?;
    let spread = values.iter().map(|s| (s / values[0] - 1.0).abs()).fold(0.0, f64::max);
    Ok((
        suite.max_change <= 1e-7 && spread <= 1e-6,
        format!("dilation change {:.2e} (96×192), sharp-constant spread {spread:.2e}", suite.max_change),
    ))
}

fn branch_irrelevance(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vector = |rng: &mut ChaCha8Rng| {
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        [0; 3].map(|_| scale * rng.gen_range(-1.0..1.0))
    };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (x1, x2) = (vector(&mut rng), vector(&mut rng));
        let a = fz21_point(2.0, 0.1, &x1, &x2, WeightBranch::BelowTwo);
        let b = fz21_point(2.0, 0.1, &x1, &x2, WeightBranch::AtLeastTwo);
        if let (Some(a), Some(b)) = (a, b) {
            worst = worst
                .max((a.excess - b.excess).abs() / a.excess.abs().max(1.0))
                .max((a.remainder - b.remainder).abs() / a.remainder.abs().max(1.0));
        }
    }
    worst
}

fn inequality_lab() -> Outcome {
    let start = Instant::now();
    let n = 4;
    let ckn = CknExponents::for_perturbation_norm(n, 1.5);
    let reports: Vec<(&str, IneqCheckReport)> = vec![
        ("hardy-sobolev", check_hardy_sobolev(n, 2.0, 0.0, 0.0, SAMPLES, 1)?),
        ("ckn", check_ckn(n, ckn.r, ckn.q, ckn.alpha, ckn.beta, SAMPLES, 2)?),
        ("vector p=2.5", check_fz21(2.5, 0.1, SAMPLES, 3)?),
        ("vector p=1.5", check_fz21(1.5, 0.1, SAMPLES, 4)?),
        ("weighted hardy", check_weighted_hardy(3, 2.0, 1.0, SAMPLES, 5)?),
        ("scalar q=3", check_fz24(3.0, 0.05, SAMPLES, 6)?),
        ("scalar q=1.6", check_fz24(1.6, 0.05, SAMPLES, 7)?),
        (
            "theta bounds",
            check_theta_bounds(n, 2.0 * n as f64 / (n as f64 + 1.0), MuRange::Admissible, 1000, 8)?,
        ),
    ];
    let branch = branch_irrelevance(SAMPLES, 9);
    let elapsed = start.elapsed().as_secs_f64();
    let violations: usize = reports.iter().map(|(_, r)| r.violations).sum();
    let failed: Vec<&str> = reports.iter().filter(|(_, r)| !r.passed()).map(|(name, _)| *name).collect();
    Ok((
        failed.is_empty() && branch <= 1e-15 && elapsed <= 60.0,
        format!(
            "{} checks, {violations} violations{}, branch difference {branch:.1e}, {elapsed:.1} s",
            reports.len(),
            if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join(", ")) }
        ),
    ))
}

fn spectral_gap(spectra: &[Spectrum]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in spectra {
        let gap = spectral_gap_estimate(&s.result.eigenvalues, s.grid.m(), 0.05)?;
        let basis = tangent_basis(&s.grid, &s.result.theta)?;
        let rayleigh = rayleigh_bound_check(&s.forms, &basis, &gap, 16, 0.03, 0)?;
        ok &= gap.lambda_hat > 0.0 && gap.separation_ratio >= 1.1 && rayleigh.violations == 0;
        parts.push(format!(
            "p={}: λ̂/α₂ {:.3}, separation {:.3}, min quotient/bound {:.3}",
            s.p,
            gap.lambda_hat / gap.alpha2,
            gap.separation_ratio,
            rayleigh.min_quotient / rayleigh.bound
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut all = true;
    let mut report = |id: u32, name: &str, outcome: Outcome, started: Instant| {
        let secs = started.elapsed().as_secs_f64();
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        println!("[{}] criterion {id:>2} {name}: {detail} ({secs:.1} s)", if ok { "PASS" } else { "FAIL" });
    };

    let t = Instant::now();
    let spectra = spectra();
    let spectra_time = t.elapsed();
    match &spectra {
        Ok(spectra) => {
            report(1, "eigenvalue formulas", eigenvalue_formulas(spectra), t);
            report(2, "eigenvalue ratio", eigenvalue_ratio(spectra), Instant::now());
        }
        Err(e) => {
            report(1, "eigenvalue formulas", Ok((false, format!("error: {e}"))), t);
            report(2, "eigenvalue ratio", Ok((false, format!("error: {e}"))), t);
        }
    }
    let t = Instant::now();
    report(3, "anisotropic sharpness", anisotropic_sharpness(), t);
    let t = Instant::now();
    report(4, "bump sharpness", bump_sharpness(), t);
    let t = Instant::now();
    report(5, "stability inequality", stability_inequality(), t);
    let t = Instant::now();
    report(6, "projection", projection(), t);
    let t = Instant::now();
    report(7, "strong residuals", euler_lagrange_residuals(), t);
    let t = Instant::now();
    report(8, "invariance", invariance(), t);
    let t = Instant::now();
    report(9, "inequality lab", inequality_lab(), t);
    let t = Instant::now();
    match &spectra {
        Ok(spectra) => report(10, "spectral gap", spectral_gap(spectra), t),
        Err(e) => report(10, "spectral gap", Ok((false, format!("error: {e}"))), t),
    }
    println!(
        "acceptance: {} ({:.0} s total, {:.0} s in the three spectra)",
        if all { "all criteria pass" } else { "FAILURES" },
        total.elapsed().as_secs_f64(),
        spectra_time.as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
