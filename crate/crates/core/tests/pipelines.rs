//! End-to-end behavior across modules on the default grid.

use std::sync::Arc;

use hsm_core::domain::{Field, Grid, GridSpec, Params};
use hsm_core::experiments::{anisotropic_member, normalized_bump, BumpSpec};
use hsm_core::functionals::{deficit, stability_rhs};
use hsm_core::ineqlab::{check_fz24, check_hardy_sobolev};
use hsm_core::manifold::{extremal_field, sharp_constant, ExtremalParams};
use hsm_core::projection::{nearest_extremal, orthogonal_select, ProjectionOptions};
use hsm_core::spectrum::GaussianBlobs;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn default_grid() -> Arc<Grid> {
    Arc::new(Grid::new(Params::new(4, 2.0, 3).unwrap(), GridSpec::default()).unwrap())
}

#[test]
fn projections_agree_off_the_manifold() {
    let grid = default_grid();
    let target = ExtremalParams::new(1.3, 0.7, vec![0.5]).unwrap();
    let v = extremal_field(&grid, &target).unwrap();
    let blobs = GaussianBlobs::sample(&mut ChaCha8Rng::seed_from_u64(11), 1);
    let phi = Field::from_profile(grid.clone(), Arc::new(blobs)).unwrap();
    let u = Field::combine(&[(1.0, &v), (0.02, &phi)]).unwrap();
    let opts = ProjectionOptions::default();
    let start = ExtremalParams::unit(1);
    let near = nearest_extremal(&u, &start, &opts).unwrap();
    let ortho = orthogonal_select(&u, &start, &opts).unwrap();
    assert!(ortho.converged);
    assert_eq!(ortho.ortho_residuals.len(), 3);
    for r in &ortho.ortho_residuals {
        assert!(r.abs() <= 1e-6, "{:?}", ortho.ortho_residuals);
    }
    // For small deficits the two selections differ by o(distance).
    let d = near.distance;
    assert!(d > 0.0);
    for (x, y) in near.theta.to_coords().iter().zip(ortho.theta.to_coords()) {
        assert!((x - y).abs() <= 0.1 * d, "distance {d:e}: {near:?} vs {ortho:?}");
    }
    assert!((ortho.theta.lambda - target.lambda).abs() < 0.05);
}

#[test]
fn anisotropic_deficit_quarters_when_stretch_halves() {
    let grid = default_grid();
    let s = sharp_constant(&grid).unwrap();
    let d8 = deficit(&anisotropic_member(&grid, 8).unwrap(), s).unwrap().deficit;
    let d16 = deficit(&anisotropic_member(&grid, 16).unwrap(), s).unwrap().deficit;
    let ratio = d8 / d16;
    assert!((ratio / 4.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
}

#[test]
fn far_bump_raises_deficit_and_rhs() {
    let grid = Arc::new(Grid::new(Params::new(4, 2.0, 3).unwrap(), GridSpec::new(64, 384)).unwrap());
    let s = sharp_constant(&grid).unwrap();
    let th = ExtremalParams::unit(1);
    let v = extremal_field(&grid, &th).unwrap();
    let (bump, _, _) = normalized_bump(&grid, &BumpSpec::default()).unwrap();
    let phi = Field::from_profile(grid.clone(), bump).unwrap();
    let u = Field::combine(&[(1.0, &v), (0.1, &phi)]).unwrap();
    let report = deficit(&u, s).unwrap();
    assert!(report.deficit > 0.0, "{report:?}");
    assert!(stability_rhs(&u, &th).unwrap() > 0.0);
    assert_eq!(stability_rhs(&v, &th).unwrap(), 0.0);
}

#[test]
fn scalar_constant_does_not_grow_with_kappa() {
    for p1 in [1.6, 3.0] {
        let small = check_fz24(p1, 0.05, 20_000, 3).unwrap().constant_found.unwrap();
        let large = check_fz24(p1, 0.2, 20_000, 3).unwrap().constant_found.unwrap();
        assert!(large <= small, "p₁* = {p1}: {large} > {small}");
    }
}

#[test]
fn exterior_hardy_constant_is_no_larger() {
    let whole = check_hardy_sobolev(4, 2.0, 0.0, 0.0, 2_000, 4).unwrap();
    let exterior = check_hardy_sobolev(4, 2.0, 0.0, 5.0, 2_000, 4).unwrap();
    assert!(whole.passed() && exterior.passed());
    assert!(exterior.constant_found.unwrap() <= whole.constant_found.unwrap());
}
