//! Nearest extremal to a field: by direct `D^{1,p}`-distance minimization and
//! by the orthogonality-selecting functional `F_u`, plus the normalized
//! orthogonality residuals against the tangent space.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{integrate, Field, GradField, Grid, Profile};
use crate::error::{Error, Result};
use crate::manifold::{ExtremalParams, ExtremalProfile, TangentDirection, TangentProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// Minimize `‖D(u − v_θ)‖_p`.
    Distance,
    /// Minimize `F_u[v_θ]`, whose critical points make `u − v_θ` orthogonal
    /// to the tangent space.
    Functional,
}

impl std::str::FromStr for ProjectionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(ProjectionMethod::Distance),
            "functional" => Ok(ProjectionMethod::Functional),
            other => Err(Error::Parse(format!("unknown projection method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub theta: ExtremalParams,
    /// `‖D(u − v_θ)‖_p`.
    pub distance: f64,
    /// Normalized cosines `⟨u − v_θ, w_j⟩_* / (‖u − v_θ‖_*‖w_j‖_*)`.
    pub ortho_residuals: Vec<f64>,
    pub method: ProjectionMethod,
    pub iterations: usize,
    pub converged: bool,
    /// Final objective value (`∫|D(u − v_θ)|^p` or `F_u[v_θ]`).
    pub objective: f64,
    /// Objective at the starting point.
    pub initial_objective: f64,
    /// For the functional method, `max_j |residual_j|` along the final
    /// Newton path (monotone by construction); empty otherwise.
    pub descent_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Randomly perturbed simplex restarts after the first descent.
    pub restarts: usize,
    pub max_evaluations: usize,
    /// Simplex diameter threshold in `(a, ln λ, z′)`.
    pub x_tol: f64,
    /// Objective spread threshold across the simplex.
    pub f_tol: f64,
    /// Stationarity target for the functional method.
    pub residual_tol: f64,
    pub max_newton_steps: usize,
    pub seed: u64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            restarts: 3,
            max_evaluations: 20_000,
            x_tol: 1e-6,
            f_tol: 1e-10,
            residual_tol: 1e-6,
            max_newton_steps: 30,
            seed: 0x5eed,
        }
    }
}

struct NmOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

/// Nelder–Mead with the standard coefficients (1, 2, ½, ½).
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, opts: &ProjectionOptions) -> NmOutcome {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = d + 1;
    let mut iterations = 0;
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> { c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect() };
    loop {
        order(&mut simplex);
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = simplex[d].1 - best.1;
        if diameter < opts.x_tol && spread <= opts.f_tol * (1.0 + best.1.abs()) {
            return NmOutcome {
                x: best.0.clone(),
                f: best.1,
                iterations,
                converged: true,
            };
        }
        if evals >= opts.max_evaluations {
            return NmOutcome {
                x: best.0.clone(),
                f: best.1,
                iterations,
                converged: false,
            };
        }
        iterations += 1;
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let xr = along(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(&centroid, &xr, 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(&centroid, &worst.0, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.0 = along(&x0, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
                evals += d;
            }
        }
    }
}

/// Nodal samples of `v_θ` and its gradient, written into reusable buffers.
struct ExtremalSampler<'a> {
    grid: &'a Grid,
    m: usize,
}

impl<'a> ExtremalSampler<'a> {
    fn values(&self, th: &ExtremalParams) -> Vec<f64> {
        let prof = ExtremalProfile::new(*self.grid.params(), th.clone());
        let mut z = vec![0.0; self.m];
        (0..self.grid.len())
            .map(|i| {
                self.grid.z_at(i, &mut z);
                prof.value(self.grid.r()[i], &z)
            })
            .collect()
    }

    fn tangent_values(&self, th: &ExtremalParams, dir: TangentDirection) -> Vec<f64> {
        let prof = TangentProfile::new(*self.grid.params(), th.clone(), dir);
        let mut z = vec![0.0; self.m];
        (0..self.grid.len())
            .map(|i| {
                self.grid.z_at(i, &mut z);
                prof.value(self.grid.r()[i], &z)
            })
            .collect()
    }

    /// `∫|Du − Dv_θ|^p` given the gradient of `u`.
    fn distance_energy(&self, du: &GradField, th: &ExtremalParams) -> f64 {
        let p = self.grid.params().p();
        let prof = ExtremalProfile::new(*self.grid.params(), th.clone());
        let mut z = vec![0.0; self.m];
        let mut dz = vec![0.0; self.m];
        let integrand: Vec<f64> = (0..self.grid.len())
            .map(|i| {
                self.grid.z_at(i, &mut z);
                let dr = du.d_r[i] - prof.gradient(self.grid.r()[i], &z, &mut dz);
                let mut s = dr * dr;
                for (j, d) in dz.iter().enumerate() {
                    let e = du.d_z[j][i] - d;
                    s += e * e;
                }
                s.sqrt().powf(p)
            })
            .collect();
        integrate(self.grid, &integrand).unwrap_or(f64::INFINITY)
    }

    /// `F_u[v_θ] = (1/p₁*)∫|y|⁻¹|v|^{p₁*} − (1/(p₁*−1))∫|y|⁻¹|v|^{p₁*−2}v u`.
    fn functional(&self, u: &[f64], th: &ExtremalParams) -> f64 {
        let q = self.grid.params().p1_star();
        let v = self.values(th);
        let integrand: Vec<f64> = v
            .iter()
            .zip(u)
            .zip(self.grid.r())
            .map(|((v, u), r)| {
                let av = v.abs();
                (av.powf(q) / q - av.powf(q - 2.0) * v * u / (q - 1.0)) / r
            })
            .collect();
        integrate(self.grid, &integrand).unwrap_or(f64::INFINITY)
    }

    /// Tangent basis values `[v, ∂_λv, ∂_{z′}v…]` at `θ`.
    fn basis(&self, th: &ExtremalParams) -> Vec<Vec<f64>> {
        let mut out = vec![self.values(th), self.tangent_values(th, TangentDirection::Dilation)];
        for i in 0..self.m {
            out.push(self.tangent_values(th, TangentDirection::Translation(i)));
        }
        out
    }
}

fn weighted_sum(grid: &Grid, w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let integrand: Vec<f64> = w.iter().zip(f).zip(g).map(|((w, a), b)| w * (a * b)).collect();
    integrate(grid, &integrand).unwrap_or(f64::NAN)
}

/// Normalized residuals from nodal values of `u`, at `θ`.
fn residuals_at(grid: &Grid, u: &[f64], th: &ExtremalParams) -> Vec<f64> {
    let sampler = ExtremalSampler { grid, m: grid.m() };
    let basis = sampler.basis(th);
    let v = &basis[0];
    let q = grid.params().p1_star();
    let w: Vec<f64> = v.iter().zip(grid.r()).map(|(v, r)| v.abs().powf(q - 2.0) / r).collect();
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let dd = weighted_sum(grid, &w, &diff, &diff).sqrt();
    let uu = weighted_sum(grid, &w, u, u).sqrt();
    // u = v_θ up to rounding: by convention every residual is zero.
    if !(dd > 1e-12 * uu) {
        return vec![0.0; basis.len()];
    }
    basis
        .iter()
        .map(|b| weighted_sum(grid, &w, &diff, b) / (dd * weighted_sum(grid, &w, b, b).sqrt()))
        .collect()
}

/// Normalized cosines between `u − v_θ` and each tangent basis element.
pub fn orthogonality_residual(u: &Field, th: &ExtremalParams) -> Result<Vec<f64>> {
    th.check(u.grid().params())?;
    Ok(residuals_at(u.grid(), u.values(), th))
}

/// The functional `F_u[v_θ]`.
pub fn functional_objective(u: &Field, th: &ExtremalParams) -> Result<f64> {
    th.check(u.grid().params())?;
    let g = u.grid();
    Ok(ExtremalSampler { grid: g, m: g.m() }.functional(u.values(), th))
}

fn check_input(u: &Field, th0: &ExtremalParams) -> Result<()> {
    th0.check(u.grid().params())?;
    if u.values().iter().all(|v| *v == 0.0) {
        return Err(Error::Precondition("cannot project the zero field".into()));
    }
    Ok(())
}

/// First descent from `x0`, `restarts` seeded perturbed restarts, and a
/// final small-simplex restart at the best point that certifies convergence.
fn multistart(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &ProjectionOptions) -> NmOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = nelder_mead(f, x0, 0.1, opts);
    let mut iterations = best.iterations;
    for _ in 0..opts.restarts {
        let start: Vec<f64> = best.x.iter().map(|x| x + 0.1 * rng.gen_range(-1.0..1.0)).collect();
        let run = nelder_mead(f, &start, 0.05, opts);
        iterations += run.iterations;
        if run.f < best.f {
            best = run;
        }
    }
    let polish = nelder_mead(f, &best.x.clone(), 1e-3, opts);
    iterations += polish.iterations;
    if polish.f <= best.f {
        best = polish;
    } else {
        best.converged = polish.converged;
    }
    best.iterations = iterations;
    best
}

/// Local minimizer of `θ ↦ ‖D(u − v_θ)‖_p^p` over `(a, ln λ, z′)`.
pub fn nearest_extremal(u: &Field, th0: &ExtremalParams, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    check_input(u, th0)?;
    let g = u.grid();
    let du = u.gradient();
    let sampler = ExtremalSampler { grid: g, m: g.m() };
    let f = |x: &[f64]| sampler.distance_energy(&du, &ExtremalParams::from_coords(x));
    let x0 = th0.to_coords();
    let initial = f(&x0);
    let out = multistart(&f, &x0, opts);
    let theta = ExtremalParams::from_coords(&out.x);
    let p = g.params().p();
    Ok(ProjectionResult {
        ortho_residuals: residuals_at(g, u.values(), &theta),
        distance: out.f.max(0.0).powf(1.0 / p),
        theta,
        method: ProjectionMethod::Distance,
        iterations: out.iterations,
        converged: out.converged && out.f.is_finite() && out.x[0] != 0.0,
        objective: out.f,
        initial_objective: initial,
        descent_trace: Vec::new(),
    })
}

/// Stationarity of `F_u` scaled per coordinate: `⟨u − v_θ, w_j⟩_* / ‖w_j‖_*`.
fn stationarity(grid: &Grid, u: &[f64], x: &[f64]) -> DVector<f64> {
    let th = ExtremalParams::from_coords(x);
    let basis = ExtremalSampler { grid, m: grid.m() }.basis(&th);
    let q = grid.params().p1_star();
    let w: Vec<f64> = basis[0].iter().zip(grid.r()).map(|(v, r)| v.abs().powf(q - 2.0) / r).collect();
    let diff: Vec<f64> = u.iter().zip(&basis[0]).map(|(a, b)| a - b).collect();
    DVector::from_iterator(
        basis.len(),
        basis
            .iter()
            .map(|b| weighted_sum(grid, &w, &diff, b) / weighted_sum(grid, &w, b, b).sqrt()),
    )
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizer of `F_u[v_θ]`: simplex descent followed by a damped Newton
/// polish of the stationarity system `⟨u − v_θ, ξ⟩_* = 0, ξ ∈ T_{v_θ}M`.
pub fn orthogonal_select(u: &Field, th0: &ExtremalParams, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    check_input(u, th0)?;
    let g = u.grid();
    let sampler = ExtremalSampler { grid: g, m: g.m() };
    let uv = u.values();
    let f = |x: &[f64]| sampler.functional(uv, &ExtremalParams::from_coords(x));
    let x0 = th0.to_coords();
    let initial = f(&x0);
    let out = multistart(&f, &x0, opts);

    let mut x = out.x.clone();
    let mut res = residuals_at(g, uv, &ExtremalParams::from_coords(&x));
    let mut trace = vec![max_abs(&res)];
    let mut newton_steps = 0;
    while max_abs(&res) > 1e-3 * opts.residual_tol && newton_steps < opts.max_newton_steps {
        let d = x.len();
        let gx = stationarity(g, uv, &x);
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (stationarity(g, uv, &xp) - stationarity(g, uv, &xm)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let Some(step) = jac.lu().solve(&(-gx)) else { break };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-4 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if trial[0] != 0.0 {
                let r = residuals_at(g, uv, &ExtremalParams::from_coords(&trial));
                if max_abs(&r) < max_abs(&res) {
                    x = trial;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        newton_steps += 1;
        if !accepted {
            break;
        }
        trace.push(max_abs(&res));
    }

    let theta = ExtremalParams::from_coords(&x);
    let objective = f(&x);
    let du = u.gradient();
    let p = g.params().p();
    let distance = sampler.distance_energy(&du, &theta).max(0.0).powf(1.0 / p);
    let stationary = max_abs(&res) <= opts.residual_tol;
    Ok(ProjectionResult {
        theta,
        distance,
        ortho_residuals: res,
        method: ProjectionMethod::Functional,
        iterations: out.iterations + newton_steps,
        converged: stationary && x[0] != 0.0,
        objective,
        initial_objective: initial,
        descent_trace: trace,
    })
}

/// Dispatches on the method.
pub fn project(u: &Field, th0: &ExtremalParams, method: ProjectionMethod, opts: &ProjectionOptions) -> Result<ProjectionResult> {
    match method {
        ProjectionMethod::Distance => nearest_extremal(u, th0, opts),
        ProjectionMethod::Functional => orthogonal_select(u, th0, opts),
    }
}
