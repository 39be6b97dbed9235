//! Randomized verification of the auxiliary inequalities the stability proof
//! leans on: two pointwise vector/scalar inequalities, three weighted
//! integral inequalities (tested on radial functions) and the arithmetic
//! bounds on the interpolation exponent `θ`.
//!
//! Constants that are only asserted to exist are estimated from the sample
//! and reported as such — they are sample-dependent, never optimal constants.
//! Samples are drawn sequentially from a seeded ChaCha stream and evaluated in
//! parallel, so a report depends only on its inputs and seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::quadrature::gauss_legendre;
use crate::domain::sphere_area;
use crate::error::{Error, Result};

/// Which inequality a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    /// `|x₁+x₂|ᵖ ≥ |x₁|ᵖ + p|x₁|^{p−2}x₁·x₂ + … + c₀·(remainder)`.
    Fz21,
    /// `|a+b|^q ≤ |a|^q + q|a|^{q−2}ab + …` with an existential `C₁`.
    Fz24,
    /// `∫_{|x|>R}|x|^{s−q}|φ|^q ≤ C∫|x|^s|Dφ|^q`.
    HardySobolev,
    /// `‖|x|^β φ‖_r ≤ C‖|x|^α Dφ‖_q`.
    Ckn,
    /// `C∫|w|ᵖ|y|⁻¹(1+|y|)^{(p−1)(ξ−1)} ≤ ∫|Dw|ᵖ(1+|y|)^{(p−1)ξ}` on `ℝᵏ`.
    WeightedHardy,
    /// `1 − p₁*/2 < θ < 1`.
    ThetaBounds,
}

impl InequalityId {
    pub fn label(self) -> &'static str {
        match self {
            Self::Fz21 => "fz21",
            Self::Fz24 => "fz24",
            Self::HardySobolev => "hardy_sobolev",
            Self::Ckn => "ckn",
            Self::WeightedHardy => "weighted_hardy",
            Self::ThetaBounds => "theta_bounds",
        }
    }
}

impl std::str::FromStr for InequalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fz21" => Self::Fz21,
            "fz24" => Self::Fz24,
            "hardy_sobolev" | "hardy-sobolev" | "hs" => Self::HardySobolev,
            "ckn" => Self::Ckn,
            "weighted_hardy" | "weighted-hardy" => Self::WeightedHardy,
            "theta_bounds" | "theta-bounds" | "theta" => Self::ThetaBounds,
            other => return Err(Error::Parse(format!("unknown inequality id `{other}`"))),
        })
    }
}

/// Outcome of one randomized check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneqCheckReport {
    pub inequality_id: InequalityId,
    /// Samples evaluated (excluding skipped ones).
    pub samples: usize,
    /// Samples outside the inequality's domain (e.g. `x₁ = 0` where a weight is undefined).
    pub skipped: usize,
    pub violations: usize,
    /// Smallest normalized slack at the reported constant (the reference
    /// constant when one is known, otherwise `constant_found`). Non-negative on
    /// pass, up to rounding.
    pub worst_margin: f64,
    /// Best constant consistent with every sample, for inequalities with a
    /// constant: a lower bound on the optimal one for upper-bound constants
    /// and an upper bound for lower-bound constants.
    pub constant_found: Option<f64>,
    /// Known sharp constant, where one exists for the instance.
    pub reference_constant: Option<f64>,
    pub seed: u64,
}

impl IneqCheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.worst_margin.is_finite()
            && self.constant_found.map_or(true, |c| c.is_finite() && c > 0.0)
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg()))
    }
}

fn require_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        require(v.is_finite(), || format!("{name} = {v} is not finite"))?;
    }
    Ok(())
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-3.0..3.0))
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

fn scaled(v: [f64; 3], s: f64) -> [f64; 3] {
    v.map(|x| x * s)
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

// ---------------------------------------------------------------------------
// Pointwise vector inequality

/// Which case's definition of the auxiliary point `w` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightBranch {
    /// `w = (|x₁+x₂|/((2−p)|x₁+x₂|+(p−1)|x₁|))^{1/(p−2)}x₁` if `|x₁| < |x₁+x₂|`, else `x₁`.
    BelowTwo,
    /// `w = x₁` if `|x₁| < |x₁+x₂|`, else `(|x₁+x₂|/|x₁|)^{1/(p−2)}(x₁+x₂)`.
    AtLeastTwo,
}

impl WeightBranch {
    pub fn for_exponent(p: f64) -> Self {
        if p < 2.0 {
            Self::BelowTwo
        } else {
            Self::AtLeastTwo
        }
    }
}

/// Both sides of the vector inequality at one sample, in units of `|x₁|ᵖ`
/// (of `|x₂|ᵖ` when `x₁ = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fz21Point {
    /// LHS minus every RHS term except the `c₀` one.
    pub excess: f64,
    /// The factor multiplying `c₀`: `min{|x₂|ᵖ, |x₁|^{p−2}|x₂|²}` for `p < 2`, `|x₂|ᵖ` otherwise.
    pub remainder: f64,
}

/// Evaluates the vector inequality at `(x₁, x₂)`; `None` where the `p < 2`
/// weight `|x₁|^{p−2}` is undefined.
///
/// Differences are formed from `expm1`/`ln_1p` in the ratio `x₂/|x₁|`, so
/// the second-order slack survives when `|x₂| ≪ |x₁|`.
pub fn fz21_point(p: f64, kappa: f64, x1: &[f64; 3], x2: &[f64; 3], branch: WeightBranch) -> Option<Fz21Point> {
    let n1 = norm(x1);
    if n1 == 0.0 {
        if p < 2.0 {
            return None;
        }
        // w = x₁ = 0 in both branches, so only |x₂|ᵖ survives, in units of |x₂|ᵖ.
        return Some(Fz21Point {
            excess: 1.0,
            remainder: 1.0,
        });
    }
    let e = scaled(*x1, 1.0 / n1);
    let t = scaled(*x2, 1.0 / n1);
    let et = dot(&e, &t);
    let tt = dot(&t, &t);
    let s = 2.0 * et + tt;
    let sum = [e[0] + t[0], e[1] + t[1], e[2] + t[2]];
    let rho = norm(&sum);
    let power_excess = if s > -0.5 {
        (0.5 * p * s.ln_1p()).exp_m1() - p * et
    } else {
        rho.powf(p) - 1.0 - p * et
    };
    let gap = -s / (1.0 + rho); // 1 − |e + t|
    let weight = match branch {
        WeightBranch::BelowTwo if rho > 1.0 => rho / ((2.0 - p) * rho + (p - 1.0)),
        WeightBranch::BelowTwo => 1.0,
        WeightBranch::AtLeastTwo if rho > 1.0 => 1.0,
        WeightBranch::AtLeastTwo => rho.powf(p - 1.0),
    };
    let quad = (1.0 - kappa) / 2.0 * (p * tt + p * (p - 2.0) * weight * gap * gap);
    let tn = tt.sqrt();
    let remainder = if p < 2.0 { tn.powf(p).min(tt) } else { tn.powf(p) };
    Some(Fz21Point {
        excess: power_excess - quad,
        remainder,
    })
}

/// Samples `(x₁, x₂) ∈ ℝ³ × ℝ³` and reports the largest `c₀` consistent
/// with all of them; a sample whose slack is non-positive admits no `c₀ > 0`
/// and counts as a violation.
pub fn check_fz21(p: f64, kappa: f64, sample_count: usize, seed: u64) -> Result<IneqCheckReport> {
    require_finite(&[("p", p), ("kappa", kappa)])?;
    require(p > 1.0, || format!("p = {p} must exceed 1"))?;
    require(kappa > 0.0 && kappa < 1.0, || format!("kappa = {kappa} must lie in (0, 1)"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<([f64; 3], [f64; 3])> = (0..sample_count)
        .map(|_| {
            let a = log_uniform(&mut rng);
            let b = log_uniform(&mut rng);
            (scaled(unit_vector(&mut rng), a), scaled(unit_vector(&mut rng), b))
        })
        .collect();
    let branch = WeightBranch::for_exponent(p);
    let points: Vec<Option<Fz21Point>> = pairs
        .par_iter()
        .map(|(x1, x2)| fz21_point(p, kappa, x1, x2, branch).filter(|pt| pt.remainder > 0.0))
        .collect();
    let valid: Vec<Fz21Point> = points.iter().flatten().copied().collect();
    let skipped = sample_count - valid.len();
    let violations = valid.iter().filter(|pt| !(pt.excess > 0.0)).count();
    let c0 = valid
        .iter()
        .map(|pt| pt.excess / pt.remainder)
        .fold(f64::INFINITY, f64::min);
    let worst_margin = valid
        .iter()
        .map(|pt| (pt.excess - c0 * pt.remainder) / (1.0 + pt.remainder))
        .fold(f64::INFINITY, f64::min);
    Ok(IneqCheckReport {
        inequality_id: InequalityId::Fz21,
        samples: valid.len(),
        skipped,
        violations,
        worst_margin: if valid.is_empty() { 0.0 } else { worst_margin },
        constant_found: (!valid.is_empty()).then_some(c0),
        reference_constant: None,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Pointwise scalar inequality

/// Smallest `C₁ ≥ 0` making the scalar inequality hold at `(a, b)`, for
/// exponent `q`: the case `q ≤ 2` bounds the remainder by
/// `(q(q−1)/2+κ)(|a|+C₁|b|)^q b²/(a²+b²)`, the case `q > 2` by
/// `(q(q−1)/2+κ)|a|^{q−2}b² + C₁|b|^q`. Solved in closed form; `None` for `a = b = 0`.
pub fn fz24_needed_constant(q: f64, kappa: f64, a: f64, b: f64) -> Option<f64> {
    let coef = q * (q - 1.0) / 2.0 + kappa;
    if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        return Some(if q <= 2.0 { coef.powf(-1.0 / q) } else { 1.0 });
    }
    if b == 0.0 {
        return Some(0.0);
    }
    let t = b / a;
    // |1+t|^q − 1 − qt, in units of |a|^q.
    let excess = if t > -0.5 {
        (q * t.ln_1p()).exp_m1() - q * t
    } else {
        (1.0 + t).abs().powf(q) - 1.0 - q * t
    };
    let at = t.abs();
    let needed = if q <= 2.0 {
        let ratio = excess * (1.0 + t * t) / (coef * t * t);
        if ratio <= 1.0 {
            0.0
        } else {
            (ratio.powf(1.0 / q) - 1.0) / at
        }
    } else {
        ((excess - coef * t * t) / at.powf(q)).max(0.0)
    };
    Some(needed)
}

/// Slack `RHS − LHS` at `(a, b)` with constant `c1`, normalized by `|a|^q + |b|^q`.
pub fn fz24_slack(q: f64, kappa: f64, c1: f64, a: f64, b: f64) -> f64 {
    let coef = q * (q - 1.0) / 2.0 + kappa;
    let (aa, ab) = (a.abs(), b.abs());
    let lhs = (a + b).abs().powf(q);
    let main = aa.powf(q) + if a == 0.0 { 0.0 } else { q * aa.powf(q - 2.0) * a * b };
    let rest = if q <= 2.0 {
        if ab == 0.0 {
            0.0
        } else {
            coef * (aa + c1 * ab).powf(q) * b * b / (a * a + b * b)
        }
    } else {
        let w = if a == 0.0 { 0.0 } else { coef * aa.powf(q - 2.0) * b * b };
        w + c1 * ab.powf(q)
    };
    (main + rest - lhs) / (aa.powf(q) + ab.powf(q))
}

/// Samples scalar pairs `(a, b)` with log-uniform magnitudes and random
/// signs and reports the smallest `C₁` consistent with all of them. The case
/// is selected by `p1_star ≤ 2`.
pub fn check_fz24(p1_star: f64, kappa: f64, sample_count: usize, seed: u64) -> Result<IneqCheckReport> {
    require_finite(&[("p1_star", p1_star), ("kappa", kappa)])?;
    require(p1_star > 1.0, || format!("p1_star = {p1_star} must exceed 1"))?;
    require(kappa > 0.0, || format!("kappa = {kappa} must be positive"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..sample_count)
        .map(|_| {
            let a = log_uniform(&mut rng) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let b = log_uniform(&mut rng) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            (a, b)
        })
        .collect();
    let needed: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| fz24_needed_constant(p1_star, kappa, a, b))
        .collect();
    let valid: Vec<(usize, f64)> = needed.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c))).collect();
    let violations = valid.iter().filter(|(_, c)| !c.is_finite()).count();
    let c1 = valid.iter().map(|(_, c)| *c).fold(0.0, f64::max);
    let worst_margin = valid
        .par_iter()
        .map(|&(i, _)| fz24_slack(p1_star, kappa, c1, pairs[i].0, pairs[i].1))
        .reduce(|| f64::INFINITY, f64::min);
    Ok(IneqCheckReport {
        inequality_id: InequalityId::Fz24,
        samples: valid.len(),
        skipped: sample_count - valid.len(),
        violations,
        worst_margin: if valid.is_empty() { 0.0 } else { worst_margin },
        constant_found: (!valid.is_empty()).then_some(c1),
        reference_constant: None,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Radial test functions and quadrature

fn bump(x: f64) -> (f64, f64) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - x * x;
    let v = (-1.0 / d).exp();
    (v, -2.0 * x / (d * d) * v)
}

/// One even bump `c[ψ((ρ−ρ₀)/h) + ψ((ρ+ρ₀)/h)]`, `ψ(x) = exp(−1/(1−x²))`;
/// the reflected copy keeps the radial function smooth at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub amplitude: f64,
    pub center: f64,
    pub half_width: f64,
}

/// A smooth compactly supported radial function: a sum of [`RadialBump`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTestFunction {
    pub bumps: Vec<RadialBump>,
}

impl RadialTestFunction {
    /// One to three bumps, centers in `[0, 4)`, half-widths in `[0.3, 2)`, all scaled by `scale`.
    pub fn sample(rng: &mut ChaCha8Rng, scale: f64) -> Self {
        let count = rng.gen_range(1..=3);
        let bumps = (0..count)
            .map(|_| RadialBump {
                amplitude: rng.gen_range(-1.0..1.0),
                center: rng.gen_range(0.0..4.0) * scale,
                half_width: rng.gen_range(0.3..2.0) * scale,
            })
            .collect();
        Self { bumps }
    }

    /// Upper end of the support.
    pub fn support_radius(&self) -> f64 {
        self.bumps.iter().map(|b| b.center + b.half_width).fold(0.0, f64::max)
    }

    /// `(φ(ρ), φ′(ρ))`.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for b in &self.bumps {
            let (v1, d1) = bump((rho - b.center) / b.half_width);
            let (v2, d2) = bump((rho + b.center) / b.half_width);
            v += b.amplitude * (v1 + v2);
            d += b.amplitude * (d1 + d2) / b.half_width;
        }
        (v, d)
    }
}

const PANEL_POINTS: usize = 8;

/// Composite Gauss–Legendre rule on `[0, ρ_max]`, geometrically graded
/// towards the origin where the radial weights are singular.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialQuadrature {
    /// Rule on the panels delimited by ascending `edges`.
    pub fn from_edges(edges: &[f64]) -> Self {
        let (x, w) = gauss_legendre(PANEL_POINTS);
        let mut nodes = Vec::with_capacity(edges.len() * PANEL_POINTS);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Self { nodes, weights }
    }

    /// Graded rule on `[0, rho_max]` with extra panel edges at `breaks`.
    pub fn graded(rho_max: f64, breaks: &[f64]) -> Self {
        let mut edges = vec![0.0];
        edges.extend((4..=44).rev().map(|j| rho_max * 0.5f64.powi(j)));
        let uniform = 60;
        let start = rho_max / 16.0;
        edges.extend((1..=uniform).map(|i| start + (rho_max - start) * i as f64 / uniform as f64));
        edges.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < rho_max));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        Self::from_edges(&edges)
    }

    /// `∫ f(ρ) dρ`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn radial_samples(test_count: usize, seed: u64, scale: f64) -> Vec<RadialTestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..test_count).map(|_| RadialTestFunction::sample(&mut rng, scale)).collect()
}

/// Relative tolerance on comparisons against sharp constants (quadrature error).
const RADIAL_TOLERANCE: f64 = 1e-6;

/// Aggregates per-sample ratios for an inequality `LHS ≤ C·RHS` (ratio = LHS/RHS).
fn upper_constant_report(
    id: InequalityId,
    ratios: Vec<Option<f64>>,
    reference: Option<f64>,
    seed: u64,
) -> IneqCheckReport {
    let total = ratios.len();
    let valid: Vec<f64> = ratios.into_iter().flatten().collect();
    let found = valid.iter().copied().fold(0.0, f64::max);
    let (violations, worst_margin) = match reference {
        Some(c) => (
            valid.iter().filter(|r| !(**r <= c * (1.0 + RADIAL_TOLERANCE))).count(),
            valid.iter().map(|r| 1.0 - r / c).fold(f64::INFINITY, f64::min),
        ),
        None => (
            valid.iter().filter(|r| !r.is_finite()).count(),
            valid.iter().map(|r| 1.0 - r / found).fold(f64::INFINITY, f64::min),
        ),
    };
    IneqCheckReport {
        inequality_id: id,
        samples: valid.len(),
        skipped: total - valid.len(),
        violations,
        worst_margin: if valid.is_empty() { 0.0 } else { worst_margin },
        constant_found: (!valid.is_empty()).then_some(found),
        reference_constant: reference,
        seed,
    }
}

/// `(LHS, RHS)` of `∫_{|x|>R}|x|^{s−q}|φ|^q ≤ C∫|x|^s|Dφ|^q` on `ℝⁿ` for a radial `φ`.
pub fn hardy_sobolev_sides(
    n: usize,
    q: f64,
    s: f64,
    radius: f64,
    quad: &RadialQuadrature,
    phi: impl Fn(f64) -> (f64, f64),
) -> (f64, f64) {
    let omega = sphere_area(n);
    let nf = n as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (&rho, &w) in quad.nodes.iter().zip(&quad.weights) {
        let (v, d) = phi(rho);
        if rho > radius && v != 0.0 {
            lhs += w * rho.powf(s - q + nf - 1.0) * v.abs().powf(q);
        }
        if d != 0.0 {
            rhs += w * rho.powf(s + nf - 1.0) * d.abs().powf(q);
        }
    }
    (omega * lhs, omega * rhs)
}

/// Sharp constant `(q/(n+s−q))^q` of the weighted Hardy inequality on `ℝⁿ`,
/// which also bounds every exterior restriction `|x| > R`.
pub fn hardy_sobolev_reference(n: usize, q: f64, s: f64) -> f64 {
    (q / (n as f64 + s - q)).powf(q)
}

/// Checks `∫_{|x|>R}|x|^{s−q}|φ|^q ≤ C∫|x|^s|Dφ|^q` on random radial bump sums.
pub fn check_hardy_sobolev(
    n: usize,
    q: f64,
    s: f64,
    radius: f64,
    test_count: usize,
    seed: u64,
) -> Result<IneqCheckReport> {
    require_finite(&[("q", q), ("s", s), ("R", radius)])?;
    require(n >= 1, || "n must be at least 1".into())?;
    require(q >= 1.0, || format!("q = {q} must be at least 1"))?;
    require(s > q - n as f64, || format!("s = {s} must exceed q − n = {}", q - n as f64))?;
    require(radius >= 0.0, || format!("R = {radius} must be non-negative"))?;
    let tests = radial_samples(test_count, seed, 1.0);
    let rho_max = tests.iter().map(RadialTestFunction::support_radius).fold(0.0, f64::max);
    let quad = RadialQuadrature::graded(rho_max.max(radius), &[radius]);
    let ratios = tests
        .par_iter()
        .map(|phi| {
            let (lhs, rhs) = hardy_sobolev_sides(n, q, s, radius, &quad, |r| phi.eval(r));
            (rhs > 0.0).then_some(lhs / rhs)
        })
        .collect();
    Ok(upper_constant_report(
        InequalityId::HardySobolev,
        ratios,
        Some(hardy_sobolev_reference(n, q, s)),
        seed,
    ))
}

/// Exponents of a weighted interpolation inequality `‖|x|^β φ‖_r ≤ C‖|x|^α Dφ‖_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknExponents {
    pub r: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CknExponents {
    /// The instance used to control the weighted `L²` norm of a perturbation:
    /// `r = q = 2`, `β = ((2−p)n−p)/(2(p−1))`, `α = β + 1`.
    pub fn for_perturbation_norm(n: usize, p: f64) -> Self {
        let beta = ((2.0 - p) * n as f64 - p) / (2.0 * (p - 1.0));
        Self {
            r: 2.0,
            q: 2.0,
            alpha: beta + 1.0,
            beta,
        }
    }

    /// `(1/r + β/n) − (1/q + (α−1)/n)`; the inequality requires zero.
    pub fn imbalance(&self, n: usize) -> f64 {
        let nf = n as f64;
        (1.0 / self.r + self.beta / nf) - (1.0 / self.q + (self.alpha - 1.0) / nf)
    }

    /// Sharp constant in the Hardy case `r = q`, `α = β + 1`: `q/(n + qβ)`.
    pub fn reference_constant(&self, n: usize) -> Option<f64> {
        ((self.r - self.q).abs() < 1e-12 && (self.alpha - self.beta - 1.0).abs() < 1e-12)
            .then(|| self.q / (n as f64 + self.q * self.beta))
    }
}

/// `(‖|x|^β φ‖_r, ‖|x|^α Dφ‖_q)` on `ℝⁿ` for a radial `φ`.
pub fn ckn_sides(
    n: usize,
    e: &CknExponents,
    quad: &RadialQuadrature,
    phi: impl Fn(f64) -> (f64, f64),
) -> (f64, f64) {
    let omega = sphere_area(n);
    let nf = n as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (&rho, &w) in quad.nodes.iter().zip(&quad.weights) {
        let (v, d) = phi(rho);
        if v != 0.0 {
            lhs += w * rho.powf(e.beta * e.r + nf - 1.0) * v.abs().powf(e.r);
        }
        if d != 0.0 {
            rhs += w * rho.powf(e.alpha * e.q + nf - 1.0) * d.abs().powf(e.q);
        }
    }
    ((omega * lhs).powf(1.0 / e.r), (omega * rhs).powf(1.0 / e.q))
}

/// Checks `‖|x|^β φ‖_r ≤ C‖|x|^α Dφ‖_q` on random radial bump sums. Exponents
/// violating the balance `1/r + β/n = 1/q + (α−1)/n > 0` are rejected with the imbalance.
pub fn check_ckn(
    n: usize,
    r: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    test_count: usize,
    seed: u64,
) -> Result<IneqCheckReport> {
    require_finite(&[("r", r), ("q", q), ("alpha", alpha), ("beta", beta)])?;
    require(n >= 1, || "n must be at least 1".into())?;
    require(r >= 1.0 && q >= 1.0, || format!("r = {r} and q = {q} must be at least 1"))?;
    let e = CknExponents { r, q, alpha, beta };
    let imbalance = e.imbalance(n);
    require(imbalance.abs() <= 1e-12, || {
        format!("balance 1/r + β/n = 1/q + (α−1)/n violated by {imbalance:e}")
    })?;
    let level = 1.0 / r + beta / n as f64;
    require(level > 0.0, || format!("1/r + β/n = {level} must be positive"))?;
    let tests = radial_samples(test_count, seed, 1.0);
    let rho_max = tests.iter().map(RadialTestFunction::support_radius).fold(0.0, f64::max);
    let quad = RadialQuadrature::graded(rho_max, &[]);
    let ratios = tests
        .par_iter()
        .map(|phi| {
            let (lhs, rhs) = ckn_sides(n, &e, &quad, |x| phi.eval(x));
            (rhs > 0.0).then_some(lhs / rhs)
        })
        .collect();
    Ok(upper_constant_report(InequalityId::Ckn, ratios, e.reference_constant(n), seed))
}

/// `(LHS without C, RHS)` of the weighted Hardy inequality on `ℝᵏ` for a radial `w`:
/// `∫|w|ᵖ|y|⁻¹(1+|y|)^{(p−1)(ξ−1)}` and `∫|Dw|ᵖ(1+|y|)^{(p−1)ξ}`.
pub fn weighted_hardy_sides(
    k: usize,
    p: f64,
    xi: f64,
    quad: &RadialQuadrature,
    w: impl Fn(f64) -> (f64, f64),
) -> (f64, f64) {
    let omega = sphere_area(k);
    let kf = k as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (&rho, &wt) in quad.nodes.iter().zip(&quad.weights) {
        let (v, d) = w(rho);
        let base = rho.powf(kf - 1.0);
        if v != 0.0 {
            lhs += wt * base / rho * (1.0 + rho).powf((p - 1.0) * (xi - 1.0)) * v.abs().powf(p);
        }
        if d != 0.0 {
            rhs += wt * base * (1.0 + rho).powf((p - 1.0) * xi) * d.abs().powf(p);
        }
    }
    (omega * lhs, omega * rhs)
}

/// Checks the weighted Hardy inequality on `ℝᵏ` and reports the largest
/// feasible `C`. `scale` dilates every test function (`y → y/scale`).
pub fn check_weighted_hardy_scaled(
    k: usize,
    p: f64,
    xi: f64,
    scale: f64,
    test_count: usize,
    seed: u64,
) -> Result<IneqCheckReport> {
    require_finite(&[("p", p), ("xi", xi), ("scale", scale)])?;
    require(k >= 3, || format!("k = {k} must be at least 3"))?;
    require(p > 1.0, || format!("p = {p} must exceed 1"))?;
    require(xi >= 1.0, || format!("xi = {xi} must be at least 1"))?;
    require(scale > 0.0, || format!("scale = {scale} must be positive"))?;
    let tests = radial_samples(test_count, seed, scale);
    let rho_max = tests.iter().map(RadialTestFunction::support_radius).fold(0.0, f64::max);
    let quad = RadialQuadrature::graded(rho_max, &[]);
    let ratios: Vec<Option<f64>> = tests
        .par_iter()
        .map(|w| {
            let (lhs, rhs) = weighted_hardy_sides(k, p, xi, &quad, |x| w.eval(x));
            (lhs > 0.0).then_some(rhs / lhs)
        })
        .collect();
    let total = ratios.len();
    let valid: Vec<f64> = ratios.into_iter().flatten().collect();
    let found = valid.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = valid.iter().filter(|r| !(r.is_finite() && **r > 0.0)).count();
    let worst_margin = valid.iter().map(|r| r / found - 1.0).fold(f64::INFINITY, f64::min);
    Ok(IneqCheckReport {
        inequality_id: InequalityId::WeightedHardy,
        samples: valid.len(),
        skipped: total - valid.len(),
        violations,
        worst_margin: if valid.is_empty() { 0.0 } else { worst_margin },
        constant_found: (!valid.is_empty()).then_some(found),
        reference_constant: None,
        seed,
    })
}

/// [`check_weighted_hardy_scaled`] at unit scale.
pub fn check_weighted_hardy(k: usize, p: f64, xi: f64, test_count: usize, seed: u64) -> Result<IneqCheckReport> {
    check_weighted_hardy_scaled(k, p, xi, 1.0, test_count, seed)
}

// ---------------------------------------------------------------------------
// Interpolation exponent

/// `θ = (2−p)p₁*/(2pQ)` with `Q = (pn−1)/(p(n−1)−μ(p−1))`, and the bounds it should obey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBounds {
    pub theta: f64,
    /// `1 − p₁*/2`.
    pub lower: f64,
    pub upper: f64,
    pub q_value: f64,
    /// Open interval of `μ` on which `lower < θ < upper` (from the equivalent linear conditions).
    pub mu_window: (f64, f64),
    pub satisfied: bool,
}

/// Open interval `(n(p−1)/(n−1), p(n−1)/(p−1))` of admissible `μ`.
pub fn admissible_mu(n: usize, p: f64) -> (f64, f64) {
    let nf = n as f64;
    (nf * (p - 1.0) / (nf - 1.0), p * (nf - 1.0) / (p - 1.0))
}

/// Computes `θ`, `Q` and the bounds `1 − p₁*/2 < θ < 1`.
///
/// The bounds are reported, not enforced: for `p < 2n/(n+1)` the lower one
/// fails on the upper part of the admissible interval (`μ ≥ mu_window.1`).
pub fn theta_bounds(n: usize, p: f64, mu: f64) -> Result<ThetaBounds> {
    require_finite(&[("p", p), ("mu", mu)])?;
    require(n >= 2, || format!("n = {n} must be at least 2"))?;
    let nf = n as f64;
    let p_max = 2.0 * nf / (nf + 1.0);
    require(p > 1.0 && p <= p_max * (1.0 + 1e-12), || {
        format!("p = {p} must lie in (1, 2n/(n+1) = {p_max}]")
    })?;
    let (lo, hi) = admissible_mu(n, p);
    require(mu > lo && mu < hi, || format!("mu = {mu} outside the admissible interval ({lo}, {hi})"))?;
    let p1 = p * (nf - 1.0) / (nf - p);
    let q_value = (p * nf - 1.0) / (p * (nf - 1.0) - mu * (p - 1.0));
    let theta = (2.0 - p) * p1 / (2.0 * p * q_value);
    let lower = 1.0 - p1 / 2.0;
    let denom = (2.0 - p) * (p - 1.0) * (nf - 1.0);
    let base = p * (2.0 - p) * (nf - 1.0).powi(2);
    let mu1 = (base - 2.0 * (p * nf - 1.0) * (nf - p)) / denom;
    let mu2 = (base - (p * nf - 1.0) * (2.0 * (nf - p) - p * (nf - 1.0))) / denom;
    Ok(ThetaBounds {
        theta,
        lower,
        upper: 1.0,
        q_value,
        mu_window: (mu1, mu2),
        satisfied: lower < theta && theta < 1.0,
    })
}

/// Which `μ` range [`check_theta_bounds`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRange {
    /// The whole admissible interval.
    Admissible,
    /// The admissible interval intersected with the window where the bounds are equivalent to linear conditions on `μ`.
    Window,
}

/// Samples `μ` uniformly in the open range and counts samples where the
/// strict bounds fail. `constant_found` is unused; `worst_margin` is
/// `min(θ − lower, upper − θ)`.
pub fn check_theta_bounds(n: usize, p: f64, range: MuRange, sample_count: usize, seed: u64) -> Result<IneqCheckReport> {
    let (lo, hi) = admissible_mu(n, p);
    let (lo, hi) = match range {
        MuRange::Admissible => (lo, hi),
        MuRange::Window => {
            let probe = theta_bounds(n, p, 0.5 * (lo + hi))?;
            (lo.max(probe.mu_window.0), hi.min(probe.mu_window.1))
        }
    };
    require(lo < hi, || format!("empty μ range ({lo}, {hi})"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mus = Vec::with_capacity(sample_count);
    while mus.len() < sample_count {
        let mu = rng.gen_range(lo..hi);
        if mu > lo {
            mus.push(mu);
        }
    }
    let bounds = mus.iter().map(|&mu| theta_bounds(n, p, mu)).collect::<Result<Vec<_>>>()?;
    let violations = bounds.iter().filter(|b| !b.satisfied).count();
    let worst_margin = bounds
        .iter()
        .map(|b| (b.theta - b.lower).min(b.upper - b.theta))
        .fold(f64::INFINITY, f64::min);
    Ok(IneqCheckReport {
        inequality_id: InequalityId::ThetaBounds,
        samples: bounds.len(),
        skipped: 0,
        violations,
        worst_margin: if bounds.is_empty() { 0.0 } else { worst_margin },
        constant_found: None,
        reference_constant: None,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_perturbation_is_equality() {
        for p in [1.5, 2.0, 2.5] {
            let pt = fz21_point(p, 0.1, &[0.3, -1.2, 2.0], &[0.0; 3], WeightBranch::for_exponent(p)).unwrap();
            assert_eq!(pt.excess, 0.0);
            assert_eq!(pt.remainder, 0.0);
        }
        assert_eq!(fz24_needed_constant(1.7, 0.05, 2.0, 0.0), Some(0.0));
        assert_eq!(fz24_slack(1.7, 0.05, 3.0, 2.0, 0.0), 0.0);
        assert_eq!(fz24_slack(3.0, 0.05, 3.0, -2.0, 0.0), 0.0);
    }

    #[test]
    fn fz21_point_matches_direct_evaluation() {
        let (p, kappa) = (2.5, 0.1);
        let x1 = [1.0, 0.5, -0.25];
        let x2 = [-0.7, 0.4, 1.1];
        let pt = fz21_point(p, kappa, &x1, &x2, WeightBranch::AtLeastTwo).unwrap();
        let s: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let n1 = norm(&x1);
        let ns = (s.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let n2 = norm(&x2);
        let w = if n1 < ns { n1 } else { (ns / n1).powf(1.0 / (p - 2.0)) * ns };
        let lhs = ns.powf(p);
        let rhs = n1.powf(p)
            + p * n1.powf(p - 2.0) * dot(&x1, &x2)
            + (1.0 - kappa) / 2.0 * (p * n1.powf(p - 2.0) * n2 * n2 + p * (p - 2.0) * w.powf(p - 2.0) * (n1 - ns).powi(2));
        let expected = (lhs - rhs) / n1.powf(p);
        assert!((pt.excess - expected).abs() < 1e-12, "{} vs {expected}", pt.excess);
        assert!((pt.remainder - (n2 / n1).powf(p)).abs() < 1e-12);
    }

    #[test]
    fn weight_branch_is_irrelevant_at_p_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x1 = scaled(unit_vector(&mut rng), log_uniform(&mut rng));
            let x2 = scaled(unit_vector(&mut rng), log_uniform(&mut rng));
            let a = fz21_point(2.0, 0.1, &x1, &x2, WeightBranch::BelowTwo).unwrap();
            let b = fz21_point(2.0, 0.1, &x1, &x2, WeightBranch::AtLeastTwo).unwrap();
            assert!((a.excess - b.excess).abs() <= 1e-15 * (1.0 + a.excess.abs()));
            assert_eq!(a.remainder, b.remainder);
        }
    }

    #[test]
    fn fz21_feasible_constant_is_positive() {
        for p in [1.5, 2.0, 2.5] {
            let rep = check_fz21(p, 0.1, 20_000, 7).unwrap();
            assert!(rep.passed(), "{rep:?}");
            assert!(rep.worst_margin >= 0.0);
        }
        // At p = 2 the excess is exactly κ|x₂|², so c₀ = κ.
        let rep = check_fz21(2.0, 0.1, 5000, 2).unwrap();
        assert!((rep.constant_found.unwrap() - 0.1).abs() < 1e-8);
        let rep = check_fz21(1.5, 0.1, 100, 1).unwrap();
        assert_eq!(rep.samples + rep.skipped, 100);
    }

    #[test]
    fn zero_base_forces_unit_constant() {
        assert_eq!(fz24_needed_constant(3.0, 0.05, 0.0, -4.0), Some(1.0));
        assert!(fz24_slack(3.0, 0.05, 1.0, 0.0, -4.0).abs() < 1e-15);
        assert!(fz24_slack(3.0, 0.05, 0.99, 0.0, -4.0) < 0.0);
        assert_eq!(fz24_needed_constant(3.0, 0.05, 0.0, 0.0), None);
    }

    #[test]
    fn fz24_needed_constant_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in [1.5, 1.9, 2.5, 3.0] {
            for _ in 0..2000 {
                let a = rng.gen_range(-3.0..3.0);
                let b = rng.gen_range(-3.0..3.0);
                let c = fz24_needed_constant(q, 0.05, a, b).unwrap();
                assert!(fz24_slack(q, 0.05, c, a, b) >= -1e-12);
                if c > 1e-6 {
                    assert!(fz24_slack(q, 0.05, c * 0.99, a, b) < 0.0, "q={q} a={a} b={b} c={c}");
                }
            }
        }
    }

    #[test]
    fn fz24_constant_shrinks_with_kappa() {
        for q in [1.6, 3.0] {
            let loose = check_fz24(q, 0.05, 20_000, 11).unwrap();
            let tight = check_fz24(q, 0.2, 20_000, 11).unwrap();
            assert!(loose.passed() && tight.passed());
            assert!(tight.constant_found.unwrap() <= loose.constant_found.unwrap());
        }
    }

    #[test]
    fn zero_function_has_zero_sides() {
        let quad = RadialQuadrature::graded(6.0, &[]);
        assert_eq!(hardy_sobolev_sides(4, 2.0, 0.0, 0.0, &quad, |_| (0.0, 0.0)), (0.0, 0.0));
        let e = CknExponents::for_perturbation_norm(4, 1.5);
        assert_eq!(ckn_sides(4, &e, &quad, |_| (0.0, 0.0)), (0.0, 0.0));
        assert_eq!(weighted_hardy_sides(3, 2.0, 1.0, &quad, |_| (0.0, 0.0)), (0.0, 0.0));
    }

    #[test]
    fn radial_derivative_matches_difference_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = RadialTestFunction::sample(&mut rng, 1.0);
        for rho in [0.0, 0.4, 1.3, 2.2, 3.7] {
            let h = 1e-6;
            let fd = (f.eval(rho + h).0 - f.eval(rho - h).0) / (2.0 * h);
            assert!((f.eval(rho).1 - fd).abs() < 1e-7);
        }
        assert!(f.eval(0.0).1.abs() < 1e-15);
    }

    #[test]
    fn quadrature_integrates_weighted_powers() {
        let quad = RadialQuadrature::graded(3.0, &[]);
        for a in [-0.5, 0.0, 1.5, 3.0] {
            let exact = 3f64.powf(a + 1.0) / (a + 1.0);
            let rel = (quad.integrate(|x| x.powf(a)) / exact - 1.0).abs();
            assert!(rel < 1e-6, "a={a} rel={rel}");
        }
    }

    #[test]
    fn classical_hardy_holds_with_unit_constant() {
        let rep = check_hardy_sobolev(4, 2.0, 0.0, 0.0, 2000, 7).unwrap();
        assert_eq!(rep.reference_constant, Some(1.0));
        assert_eq!(rep.violations, 0);
        assert!(rep.constant_found.unwrap() < 1.0);
    }

    #[test]
    fn near_extremal_approaches_sharp_constant() {
        // φ = 1 on ρ < 1, ρ⁻¹ up to L, then linear to 0 at 2L. On ℝ⁴ with q = 2, s = 0:
        // LHS/ω = 1/2 + ln L + 5/12, RHS/ω = ln L + 15/4, so the ratio → 1 like 1 − O(1/ln L).
        let big = 1e12;
        let phi = |r: f64| {
            if r < 1.0 {
                (1.0, 0.0)
            } else if r < big {
                (1.0 / r, -1.0 / (r * r))
            } else if r < 2.0 * big {
                ((2.0 * big - r) / (big * big), -1.0 / (big * big))
            } else {
                (0.0, 0.0)
            }
        };
        let mut edges = vec![0.0];
        edges.extend((0..=800).map(|i| 1e-8 * (2.0 * big / 1e-8).powf(i as f64 / 800.0)));
        edges.extend([1.0, big]);
        edges.sort_by(f64::total_cmp);
        let quad = RadialQuadrature::from_edges(&edges);
        let (lhs, rhs) = hardy_sobolev_sides(4, 2.0, 0.0, 0.0, &quad, phi);
        let ln = big.ln();
        let expected = (0.5 + ln + 5.0 / 12.0) / (ln + 3.75);
        let ratio = lhs / rhs;
        assert!((ratio - expected).abs() < 1e-8, "ratio {ratio} vs {expected}");
        assert!(ratio > 0.9 && ratio < hardy_sobolev_reference(4, 2.0, 0.0));
    }

    #[test]
    fn exterior_restriction_shrinks_constant() {
        let whole = check_hardy_sobolev(5, 1.5, 0.5, 0.0, 2000, 9).unwrap();
        let outer = check_hardy_sobolev(5, 1.5, 0.5, 5.0, 2000, 9).unwrap();
        assert!(outer.constant_found.unwrap() <= whole.constant_found.unwrap());
        assert!(whole.passed() && outer.passed());
    }

    #[test]
    fn hardy_rejects_bad_weights() {
        assert!(check_hardy_sobolev(4, 2.0, -2.0, 0.0, 10, 1).is_err());
        assert!(check_hardy_sobolev(4, 0.5, 0.0, 0.0, 10, 1).is_err());
        assert!(check_hardy_sobolev(4, 2.0, 0.0, -1.0, 10, 1).is_err());
    }

    #[test]
    fn perturbation_norm_exponents_are_balanced() {
        for n in 3..8 {
            for p in [1.2, 1.5, 1.7, 2.0] {
                let e = CknExponents::for_perturbation_norm(n, p);
                assert!(e.imbalance(n).abs() < 1e-14);
            }
        }
        let err = check_ckn(4, 2.0, 2.0, 1.0, 0.5, 10, 1).unwrap_err();
        assert!(err.to_string().contains("balance"));
    }

    #[test]
    fn ckn_instance_has_no_violations() {
        let e = CknExponents::for_perturbation_norm(4, 1.5);
        let rep = check_ckn(4, e.r, e.q, e.alpha, e.beta, 2000, 3).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.reference_constant.is_some());
        // A genuinely interpolating instance (r ≠ q) has no reference constant.
        let rep = check_ckn(4, 3.0, 2.0, 5.0 / 6.0, 0.5, 500, 3).unwrap();
        assert!(rep.passed() && rep.reference_constant.is_none());
    }

    #[test]
    fn weighted_hardy_is_feasible_and_survives_rescaling() {
        let rep = check_weighted_hardy(3, 2.0, 1.0, 2000, 4).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let scaled = check_weighted_hardy_scaled(3, 2.0, 1.0, 10.0, 2000, 4).unwrap();
        assert!(scaled.passed(), "{scaled:?}");
        assert!(check_weighted_hardy(2, 2.0, 1.0, 10, 1).is_err());
        assert!(check_weighted_hardy(3, 2.0, 0.5, 10, 1).is_err());
    }

    #[test]
    fn theta_at_midpoint_matches_exact_arithmetic() {
        // n = 4, p = 8/5: μ ∈ (4/5, 8), midpoint 22/5 → Q = 5/2, p₁* = 2, θ = 1/10.
        let b = theta_bounds(4, 1.6, 4.4).unwrap();
        assert!((b.q_value - 2.5).abs() < 1e-14);
        assert!((b.theta - 0.1).abs() < 1e-14);
        assert!(b.lower.abs() < 1e-14);
        assert!(b.satisfied);
    }

    #[test]
    fn q_exceeds_one_on_admissible_interval() {
        for (n, p) in [(3, 1.2), (4, 1.6), (6, 1.4)] {
            let (lo, hi) = admissible_mu(n, p);
            for i in 1..200 {
                let mu = lo + (hi - lo) * i as f64 / 200.0;
                assert!(theta_bounds(n, p, mu).unwrap().q_value > 1.0);
            }
        }
        assert!(theta_bounds(4, 1.6, 0.8).is_err());
        assert!(theta_bounds(4, 1.6, 8.0).is_err());
        assert!(theta_bounds(4, 1.7, 2.0).is_err());
    }

    #[test]
    fn theta_decreases_towards_upper_endpoint() {
        let (lo, hi) = admissible_mu(4, 1.6);
        let thetas: Vec<f64> = (1..100)
            .map(|i| theta_bounds(4, 1.6, lo + (hi - lo) * i as f64 / 100.0).unwrap().theta)
            .collect();
        assert!(thetas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn lower_bound_fails_above_window_for_small_p() {
        // p < 2n/(n+1): the window's right end lies inside the admissible interval.
        let b = theta_bounds(4, 1.3, 12.0).unwrap();
        assert!(b.mu_window.1 < 12.0);
        assert!(!b.satisfied);
        let rep = check_theta_bounds(4, 1.3, MuRange::Window, 1000, 1).unwrap();
        assert_eq!(rep.violations, 0);
        let rep = check_theta_bounds(4, 1.6, MuRange::Admissible, 1000, 1).unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn reports_are_deterministic() {
        assert_eq!(check_fz21(2.5, 0.1, 500, 9).unwrap(), check_fz21(2.5, 0.1, 500, 9).unwrap());
        assert_eq!(check_fz24(3.0, 0.05, 500, 9).unwrap(), check_fz24(3.0, 0.05, 500, 9).unwrap());
        assert_eq!(
            check_hardy_sobolev(4, 2.0, 0.0, 0.0, 50, 9).unwrap(),
            check_hardy_sobolev(4, 2.0, 0.0, 0.0, 50, 9).unwrap()
        );
    }
}
