//! Study configuration and its flat key-value representation.
//!
//! ```text
//! [study]
//! command = spectrum
//! output_dir = out/spectrum
//! seed = 7
//!
//! [grid]
//! n = 4
//! p = 2
//! ...
//!
//! [spectrum]
//! count = 6
//! theta = 1,1,0
//! ```
//!
//! The options section is named after the command. Lists are comma-separated;
//! extremal parameters are written `a,λ,z′₁,…`.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hsm_core::domain::{GridSpec, KvDocument, Params};
use hsm_core::experiments::{default_families, BumpSpec, Family};
use hsm_core::ineqlab::{admissible_mu, CknExponents, InequalityId, MuRange};
use hsm_core::manifold::ExtremalParams;
use hsm_core::projection::ProjectionMethod;

use crate::CliError;

/// Environment variable naming the root under which studies without an
/// explicit output directory write their artifacts.
pub const OUTPUT_ROOT_VAR: &str = "HSM_LAB_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "hsm-output";

/// Default artifact directory for a command: `$HSM_LAB_OUTPUT_ROOT/<command>`.
pub fn default_output_dir(command: &str) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT), PathBuf::from);
    root.join(command)
}

/// Where a field comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldInput {
    Extremal(ExtremalParams),
    /// Nodal values written by the field CSV writer.
    Csv(PathBuf),
    /// The binary field format.
    Binary(PathBuf),
}

impl FieldInput {
    pub fn path(&self) -> Option<&Path> {
        match self {
            FieldInput::Extremal(_) => None,
            FieldInput::Csv(p) | FieldInput::Binary(p) => Some(p),
        }
    }
}

impl Display for FieldInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldInput::Extremal(_) => write!(f, "extremal"),
            FieldInput::Csv(p) => write!(f, "csv:{}", p.display()),
            FieldInput::Binary(p) => write!(f, "binary:{}", p.display()),
        }
    }
}

/// Parses `extremal`, `csv:PATH` or `binary:PATH`; the extremal's parameters come separately.
pub fn parse_field_input(text: &str, theta: ExtremalParams) -> Result<FieldInput, CliError> {
    if text == "extremal" {
        return Ok(FieldInput::Extremal(theta));
    }
    if let Some(p) = text.strip_prefix("csv:") {
        return Ok(FieldInput::Csv(PathBuf::from(p)));
    }
    if let Some(p) = text.strip_prefix("binary:") {
        return Ok(FieldInput::Binary(PathBuf::from(p)));
    }
    Err(CliError::Config(format!(
        "input `{text}` must be `extremal`, `csv:PATH` or `binary:PATH`"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SharpnessFamily {
    Anisotropic { i_values: Vec<u32> },
    Bump { spec: BumpSpec, eps_values: Vec<f64> },
}

impl SharpnessFamily {
    pub fn label(&self) -> &'static str {
        match self {
            SharpnessFamily::Anisotropic { .. } => "anisotropic",
            SharpnessFamily::Bump { .. } => "bump",
        }
    }

    pub fn default_anisotropic() -> Self {
        SharpnessFamily::Anisotropic {
            i_values: vec![4, 6, 8, 12, 16, 24, 32],
        }
    }

    pub fn default_bump() -> Self {
        SharpnessFamily::Bump {
            spec: BumpSpec::default(),
            eps_values: vec![0.05, 0.1, 0.2, 0.3, 0.5],
        }
    }
}

/// Options of the inequality lab. Check-specific fields are ignored by the other checks.
#[derive(Debug, Clone, PartialEq)]
pub struct IneqOptions {
    pub id: InequalityId,
    pub samples: usize,
    pub kappa: f64,
    /// Exponent of the scalar inequality; defaults to `p₁*` of the study parameters.
    pub p1_star: Option<f64>,
    /// Integrability exponent and weight of the Hardy–Sobolev check.
    pub q: f64,
    pub s: f64,
    pub radius: f64,
    /// Interpolation exponents; defaults to the perturbation-norm instance at `(n, p)`.
    pub ckn: Option<CknExponents>,
    pub xi: f64,
    /// Dilation of the weighted Hardy test functions.
    pub scale: f64,
    pub mu_range: MuRange,
}

impl IneqOptions {
    pub fn new(id: InequalityId) -> Self {
        IneqOptions {
            id,
            samples: 100_000,
            kappa: 0.1,
            p1_star: None,
            q: 2.0,
            s: 0.0,
            radius: 0.0,
            ckn: None,
            xi: 1.0,
            scale: 1.0,
            mu_range: MuRange::Admissible,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    SharpConstant { theta: ExtremalParams },
    Deficit { input: FieldInput },
    Project { input: FieldInput, start: ExtremalParams, method: ProjectionMethod },
    Spectrum { count: usize, theta: ExtremalParams },
    Sharpness { family: SharpnessFamily },
    StabilityScan { families: Vec<Family> },
    Ineq(IneqOptions),
    Invariance { sigmas: Vec<f64>, thetas: Vec<ExtremalParams> },
}

impl Study {
    pub fn command(&self) -> &'static str {
        match self {
            Study::SharpConstant { .. } => "sharp-constant",
            Study::Deficit { .. } => "deficit",
            Study::Project { .. } => "project",
            Study::Spectrum { .. } => "spectrum",
            Study::Sharpness { .. } => "sharpness",
            Study::StabilityScan { .. } => "stability-scan",
            Study::Ineq(_) => "ineq",
            Study::Invariance { .. } => "invariance",
        }
    }

    /// Default `θ` samples of the sharp-constant invariance check.
    pub fn default_invariance_thetas(m: usize) -> Vec<ExtremalParams> {
        let shift = |x: f64| (0..m).map(|i| if i == 0 { x } else { 0.0 }).collect::<Vec<_>>();
        vec![
            ExtremalParams::unit(m),
            ExtremalParams {
                a: 1.3,
                lambda: 0.7,
                z_prime: shift(0.5),
            },
            ExtremalParams {
                a: -2.0,
                lambda: 1.5,
                z_prime: shift(-1.0),
            },
        ]
    }
}

/// One fully specified study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub params: Params,
    pub grid: GridSpec,
    pub study: Study,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn join<T: Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("cannot parse `{s}` in {what} list `{text}`")))
        })
        .collect()
}

fn theta_text(th: &ExtremalParams) -> String {
    let mut v = vec![th.a, th.lambda];
    v.extend(&th.z_prime);
    join(&v)
}

/// Parses `a,λ,z′₁,…`; a bare `a,λ` means `z′ = 0`.
pub fn parse_theta(text: &str, m: usize) -> Result<ExtremalParams, CliError> {
    let v: Vec<f64> = parse_list(text, "theta")?;
    if v.len() < 2 {
        return Err(CliError::Config(format!("theta `{text}` needs at least a and λ")));
    }
    let z = if v.len() == 2 { vec![0.0; m] } else { v[2..].to_vec() };
    let th = ExtremalParams::new(v[0], v[1], z).map_err(|e| CliError::Config(e.to_string()))?;
    if th.m() != m {
        return Err(CliError::Config(format!(
            "theta `{text}` has {} translation components, expected m = {m}",
            th.m()
        )));
    }
    Ok(th)
}

fn mu_range_text(r: MuRange) -> &'static str {
    match r {
        MuRange::Admissible => "admissible",
        MuRange::Window => "window",
    }
}

pub fn parse_mu_range(text: &str) -> Result<MuRange, CliError> {
    match text {
        "admissible" => Ok(MuRange::Admissible),
        "window" => Ok(MuRange::Window),
        other => Err(CliError::Config(format!("mu range `{other}` must be `admissible` or `window`"))),
    }
}

struct Section<'a> {
    doc: &'a KvDocument,
    name: &'a str,
}

impl Section<'_> {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        self.doc
            .get_or(self.name, key, default)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.doc.get(self.name, key)
    }
}

impl StudyConfig {
    pub fn to_kv(&self) -> KvDocument {
        let mut doc = KvDocument::new();
        let cmd = self.study.command();
        doc.set("study", "command", cmd);
        doc.set("study", "output_dir", self.output_dir.display());
        doc.set("study", "seed", self.seed);
        self.grid.write_kv(&self.params, &mut doc, "grid");
        match &self.study {
            Study::SharpConstant { theta } => doc.set(cmd, "theta", theta_text(theta)),
            Study::Deficit { input } => {
                doc.set(cmd, "input", input);
                if let FieldInput::Extremal(th) = input {
                    doc.set(cmd, "theta", theta_text(th));
                }
            }
            Study::Project { input, start, method } => {
                doc.set(cmd, "input", input);
                if let FieldInput::Extremal(th) = input {
                    doc.set(cmd, "theta", theta_text(th));
                }
                doc.set(cmd, "start", theta_text(start));
                doc.set(
                    cmd,
                    "method",
                    match method {
                        ProjectionMethod::Distance => "distance",
                        ProjectionMethod::Functional => "functional",
                    },
                );
            }
            Study::Spectrum { count, theta } => {
                doc.set(cmd, "count", count);
                doc.set(cmd, "theta", theta_text(theta));
            }
            Study::Sharpness { family } => {
                doc.set(cmd, "family", family.label());
                match family {
                    SharpnessFamily::Anisotropic { i_values } => doc.set(cmd, "i_values", join(i_values)),
                    SharpnessFamily::Bump { spec, eps_values } => {
                        doc.set(cmd, "eps_values", join(eps_values));
                        doc.set(cmd, "center_r", spec.center_r);
                        doc.set(cmd, "half_width_r", spec.half_width_r);
                        doc.set(cmd, "center_z", spec.center_z);
                        doc.set(cmd, "half_width_z", spec.half_width_z);
                    }
                }
            }
            Study::StabilityScan { families } => {
                let labels: Vec<&str> = families.iter().map(Family::label).collect();
                doc.set(cmd, "families", labels.join(","));
            }
            Study::Ineq(o) => {
                doc.set(cmd, "id", o.id.label());
                doc.set(cmd, "samples", o.samples);
                doc.set(cmd, "kappa", o.kappa);
                if let Some(q) = o.p1_star {
                    doc.set(cmd, "p1_star", q);
                }
                doc.set(cmd, "q", o.q);
                doc.set(cmd, "s", o.s);
                doc.set(cmd, "radius", o.radius);
                if let Some(e) = o.ckn {
                    doc.set(cmd, "ckn", join(&[e.r, e.q, e.alpha, e.beta]));
                }
                doc.set(cmd, "xi", o.xi);
                doc.set(cmd, "scale", o.scale);
                doc.set(cmd, "mu_range", mu_range_text(o.mu_range));
            }
            Study::Invariance { sigmas, thetas } => {
                doc.set(cmd, "sigmas", join(sigmas));
                let t: Vec<String> = thetas.iter().map(theta_text).collect();
                doc.set(cmd, "thetas", t.join(";"));
            }
        }
        doc
    }

    pub fn from_kv(doc: &KvDocument) -> Result<Self, CliError> {
        let study_sec = Section { doc, name: "study" };
        let cmd: String = doc
            .require("study", "command")
            .map_err(|e| CliError::Config(e.to_string()))?;
        let (params, grid) = GridSpec::from_kv(doc, "grid").map_err(|e| CliError::Config(e.to_string()))?;
        let m = params.m();
        let seed = study_sec.get("seed", 0u64)?;
        let output_dir = study_sec
            .raw("output_dir")
            .map_or_else(|| default_output_dir(&cmd), PathBuf::from);
        let sec = Section { doc, name: &cmd };
        let theta = |key: &str| -> Result<ExtremalParams, CliError> {
            sec.raw(key).map_or(Ok(ExtremalParams::unit(m)), |t| parse_theta(t, m))
        };
        let study = match cmd.as_str() {
            "sharp-constant" => Study::SharpConstant { theta: theta("theta")? },
            "deficit" => Study::Deficit {
                input: parse_field_input(sec.raw("input").unwrap_or("extremal"), theta("theta")?)?,
            },
            "project" => Study::Project {
                input: parse_field_input(sec.raw("input").unwrap_or("extremal"), theta("theta")?)?,
                start: theta("start")?,
                method: sec
                    .raw("method")
                    .unwrap_or("functional")
                    .parse()
                    .map_err(|e: hsm_core::Error| CliError::Config(e.to_string()))?,
            },
            "spectrum" => Study::Spectrum {
                count: sec.get("count", 6usize)?,
                theta: theta("theta")?,
            },
            "sharpness" => {
                let family = match sec.raw("family") {
                    Some("anisotropic") => match sec.raw("i_values") {
                        Some(t) => SharpnessFamily::Anisotropic {
                            i_values: parse_list(t, "i_values")?,
                        },
                        None => SharpnessFamily::default_anisotropic(),
                    },
                    Some("bump") => {
                        let SharpnessFamily::Bump { spec: d, eps_values } = SharpnessFamily::default_bump() else {
                            unreachable!()
                        };
                        SharpnessFamily::Bump {
                            spec: BumpSpec {
                                center_r: sec.get("center_r", d.center_r)?,
                                half_width_r: sec.get("half_width_r", d.half_width_r)?,
                                center_z: sec.get("center_z", d.center_z)?,
                                half_width_z: sec.get("half_width_z", d.half_width_z)?,
                            },
                            eps_values: match sec.raw("eps_values") {
                                Some(t) => parse_list(t, "eps_values")?,
                                None => eps_values,
                            },
                        }
                    }
                    Some(other) => {
                        return Err(CliError::Config(format!(
                            "sharpness family `{other}` must be `anisotropic` or `bump`"
                        )))
                    }
                    None => return Err(CliError::Config("sharpness needs `family`".into())),
                };
                Study::Sharpness { family }
            }
            "stability-scan" => {
                let wanted: Vec<String> = match sec.raw("families") {
                    Some(t) => parse_list(t, "families")?,
                    None => default_families().iter().map(|f| f.label().to_string()).collect(),
                };
                let defaults = default_families();
                let families = wanted
                    .iter()
                    .map(|w| {
                        defaults
                            .iter()
                            .find(|f| f.label() == w)
                            .cloned()
                            .ok_or_else(|| CliError::Config(format!("unknown family `{w}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Study::StabilityScan { families }
            }
            "ineq" => {
                let id: InequalityId = sec
                    .raw("id")
                    .ok_or_else(|| CliError::Config("ineq needs `id`".into()))?
                    .parse()
                    .map_err(|e: hsm_core::Error| CliError::Config(e.to_string()))?;
                let d = IneqOptions::new(id);
                let ckn = match sec.raw("ckn") {
                    Some(t) => {
                        let v: Vec<f64> = parse_list(t, "ckn")?;
                        let [r, q, alpha, beta] = v[..] else {
                            return Err(CliError::Config(format!("ckn `{t}` must list r,q,alpha,beta")));
                        };
                        Some(CknExponents { r, q, alpha, beta })
                    }
                    None => None,
                };
                Study::Ineq(IneqOptions {
                    id,
                    samples: sec.get("samples", d.samples)?,
                    kappa: sec.get("kappa", d.kappa)?,
                    p1_star: sec.raw("p1_star").map(|_| sec.get("p1_star", 0.0)).transpose()?,
                    q: sec.get("q", d.q)?,
                    s: sec.get("s", d.s)?,
                    radius: sec.get("radius", d.radius)?,
                    ckn,
                    xi: sec.get("xi", d.xi)?,
                    scale: sec.get("scale", d.scale)?,
                    mu_range: parse_mu_range(sec.raw("mu_range").unwrap_or("admissible"))?,
                })
            }
            "invariance" => Study::Invariance {
                sigmas: match sec.raw("sigmas") {
                    Some(t) => parse_list(t, "sigmas")?,
                    None => vec![0.5, 2.0],
                },
                thetas: match sec.raw("thetas") {
                    Some(t) => t.split(';').map(|s| parse_theta(s.trim(), m)).collect::<Result<_, _>>()?,
                    None => Study::default_invariance_thetas(m),
                },
            },
            other => return Err(CliError::Config(format!("unknown command `{other}`"))),
        };
        let cfg = StudyConfig {
            params,
            grid,
            study,
            output_dir,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc = KvDocument::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_kv(&doc)
    }

    /// Checks everything that can be checked without running the study.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.grid.nodes_r < 4 || (self.params.m() > 0 && self.grid.nodes_z < 4) {
            return bad(format!(
                "resolution {}x{} is too coarse (at least 4 nodes per axis)",
                self.grid.nodes_r, self.grid.nodes_z
            ));
        }
        if let Some(dir) = self.output_dir.to_str() {
            if dir.trim().is_empty() {
                return bad("output_dir is empty".into());
            }
        }
        if self.output_dir.is_file() {
            return bad(format!("output_dir {} is an existing file", self.output_dir.display()));
        }
        match &self.study {
            Study::Deficit { input } | Study::Project { input, .. } => {
                if let Some(p) = input.path() {
                    if !p.is_file() {
                        return bad(format!("input file {} does not exist", p.display()));
                    }
                }
            }
            Study::Spectrum { count, .. } => {
                let need = self.params.m() + 2;
                if *count < need {
                    return bad(format!("count = {count} must be at least m + 2 = {need}"));
                }
            }
            Study::Sharpness { family } => match family {
                SharpnessFamily::Anisotropic { i_values } if i_values.is_empty() => {
                    return bad("i_values is empty".into())
                }
                SharpnessFamily::Bump { spec, eps_values } => {
                    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
                    if eps_values.is_empty() {
                        return bad("eps_values is empty".into());
                    }
                }
                _ => {}
            },
            Study::StabilityScan { families } if families.is_empty() => return bad("no families selected".into()),
            Study::Ineq(o) => {
                if o.samples == 0 {
                    return bad("samples must be positive".into());
                }
                if o.id == InequalityId::ThetaBounds {
                    let (n, p) = (self.params.n(), self.params.p());
                    let p_max = 2.0 * n as f64 / (n as f64 + 1.0);
                    if p > p_max * (1.0 + 1e-12) {
                        return bad(format!("theta_bounds needs p ≤ 2n/(n+1) = {p_max}, got {p}"));
                    }
                    let (lo, hi) = admissible_mu(n, p);
                    if !(lo < hi) {
                        return bad(format!("empty admissible μ interval ({lo}, {hi})"));
                    }
                }
            }
            Study::Invariance { sigmas, thetas } => {
                if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return bad(format!("dilation factors must be positive: {sigmas:?}"));
                }
                if thetas.is_empty() {
                    return bad("no θ samples for the sharp-constant invariance".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl Display for StudyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_kv())
    }
}
