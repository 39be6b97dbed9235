use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use hsm_core::domain::{GridSpec, KvDocument};
use hsm_lab::config::default_output_dir;
use hsm_lab::{read_batch_list, run, run_batch, CliError, StudyConfig, EXIT_PASS, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "hsm-lab", version, about = "Numerical laboratory for Hardy–Sobolev–Maz'ya stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Parameters, grid and bookkeeping shared by every study.
#[derive(Args)]
struct Common {
    /// Total dimension.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Integrability exponent.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Dimension of the singular factor `y`.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Resolution `NRxNZ` (default 48x96; 64x384 for the bump family, 96x192 for invariance).
    #[arg(long)]
    nodes: Option<String>,
    /// Radial mapping length.
    #[arg(long, default_value_t = 4.0)]
    scale_r: f64,
    /// Axial mapping length.
    #[arg(long, default_value_t = 4.0)]
    scale_z: f64,
    /// Artifact directory (default `$HSM_LAB_OUTPUT_ROOT/<command>`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the configuration file for this invocation and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Anisotropic,
    Bump,
}

#[derive(Subcommand)]
enum Command {
    /// Sharp constant from the extremal, and its invariance at another θ.
    SharpConstant {
        #[command(flatten)]
        common: Common,
        /// Extremal parameters `a,λ,z′…`.
        #[arg(long)]
        theta: Option<String>,
    },
    /// Deficit of a field.
    Deficit {
        #[command(flatten)]
        common: Common,
        /// `extremal`, `csv:PATH` or `binary:PATH`.
        #[arg(long, default_value = "extremal")]
        input: String,
        #[arg(long)]
        theta: Option<String>,
    },
    /// Nearest extremal to a field.
    Project {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "extremal")]
        input: String,
        /// Parameters of an extremal input.
        #[arg(long)]
        theta: Option<String>,
        /// Starting parameters.
        #[arg(long)]
        start: Option<String>,
        /// `distance` or `functional`.
        #[arg(long, default_value = "functional")]
        method: String,
    },
    /// Lowest eigenpairs of the linearized operator, checked against the closed forms.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long)]
        theta: Option<String>,
    },
    /// Decay exponent of the deficit along a sharpness family.
    Sharpness {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Anisotropic family indices.
        #[arg(long)]
        i_values: Option<String>,
        /// Bump amplitudes.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        center_r: Option<f64>,
        #[arg(long)]
        half_width_r: Option<f64>,
        #[arg(long)]
        center_z: Option<f64>,
        #[arg(long)]
        half_width_z: Option<f64>,
    },
    /// Deficit over distance across perturbation families.
    StabilityScan {
        #[command(flatten)]
        common: Common,
        /// Subset of `anisotropic,bump,random_orthogonal`.
        #[arg(long)]
        families: Option<String>,
    },
    /// Randomized check of an auxiliary inequality.
    Ineq {
        #[command(flatten)]
        common: Common,
        /// fz21, fz24, hardy_sobolev, ckn, weighted_hardy or theta_bounds.
        #[arg(long)]
        id: String,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        p1_star: Option<f64>,
        /// Hardy–Sobolev exponent.
        #[arg(long)]
        q: Option<f64>,
        /// Hardy–Sobolev weight.
        #[arg(long)]
        s: Option<f64>,
        /// Hardy–Sobolev exterior radius.
        #[arg(long)]
        radius: Option<f64>,
        /// Interpolation exponents `r,q,alpha,beta`.
        #[arg(long)]
        ckn: Option<String>,
        #[arg(long)]
        xi: Option<f64>,
        /// Dilation of the weighted Hardy test functions.
        #[arg(long)]
        scale: Option<f64>,
        /// `admissible` or `window`.
        #[arg(long)]
        mu_range: Option<String>,
    },
    /// Dilation invariance of the norms and deficit, and θ-invariance of the sharp constant.
    Invariance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigmas: Option<String>,
        /// `;`-separated parameter lists.
        #[arg(long)]
        thetas: Option<String>,
    },
    /// Run a study from a configuration file.
    Run { config: PathBuf },
    /// Run every configuration listed in a file (one path per line).
    Batch {
        list: PathBuf,
        /// Where the aggregate report goes (default `$HSM_LAB_OUTPUT_ROOT/batch`).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn opt<T: ToString>(doc: &mut KvDocument, section: &str, key: &str, value: &Option<T>) {
    if let Some(v) = value {
        doc.set(section, key, v.to_string());
    }
}

/// Turns flags into the key-value document a configuration file would hold.
fn document(command: &Command) -> Result<(KvDocument, &Common), CliError> {
    let mut doc = KvDocument::new();
    let (name, common) = match command {
        Command::SharpConstant { common, .. } => ("sharp-constant", common),
        Command::Deficit { common, .. } => ("deficit", common),
        Command::Project { common, .. } => ("project", common),
        Command::Spectrum { common, .. } => ("spectrum", common),
        Command::Sharpness { common, .. } => ("sharpness", common),
        Command::StabilityScan { common, .. } => ("stability-scan", common),
        Command::Ineq { common, .. } => ("ineq", common),
        Command::Invariance { common, .. } => ("invariance", common),
        Command::Run { .. } | Command::Batch { .. } => unreachable!("handled separately"),
    };
    doc.set("study", "command", name);
    let out = common.output_dir.clone().unwrap_or_else(|| default_output_dir(name));
    doc.set("study", "output_dir", out.display());
    doc.set("study", "seed", common.seed);
    let default_nodes = match command {
        Command::Sharpness {
            family: FamilyArg::Bump, ..
        } => "64x384",
        Command::Invariance { .. } => "96x192",
        _ => "48x96",
    };
    let (nr, nz) = GridSpec::parse_resolution(common.nodes.as_deref().unwrap_or(default_nodes))
        .map_err(|e| CliError::Config(e.to_string()))?;
    for (key, value) in [
        ("n", common.n.to_string()),
        ("p", common.p.to_string()),
        ("k", common.k.to_string()),
        ("nodes_r", nr.to_string()),
        ("nodes_z", nz.to_string()),
        ("L_r", common.scale_r.to_string()),
        ("L_z", common.scale_z.to_string()),
    ] {
        doc.set("grid", key, value);
    }
    match command {
        Command::SharpConstant { theta, .. } | Command::Spectrum { theta, .. } => {
            opt(&mut doc, name, "theta", theta);
            if let Command::Spectrum { count, .. } = command {
                doc.set(name, "count", count);
            }
        }
        Command::Deficit { input, theta, .. } => {
            doc.set(name, "input", input);
            opt(&mut doc, name, "theta", theta);
        }
        Command::Project {
            input,
            theta,
            start,
            method,
            ..
        } => {
            doc.set(name, "input", input);
            opt(&mut doc, name, "theta", theta);
            opt(&mut doc, name, "start", start);
            doc.set(name, "method", method);
        }
        Command::Sharpness {
            family,
            i_values,
            eps,
            center_r,
            half_width_r,
            center_z,
            half_width_z,
            ..
        } => {
            doc.set(
                name,
                "family",
                match family {
                    FamilyArg::Anisotropic => "anisotropic",
                    FamilyArg::Bump => "bump",
                },
            );
            opt(&mut doc, name, "i_values", i_values);
            opt(&mut doc, name, "eps_values", eps);
            opt(&mut doc, name, "center_r", center_r);
            opt(&mut doc, name, "half_width_r", half_width_r);
            opt(&mut doc, name, "center_z", center_z);
            opt(&mut doc, name, "half_width_z", half_width_z);
        }
        Command::StabilityScan { families, .. } => opt(&mut doc, name, "families", families),
        Command::Ineq {
            id,
            kappa,
            samples,
            p1_star,
            q,
            s,
            radius,
            ckn,
            xi,
            scale,
            mu_range,
            ..
        } => {
            doc.set(name, "id", id);
            opt(&mut doc, name, "kappa", kappa);
            opt(&mut doc, name, "samples", samples);
            opt(&mut doc, name, "p1_star", p1_star);
            opt(&mut doc, name, "q", q);
            opt(&mut doc, name, "s", s);
            opt(&mut doc, name, "radius", radius);
            opt(&mut doc, name, "ckn", ckn);
            opt(&mut doc, name, "xi", xi);
            opt(&mut doc, name, "scale", scale);
            opt(&mut doc, name, "mu_range", mu_range);
        }
        Command::Invariance { sigmas, thetas, .. } => {
            opt(&mut doc, name, "sigmas", sigmas);
            opt(&mut doc, name, "thetas", thetas);
        }
        Command::Run { .. } | Command::Batch { .. } => unreachable!(),
    }
    Ok((doc, common))
}

fn run_one(cfg: &StudyConfig) -> Result<i32, CliError> {
    let out = run(cfg)?;
    let status = if out.passed { "PASS" } else { "FAIL" };
    println!("{status} {}: {}", out.command, out.message);
    println!("artifacts: {}", out.output_dir.display());
    Ok(out.exit_code)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            run_one(&StudyConfig::parse(&text)?)
        }
        Command::Batch { list, output_dir } => {
            let configs = read_batch_list(list).map_err(|e| CliError::Config(e.to_string()))?;
            let report = run_batch(&configs)?;
            print!("{}", report.table());
            let dir = output_dir.clone().unwrap_or_else(|| default_output_dir("batch"));
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("batch_summary.json");
            let text = serde_json::to_string_pretty(&report).expect("batch report serializes");
            std::fs::write(&path, format!("{text}\n")).map_err(|e| CliError::Io { path, source: e })?;
            Ok(report.exit_code)
        }
        command => {
            let (doc, common) = document(command)?;
            let cfg = StudyConfig::from_kv(&doc)?;
            if common.print_config {
                print!("{cfg}");
                return Ok(EXIT_PASS);
            }
            run_one(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hsm-lab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
