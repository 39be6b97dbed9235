use std::path::PathBuf;

use hsm_core::domain::{GridSpec, Params};
use hsm_core::experiments::default_families;
use hsm_core::ineqlab::{CknExponents, InequalityId, MuRange};
use hsm_core::manifold::ExtremalParams;
use hsm_core::projection::ProjectionMethod;
use hsm_lab::config::parse_theta;
use hsm_lab::{FieldInput, IneqOptions, SharpnessFamily, Study, StudyConfig};

fn theta() -> ExtremalParams {
    ExtremalParams::new(1.3, 0.7, vec![0.5]).unwrap()
}

fn studies() -> Vec<Study> {
    let mut ineq = IneqOptions::new(InequalityId::Ckn);
    ineq.ckn = Some(CknExponents::for_perturbation_norm(4, 1.5));
    ineq.p1_star = Some(3.0);
    ineq.mu_range = MuRange::Window;
    vec![
        Study::SharpConstant { theta: theta() },
        Study::Deficit {
            input: FieldInput::Extremal(theta()),
        },
        Study::Project {
            input: FieldInput::Extremal(theta()),
            start: ExtremalParams::unit(1),
            method: ProjectionMethod::Distance,
        },
        Study::Spectrum { count: 7, theta: theta() },
        Study::Sharpness {
            family: SharpnessFamily::default_anisotropic(),
        },
        Study::Sharpness {
            family: SharpnessFamily::default_bump(),
        },
        Study::StabilityScan {
            families: default_families(),
        },
        Study::Ineq(ineq),
        Study::Invariance {
            sigmas: vec![0.5, 2.0, 1.0 / 3.0],
            thetas: Study::default_invariance_thetas(1),
        },
    ]
}

#[test]
fn every_study_round_trips_losslessly() {
    for study in studies() {
        let cfg = StudyConfig {
            params: Params::new(4, 1.5, 3).unwrap(),
            grid: GridSpec::new(40, 80).with_scales(3.5, 0.1 + 0.2),
            study,
            output_dir: PathBuf::from("out/x"),
            seed: 123,
        };
        let text = cfg.to_string();
        let back = StudyConfig::parse(&text).unwrap();
        assert_eq!(back, cfg, "{text}");
        assert_eq!(back.to_string(), text);
    }
}

#[test]
fn missing_and_unknown_keys_are_config_errors() {
    let base = "[study]\ncommand = ineq\n\n[grid]\nn = 4\np = 2\nk = 3\n";
    let err = StudyConfig::parse(base).unwrap_err();
    assert_eq!(err.exit_code(), 64);
    let err = StudyConfig::parse(&format!("{base}\n[ineq]\nid = nope\n")).unwrap_err();
    assert_eq!(err.exit_code(), 64);
    assert!(StudyConfig::parse(&format!("{base}\n[ineq]\nid = fz21\n")).is_ok());
    let err = StudyConfig::parse("[study]\ncommand = spectrum\n").unwrap_err();
    assert_eq!(err.exit_code(), 64);
}

#[test]
fn theta_parsing() {
    assert_eq!(parse_theta("2,3", 1).unwrap(), ExtremalParams::new(2.0, 3.0, vec![0.0]).unwrap());
    assert!(parse_theta("2,3,1,1", 1).is_err());
    assert!(parse_theta("0,1", 1).is_err());
    assert!(parse_theta("1,-1", 1).is_err());
}
