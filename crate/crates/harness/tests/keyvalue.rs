use gsqg_core::solver::{AnalyticField, ForcingSpec, InitialCondition, Scheme, SimulationConfig};
use gsqg_harness::keyvalue::{simulation_config, ConfigFile};

#[test]
fn simulation_keys_override_the_base() {
    let text = "\
# a comment
n = 32
beta = 0.3   # trailing comment
scheme = ito-euler
T = 0.2
noise = off
brownian_substeps = 4

passive_initial = mode 1 0 1 0 | zero
passive_forcing = zero | zero
";
    let file = ConfigFile::parse(text).unwrap();
    let c = simulation_config(&file, SimulationConfig::default()).unwrap();
    file.finish().unwrap();
    assert_eq!(c.n, 32);
    assert_eq!(c.beta, 0.3);
    assert_eq!(c.scheme, Scheme::ItoEuler);
    assert_eq!(c.horizon, 0.2);
    assert!(!c.noise.enabled);
    assert_eq!(c.brownian_substeps, 4);
    assert_eq!(c.passive.len(), 2);
    assert_eq!(c.passive[1].initial, InitialCondition::Analytic(AnalyticField::Zero));
    assert_eq!(c.passive[0].forcing, ForcingSpec::Zero);
}

#[test]
fn errors_carry_line_numbers() {
    let err = ConfigFile::parse("n = 32\nthis line is wrong\n").unwrap_err();
    assert_eq!(err.line, Some(2));

    let file = ConfigFile::parse("n = 32\n\nbeta = lots\n").unwrap();
    let err = simulation_config(&file, SimulationConfig::default()).unwrap_err();
    assert_eq!(err.line, Some(3));
    assert!(err.to_string().starts_with("line 3:"));

    let file = ConfigFile::parse("n = 32\nspeling = 1\n").unwrap();
    simulation_config(&file, SimulationConfig::default()).unwrap();
    let err = file.finish().unwrap_err();
    assert_eq!(err.line, Some(2));
    assert!(err.message.contains("speling"));
}

#[test]
fn invalid_values_are_rejected_after_parsing() {
    let file = ConfigFile::parse("dt = -1\n").unwrap();
    assert!(simulation_config(&file, SimulationConfig::default()).is_err());
    let file = ConfigFile::parse("brownian_substeps = 0\n").unwrap();
    assert!(simulation_config(&file, SimulationConfig::default()).is_err());
}
