//! Configuration parsing, validation and unit conversion.

use qndsim::config::parse_config;
use qndsim::output::manifest_hash;
use qndsim::Error;
use std::f64::consts::PI;

const DEVICE: &str = r#"{
  "circuit": {
    "topology": "double_arm",
    "design": {"omega_s_hz": 7e9, "gamma_t_hz": 150e3, "gamma_r_hz": 150e3, "c0": 13e-15, "l_over_l0": 1e-2, "r_over_zout": 0.1},
    "stray_cs_over_c0": 100,
    "n_bar_e": 0
  },
  "membrane": {"length": 1e-6, "width": 0.3e-6, "gap": 10e-9, "x0_override": 1.26e-12, "mode_frequency_hz": 80e6, "quality_q": 1e6},
  "couplings": {"delta_g1_rel": 0.01},
  "drive": {"photon_number": 4.5e11, "measurement_time": 4e-4}
}"#;

fn config_error_path(text: &str) -> String {
    match parse_config(text) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn frequencies_are_converted_to_angular_units() {
    let cfg = parse_config(DEVICE).unwrap().config;
    let (dev, warnings) = cfg.device().unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    assert!((dev.rates.omega_s / (2.0 * PI * 7e9) - 1.0).abs() < 1e-12);
    assert!((dev.rates.gamma_t / (2.0 * PI * 150e3) - 1.0).abs() < 1e-12);
    assert!((dev.omega_m / (2.0 * PI * 80e6) - 1.0).abs() < 1e-12);
    // γ_b = ω_m/Q.
    assert!((dev.gamma_b / (2.0 * PI * 80.0) - 1.0).abs() < 1e-12);
}

#[test]
fn explicit_couplings_are_final() {
    let text = r#"{
      "circuit": {"topology": "single_arm", "design": {"omega_s_hz": 5e9, "gamma_t_hz": 1e6, "gamma_r_hz": 1e6, "c0": 1e-13}},
      "membrane": {"mode_frequency_hz": 100e6, "gamma_b_hz": 100},
      "couplings": {"g1_hz": 10, "g2_hz": 0}
    }"#;
    let (dev, _) = parse_config(text).unwrap().config.device().unwrap();
    assert!((dev.couplings.g1 / (2.0 * PI * 10.0) - 1.0).abs() < 1e-12);
    assert_eq!(dev.couplings.g2, 0.0);
}

#[test]
fn unknown_keys_are_reported_with_their_path() {
    assert_eq!(config_error_path(r#"{"sed": 1}"#), "sed");
    let path = config_error_path(r#"{"measurement": {"lambda_prime": 30, "n_eff": 1, "extra": true}}"#);
    assert!(path.contains("measurement"), "{path}");
    let path = config_error_path(&DEVICE.replace("\"c0\": 13e-15", "\"c0\": 13e-15, \"c1\": 1"));
    assert!(path.contains("design"), "{path}");
}

#[test]
fn type_and_range_errors() {
    assert!(config_error_path(r#"{"seed": -1}"#).contains("seed"));
    assert!(config_error_path(r#"{"threads": 0}"#).contains("threads"));
    assert!(config_error_path(r#"{"measurement": {"lambda_prime": 0.5, "n_eff": 1}}"#).contains("lambda_prime"));
    assert!(config_error_path(r#"{"measurement": {"lambda_prime": 30, "n_eff": -1}}"#).contains("n_eff"));
    assert!(config_error_path(r#"{"optimization": {"lambda_prime": [10, 1], "n_eff": 1}}"#).contains("lambda_prime"));
    assert_eq!(config_error_path("[1, 2"), "$");
}

#[test]
fn mutually_exclusive_mismatch_forms() {
    let text = DEVICE.replace("\"n_bar_e\": 0", "\"n_bar_e\": 0, \"delta_c\": 1e-16, \"delta_c_rel\": 0.01");
    let err = parse_config(&text).and_then(|l| l.config.circuit_spec().map(|_| ()));
    assert!(matches!(err, Err(Error::Config { .. })), "{err:?}");
}

#[test]
fn execution_settings_do_not_enter_the_hash() {
    let base = parse_config(DEVICE).unwrap().canonical;
    let with_exec = DEVICE.replacen('{', r#"{"threads": 4, "output_dir": "elsewhere","#, 1);
    assert_eq!(parse_config(&with_exec).unwrap().canonical, base);
    let reordered = parse_config(&DEVICE.replace(
        r#""couplings": {"delta_g1_rel": 0.01},"#,
        "",
    ).replacen('{', r#"{"couplings": {"delta_g1_rel": 0.01},"#, 1))
    .unwrap()
    .canonical;
    assert_eq!(reordered, base);
    let changed = parse_config(&DEVICE.replace("4.5e11", "4.6e11")).unwrap().canonical;
    assert_ne!(changed, base);

    let h = manifest_hash(&base, 1, "metrics");
    assert_eq!(h.len(), 64);
    assert_ne!(h, manifest_hash(&base, 2, "metrics"));
    assert_ne!(h, manifest_hash(&base, 1, "plan"));
}
