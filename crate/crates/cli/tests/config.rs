use pilothop::config::{Axis, ExperimentKind};
use pilothop::{load, validate, CliError};
use pilothop_core::Method;

const VALID: &str = r#"
[system]
M = 100
K = 800
tau_u = 100
seed = 1

[system.model]
kind = "model3"
alpha = 0.25

[experiment]
kind = "sweep"
methods = ["R1-opt", "Ra-opt", "Rh0", "Rh-1D"]

[experiment.sweep]
axis = "tau_u"
values = [60, 120, 180]
"#;

fn with(base: &str, from: &str, to: &str) -> String {
    assert!(base.contains(from), "{from:?} not in spec");
    base.replacen(from, to, 1)
}

#[test]
fn valid_spec_has_no_diagnostics() {
    assert!(validate(VALID).unwrap().is_empty());
    let exp = load(VALID).unwrap();
    assert_eq!(exp.system.m, 100);
    assert_eq!(exp.system.k, 800);
    assert_eq!(exp.spec.kind, ExperimentKind::Sweep);
    assert_eq!(
        exp.spec.methods,
        vec![Method::R1Opt, Method::RaOpt, Method::Rh0, Method::Rh1D]
    );
    let sweep = exp.spec.sweep.unwrap();
    assert_eq!(sweep.axis, Axis::TauU);
    assert_eq!(sweep.values, vec![60.0, 120.0, 180.0]);
}

#[test]
fn defaults_fill_k_and_delta_bar() {
    let text = with(VALID, "K = 800\n", "");
    let exp = load(&text).unwrap();
    assert_eq!(exp.system.k, 800);
    assert_eq!(exp.system.model.delta_bar(), 10.0);
    assert_eq!(exp.system.mc.seed, 1);
}

#[test]
fn parse_error_reports_line_and_column() {
    let text = "[system]\nM = 100\ntau_u = = 4\n";
    let err = validate(text).unwrap_err();
    assert_eq!(err.line, 3);
    assert!(err.column >= 1);
    let e = load(text).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("line 3"), "{e}");
}

#[test]
fn unknown_key_is_a_parse_error() {
    let text = with(VALID, "seed = 1", "seed = 1\nantennas = 4");
    let err = validate(&text).unwrap_err();
    assert_eq!(err.line, 7);
}

#[test]
fn pilot_longer_than_slot_names_both_fields() {
    let text = with(VALID, "tau_u = 100", "tau_u = 100\ntau_p = 120");
    let d = validate(&text).unwrap();
    assert_eq!(d.len(), 1, "{d:?}");
    assert!(d[0].fields.contains(&"system.tau_p".to_string()));
    assert!(d[0].fields.contains(&"system.tau_u".to_string()));
}

#[test]
fn activation_probability_out_of_range() {
    let text = with(VALID, "tau_u = 100", "tau_u = 100\np_a = 1.5");
    let d = validate(&text).unwrap();
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].fields, vec!["system.p_a".to_string()]);
    let e = load(&text).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert!(e.to_string().contains("system.p_a"));
}

#[test]
fn empty_sweep_is_invalid() {
    let text = with(VALID, "values = [60, 120, 180]", "values = []");
    let e = load(&text).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert!(e.to_string().contains("experiment.sweep.values"), "{e}");
}

#[test]
fn diagnostics_are_collected_not_short_circuited() {
    let text = with(VALID, "M = 100", "M = 1");
    let text = with(&text, "alpha = 0.25", "alpha = -1.0");
    let text = with(&text, "\"Rh0\"", "\"Rh7\"");
    let d = validate(&text).unwrap();
    assert!(d.len() >= 3, "{d:?}");
    let fields: Vec<&str> = d
        .iter()
        .flat_map(|x| x.fields.iter().map(String::as_str))
        .collect();
    assert!(fields.contains(&"system.M"));
    assert!(fields.contains(&"experiment.methods[2]"));
}

#[test]
fn optimize_needs_a_method() {
    let text = with(VALID, "kind = \"sweep\"", "kind = \"optimize\"");
    let text = with(
        &text,
        "methods = [\"R1-opt\", \"Ra-opt\", \"Rh0\", \"Rh-1D\"]",
        "methods = []",
    );
    let d = validate(&text).unwrap();
    assert!(
        d.iter()
            .any(|x| x.fields == vec!["experiment.methods".to_string()]),
        "{d:?}"
    );
}

#[test]
fn integer_axes_reject_fractions() {
    let text = with(VALID, "values = [60, 120, 180]", "values = [60, 120.5]");
    let d = validate(&text).unwrap();
    assert!(!d.is_empty());
}

#[test]
fn numeric_failures_exit_four() {
    let e: CliError = pilothop_core::Error::Numeric("no bracket".into()).into();
    assert_eq!(e.exit_code(), 4);
}
