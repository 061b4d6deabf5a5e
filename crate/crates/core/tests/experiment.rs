use uav_secrecy::config::{ConfigFile, ExperimentKind};
use uav_secrecy::experiment::{manifest_path, run};

fn resolve(text: &str) -> uav_secrecy::config::Resolved {
    ConfigFile::parse(text).unwrap().resolve().unwrap()
}

#[test]
fn optimize_at_figure_four_settings_emits_frontier_and_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt.csv");
    let resolved = resolve("preset = \"fig4\"\nq_values = [0.03]\n");
    let result = run(&resolved, Some(ExperimentKind::Optimize), &out).unwrap();
    let role = result.table.header.iter().position(|h| *h == "role").unwrap();
    let optimum: Vec<_> = result.table.rows.iter().filter(|r| r[role] == "optimum").collect();
    assert_eq!(optimum.len(), 1);
    assert!(result.table.rows.len() > 90);
    let regime = result.table.header.iter().position(|h| *h == "regime").unwrap();
    assert_eq!(optimum[0][regime], "shape-limited");

    let manifest = std::fs::read_to_string(manifest_path(&out)).unwrap();
    assert!(manifest.contains("experiment = \"optimize\""));
    assert!(manifest.contains("preset = \"fig4\""));
}

#[test]
fn shape_sweep_spans_the_feasible_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let resolved = resolve("expansion_ratio = 2.0\napply_antenna_gain = true\nq_values = [0.05]\ngrid_points = 8\n");
    let result = run(&resolved, Some(ExperimentKind::SweepShape), &dir.path().join("s.csv")).unwrap();
    let kind = result.table.header.iter().position(|h| *h == "zone_kind").unwrap();
    let error = result.table.header.iter().position(|h| *h == "error").unwrap();
    let kinds: std::collections::BTreeSet<&str> = result.table.rows.iter().map(|r| r[kind].as_str()).collect();
    assert!(kinds.len() >= 2, "{kinds:?}");
    assert!(result.table.rows.iter().all(|r| r[error].is_empty()));
}

#[test]
fn simulate_rows_carry_half_widths_and_the_oma_note() {
    let dir = tempfile::tempdir().unwrap();
    let resolved = resolve("trials = 8192\nptx_dbm = 0.0\nq_values = [0.2]\nzone_rules = [\"min-angle\", \"none\"]\n");
    let result = run(&resolved, Some(ExperimentKind::Simulate), &dir.path().join("m.csv")).unwrap();
    assert_eq!(result.table.rows.len(), 4);
    let hw = result
        .table
        .header
        .iter()
        .position(|h| *h == "total_half_width_bpcu")
        .unwrap();
    assert!(result.table.rows.iter().all(|r| r[hw].parse::<f64>().unwrap() > 0.0));
    assert!(result.notes.iter().any(|n| n.starts_with("oma_bpcu")));
}

#[test]
fn missing_experiment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let resolved = resolve("");
    assert!(run(&resolved, None, &dir.path().join("x.csv")).is_err());
}
