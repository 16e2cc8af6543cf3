//! End-to-end tests of the `bridge` binary: output files, exit codes,
//! flag overrides, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bridge_core::spinchain::{
    build_tfim, correlators, thermal_state, Boundary, QuantumChainSpec,
};
use bridge_core::trotter::ClassicalLatticeSpec;
use serde_json::Value;
use tempfile::TempDir;

fn bridge() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bridge"));
    cmd.env_remove("BRIDGE_MAX_SPINS");
    cmd
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Minimal valid config; callers splice in overrides via the fields.
fn config_json(out_dir: &Path, methods: &str, trotter_n: &str, mc: Option<&str>, extra: &str) -> String {
    let mc_block = mc.map(|m| format!("  \"mc\": {m},\n")).unwrap_or_default();
    format!(
        "{{\n  \"schema\": \"experiment/1\",\n  \"quantum\": {{\"sites\": 4, \"coupling_j\": 1.0, \
         \"field_b\": 1.0, \"boundary\": \"periodic\", \"beta\": 2.0}},\n  \"trotter_n\": {trotter_n},\n  \
         \"methods\": {methods},\n{mc_block}  \"output_dir\": {out:?},\n  \"format\": \"csv\"{extra}\n}}\n",
        out = out_dir.to_str().unwrap()
    )
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn map_writes_canonical_lattices_and_reruns_identically() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, &config_json(dir.path(), "[\"transfer-matrix\"]", "[4, 8]", None, ""));
    run_ok(bridge().args(["map", "--config"]).arg(&config));
    let first = read(&dir.path().join("lattice_n4.json"));
    let lattice = ClassicalLatticeSpec::from_json(&first).unwrap();
    assert_eq!((lattice.columns, lattice.rows), (4, 4));
    assert_eq!(lattice.beta, Some(2.0));
    assert!(read(&dir.path().join("lattice_n8.json")).contains("\"rows\": 8"));
    run_ok(bridge().args(["map", "--config"]).arg(&config));
    assert_eq!(read(&dir.path().join("lattice_n4.json")), first);
}

#[test]
fn zero_field_fails_validation_naming_the_mapper() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(dir.path(), "[\"transfer-matrix\"]", "[4]", None, "")
            .replace("\"field_b\": 1.0", "\"field_b\": 0.0"),
    );
    let (code, stderr) = exit_code(bridge().args(["map", "--config"]).arg(&config));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("trotter_map"), "{stderr}");
}

#[test]
fn missing_config_is_an_io_error() {
    let (code, stderr) = exit_code(bridge().args(["map", "--config", "/nonexistent/config.json"]));
    assert_eq!(code, 4, "{stderr}");
    assert!(stderr.contains("bridge_cli"), "{stderr}");
}

#[test]
fn malformed_config_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, "{\"schema\": \"experiment/1\", \"quantum\": broken");
    let (code, stderr) = exit_code(bridge().args(["map", "--config"]).arg(&config));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("malformed JSON"), "{stderr}");
}

#[test]
fn wrong_schema_tag_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, &config_json(dir.path(), "[\"enum\"]", "[2]", None, "").replace("experiment/1", "experiment/9"));
    let (code, stderr) = exit_code(bridge().args(["map", "--config"]).arg(&config));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("schema mismatch"), "{stderr}");
}

#[test]
fn exact_document_matches_an_in_process_reference() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, &config_json(dir.path(), "[\"exact-quantum\"]", "[4]", None, ""));
    run_ok(bridge().args(["exact", "--config"]).arg(&config));
    let doc: Value = serde_json::from_str(&read(&dir.path().join("exact.json"))).unwrap();
    assert_eq!(doc["schema"], "exact/1");
    assert_eq!(doc["beta_label"], "explicit");

    let spec = QuantumChainSpec {
        sites: 4,
        coupling_j: 1.0,
        field_b: 1.0,
        boundary: Boundary::Periodic,
        beta: 2.0,
    };
    let state = thermal_state(&build_tfim(&spec).unwrap(), 2.0).unwrap();
    let reference = correlators(&state, 0).unwrap();
    for (key, want) in [
        ("m_x", reference.m_x),
        ("c_x", reference.c_x),
        ("c_y", reference.c_y),
        ("c_z", reference.c_z),
    ] {
        let got = doc["correlators"][key].as_f64().unwrap();
        assert!((got - want).abs() < 1e-15, "{key}: {got} vs {want}");
    }
    assert!(doc["report"]["concurrence"].as_f64().unwrap() >= 0.0);
}

#[test]
fn omitted_beta_is_labelled_as_the_ground_proxy() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(dir.path(), "[\"exact-quantum\"]", "[4]", None, "")
            .replace(", \"beta\": 2.0", ""),
    );
    run_ok(bridge().args(["exact", "--config"]).arg(&config));
    let doc: Value = serde_json::from_str(&read(&dir.path().join("exact.json"))).unwrap();
    assert_eq!(doc["beta_label"], "ground-proxy");
    assert_eq!(doc["beta"].as_f64().unwrap(), 20.0);
}

#[test]
fn eval_reproduces_the_field_only_identity() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    // J = 0, beta = B = 1: the transverse magnetization is tanh(1) at
    // every n, and both exact methods agree.
    write(
        &config,
        &config_json(dir.path(), "[\"enum\", \"transfer-matrix\"]", "[1, 2, 4]", None, "")
            .replace("\"sites\": 4", "\"sites\": 3")
            .replace("\"coupling_j\": 1.0", "\"coupling_j\": 0.0")
            .replace("\"beta\": 2.0", "\"beta\": 1.0"),
    );
    run_ok(bridge().args(["eval", "--config"]).arg(&config));
    let want = 1.0_f64.tanh();
    for n in [1usize, 2, 4] {
        for method in ["enum", "transfer-matrix"] {
            let path = dir.path().join(format!("eval_n{n}_{method}.json"));
            let doc: Value = serde_json::from_str(&read(&path)).unwrap();
            assert_eq!(doc["schema"], "evaluation/1");
            let record = doc["records"]
                .as_array()
                .unwrap()
                .iter()
                .find(|r| r["observable"] == "m_x")
                .unwrap();
            let got = record["value"].as_f64().unwrap();
            assert!((got - want).abs() < 1e-12, "n={n} {method}: {got} vs {want}");
            assert!(doc["free_energy"].as_f64().unwrap().is_finite());
        }
    }
}

#[test]
fn eval_without_a_classical_exact_method_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, &config_json(dir.path(), "[\"exact-quantum\"]", "[4]", None, ""));
    let (code, stderr) = exit_code(bridge().args(["eval", "--config"]).arg(&config));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("classical exact method"), "{stderr}");
}

fn mc_config(dir: &Path) -> PathBuf {
    let config = dir.join("config.json");
    write(
        &config,
        &config_json(
            dir,
            "[\"mc\"]",
            "[2]",
            Some("{\"seed\": 11, \"chains\": 2, \"sweeps\": 1500, \"burn_in\": 300, \"bins\": 12}"),
            "",
        ),
    );
    config
}

#[test]
fn mc_outputs_are_byte_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let config = mc_config(dir.path());
    let r1 = dir.path().join("r1");
    let r2 = dir.path().join("r2");
    for out in [&r1, &r2] {
        run_ok(bridge().args(["mc", "--config"]).arg(&config).arg("--out").arg(out));
    }
    for name in
        ["mc_n2.json", "mc_n2_trace_m_x.csv", "mc_n2_trace_c_x.csv", "mc_n2_trace_c_y.csv", "mc_n2_trace_c_z.csv"]
    {
        assert_eq!(read(&r1.join(name)), read(&r2.join(name)), "{name} differs across reruns");
    }
    let r3 = dir.path().join("r3");
    run_ok(bridge().args(["mc", "--config"]).arg(&config).arg("--out").arg(&r3).args(["--seed", "99"]));
    assert_ne!(
        read(&r1.join("mc_n2.json")),
        read(&r3.join("mc_n2.json")),
        "the seed override must change the estimates"
    );
}

#[test]
fn mc_trace_has_the_documented_shape() {
    let dir = TempDir::new().unwrap();
    let config = mc_config(dir.path());
    run_ok(bridge().args(["mc", "--config"]).arg(&config));
    let rows = csv_rows(&read(&dir.path().join("mc_n2_trace_m_x.csv")));
    assert_eq!(rows[0], ["chain", "bin", "value"]);
    // 2 chains x 12 bins plus the header.
    assert_eq!(rows.len(), 25);
    assert_eq!(rows[1][..2], ["0".to_string(), "0".to_string()]);
    let doc: Value = serde_json::from_str(&read(&dir.path().join("mc_n2.json"))).unwrap();
    assert_eq!(doc["schema"], "estimate/1");
    for key in ["m_x", "c_x", "c_y", "c_z"] {
        let e = &doc["estimates"][key];
        assert!(e["std_err"].as_f64().unwrap() >= 0.0);
        assert!(e["n_samples"].as_u64().unwrap() > 0);
        assert!(e["max_abs_sample"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn seed_flag_without_an_mc_section_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, &config_json(dir.path(), "[\"transfer-matrix\"]", "[4]", None, ""));
    let (code, stderr) =
        exit_code(bridge().args(["eval", "--config"]).arg(&config).args(["--seed", "7"]));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("no mc section"), "{stderr}");
}

#[test]
fn compare_table_shrinks_errors_and_fills_the_ratio_column() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(dir.path(), "[\"exact-quantum\", \"transfer-matrix\"]", "[8, 16]", None, ""),
    );
    run_ok(bridge().args(["compare", "--config"]).arg(&config));
    let rows = csv_rows(&read(&dir.path().join("compare.csv")));
    assert_eq!(rows.len(), 3);
    let (c_err, c_ratio) = (column(&rows, "max_abs_err"), column(&rows, "convergence_ratio"));
    let err8: f64 = rows[1][c_err].parse().unwrap();
    let err16: f64 = rows[2][c_err].parse().unwrap();
    assert!(err8 > err16, "finer slicing must shrink the error: {err8} vs {err16}");
    let ratio: f64 = rows[1][c_ratio].parse().unwrap();
    assert!((ratio - err8 / err16).abs() < 1e-12);
    assert!(rows[2][c_ratio].is_empty(), "n = 16 has no doubled partner");
    // The sidecar keeps wall-clock noise out of the main table.
    assert!(dir.path().join("compare_timings.csv").exists());
}

#[test]
fn compare_with_a_single_n_leaves_the_ratio_column_empty() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(dir.path(), "[\"exact-quantum\", \"transfer-matrix\"]", "[8]", None, ""),
    );
    run_ok(bridge().args(["compare", "--config"]).arg(&config));
    let rows = csv_rows(&read(&dir.path().join("compare.csv")));
    assert_eq!(rows.len(), 2);
    assert!(rows[1][column(&rows, "convergence_ratio")].is_empty());
}

#[test]
fn compare_without_the_quantum_reference_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(&config, &config_json(dir.path(), "[\"transfer-matrix\"]", "[4]", None, ""));
    let (code, stderr) = exit_code(bridge().args(["compare", "--config"]).arg(&config));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("exact-quantum"), "{stderr}");
}

#[test]
fn compare_mc_rows_are_byte_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(
            dir.path(),
            "[\"exact-quantum\", \"mc\"]",
            "[2, 4]",
            Some("{\"seed\": 5, \"chains\": 2, \"sweeps\": 1200, \"burn_in\": 240, \"bins\": 12}"),
            "",
        ),
    );
    let r1 = dir.path().join("r1");
    let r2 = dir.path().join("r2");
    for out in [&r1, &r2] {
        run_ok(bridge().args(["compare", "--config"]).arg(&config).arg("--out").arg(out));
    }
    assert_eq!(read(&r1.join("compare.csv")), read(&r2.join("compare.csv")));
}

#[test]
fn compare_json_format_emits_a_tagged_document() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(dir.path(), "[\"exact-quantum\", \"enum\"]", "[4]", None, ""),
    );
    run_ok(bridge().args(["compare", "--config"]).arg(&config).args(["--format", "json"]));
    let doc: Value = serde_json::from_str(&read(&dir.path().join("compare.json"))).unwrap();
    assert_eq!(doc["schema"], "comparison/1");
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["method"], "enum");
    assert!(rows[0]["convergence_ratio"].is_null());
    for key in ["m_x_err", "c_x_err", "c_y_err", "c_z_err"] {
        assert_eq!(rows[0][key].as_f64().unwrap(), 0.0, "exact methods carry no error bar");
    }
}

#[test]
fn propagate_matches_the_exact_propagator_for_every_m() {
    let dir = TempDir::new().unwrap();
    run_ok(
        bridge()
            .args(["propagate", "--e-field", "1", "--delta", "1", "--t", "0.3"])
            .args(["--m", "1,2,10", "--beta", "1"])
            .arg("--out")
            .arg(dir.path()),
    );
    let rows = csv_rows(&read(&dir.path().join("propagate.csv")));
    assert_eq!(rows[0], ["m", "max_entry_deviation", "thermal_deviation"]);
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        assert!(row[1].parse::<f64>().unwrap() <= 1e-10, "row {row:?}");
        assert!(row[2].parse::<f64>().unwrap() <= 1e-10, "row {row:?}");
    }
}

#[test]
fn propagate_rejects_a_vanishing_transverse_term() {
    let dir = TempDir::new().unwrap();
    let (code, stderr) = exit_code(
        bridge()
            .args(["propagate", "--e-field", "1", "--delta", "0", "--t", "1", "--m", "2"])
            .arg("--out")
            .arg(dir.path()),
    );
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("singular"), "{stderr}");
}

#[test]
fn sweep_finds_entanglement_at_unit_ratio_from_both_routes() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(
            dir.path(),
            "[\"exact-quantum\", \"transfer-matrix\"]",
            "[32]",
            None,
            ",\n  \"sweep\": {\"b_over_j\": [0.5, 1.0, 2.0], \"beta\": 6.0}",
        ),
    );
    run_ok(bridge().args(["sweep", "--config"]).arg(&config));
    let rows = csv_rows(&read(&dir.path().join("sweep.csv")));
    assert_eq!(rows.len(), 4);
    let c_ratio = column(&rows, "b_over_j");
    let c_q = column(&rows, "concurrence_quantum");
    let c_c = column(&rows, "concurrence_classical");
    let unit = rows[1..]
        .iter()
        .find(|r| r[c_ratio].parse::<f64>().unwrap() == 1.0)
        .expect("unit-ratio row");
    assert!(unit[c_q].parse::<f64>().unwrap() > 0.0);
    assert!(unit[c_c].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn sweep_at_vanishing_temperature_reports_zero_measures() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(
            dir.path(),
            "[\"exact-quantum\", \"transfer-matrix\"]",
            "[16]",
            None,
            ",\n  \"sweep\": {\"b_over_j\": [1.0], \"beta\": 1e-12}",
        ),
    );
    run_ok(bridge().args(["sweep", "--config"]).arg(&config));
    let rows = csv_rows(&read(&dir.path().join("sweep.csv")));
    // A single grid point produces exactly one row after the header.
    assert_eq!(rows.len(), 2);
    for name in
        ["concurrence_quantum", "negativity_quantum", "concurrence_classical", "negativity_classical"]
    {
        let value: f64 = rows[1][column(&rows, name)].parse().unwrap();
        assert!(value.abs() <= 1e-10, "{name} = {value}");
    }
}

#[test]
fn sweep_without_a_grid_section_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(dir.path(), "[\"exact-quantum\", \"transfer-matrix\"]", "[8]", None, ""),
    );
    let (code, stderr) = exit_code(bridge().args(["sweep", "--config"]).arg(&config));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("sweep section"), "{stderr}");
}

#[test]
fn method_override_drops_a_stale_mc_section() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        &config_json(
            dir.path(),
            "[\"mc\"]",
            "[2]",
            Some("{\"seed\": 3, \"chains\": 2, \"sweeps\": 600, \"burn_in\": 120, \"bins\": 12}"),
            "",
        ),
    );
    run_ok(bridge().args(["eval", "--config"]).arg(&config).args(["--method", "transfer-matrix"]));
    assert!(dir.path().join("eval_n2_transfer-matrix.json").exists());
}

#[test]
fn enumeration_cap_respects_the_clamped_environment_override() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    // 4 sites x 5 slices = 20 spins.
    write(&config, &config_json(dir.path(), "[\"enum\"]", "[5]", None, ""));
    let (code, stderr) = exit_code(
        bridge().args(["eval", "--config"]).arg(&config).env("BRIDGE_MAX_SPINS", "18"),
    );
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("cap of 18"), "{stderr}");
    // Clamped to 28 even when asked for more; 20 spins then fit.
    run_ok(bridge().args(["eval", "--config"]).arg(&config).env("BRIDGE_MAX_SPINS", "99"));
    assert!(dir.path().join("eval_n5_enum.json").exists());
}
