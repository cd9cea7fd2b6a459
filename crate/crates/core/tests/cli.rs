use std::fs;
use std::path::Path;
use std::process::Command;

fn wcrlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wcrlab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sdot_subcommand_writes_weights_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let sites = write(dir.path(), "sites.csv", "x,y\n0.25,0.25\n0.75,0.25\n0.25,0.75\n0.75,0.75\n");
    let config = write(
        dir.path(),
        "sdot.json",
        &format!(r#"{{"experiment": "sdot-demo", "seed": 1, "family": "plane:uniform", "theta": [0.0], "sample": "{sites}"}}"#),
    );
    let out = dir.path().join("out");
    let o = wcrlab(&["sdot", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let solve: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sdot.json")).unwrap()).unwrap();
    assert!((solve["w2sq"].as_f64().unwrap() - 1.0 / 24.0).abs() < 1e-12);
    for m in solve["masses"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 0.25).abs() < 1e-12);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["experiment"], "sdot-demo");
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(out.join("sdot-demo.csv").exists());
}

#[test]
fn sdot_polygon_is_renormalized() {
    let dir = tempfile::tempdir().unwrap();
    let sites = write(dir.path(), "sites.csv", "0.25,0.25\n0.25,0.75\n");
    let config = write(
        dir.path(),
        "sdot.json",
        &format!(
            r#"{{"experiment": "sdot-demo", "seed": 1, "family": "plane:uniform", "sample": "{sites}",
                "polygon": [[0, 0], [0.5, 0], [0.5, 1], [0, 1]]}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = wcrlab(&["sdot", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let solve: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sdot.json")).unwrap()).unwrap();
    // two 1/2 x 1/2 squares, each centred on its site
    assert!((solve["w2sq"].as_f64().unwrap() - 1.0 / 24.0).abs() < 1e-12);
}

#[test]
fn wpe_subcommand_fits_a_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let sample = write(dir.path(), "x.csv", "# location sample\n0.3\n1.2\n-0.7\n0.9\n0.1\n");
    let config = write(
        dir.path(),
        "wpe.json",
        &format!(r#"{{"experiment": "wpe", "seed": 3, "family": "location:gaussian", "sample": "{sample}"}}"#),
    );
    let out = dir.path().join("fit");
    let o = wcrlab(&["wpe", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    let theta = fit["theta_hat"][0].as_f64().unwrap();
    assert!((theta - 0.36).abs() < 1e-9, "{theta}");
    let grads = fs::read_to_string(out.join("gradients.csv")).unwrap();
    let g: Vec<f64> = grads.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(g.len(), 5);
    assert!(g.iter().all(|v| (v - 0.2).abs() < 1e-6));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing_seed = write(dir.path(), "a.json", r#"{"experiment": "bound"}"#);
    let o = wcrlab(&["bound", "--config", &missing_seed, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let wrong_kind = write(dir.path(), "b.json", r#"{"experiment": "clt", "seed": 1}"#);
    let o = wcrlab(&["figure1", "--config", &wrong_kind, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = wcrlab(&["run", "--config", dir.path().join("absent.json").to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let sites = write(dir.path(), "sites.csv", "0.5,0.5\n0.5,0.5\n");
    let config = write(
        dir.path(),
        "sdot.json",
        &format!(r#"{{"experiment": "sdot-demo", "seed": 1, "sample": "{sites}"}}"#),
    );
    let o = wcrlab(&["sdot", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
