use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viana-lab"))
        .current_dir(dir)
        .env_remove("VIANA_LAB_WORKERS")
        .args(args)
        .output()
        .expect("spawn viana-lab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn header(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

#[test]
fn build_map_defaults_write_map_and_constants() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["build-map", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["map.csv", "constants.json"] {
        let h = header(&t.path().join("out").join(f));
        assert_eq!(h["tool"], "viana-lab");
        assert_eq!(h["seed"], 1);
        assert_eq!(h["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(h["constants"]["big_m"], 3);
        assert_eq!(h["constants"]["order"], 3);
    }
    let map = fs::read_to_string(t.path().join("out/map.csv")).unwrap();
    assert_eq!(map.lines().nth(1).unwrap(), "x,h,h1,h2");
    assert_eq!(map.lines().count(), 2 + (1 << 14));
}

#[test]
fn large_alpha_is_a_constraint_error() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["build-map", "--alpha", "0.05", "--out", "out"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("32^M α < 1"));
    assert!(!t.path().join("out").exists());
}

#[test]
fn inner_interval_wider_than_outer_is_a_config_error() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["build-map", "--inner_width", "0.25", "--out", "out"]);
    assert_eq!(code(&o), 2);
    let o = run(t.path(), &["build-map", "--inner-width", "0.3", "--out", "out"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_and_flag_precedence() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("a.conf"), "# experiment\nseed = 7\nalpha = 1e-4  # smaller M\n").unwrap();
    let o = run(t.path(), &["build-map", "--config", "a.conf", "--out", "o1"]);
    assert_eq!(code(&o), 0);
    let h = header(&t.path().join("o1/constants.json"));
    assert_eq!(h["seed"], 7);
    assert_eq!(h["constants"]["alpha"], 1e-4);
    let o = run(t.path(), &["build-map", "--config", "a.conf", "--seed", "9", "--alpha", "1e-5", "--out", "o2"]);
    assert_eq!(code(&o), 0);
    let h2 = header(&t.path().join("o2/constants.json"));
    assert_eq!(h2["seed"], 9);
    assert_eq!(h2["constants"]["alpha"], 1e-5);
    assert_ne!(h["config_hash"], h2["config_hash"]);

    fs::write(t.path().join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(code(&run(t.path(), &["build-map", "--config", "bad.conf"])), 2);
    assert_eq!(code(&run(t.path(), &["build-map", "--config", "missing.conf"])), 2);
}

#[test]
fn check_map_reports_every_row() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["check-map", "--out", "out"]);
    let text = fs::read_to_string(t.path().join("out/check_map.csv")).unwrap();
    let any_false = text.lines().skip(2).any(|l| l.ends_with(",false"));
    assert_eq!(code(&o), if any_false { 5 } else { 0 });
    assert!(text.contains("D=3 endpoint slope error"));
}

#[test]
fn lemma_checks() {
    let t = tempfile::tempdir().unwrap();
    let o = run(
        t.path(),
        &["lemma-check", "--lemma", "2.1", "--grid_size", "1024", "--curves", "4", "--elements", "20", "--out", "out"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(t.path(), &["lemma-check", "--lemma", "2.7", "--out", "out"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(t.path().join("out/lemma_2.7.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("minSep,")).unwrap();
    assert!(row.ends_with(",true"));
    assert!(row.contains("1.0000000000000000e-8"));

    let o = run(
        t.path(),
        &["lemma-check", "--lemma", "2.6", "--r_values", "0.5,1,3,4", "--ensemble", "4096", "--out", "out"],
    );
    assert!([0, 5].contains(&code(&o)));
    let text = fs::read_to_string(t.path().join("out/lemma_2.6.csv")).unwrap();
    assert_eq!(text.matches("below-threshold").count(), 2);

    let o = run(t.path(), &["lemma-check", "--lemma", "2.4", "--sample_count", "200", "--out", "out"]);
    let text = fs::read_to_string(t.path().join("out/lemma_2.4.csv")).unwrap();
    let any_false = text.lines().skip(2).any(|l| l.ends_with(",false"));
    assert_eq!(code(&o), if any_false { 5 } else { 0 });

    assert_eq!(code(&run(t.path(), &["lemma-check", "--lemma", "3.1"])), 2);
}

#[test]
fn exponents_default_census() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["exponents", "--out", "out"]);
    assert_eq!(code(&o), 0);
    let path = t.path().join("out/exponents.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2 + 1000);
    let h = header(&path);
    assert!(h["meta"]["summary"]["fraction_positive"].as_f64().unwrap() >= 0.99);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let t = tempfile::tempdir().unwrap();
    for (w, dir) in [("1", "w1"), ("8", "w8")] {
        let o = run(t.path(), &["exponents", "--steps", "3000", "--count", "300", "--workers", w, "--out", dir]);
        assert_eq!(code(&o), 0);
        let o = run(
            t.path(),
            &["situations", "--n_values", "400,900", "--sample_count", "400", "--workers", w, "--out", dir],
        );
        assert_eq!(code(&o), 0);
    }
    for f in ["exponents.csv", "situations.csv"] {
        let a = fs::read(t.path().join("w1").join(f)).unwrap();
        let b = fs::read(t.path().join("w8").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between worker counts");
    }
    // environment fallback
    let o = Command::new(env!("CARGO_BIN_EXE_viana-lab"))
        .current_dir(t.path())
        .env("VIANA_LAB_WORKERS", "lots")
        .args(["build-map", "--out", "env"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_writes_index_and_censuses() {
    let t = tempfile::tempdir().unwrap();
    let o = run(
        t.path(),
        &["sweep", "--sweep_orders", "3,5", "--sweep_alpha", "1e-4,1e-6", "--sweep_n", "2000", "--count", "50", "--out", "out"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let index = fs::read_to_string(t.path().join("out/sweep_index.csv")).unwrap();
    let rows: Vec<&str> = index.lines().skip(2).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let file = r.split(',').nth(5).unwrap();
        assert!(t.path().join("out").join(file).exists(), "{file}");
    }

    // an even order fails its constant constraints; the sweep records it and carries on
    let o = run(
        t.path(),
        &["sweep", "--sweep_orders", "4,3", "--sweep_alpha", "1e-6", "--sweep_n", "500", "--count", "10", "--out", "bad"],
    );
    assert_ne!(code(&o), 0);
    let index = fs::read_to_string(t.path().join("bad/sweep_index.csv")).unwrap();
    assert!(index.lines().any(|l| l.starts_with("4,") && !l.contains(",ok,")));
    assert!(index.lines().any(|l| l.starts_with("3,") && l.contains(",ok,")));
    let leftovers: Vec<_> = fs::read_dir(t.path().join("bad"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}
