use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;
use siv_core::ensemble::Spectrum;

fn cfg(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sivspec")).args(args).output().expect("spawn sivspec")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(what: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", what, "--config", s(config), "--out", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn spectrum(p: &Path) -> Spectrum {
    Spectrum::from_csv(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const SI28: &str = "[ensemble]\npreset = \"si28\"\n\n[scan]\nfrom = -250.0\nto = 400.0\npoints = 2601\n\n[output]\nprefix = \"si28\"\n";

const HOLE: &str = "[dynamics.holeburn]\ngamma_hom = 0.279\ngamma_inh = 10.0\ns_pump = 0.5\ns_probe = 0.01\nnu_pump = 0.0\n\n[scan]\nfrom = -3.0\nto = 3.0\npoints = 241\n";

#[test]
fn ple_json_output_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate("ple", &cfg("table1.cfg"), d.path(), &["--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sp = Spectrum::from_json(&std::fs::read_to_string(d.path().join("table1.json")).unwrap()).unwrap();
    assert_eq!(sp.len(), 13001);
    assert_eq!(sp.meta()["kind"], "ple");
    let report = read_json(&d.path().join("run_report.json"));
    assert_eq!(report["files"][0], "table1.json");
    assert_eq!(report["inputs_digest"].as_str().unwrap().len(), 64);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "table1.json");
}

#[test]
fn cpt_minimum_at_two_photon_resonance() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate("cpt", &cfg("cpt.cfg"), d.path(), &[])), 0);
    let sp = spectrum(&d.path().join("cpt.csv"));
    let (i_min, _) = sp.intensities().iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!(sp.frequencies()[i_min].abs() < 1e-12, "dip at {}", sp.frequencies()[i_min]);
    let max = sp.intensities().iter().cloned().fold(0.0, f64::max);
    assert!(sp.intensities()[i_min] < 0.01 * max);
}

#[test]
fn holeburn_two_powers() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "hole.cfg", &format!("{HOLE}powers = [0.2, 1.0]\n\n[output]\nprefix = \"h\"\n"));
    let out = d.path().join("out");
    let o = simulate("holeburn", &c, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("h_s0.2.csv").exists() && out.join("h_s1.0.csv").exists());
    let series = read_json(&out.join("h_series.json"));
    let w: Vec<f64> = series["points"].as_array().unwrap().iter().map(|p| p["hole_fwhm_ghz"].as_f64().unwrap()).collect();
    assert_eq!(w.len(), 2);
    assert!(w[1] > w[0], "{w:?}");
    assert!(series["extrapolation"].is_null());
}

#[test]
fn fit_bilorentzian_on_simulated_hole() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "hole.cfg", &format!("{HOLE}\n[output]\nprefix = \"hole\"\n"));
    assert_eq!(code(&simulate("holeburn", &c, d.path(), &[])), 0);
    let res = d.path().join("fit.json");
    let o = run(&["fit", "bilorentzian", "--in", s(&d.path().join("hole.csv")), "--out", s(&res), "--plot"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&res);
    let fwhm = r["derived"]["hole_fwhm"]["value"].as_f64().unwrap();
    let half = r["derived"]["hole_fwhm_half"]["value"].as_f64().unwrap();
    assert!((half - fwhm / 2.0).abs() < 1e-12);
    assert!(fwhm > 2.0 * 0.279 && fwhm < 1.0, "{fwhm}");
    assert_eq!(std::fs::read_to_string(d.path().join("fit.svg")).unwrap().matches("<polyline").count(), 2);
}

#[test]
fn empty_input_is_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let empty = write_cfg(d.path(), "empty.csv", "");
    let o = run(&["fit", "voigt", "--in", s(&empty), "--out", s(&d.path().join("r.json"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty.csv"), "{}", stderr(&o));
    assert!(!d.path().join("r.json").exists());
}

#[test]
fn table_schema_mismatch_names_columns() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_cfg(d.path(), "w.csv", "t,w\n5,0.1\n10,0.2\n");
    let o = run(&["fit", "tpoly", "--in", s(&bad), "--out", s(&d.path().join("r.json"))]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("[t, w]") && e.contains("temperature_k,fwhm_ghz"), "{e}");
}

fn widths_csv(dir: &Path) -> PathBuf {
    let mut text = String::from("temperature_k,fwhm_ghz\n");
    for i in 1..=26 {
        let t = 5.0 * i as f64;
        let wobble = if i % 2 == 0 { 1.003 } else { 0.997 };
        text.push_str(&format!("{t},{}\n", (0.0995 + 2.5e-4 * t * t * t) * wobble));
    }
    write_cfg(dir, "widths.csv", &text)
}

#[test]
fn tpoly_terms_both_report_chi2() {
    let d = tempfile::tempdir().unwrap();
    let input = widths_csv(d.path());
    let mut chi = Vec::new();
    for terms in ["3", "5"] {
        let res = d.path().join(format!("t{terms}.json"));
        let o = run(&["fit", "tpoly", "--in", s(&input), "--out", s(&res), "--terms", terms]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let r = read_json(&res);
        assert_eq!(r["model"], format!("t_poly_{terms}"));
        chi.push(r["chi2_per_dof"].as_f64().unwrap());
    }
    assert!(chi[1] > 10.0 * chi[0], "{chi:?}");
}

#[test]
fn excluded_rows_are_recorded() {
    let d = tempfile::tempdir().unwrap();
    let input = widths_csv(d.path());
    let res = d.path().join("r.json");
    let o = run(&["fit", "tpoly", "--in", s(&input), "--out", s(&res), "--exclude", "3", "0", "--fix", "gamma_const=0.0995"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&res);
    assert_eq!(r["excluded"], serde_json::json!([0, 3]));
    assert_eq!(r["params"]["gamma_const"]["value"], 0.0995);
}

#[test]
fn multipeak_overlay_has_two_polylines() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "si28.cfg", SI28);
    assert_eq!(code(&simulate("ple", &c, d.path(), &[])), 0);
    let res = d.path().join("peaks.json");
    let o = run(&["fit", "multipeak", "--in", s(&d.path().join("si28.csv")), "--out", s(&res), "--peaks", "4", "--plot"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = std::fs::read_to_string(d.path().join("peaks.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let r = read_json(&res);
    let c1 = r["params"]["center_1"]["value"].as_f64().unwrap();
    let c2 = r["params"]["center_2"]["value"].as_f64().unwrap();
    assert!((c2 - c1 - 48.1).abs() < 0.05, "{c1} {c2}");
}

#[test]
fn two_point_table_plots_one_segment() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "st.cfg", "[strain]\ntemperature = 4.7\namplitude = 3.6e-8\ndeltas = [100.0, 300.0]\n\n[output]\nprefix = \"st\"\n");
    let o = simulate("strain", &c, d.path(), &["--plot"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = std::fs::read_to_string(d.path().join("st.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(pts.split(' ').count(), 2);
}

#[test]
fn svg_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&simulate("g2", &cfg("g2.cfg"), d.path(), &["--plot"])), 0);
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("g2.svg")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn unknown_key_is_exit_2_with_path() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "bad.cfg", &SI28.replace("points = 2601", "pointz = 2601"));
    let o = simulate("ple", &c, d.path(), &[]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("scan") && e.contains("pointz"), "{e}");
    assert!(!d.path().join("si28.csv").exists());
}

#[test]
fn invalid_value_is_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "bad.cfg", &HOLE.replace("gamma_hom = 0.279", "gamma_hom = -1.0"));
    let o = simulate("holeburn", &c, d.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("gamma_hom"), "{}", stderr(&o));
}

#[test]
fn missing_section_is_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = simulate("cpt", &cfg("g2.cfg"), d.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
}

#[test]
fn usage_errors_are_exit_2() {
    assert_eq!(code(&run(&["simulate", "nothing", "--config", "x.cfg"])), 2);
    assert_eq!(code(&run(&["fit", "voigt"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
    let d = tempfile::tempdir().unwrap();
    let t = write_cfg(d.path(), "p.csv", "delta_gs_ghz,fwhm_ghz\n100,0.1\n200,0.2\n");
    let o = run(&["fit", "phonon", "--in", s(&t), "--out", s(&d.path().join("r.json"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--temperature"), "{}", stderr(&o));
}

#[test]
fn unidentifiable_fit_is_exit_4_and_still_written() {
    let d = tempfile::tempdir().unwrap();
    let t = write_cfg(d.path(), "shift.csv", "temperature_k,shift_ghz\n50,1\n50,1.1\n50,0.9\n50,1.0\n");
    let res = d.path().join("r.json");
    let o = run(&["fit", "tshift", "--in", s(&t), "--out", s(&res)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("rank-deficient"), "{}", stderr(&o));
    let r = read_json(&res);
    assert_eq!(r["converged"], false);
    assert!(r["flags"].as_array().unwrap().iter().any(|f| f == "rank_deficient"));
}

#[test]
fn seed_controls_noise() {
    let d = tempfile::tempdir().unwrap();
    let c = write_cfg(d.path(), "n.cfg", &format!("{SI28}\n[noise]\nkind = \"shot\"\nscale = 1e-4\nseed = 1\n"));
    let outs: Vec<(Vec<u8>, String)> = ["1", "1", "2"]
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let out = d.path().join(format!("run{i}"));
            assert_eq!(code(&simulate("ple", &c, &out, &["--seed", seed])), 0);
            let digest = read_json(&out.join("run_report.json"))["inputs_digest"].as_str().unwrap().to_string();
            (std::fs::read(out.join("si28.csv")).unwrap(), digest)
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_ne!(outs[0].0, outs[2].0);
    assert_ne!(outs[0].1, outs[2].1);
}

#[test]
fn digest_ignores_key_order_and_comments() {
    let d = tempfile::tempdir().unwrap();
    let a = write_cfg(d.path(), "a.cfg", SI28);
    let reordered = "# same run\n[output]\nprefix = \"si28\"\n\n[scan]\npoints = 2601\nto = 400.0\nfrom = -250.0\n\n[ensemble]\npreset = \"si28\"\n";
    let b = write_cfg(d.path(), "b.cfg", reordered);
    let digest = |c: &Path, sub: &str| {
        let out = d.path().join(sub);
        assert_eq!(code(&simulate("ple", c, &out, &[])), 0);
        read_json(&out.join("run_report.json"))["inputs_digest"].clone()
    };
    assert_eq!(digest(&a, "a"), digest(&b, "b"));
}

#[test]
fn bundled_configs_finish_within_a_minute() {
    for (name, what) in [
        ("table1.cfg", "ple"),
        ("sweep.cfg", "sweep"),
        ("fig5_hole.cfg", "holeburn"),
        ("cpt.cfg", "cpt"),
        ("g2.cfg", "g2"),
        ("fig8_strain.cfg", "strain"),
    ] {
        let d = tempfile::tempdir().unwrap();
        let t0 = Instant::now();
        let o = simulate(what, &cfg(name), d.path(), &["--plot"]);
        let dt = t0.elapsed().as_secs_f64();
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        assert!(dt < 60.0, "{name}: {dt} s");
        let report = read_json(&d.path().join("run_report.json"));
        assert!(!report["files"].as_array().unwrap().is_empty());
    }
}
