use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use holonomy_cli::scenario::{Kind, Scenario};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn holonomy(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holonomy"))
        .args(args)
        .env_remove("HOLONOMY_THREADS")
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("s.scn");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

fn layers(svg: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed svg");
    doc.root_element()
        .children()
        .filter(|n| n.has_tag_name("g"))
        .map(|g| {
            assert!(g
                .children()
                .filter(|c| c.is_element())
                .all(|c| c.has_tag_name("polyline")));
            g.attribute("id").unwrap().to_string()
        })
        .collect()
}

#[test]
fn classic_zigzag_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = holonomy(
        &["run", scenario("classic_zigzag.scn").to_str().unwrap(), "--out", "o"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("o/metrics.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "level,N,sigma,eps_measured,seam_max,holonomy_residual,displacement"
    );
    assert!(*column(&csv, "eps_measured").last().unwrap() < 0.1);
    let report = fs::read_to_string(tmp.path().join("o/report.txt")).unwrap();
    assert!(report.lines().any(|l| l == "status = success"));
    let svg = fs::read_to_string(tmp.path().join("o/figure.svg")).unwrap();
    assert_eq!(layers(&svg), ["source", "directions", "output"]);
}

#[test]
fn fold_removal_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = holonomy(
        &["run", scenario("fold_removal.scn").to_str().unwrap(), "--out", "o"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("o/report.txt")).unwrap();
    let det: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("min_abs_det = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(det > 0.0);
    let svg = fs::read_to_string(tmp.path().join("o/figure.svg")).unwrap();
    assert_eq!(layers(&svg), ["source-grid", "output-grid"]);
}

#[test]
fn bundled_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut kinds = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        kinds.push(Scenario::parse(&text).unwrap().kind);
    }
    for k in [Kind::Approximate, Kind::Parametric, Kind::Solve, Kind::Directed] {
        assert!(kinds.contains(&k), "no bundled {k} scenario");
    }
}

#[test]
fn codimension_zero_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(
        tmp.path(),
        "kind = approximate\nn = 2\nk = 2\ndelta = 0.1\neps = 0.1\n[section]\nvalue = 0\n",
    );
    let o = holonomy(&["run", &s], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("positive codimension"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(
        tmp.path(),
        "kind = approximate\nn = 2\nk = 1\ndelta = 0.1\neps = 0.1\nepsilon = 3\n[section]\nvalue = 0\n",
    );
    let o = holonomy(&["run", &s], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 6: unknown key 'epsilon'"), "{}", stderr(&o));
}

#[test]
fn scenario_validation() {
    let base = "kind = approximate\nn = 2\nk = 1\ndelta = 0.1\neps = 0.1\n";
    let bad = [
        format!("{base}[section]\nvalue = 0\nvalue = 1\n"),
        format!("{base}[section]\nvalue = 0\nd11 = 1\n"),
        format!("{base}[section]\nvalue = x3\n"),
        format!("{base}[sections]\nvalue = 0\n"),
        format!("{base}[section]\nvalue = 0\n[relation]\nname = immersion\nmargin = x1\n"),
        "kind = solve\nn = 2\ndelta = 0.1\neps = 0.1\n[section]\nvalue = x1; x2\n".to_string(),
        "kind = twist\n".to_string(),
        "n = 2\n".to_string(),
    ];
    for text in &bad {
        assert!(Scenario::parse(text).is_err(), "accepted:\n{text}");
    }
    let ok = Scenario::parse(&format!("{base}# comment\n[section]\nvalue = 0  # trailing\nd1 = 1\n")).unwrap();
    assert_eq!((ok.n, ok.k, ok.q, ok.grid), (2, 1, 1, 41));
    assert_eq!(ok.section.derivatives, vec![(vec![1, 0], vec!["1".to_string()])]);
}

#[test]
fn engine_failure_exits_two_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(
        tmp.path(),
        "kind = approximate\nn = 2\nk = 1\ndelta = 0.1\neps = 0.1\nn_cap = 32\n[section]\nvalue = 0\nd1 = 1\n",
    );
    let o = holonomy(&["run", &s, "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let report = fs::read_to_string(tmp.path().join("o/report.txt")).unwrap();
    assert!(report.contains("status = n_cap_exceeded"));
    let csv = fs::read_to_string(tmp.path().join("o/metrics.csv")).unwrap();
    assert_eq!(column(&csv, "N"), [4.0, 8.0, 16.0, 32.0]);
}

#[test]
fn sweep_over_n_floor_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let o = holonomy(
        &[
            "sweep",
            scenario("classic_zigzag.scn").to_str().unwrap(),
            "--param",
            "N_floor",
            "--values",
            "8,16,32,64",
            "--out",
            "o",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap();
    assert!(csv.starts_with("N_floor,status,level,N,"));
    let eps = column(&csv, "eps_measured");
    assert_eq!(eps.len(), 4);
    assert!(eps.windows(2).all(|p| p[1] <= 1.05 * p[0]), "{eps:?}");
    assert!(tmp.path().join("o/N_floor=8/report.txt").exists());
}

#[test]
fn sweep_over_grid_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let o = holonomy(
        &[
            "sweep",
            scenario("classic_zigzag.scn").to_str().unwrap(),
            "--param",
            "grid",
            "--values",
            "21,41,81",
            "--out",
            "o",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let eps = column(
        &fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap(),
        "eps_measured",
    );
    let (lo, hi) = eps
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    assert!(hi <= 1.1 * lo, "{eps:?}");
}

#[test]
fn sweep_argument_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario("classic_zigzag.scn");
    let file = file.to_str().unwrap();
    for args in [
        vec!["sweep", file, "--param", "grid", "--values", ""],
        vec!["sweep", file, "--param", "grid"],
        vec!["sweep", file, "--param", "collar", "--values", "0.1"],
        vec!["sweep", file, "--param", "grid", "--values", "many"],
    ] {
        let o = holonomy(&args, tmp.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario("kmersion.scn");
    let file = file.to_str().unwrap();
    let read =
        |d: &str| ["report.txt", "metrics.csv", "figure.svg"].map(|f| fs::read(tmp.path().join(d).join(f)).unwrap());
    for (dir, threads) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let o = holonomy(&["run", file, "--threads", threads, "--out", dir], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a"), read("c"));
}

#[test]
fn seed_and_thread_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let file = scenario("directed_segment.scn");
    let file = file.to_str().unwrap();
    let o = holonomy(&["run", file, "--seed", "42", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("o/report.txt")).unwrap();
    assert!(report.lines().any(|l| l == "seed = 42"));
    assert_eq!(
        layers(&fs::read_to_string(tmp.path().join("o/figure.svg")).unwrap()),
        ["source", "output"]
    );

    let o = Command::new(env!("CARGO_BIN_EXE_holonomy"))
        .args(["run", file, "--out", "p"])
        .env("HOLONOMY_THREADS", "lots")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = holonomy(&["run", file, "--threads", "0"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let o = holonomy(&["run", "nowhere.scn"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.scn"));
}
