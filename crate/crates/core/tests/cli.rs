mod common;

use std::path::Path;
use std::process::Output;

use atlas_geodesic::io::{write_raw_f32, PathFile};
use atlas_geodesic::neural::NeuralAtlas;
use atlas_geodesic::{Atlas, LatentCoord};
use common::{atlas_geo, fixture, mnist_like_model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run(args: &[&str]) -> Output {
    atlas_geo().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_graph_sphere_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    let text = ok(&["build-graph", "--atlas", "sphere", "--n", "500", "--k", "10", "--out", s(&graph)]);
    assert!(text.contains("charts: 2"), "{text}");
    assert!(text.contains("nodes / edges / diameter: "), "{text}");
    assert!(graph.exists());
}

#[test]
fn neural_atlas_requires_data() {
    let dir = tempfile::tempdir().unwrap();
    let spec = format!("neural:{}", fixture("sphere_neural.json").display());
    let out = run(&["build-graph", "--atlas", &spec, "--out", s(&dir.path().join("g.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data"));
}

#[test]
fn flat_default_has_one_chart_and_no_cross_edges() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["build-graph", "--atlas", "flat", "--out", s(&dir.path().join("g.json"))]);
    assert!(text.contains("charts: 1\n"), "{text}");
    assert!(text.contains("cross-chart edges: 0\n"), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["build-graph", "--atlas", "torus", "--out", "/dev/null"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["build-graph", "--atlas", "flat", "--k", "0", "--out", "/dev/null"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_files_exit_4() {
    let out = run(&["eval", "--graph", "/nonexistent/g.json", "--atlas", "flat", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn interpolate_sphere_crosses_charts() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    ok(&["build-graph", "--atlas", "sphere", "--n", "600", "--k", "10", "--out", s(&graph)]);
    let path = dir.path().join("p.json");
    let text = ok(&[
        "interpolate", "--graph", s(&graph), "--atlas", "sphere", "--from-coords", "0,0.6,0.8",
        "--to-coords", "0,-0.6,-0.8", "--samples", "10", "--out", s(&path),
    ]);
    assert!(text.contains("y1/y2") || text.contains("y2/y1"), "{text}");
    let raw = std::fs::read_to_string(&path).unwrap();
    assert!(raw.contains("\"cross_chart\""));
    let file = PathFile::load(&path).unwrap();
    assert_eq!(file.samples.len(), 10);

    let two = dir.path().join("two.json");
    ok(&[
        "interpolate", "--graph", s(&graph), "--atlas", "sphere", "--from-coords", "0,0.6,0.8",
        "--to-coords", "0,-0.6,-0.8", "--samples", "2", "--out", s(&two),
    ]);
    let two = PathFile::load(&two).unwrap();
    assert_eq!(two.samples.len(), 2);
    assert_eq!(two.samples[0].z, file.nodes[0].z);
    assert_eq!(two.samples[1].z, file.nodes.last().unwrap().z);
    assert_eq!(two.samples[0].x, file.samples[0].x);
    assert_eq!(two.samples[1].x, file.samples[9].x);
}

#[test]
fn interpolate_by_index_and_fingerprint_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    ok(&["build-graph", "--atlas", "circle", "--n", "200", "--k", "6", "--out", s(&graph)]);
    let path = dir.path().join("p.json");
    let text = ok(&[
        "interpolate", "--graph", s(&graph), "--atlas", "circle", "--from-index", "0", "--to-index", "5",
        "--out", s(&path),
    ]);
    assert!(text.starts_with("total length: "), "{text}");
    let out = run(&[
        "interpolate", "--graph", s(&graph), "--atlas", "sphere", "--from-index", "0", "--to-index", "5",
        "--out", s(&path),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn disconnected_graph_reports_no_path() {
    let dir = tempfile::tempdir().unwrap();
    // Two clusters on the line, far apart, k = 1.
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "0,0,0\n0.1,0,0\n4,4,0\n4.1,4,0\n").unwrap();
    let graph = dir.path().join("g.json");
    ok(&[
        "build-graph", "--atlas", "flat", "--data", s(&csv), "--n", "4", "--k", "1", "--out", s(&graph),
    ]);
    let out = run(&[
        "interpolate", "--graph", s(&graph), "--atlas", "flat", "--from-coords", "0,0,0", "--to-coords",
        "4,4,0", "--k", "1", "--out", s(&dir.path().join("p.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("component"));
}

#[test]
fn neural_frames_are_written_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let model = mnist_like_model(5);
    let weights = dir.path().join("mnist_like.json");
    model.save(&weights).unwrap();
    let atlas = NeuralAtlas::new(model, "gen").unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows = 120;
    let mut data = Vec::with_capacity(rows * 784);
    for _ in 0..rows {
        let chart = rng.random_range(0..2);
        let z = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        data.extend(atlas.decode(&LatentCoord::new(chart, z)).unwrap().0);
    }
    let data_path = dir.path().join("images.bin");
    write_raw_f32(&data_path, rows, 784, &data).unwrap();

    let spec = format!("neural:{}", weights.display());
    let graph = dir.path().join("g.json");
    ok(&[
        "build-graph", "--atlas", &spec, "--data", s(&data_path), "--format", "raw_f32", "--n", "120", "--k",
        "8", "--out", s(&graph),
    ]);
    let frames = dir.path().join("frames");
    ok(&[
        "interpolate", "--graph", s(&graph), "--atlas", &spec, "--from-index", "0", "--to-index", "7",
        "--samples", "7", "--out", s(&dir.path().join("p.json")), "--frames", s(&frames), "--frame-shape",
        "28x28",
    ]);
    let mut names: Vec<String> = std::fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in &names {
        let bytes = std::fs::read(frames.join(name)).unwrap();
        let header = b"P5\n28 28\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 784);
    }

    let csv = dir.path().join("eval.csv");
    ok(&[
        "eval", "--graph", s(&graph), "--atlas", &spec, "--data", s(&data_path), "--format", "raw_f32",
        "--pairs", "5", "--k", "8", "--out", s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        assert_eq!(line.split(',').nth(1), Some(""), "{line}");
    }
}

#[test]
fn eval_sphere_writes_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    ok(&["build-graph", "--atlas", "sphere", "--n", "800", "--k", "12", "--out", s(&graph)]);
    let csv = dir.path().join("e.csv");
    let text = ok(&["eval", "--graph", s(&graph), "--atlas", "sphere", "--pairs", "100", "--out", s(&csv)]);
    assert!(text.contains("length / oracle: mean"), "{text}");
    let body = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "pair,oracle_distance,graph_length,hops,cross_chart_segments");
    assert_eq!(lines.len(), 101);
    for (i, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[0], i.to_string());
        let oracle: f64 = cols[1].parse().unwrap();
        let length: f64 = cols[2].parse().unwrap();
        assert!(length >= oracle * (1.0 - 1e-9), "{line}");
    }
}

#[test]
fn confidence_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    ok(&["confidence", "--atlas", "flat", "--n", "50", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,confidence,chart");
    assert_eq!(lines.len(), 51);
    for line in &lines[1..] {
        assert_eq!(line.split(',').nth(1), Some("1"), "{line}");
    }

    ok(&["confidence", "--atlas", "sphere", "--n", "4000", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.iter().all(|v| (0.5..=1.0).contains(v)));
    // Uniform on [0.5, 1]: mean 0.75, each quarter of the range holds about a quarter.
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!((mean - 0.75).abs() < 0.01, "mean {mean}");
    let low = values.iter().filter(|&&v| v < 0.625).count() as f64 / values.len() as f64;
    assert!((low - 0.25).abs() < 0.03, "fraction {low}");

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    ok(&["confidence", "--atlas", "sphere", "--data", s(&empty), "--out", s(&csv)]);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), "index,confidence,chart\n");
}

#[test]
fn metric_command() {
    let text = ok(&["metric", "--atlas", "flat", "--chart", "1", "--point", "2.5,-1.25"]);
    let values: Vec<f64> = text.split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    for (got, want) in values.iter().zip([1.0, 0.0, 0.0, 1.0]) {
        assert!((got - want).abs() < 1e-9, "{text}");
    }

    let text = ok(&["metric", "--atlas", "sphere", "--chart", "1", "--point", "0,0", "--h", "1e-5"]);
    let values: Vec<f64> = text.split_whitespace().map(|v| v.parse().unwrap()).collect();
    for (got, want) in values.iter().zip([4.0, 0.0, 0.0, 4.0]) {
        assert!((got - want).abs() < 1e-6, "{text}");
    }

    let out = run(&["metric", "--atlas", "sphere", "--chart", "1", "--point", "0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["metric", "--atlas", "sphere", "--chart", "3", "--point", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
}
