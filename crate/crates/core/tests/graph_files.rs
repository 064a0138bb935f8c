use atlas_geodesic::analytic::{sample_manifold, AnalyticName, SphereAtlas};
use atlas_geodesic::io::{graph_from_json, graph_to_json, load_graph, save_graph, PathFile};
use atlas_geodesic::search::resample_equidistant;
use atlas_geodesic::{build_graph, geodesic_between, graph_stats, AmbientPoint, BuildConfig, Error};

fn small_sphere_graph() -> atlas_geodesic::LatentGraph {
    let data = sample_manifold(AnalyticName::Sphere, 300, 11).unwrap();
    let cfg = BuildConfig {
        samples: 300,
        k: 8,
        ..BuildConfig::default()
    };
    build_graph(&SphereAtlas, &data, &cfg).unwrap()
}

#[test]
fn graph_round_trip_preserves_everything() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_sphere_graph();
    let first = dir.path().join("a.json");
    save_graph(&graph, &first).unwrap();
    let loaded = load_graph(&first).unwrap();
    assert_eq!(graph_stats(&loaded), graph_stats(&graph));
    assert_eq!(loaded.nodes(), graph.nodes());
    assert_eq!(loaded.edges(), graph.edges());
    assert_eq!(loaded.config(), graph.config());
    assert_eq!(loaded.fingerprint(), graph.fingerprint());

    let second = dir.path().join("b.json");
    save_graph(&loaded, &second).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn missing_fields_are_named() {
    let text = graph_to_json(&small_sphere_graph());
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value.as_object_mut().unwrap().remove("edges");
    let err = graph_from_json(&value.to_string()).unwrap_err();
    assert!(matches!(err, Error::Format(_)));
    assert!(err.to_string().contains("edges"), "{err}");
}

#[test]
fn inconsistent_edges_are_rejected() {
    let text = graph_to_json(&small_sphere_graph());
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["edges"][0]["w"] = serde_json::json!(-1.0);
    assert!(matches!(graph_from_json(&value.to_string()), Err(Error::Format(_))));

    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let n = value["nodes"].as_array().unwrap().len();
    value["edges"][0]["b"] = serde_json::json!(n + 5);
    assert!(matches!(graph_from_json(&value.to_string()), Err(Error::Format(_))));
}

#[test]
fn truncated_graph_files_never_parse() {
    let data = sample_manifold(AnalyticName::Sphere, 40, 2).unwrap();
    let cfg = BuildConfig {
        samples: 40,
        k: 3,
        ..BuildConfig::default()
    };
    let text = graph_to_json(&build_graph(&SphereAtlas, &data, &cfg).unwrap());
    for cut in 0..text.len() {
        assert!(graph_from_json(&text[..cut]).is_err(), "prefix of {cut} bytes parsed");
    }
}

#[test]
fn path_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = small_sphere_graph();
    let x0 = AmbientPoint(vec![0.0, 0.6, 0.8]);
    let x1 = AmbientPoint(vec![0.0, -0.6, -0.8]);
    let path = geodesic_between(&graph, &SphereAtlas, &x0, &x1, 8).unwrap();
    let samples = resample_equidistant(&path, &SphereAtlas, 9).unwrap();
    let file = PathFile::new(&path, &samples);
    let out = dir.path().join("p.json");
    file.save(&out).unwrap();
    let back = PathFile::load(&out).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.total_length.to_bits(), path.total_length.to_bits());
    assert_eq!(back.samples.len(), 9);
    assert!(back.nodes.iter().all(|n| n.chart == 1 || n.chart == 2));
}
