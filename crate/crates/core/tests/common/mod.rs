#![allow(dead_code)]

use std::path::{Path, PathBuf};

use atlas_geodesic::neural::{Activation, DenseLayer, NeuralAtlasModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[derive(Debug, Deserialize)]
pub struct RefCase {
    pub net: String,
    pub chart: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct RefCases {
    cases: Vec<RefCase>,
}

pub fn reference_cases() -> Vec<RefCase> {
    let text = std::fs::read_to_string(fixture("mlp_ref_cases.json")).unwrap();
    serde_json::from_str::<RefCases>(&text).unwrap().cases
}

/// Layers selected by a reference case.
pub fn case_layers<'a>(model: &'a NeuralAtlasModel, case: &RefCase) -> &'a [DenseLayer] {
    match case.net.as_str() {
        "encoder" => &model.encoders[case.chart - 1],
        "decoder" => &model.decoders[case.chart - 1],
        "partition" => &model.partition,
        other => panic!("unknown net {other}"),
    }
}

fn random_layer(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, scale: f64, act: Activation) -> DenseLayer {
    let weight = (0..outputs)
        .map(|_| (0..inputs).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    let bias = (0..outputs).map(|_| rng.random_range(-0.1..0.1)).collect();
    DenseLayer::new(weight, bias, act).unwrap()
}

/// Two-chart model with 28x28 "images" as ambient points.
pub fn mnist_like_model(seed: u64) -> NeuralAtlasModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ambient = 784;
    let encoders = (0..2)
        .map(|_| vec![random_layer(&mut rng, ambient, 2, 0.05, Activation::Identity)])
        .collect();
    let decoders = (0..2)
        .map(|_| {
            vec![
                random_layer(&mut rng, 2, 16, 1.0, Activation::Tanh),
                random_layer(&mut rng, 16, ambient, 1.0, Activation::Sigmoid),
            ]
        })
        .collect();
    let partition = vec![random_layer(&mut rng, ambient, 2, 0.05, Activation::Softmax)];
    let model = NeuralAtlasModel {
        m: 2,
        d: 2,
        ambient,
        encoders,
        decoders,
        partition,
    };
    model.validate().unwrap();
    model
}

/// Sphere chart N Jacobian, derived by hand from G(z) = (2z, |z|^2 - 1) / (1 + |z|^2).
pub fn sphere_north_jacobian(z: [f64; 2]) -> [[f64; 2]; 3] {
    let [a, b] = z;
    let s = 1.0 + a * a + b * b;
    let s2 = s * s;
    [
        [2.0 * (1.0 - a * a + b * b) / s2, -4.0 * a * b / s2],
        [-4.0 * a * b / s2, 2.0 * (1.0 + a * a - b * b) / s2],
        [4.0 * a / s2, 4.0 * b / s2],
    ]
}

/// Uniform point in the disk of the given radius.
pub fn disk_point(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    [r * t.cos(), r * t.sin()]
}

/// Brute-force k nearest neighbours, ties broken by lower index.
pub fn brute_knn(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut cand: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j))
                .collect();
            cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            cand.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

pub fn atlas_geo() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_atlas-geo"))
}
