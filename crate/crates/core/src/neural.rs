//! Dense neural atlases loaded from a JSON weight file.
//!
//! File layout:
//!
//! ```json
//! {"m": 2, "d": 2, "D": 3,
//!  "encoders": [net, ...], "decoders": [net, ...], "partition": net}
//! ```
//!
//! where `net` is a list of layers `{"w": [[...]], "b": [...], "act": "swish"}`
//! and `w` is row-major with shape `out x in`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Atlas, AtlasDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Swish,
    Tanh,
    Sigmoid,
    Softmax,
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    fn apply(self, values: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => values.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Swish => values.iter_mut().for_each(|v| *v *= sigmoid(*v)),
            Activation::Tanh => values.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Sigmoid => values.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Softmax => {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for v in values.iter_mut() {
                    *v = (*v - max).exp();
                    total += *v;
                }
                values.iter_mut().for_each(|v| *v /= total);
            }
        }
    }
}

/// Affine map followed by an elementwise (or softmax) activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayer", into = "RawLayer")]
pub struct DenseLayer {
    /// Row-major `outputs x inputs`.
    weight: Vec<f64>,
    bias: Vec<f64>,
    inputs: usize,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    act: Activation,
}

impl TryFrom<RawLayer> for DenseLayer {
    type Error = String;

    fn try_from(raw: RawLayer) -> Result<Self, String> {
        DenseLayer::new(raw.w, raw.b, raw.act).map_err(|e| match e {
            Error::Format(msg) => msg,
            other => other.to_string(),
        })
    }
}

impl From<DenseLayer> for RawLayer {
    fn from(layer: DenseLayer) -> Self {
        let w = if layer.inputs == 0 {
            vec![Vec::new(); layer.bias.len()]
        } else {
            layer.weight.chunks(layer.inputs).map(<[f64]>::to_vec).collect()
        };
        RawLayer {
            w,
            b: layer.bias,
            act: layer.activation,
        }
    }
}

impl DenseLayer {
    pub fn new(weight: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weight.len() != bias.len() {
            return Err(Error::format(format!(
                "weight has {} rows but bias has length {}",
                weight.len(),
                bias.len()
            )));
        }
        if weight.is_empty() {
            return Err(Error::format("layer has no outputs"));
        }
        let inputs = weight[0].len();
        if inputs == 0 {
            return Err(Error::format("layer has no inputs"));
        }
        if let Some(r) = weight.iter().position(|row| row.len() != inputs) {
            return Err(Error::format(format!(
                "weight row {r} has length {}, expected {inputs}",
                weight[r].len()
            )));
        }
        let flat: Vec<f64> = weight.into_iter().flatten().collect();
        if flat.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::format("layer contains non-finite values"));
        }
        Ok(DenseLayer {
            weight: flat,
            bias,
            inputs,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect();
        self.activation.apply(&mut out);
        out
    }
}

/// Evaluates `layers` in sequence.
pub fn mlp_forward(layers: &[DenseLayer], input: &[f64]) -> Result<Vec<f64>> {
    let mut width = input.len();
    for (i, layer) in layers.iter().enumerate() {
        if layer.inputs != width {
            return Err(Error::usage(format!(
                "layer {i} expects {} inputs, got {width}",
                layer.inputs
            )));
        }
        width = layer.outputs();
    }
    Ok(forward_unchecked(layers, input))
}

fn forward_unchecked(layers: &[DenseLayer], input: &[f64]) -> Vec<f64> {
    let mut v = input.to_vec();
    for layer in layers {
        v = layer.forward(&v);
    }
    v
}

/// Encoders, decoders and partition network of a dense atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralAtlasModel {
    pub m: usize,
    pub d: usize,
    #[serde(rename = "D")]
    pub ambient: usize,
    pub encoders: Vec<Vec<DenseLayer>>,
    pub decoders: Vec<Vec<DenseLayer>>,
    pub partition: Vec<DenseLayer>,
}

fn check_net(
    path: &str,
    net: &[DenseLayer],
    inputs: usize,
    outputs: usize,
    final_softmax: bool,
) -> Result<()> {
    if net.is_empty() {
        return Err(Error::format(format!("{path}: network has no layers")));
    }
    let mut width = inputs;
    for (i, layer) in net.iter().enumerate() {
        if layer.inputs() != width {
            return Err(Error::format(format!(
                "{path}[{i}].w: expected {width} columns, found {}",
                layer.inputs()
            )));
        }
        let last = i + 1 == net.len();
        let softmax = layer.activation() == Activation::Softmax;
        if softmax && !(last && final_softmax) {
            return Err(Error::format(format!(
                "{path}[{i}].act: softmax is only allowed as the final partition layer"
            )));
        }
        if last && final_softmax && !softmax {
            return Err(Error::format(format!(
                "{path}[{i}].act: partition network must end in softmax"
            )));
        }
        width = layer.outputs();
    }
    if width != outputs {
        return Err(Error::format(format!(
            "{path}[{}].b: network outputs {width} values, expected {outputs}",
            net.len() - 1
        )));
    }
    Ok(())
}

impl NeuralAtlasModel {
    pub fn dims(&self) -> AtlasDims {
        AtlasDims {
            m: self.m,
            d: self.d,
            ambient: self.ambient,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("d", self.d), ("D", self.ambient)] {
            if v == 0 {
                return Err(Error::format(format!("{name}: must be at least 1")));
            }
        }
        for (name, nets) in [("encoders", &self.encoders), ("decoders", &self.decoders)] {
            if nets.len() != self.m {
                return Err(Error::format(format!(
                    "{name}: expected {} networks, found {}",
                    self.m,
                    nets.len()
                )));
            }
        }
        for (i, net) in self.encoders.iter().enumerate() {
            check_net(&format!("encoders[{i}]"), net, self.ambient, self.d, false)?;
        }
        for (i, net) in self.decoders.iter().enumerate() {
            check_net(&format!("decoders[{i}]"), net, self.d, self.ambient, false)?;
        }
        check_net("partition", &self.partition, self.ambient, self.m, true)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let model: NeuralAtlasModel = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::format(format!("{}: {}", e.path(), e.inner()))
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// A [`NeuralAtlasModel`] exposed through the [`Atlas`] interface.
///
/// Neural encoders are total, so `encode` never reports a domain error.
#[derive(Debug, Clone)]
pub struct NeuralAtlas {
    model: NeuralAtlasModel,
    spec: String,
}

impl NeuralAtlas {
    pub fn new(model: NeuralAtlasModel, spec: impl Into<String>) -> Result<Self> {
        model.validate()?;
        Ok(NeuralAtlas {
            model,
            spec: spec.into(),
        })
    }

    pub fn model(&self) -> &NeuralAtlasModel {
        &self.model
    }
}

/// Loads a weight file; the atlas spec string becomes `neural:<path>`.
pub fn load_neural_atlas(path: impl AsRef<Path>) -> Result<NeuralAtlas> {
    let path = path.as_ref();
    let model = NeuralAtlasModel::load(path)?;
    NeuralAtlas::new(model, format!("neural:{}", path.display()))
}

impl Atlas for NeuralAtlas {
    fn dims(&self) -> AtlasDims {
        self.model.dims()
    }

    fn spec(&self) -> String {
        self.spec.clone()
    }

    fn decode_raw(&self, chart: usize, z: &[f64]) -> Vec<f64> {
        forward_unchecked(&self.model.decoders[chart], z)
    }

    fn encode_raw(&self, chart: usize, x: &[f64]) -> Result<Vec<f64>> {
        Ok(forward_unchecked(&self.model.encoders[chart], x))
    }

    fn partition_raw(&self, x: &[f64]) -> Vec<f64> {
        forward_unchecked(&self.model.partition, x)
    }
}
