//! Dataset ingestion, graph and path persistence, PGM frames.
//!
//! Binary layouts:
//!
//! * `raw_f32`: magic `AGMD`, `u32` rows and `u32` dim (little endian), then
//!   `rows * dim` little-endian `f32` values.
//! * `idx`: big-endian IDX with unsigned-byte payload (magic `0x0000_08nn`);
//!   the first dimension indexes rows, pixels are scaled by `1/255`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AmbientPoint, AtlasDims, Fingerprint, LatentCoord};
use crate::graph::{BuildConfig, EdgeKind, GraphEdge, GraphNode, LatentGraph};
use crate::search::{GeodesicPath, PathSample};

pub const RAW_MAGIC: &[u8; 4] = b"AGMD";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    RawF32,
    Idx,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "raw_f32" => Ok(DataFormat::RawF32),
            "idx" => Ok(DataFormat::Idx),
            other => Err(Error::usage(format!(
                "unknown data format '{other}' (expected csv, raw_f32 or idx)"
            ))),
        }
    }
}

/// Row-major matrix of data points.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMatrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
    pub source: PathBuf,
    pub format: DataFormat,
}

impl DatasetMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<AmbientPoint> {
        (0..self.rows).map(|i| AmbientPoint(self.row(i).to_vec())).collect()
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<DatasetMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let parsed = match format {
        DataFormat::Csv => parse_csv(&bytes),
        DataFormat::RawF32 => parse_raw_f32(&bytes),
        DataFormat::Idx => parse_idx(&bytes),
    };
    let (rows, dim, data) = parsed.map_err(|msg| Error::format(format!("{}: {msg}", path.display())))?;
    Ok(DatasetMatrix {
        rows,
        dim,
        data,
        source: path.to_path_buf(),
        format,
    })
}

type Parsed = std::result::Result<(usize, usize, Vec<f64>), String>;

fn parse_csv(bytes: &[u8]) -> Parsed {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(bytes);
    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if *dim.get_or_insert(record.len()) != record.len() {
            return Err(format!(
                "line {line}: expected {} values, found {}",
                dim.unwrap(),
                record.len()
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| format!("line {line}, column {}: '{cell}' is not a number", col + 1))?;
            if !v.is_finite() {
                return Err(format!("line {line}, column {}: value is not finite", col + 1));
            }
            data.push(v);
        }
        rows += 1;
    }
    Ok((rows, dim.unwrap_or(0), data))
}

fn parse_raw_f32(bytes: &[u8]) -> Parsed {
    if bytes.len() < 16 {
        return Err(format!("truncated header: {} of 16 bytes", bytes.len()));
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(format!("byte offset 0: bad magic {:02x?}, expected \"AGMD\"", &bytes[..4]));
    }
    let rows = LittleEndian::read_u32(&bytes[4..8]) as usize;
    let dim = LittleEndian::read_u32(&bytes[8..12]) as usize;
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| format!("byte offset 4: {rows} x {dim} payload overflows"))?;
    check_payload(bytes.len(), expected)?;
    let data = bytes[16..]
        .chunks_exact(4)
        .enumerate()
        .map(|(i, chunk)| {
            let v = LittleEndian::read_f32(chunk);
            if v.is_finite() {
                Ok(f64::from(v))
            } else {
                Err(format!("byte offset {}: value is not finite", 16 + 4 * i))
            }
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok((rows, dim, data))
}

fn check_payload(found: usize, expected: usize) -> std::result::Result<(), String> {
    if found < expected {
        return Err(format!(
            "truncated payload at byte offset {found}: expected {expected} bytes"
        ));
    }
    if found > expected {
        return Err(format!("unexpected trailing data at byte offset {expected}"));
    }
    Ok(())
}

fn parse_idx(bytes: &[u8]) -> Parsed {
    if bytes.len() < 4 {
        return Err(format!("truncated header: {} of 4 magic bytes", bytes.len()));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(format!("byte offset 0: bad magic {:02x?}", &bytes[..4]));
    }
    if bytes[2] != 0x08 {
        return Err(format!(
            "byte offset 2: element type 0x{:02x} unsupported (only unsigned bytes, 0x08)",
            bytes[2]
        ));
    }
    let ndim = bytes[3] as usize;
    if ndim == 0 {
        return Err("byte offset 3: IDX tensor has no dimensions".into());
    }
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(format!("truncated header at byte offset {}", bytes.len()));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|i| BigEndian::read_u32(&bytes[4 + 4 * i..8 + 4 * i]) as usize)
        .collect();
    let rows = dims[0];
    let dim = dims[1..].iter().product::<usize>();
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_add(header))
        .ok_or_else(|| "byte offset 4: dimensions overflow".to_string())?;
    check_payload(bytes.len(), expected)?;
    let data = bytes[header..].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok((rows, dim, data))
}

pub fn write_raw_f32(path: impl AsRef<Path>, rows: usize, dim: usize, data: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if rows * dim != data.len() {
        return Err(Error::usage(format!(
            "{rows} x {dim} matrix needs {} values, got {}",
            rows * dim,
            data.len()
        )));
    }
    let mut bytes = Vec::with_capacity(16 + 4 * data.len());
    bytes.extend_from_slice(RAW_MAGIC);
    let mut word = [0u8; 4];
    for v in [rows as u32, dim as u32, 0] {
        LittleEndian::write_u32(&mut word, v);
        bytes.extend_from_slice(&word);
    }
    for &v in data {
        LittleEndian::write_f32(&mut word, v as f32);
        bytes.extend_from_slice(&word);
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    chart: usize,
    z: Vec<f64>,
    decoded: Vec<f64>,
    src: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    a: usize,
    b: usize,
    w: f64,
    kind: EdgeKind,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    atlas: String,
    dims: AtlasDims,
    config: BuildConfig,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

pub fn graph_to_json(graph: &LatentGraph) -> String {
    let file = GraphFile {
        atlas: graph.fingerprint().spec.clone(),
        dims: graph.fingerprint().dims,
        config: graph.config().clone(),
        nodes: graph
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                chart: n.coord.chart + 1,
                z: n.coord.z.clone(),
                decoded: n.decoded.0.clone(),
                src: n.source_index,
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeRecord { a: e.a, b: e.b, w: e.weight, kind: e.kind })
            .collect(),
    };
    serde_json::to_string(&file).expect("graph serialization cannot fail")
}

pub fn graph_from_json(text: &str) -> Result<LatentGraph> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: GraphFile = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::format(format!("{}: {}", e.path(), e.inner())))?;
    let nodes = file
        .nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let chart = n
                .chart
                .checked_sub(1)
                .ok_or_else(|| Error::format(format!("nodes[{i}].chart: charts are numbered from 1")))?;
            Ok(GraphNode {
                id: n.id,
                coord: LatentCoord::new(chart, n.z),
                decoded: AmbientPoint(n.decoded),
                source_index: n.src,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let edges = file
        .edges
        .into_iter()
        .map(|e| GraphEdge { a: e.a, b: e.b, weight: e.w, kind: e.kind })
        .collect();
    file.config
        .validate()
        .map_err(|e| Error::format(format!("config: {e}")))?;
    let fingerprint = Fingerprint { spec: file.atlas, dims: file.dims };
    LatentGraph::from_parts(nodes, edges, file.config, fingerprint)
}

pub fn save_graph(graph: &LatentGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, graph_to_json(graph)).map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<LatentGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    graph_from_json(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathNodeRecord {
    pub chart: usize,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub len: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub chart: usize,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
}

/// On-disk form of an interpolation; charts numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub total_length: f64,
    pub nodes: Vec<PathNodeRecord>,
    pub segments: Vec<SegmentRecord>,
    pub samples: Vec<SampleRecord>,
}

impl PathFile {
    pub fn new(path: &GeodesicPath, samples: &[PathSample]) -> Self {
        PathFile {
            total_length: path.total_length,
            nodes: path
                .nodes
                .iter()
                .map(|n| PathNodeRecord { chart: n.chart + 1, z: n.z.clone() })
                .collect(),
            segments: path
                .segment_lengths
                .iter()
                .zip(&path.segment_kinds)
                .map(|(&len, &kind)| SegmentRecord { len, kind })
                .collect(),
            samples: samples
                .iter()
                .map(|s| SampleRecord {
                    chart: s.coord.chart + 1,
                    z: s.coord.z.clone(),
                    x: s.ambient.0.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::format(format!("{}: {}: {}", path.display(), e.path(), e.inner())))
    }
}

/// Binary PGM (P5, maxval 255) bytes for a `width x height` frame.
pub fn encode_pgm(x: &AmbientPoint, width: usize, height: usize) -> Result<Vec<u8>> {
    if width * height != x.dim() {
        return Err(Error::usage(format!(
            "frame {width}x{height} needs {} values, point has {}",
            width * height,
            x.dim()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(
        x.as_slice()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8),
    );
    Ok(out)
}

pub fn write_pgm(x: &AmbientPoint, width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(x, width, height)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
