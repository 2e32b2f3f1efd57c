//! Emission and loading of deployable design bundles.
//!
//! A bundle is everything the runtime loader needs: the chosen hardware
//! option, the stage topology, the fixed-point format of every stage, and the
//! quantized parameters. On disk it is a text manifest (`manifest.txt`) plus
//! one binary blob file per parameter tensor; both are deterministic
//! functions of the bundle, so re-emitting produces identical bytes.
//!
//! Blob layout: magic `PFWB`, format version, stage index, four dimensions,
//! the fixed-point scale, payload length, then the int8 payload. All fields
//! little-endian. The loader verifies every field and the payload length
//! before accepting a blob.

use crate::cost::HardwareOption;
use crate::ir::{BufferKind, ConvAttrs, LayerDescriptor, LayerKind, PipelineStage, TensorShape, WeightData, WeightTensor};
use crate::quant::{self, QuantSpec, StageQuant};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const BLOB_MAGIC: [u8; 4] = *b"PFWB";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("failed writing {path}: {source}")]
    SinkFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: format version {found}, this loader reads {FORMAT_VERSION}")]
    VersionMismatch { file: String, found: u32 },
    #[error("{file}: corrupt blob: {detail}")]
    CorruptBlob { file: String, detail: String },
    #[error("manifest line {line}: {detail}")]
    BadManifest { line: usize, detail: String },
    #[error("stage {stage}: weights carry shape information only; nothing to emit")]
    UnmaterializedWeights { stage: usize },
}

pub type Result<T> = std::result::Result<T, EmitError>;

fn sink_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::SinkFailure { path: path.display().to_string(), source }
}

/// What a parameter blob feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlobRole {
    Weights,
    Bias,
}

impl BlobRole {
    fn token(self) -> &'static str {
        match self {
            BlobRole::Weights => "weights",
            BlobRole::Bias => "bias",
        }
    }
}

/// One quantized parameter tensor, addressed by stage and role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightBlob {
    pub stage: u32,
    pub role: BlobRole,
    /// Always four entries; unused trailing dimensions are 1.
    pub dims: [u32; 4],
    pub m: i32,
    pub values: Vec<i8>,
}

impl WeightBlob {
    pub fn file_name(&self) -> String {
        format!("stage{}_{}.bin", self.stage, self.role.token())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + self.values.len());
        out.extend_from_slice(&BLOB_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.stage.to_le_bytes());
        for d in self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        out.extend(self.values.iter().map(|&v| v as u8));
        out
    }

    pub fn from_bytes(file: &str, role: BlobRole, bytes: &[u8]) -> Result<WeightBlob> {
        let corrupt = |detail: String| EmitError::CorruptBlob { file: file.into(), detail };
        if bytes.len() < 40 {
            return Err(corrupt(format!("{} bytes is shorter than the 40-byte header", bytes.len())));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        if bytes[..4] != BLOB_MAGIC {
            return Err(corrupt(format!("bad magic {:02x?}", &bytes[..4])));
        }
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(EmitError::VersionMismatch { file: file.into(), found: version });
        }
        let stage = word(8);
        let dims = [word(12), word(16), word(20), word(24)];
        let m = i32::from_le_bytes(bytes[28..32].try_into().unwrap());
        let payload_len = u64::from_le_bytes(bytes[32..40].try_into().unwrap());
        let element_count = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(u64::from(d)));
        if element_count != Some(payload_len) {
            return Err(corrupt(format!("dims {dims:?} disagree with payload length {payload_len}")));
        }
        let payload = &bytes[40..];
        if payload.len() as u64 != payload_len {
            return Err(corrupt(format!("payload is {} bytes, header promises {payload_len}", payload.len())));
        }
        Ok(WeightBlob { stage, role, dims, m, values: payload.iter().map(|&b| b as i8).collect() })
    }
}

/// The structural part of one stage, without parameter payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSnapshot {
    pub kind: LayerKind,
    pub attrs: Option<ConvAttrs>,
    pub in_shape: TensorShape,
    pub out_shape: TensorShape,
    pub relu: bool,
    pub softmax: bool,
}

impl LayerSnapshot {
    fn of(layer: &LayerDescriptor) -> LayerSnapshot {
        LayerSnapshot {
            kind: layer.kind,
            attrs: layer.attrs,
            in_shape: layer.in_shape,
            out_shape: layer.out_shape,
            relu: layer.has_relu,
            softmax: layer.has_softmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageConfig {
    pub index: usize,
    pub buffer_kind: BufferKind,
    pub compute: Option<LayerSnapshot>,
    pub pool: Option<LayerSnapshot>,
}

/// A complete deployable design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBundle {
    /// Hex SHA-256 of the source model bytes, tying the bundle to its model.
    pub fingerprint: String,
    pub option: HardwareOption,
    pub stages: Vec<StageConfig>,
    /// Fixed-point formats, one record per stage.
    pub quant: Vec<StageQuant>,
    pub blobs: Vec<WeightBlob>,
}

pub fn model_fingerprint(model_bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(model_bytes))
}

fn quantized_blob(stage: usize, role: BlobRole, tensor: &WeightTensor, m: i32) -> Result<WeightBlob> {
    let values = match &tensor.data {
        WeightData::F32(v) => quant::quantize_slice(v, m).0,
        WeightData::I8(v) => v.as_ref().clone(),
        WeightData::ShapeOnly => return Err(EmitError::UnmaterializedWeights { stage }),
    };
    let mut dims = [1u32; 4];
    for (slot, d) in dims.iter_mut().zip(&tensor.dims) {
        *slot = *d as u32;
    }
    Ok(WeightBlob { stage: stage as u32, role, dims, m, values })
}

/// Quantizes every parameter tensor and snapshots the topology into a bundle.
pub fn assemble(
    model_bytes: &[u8],
    stages: &[PipelineStage],
    option: HardwareOption,
    spec: &QuantSpec,
) -> Result<DesignBundle> {
    let mut configs = Vec::with_capacity(stages.len());
    let mut quant_records = Vec::with_capacity(stages.len());
    let mut blobs = Vec::new();
    for (k, stage) in stages.iter().enumerate() {
        let q = spec.for_stage(k);
        configs.push(StageConfig {
            index: k,
            buffer_kind: stage.buffer_kind,
            compute: stage.compute().map(LayerSnapshot::of),
            pool: stage.pool.as_ref().map(LayerSnapshot::of),
        });
        if let Some(layer) = stage.compute() {
            if let Some(w) = &layer.weights {
                blobs.push(quantized_blob(k, BlobRole::Weights, w, q.m_weights)?);
            }
            if let Some(b) = &layer.bias {
                blobs.push(quantized_blob(k, BlobRole::Bias, b, q.m_bias)?);
            }
        }
        quant_records.push(q);
    }
    Ok(DesignBundle {
        fingerprint: model_fingerprint(model_bytes),
        option,
        stages: configs,
        quant: quant_records,
        blobs,
    })
}

fn attrs_str(a: &ConvAttrs) -> String {
    format!(
        "ks={}x{} st={}x{} pad={}x{} dil={}x{}",
        a.kernel.0, a.kernel.1, a.stride.0, a.stride.1, a.pad.0, a.pad.1, a.dilation.0, a.dilation.1
    )
}

fn layer_line(tag: &str, s: &LayerSnapshot) -> String {
    let attrs = s.attrs.as_ref().map(|a| attrs_str(a)).unwrap_or_else(|| attrs_str(&ConvAttrs {
        kernel: (1, 1),
        stride: (1, 1),
        pad: (0, 0),
        dilation: (1, 1),
    }));
    format!(
        "{tag} {:?} {attrs} in={} out={} relu={} softmax={}",
        s.kind,
        s.in_shape,
        s.out_shape,
        u8::from(s.relu),
        u8::from(s.softmax)
    )
}

impl DesignBundle {
    /// The manifest text, a pure function of the bundle.
    pub fn manifest_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "laneconfig {FORMAT_VERSION}");
        let _ = writeln!(out, "fingerprint {}", self.fingerprint);
        let _ = writeln!(out, "option {} {}", self.option.n_i, self.option.n_l);
        let _ = writeln!(out, "stages {}", self.stages.len());
        for (config, q) in self.stages.iter().zip(&self.quant) {
            let kind = match config.buffer_kind {
                BufferKind::Conv => "conv",
                BufferKind::Fc => "fc",
            };
            let _ = writeln!(out, "stage {} {kind}", config.index);
            if let Some(c) = &config.compute {
                let _ = writeln!(out, "  {}", layer_line("compute", c));
            }
            if let Some(p) = &config.pool {
                let _ = writeln!(out, "  {}", layer_line("pool", p));
            }
            let _ = writeln!(out, "  quant mw={} mb={} min={} mout={}", q.m_weights, q.m_bias, q.m_in, q.m_out);
            for blob in self.blobs.iter().filter(|b| b.stage as usize == config.index) {
                let _ = writeln!(out, "  blob {} {}", blob.role.token(), blob.file_name());
            }
        }
        out
    }

    /// Writes the manifest and every blob into `dir`, returning the paths.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(sink_err(dir))?;
        let mut written = Vec::new();
        let manifest_path = dir.join(MANIFEST_NAME);
        std::fs::write(&manifest_path, self.manifest_string()).map_err(sink_err(&manifest_path))?;
        written.push(manifest_path);
        for blob in &self.blobs {
            let path = dir.join(blob.file_name());
            std::fs::write(&path, blob.to_bytes()).map_err(sink_err(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Reads a bundle back, verifying versions, shapes and payload lengths.
    pub fn load(dir: &Path) -> Result<DesignBundle> {
        let manifest_path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&manifest_path).map_err(sink_err(&manifest_path))?;
        let mut fingerprint = None;
        let mut option = None;
        let mut declared_stages = None;
        let mut stages: Vec<StageConfig> = Vec::new();
        let mut quant: Vec<StageQuant> = Vec::new();
        let mut blob_files: Vec<(usize, BlobRole, String)> = Vec::new();
        let mut pending_quant: BTreeMap<usize, StageQuant> = BTreeMap::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let bad = |detail: String| EmitError::BadManifest { line, detail };
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            match tokens.as_slice() {
                [] => {}
                ["laneconfig", v] => {
                    let found: u32 = v.parse().map_err(|_| bad(format!("bad version {v:?}")))?;
                    if found != FORMAT_VERSION {
                        return Err(EmitError::VersionMismatch { file: MANIFEST_NAME.into(), found });
                    }
                }
                ["fingerprint", f] => fingerprint = Some((*f).to_string()),
                ["option", ni, nl] => {
                    let ni = ni.parse().map_err(|_| bad(format!("bad vector width {ni:?}")))?;
                    let nl = nl.parse().map_err(|_| bad(format!("bad lane count {nl:?}")))?;
                    option = Some(HardwareOption::new(ni, nl));
                }
                ["stages", n] => declared_stages = Some(n.parse::<usize>().map_err(|_| bad(format!("bad stage count {n:?}")))?),
                ["stage", k, kind] => {
                    let index: usize = k.parse().map_err(|_| bad(format!("bad stage index {k:?}")))?;
                    if index != stages.len() {
                        return Err(bad(format!("stage {index} out of order (expected {})", stages.len())));
                    }
                    let buffer_kind = match *kind {
                        "conv" => BufferKind::Conv,
                        "fc" => BufferKind::Fc,
                        other => return Err(bad(format!("unknown buffer kind {other:?}"))),
                    };
                    stages.push(StageConfig { index, buffer_kind, compute: None, pool: None });
                }
                ["compute", rest @ ..] | ["pool", rest @ ..] => {
                    let stage = stages.last_mut().ok_or_else(|| bad("layer line before any stage".into()))?;
                    let snapshot = parse_layer_line(rest).map_err(|d| EmitError::BadManifest { line, detail: d })?;
                    if tokens[0] == "compute" {
                        stage.compute = Some(snapshot);
                    } else {
                        stage.pool = Some(snapshot);
                    }
                }
                ["quant", fields @ ..] => {
                    let stage = stages.last().ok_or_else(|| bad("quant line before any stage".into()))?;
                    let mut q = StageQuant::uniform(0);
                    for field in fields {
                        let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("bad field {field:?}")))?;
                        let value: i32 = value.parse().map_err(|_| bad(format!("bad value in {field:?}")))?;
                        match key {
                            "mw" => q.m_weights = value,
                            "mb" => q.m_bias = value,
                            "min" => q.m_in = value,
                            "mout" => q.m_out = value,
                            other => return Err(bad(format!("unknown quant field {other:?}"))),
                        }
                    }
                    pending_quant.insert(stage.index, q);
                }
                ["blob", role, file] => {
                    let stage = stages.last().ok_or_else(|| bad("blob line before any stage".into()))?;
                    let role = match *role {
                        "weights" => BlobRole::Weights,
                        "bias" => BlobRole::Bias,
                        other => return Err(bad(format!("unknown blob role {other:?}"))),
                    };
                    blob_files.push((stage.index, role, (*file).to_string()));
                }
                _ => return Err(bad(format!("unrecognized line {raw:?}"))),
            }
        }

        let top_error = |detail: &str| EmitError::BadManifest { line: 0, detail: detail.into() };
        let fingerprint = fingerprint.ok_or_else(|| top_error("missing fingerprint"))?;
        let option = option.ok_or_else(|| top_error("missing hardware option"))?;
        if declared_stages != Some(stages.len()) {
            return Err(top_error(&format!(
                "manifest declares {declared_stages:?} stages but lists {}",
                stages.len()
            )));
        }
        for config in &stages {
            let q = pending_quant
                .remove(&config.index)
                .ok_or_else(|| top_error(&format!("stage {} has no quant record", config.index)))?;
            quant.push(q);
        }

        let mut blobs = Vec::new();
        for (stage, role, file) in blob_files {
            let path = dir.join(&file);
            let bytes = std::fs::read(&path).map_err(sink_err(&path))?;
            let blob = WeightBlob::from_bytes(&file, role, &bytes)?;
            if blob.stage as usize != stage {
                return Err(EmitError::CorruptBlob {
                    file,
                    detail: format!("blob says stage {}, manifest says {stage}", blob.stage),
                });
            }
            let expected_m = match role {
                BlobRole::Weights => quant[stage].m_weights,
                BlobRole::Bias => quant[stage].m_bias,
            };
            if blob.m != expected_m {
                return Err(EmitError::CorruptBlob {
                    file,
                    detail: format!("blob scale m={}, manifest says {expected_m}", blob.m),
                });
            }
            blobs.push(blob);
        }
        Ok(DesignBundle { fingerprint, option, stages, quant, blobs })
    }

    fn find_blob(&self, stage: usize, role: BlobRole) -> Option<&WeightBlob> {
        self.blobs.iter().find(|b| b.stage as usize == stage && b.role == role)
    }

    /// Rebuilds executable stages, with parameters as int8 payloads.
    pub fn to_stages(&self) -> Vec<PipelineStage> {
        self.stages
            .iter()
            .map(|config| {
                let k = config.index;
                let materialize = |snapshot: &LayerSnapshot, name: String, weights, bias| LayerDescriptor {
                    index: k,
                    kind: snapshot.kind,
                    name,
                    attrs: snapshot.attrs,
                    in_shape: snapshot.in_shape,
                    out_shape: snapshot.out_shape,
                    weights,
                    bias,
                    has_relu: snapshot.relu,
                    has_softmax: snapshot.softmax,
                    input_tensor: format!("t{k}"),
                    output_tensor: format!("t{}", k + 1),
                };
                let tensor = |blob: &WeightBlob| WeightTensor {
                    dims: blob.dims.iter().map(|&d| d as usize).collect(),
                    data: WeightData::I8(Arc::new(blob.values.clone())),
                };
                let conv = config.compute.as_ref().map(|c| {
                    materialize(
                        c,
                        format!("stage{k}_compute"),
                        self.find_blob(k, BlobRole::Weights).map(tensor),
                        self.find_blob(k, BlobRole::Bias).map(tensor),
                    )
                });
                let pool = config.pool.as_ref().map(|p| materialize(p, format!("stage{k}_pool"), None, None));
                PipelineStage { conv, pool, buffer_kind: config.buffer_kind }
            })
            .collect()
    }

    /// The bundle's fixed-point formats as a per-stage spec.
    pub fn quant_spec(&self) -> QuantSpec {
        let records = self.quant.iter().enumerate().map(|(k, q)| (k, *q)).collect();
        QuantSpec::with_records(records, self.quant.first().map_or(4, |q| q.m_in))
    }
}

fn parse_pair(token: &str, key: &str) -> std::result::Result<(usize, usize), String> {
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| format!("expected {key}=AxB, got {token:?}"))?;
    let (a, b) = value.split_once('x').ok_or_else(|| format!("bad pair {value:?}"))?;
    Ok((
        a.parse().map_err(|_| format!("bad number {a:?}"))?,
        b.parse().map_err(|_| format!("bad number {b:?}"))?,
    ))
}

fn parse_shape(token: &str, key: &str) -> std::result::Result<TensorShape, String> {
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| format!("expected {key}=CxHxW, got {token:?}"))?;
    let parts: Vec<&str> = value.split('x').collect();
    let [c, h, w] = parts.as_slice() else {
        return Err(format!("bad shape {value:?}"));
    };
    Ok(TensorShape::new(
        c.parse().map_err(|_| format!("bad number {c:?}"))?,
        h.parse().map_err(|_| format!("bad number {h:?}"))?,
        w.parse().map_err(|_| format!("bad number {w:?}"))?,
    ))
}

fn parse_flag(token: &str, key: &str) -> std::result::Result<bool, String> {
    match token.strip_prefix(key).and_then(|t| t.strip_prefix('=')) {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        _ => Err(format!("expected {key}=0|1, got {token:?}")),
    }
}

fn parse_layer_line(tokens: &[&str]) -> std::result::Result<LayerSnapshot, String> {
    let [kind, ks, st, pad, dil, in_s, out_s, relu, softmax] = tokens else {
        return Err(format!("expected 9 layer fields, got {}", tokens.len()));
    };
    let kind = match *kind {
        "Conv" => LayerKind::Conv,
        "MaxPool" => LayerKind::MaxPool,
        "Gemm" => LayerKind::Gemm,
        other => return Err(format!("unknown layer kind {other:?}")),
    };
    let attrs = ConvAttrs {
        kernel: parse_pair(ks, "ks")?,
        stride: parse_pair(st, "st")?,
        pad: parse_pair(pad, "pad")?,
        dilation: parse_pair(dil, "dil")?,
    };
    Ok(LayerSnapshot {
        kind,
        attrs: (kind != LayerKind::Gemm).then_some(attrs),
        in_shape: parse_shape(in_s, "in")?,
        out_shape: parse_shape(out_s, "out")?,
        relu: parse_flag(relu, "relu")?,
        softmax: parse_flag(softmax, "softmax")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::QuantizedTensor;
    use crate::sim;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn demo_stages() -> Vec<PipelineStage> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let in_shape = TensorShape::new(2, 6, 6);
        let attrs = ConvAttrs { kernel: (3, 3), stride: (1, 1), pad: (1, 1), dilation: (1, 1) };
        let conv_out = crate::ir::infer_conv_shape(in_shape, &attrs, 4).unwrap();
        let conv = LayerDescriptor {
            index: 0,
            kind: LayerKind::Conv,
            name: "c0".into(),
            attrs: Some(attrs),
            in_shape,
            out_shape: conv_out,
            weights: Some(WeightTensor::from_f32(
                &[4, 2, 3, 3],
                (0..4 * 2 * 3 * 3).map(|_| rng.gen_range(-0.4..0.4)).collect(),
            )),
            bias: Some(WeightTensor::from_f32(&[4], vec![0.1, -0.1, 0.2, 0.0])),
            has_relu: true,
            has_softmax: false,
            input_tensor: "x".into(),
            output_tensor: "c0_out".into(),
        };
        let pool_attrs = ConvAttrs { kernel: (2, 2), stride: (2, 2), pad: (0, 0), dilation: (1, 1) };
        let pool_out = crate::ir::infer_conv_shape(conv_out, &pool_attrs, conv_out.c).unwrap();
        let pool = LayerDescriptor {
            index: 1,
            kind: LayerKind::MaxPool,
            name: "p0".into(),
            attrs: Some(pool_attrs),
            in_shape: conv_out,
            out_shape: pool_out,
            weights: None,
            bias: None,
            has_relu: false,
            has_softmax: false,
            input_tensor: "c0_out".into(),
            output_tensor: "p0_out".into(),
        };
        let fc = LayerDescriptor {
            index: 2,
            kind: LayerKind::Gemm,
            name: "fc".into(),
            attrs: None,
            in_shape: TensorShape::new(pool_out.elements(), 1, 1),
            out_shape: TensorShape::new(5, 1, 1),
            weights: Some(WeightTensor::from_f32(
                &[5, pool_out.elements()],
                (0..5 * pool_out.elements()).map(|_| rng.gen_range(-0.3..0.3)).collect(),
            )),
            bias: None,
            has_relu: false,
            has_softmax: true,
            input_tensor: "p0_out".into(),
            output_tensor: "y".into(),
        };
        vec![
            PipelineStage { conv: Some(conv), pool: Some(pool), buffer_kind: BufferKind::Conv },
            PipelineStage { conv: Some(fc), pool: None, buffer_kind: BufferKind::Fc },
        ]
    }

    #[test]
    fn round_trip_preserves_everything() {
        let stages = demo_stages();
        let spec = QuantSpec::uniform(4);
        let bundle = assemble(b"model-bytes", &stages, HardwareOption::new(4, 2), &spec).unwrap();
        assert_eq!(bundle.blobs.len(), 3);
        assert_eq!(bundle.blobs[1].dims, [4, 1, 1, 1]);

        let dir = tempfile::tempdir().unwrap();
        let written = bundle.emit(dir.path()).unwrap();
        assert_eq!(written.len(), 4);
        let loaded = DesignBundle::load(dir.path()).unwrap();
        assert_eq!(loaded, bundle);
    }

    #[test]
    fn loaded_bundle_executes_identically() {
        let stages = demo_stages();
        let spec = QuantSpec::uniform(4);
        let opt = HardwareOption::new(2, 2);
        let bundle = assemble(b"m", &stages, opt, &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.emit(dir.path()).unwrap();
        let loaded = DesignBundle::load(dir.path()).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<i8> = (0..2 * 6 * 6).map(|_| rng.gen_range(-64..=64i32) as i8).collect();
        let input = QuantizedTensor::new(vec![2, 6, 6], values, 4);
        let (want, _) = sim::run_network(&stages, &input, opt, &spec).unwrap();
        let (got, _) = sim::run_network(&loaded.to_stages(), &input, opt, &loaded.quant_spec()).unwrap();
        assert_eq!(got.values, want.values);
    }

    #[test]
    fn emission_is_deterministic() {
        let stages = demo_stages();
        let bundle = assemble(b"abc", &stages, HardwareOption::new(8, 8), &QuantSpec::uniform(5)).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        bundle.emit(d1.path()).unwrap();
        bundle.emit(d2.path()).unwrap();
        for entry in std::fs::read_dir(d1.path()).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(d1.path().join(&name)).unwrap();
            let b = std::fs::read(d2.path().join(&name)).unwrap();
            assert_eq!(a, b, "{name:?} differs between emissions");
        }
    }

    #[test]
    fn fingerprint_tracks_model_bytes() {
        let stages = demo_stages();
        let spec = QuantSpec::uniform(4);
        let a = assemble(b"one", &stages, HardwareOption::new(1, 1), &spec).unwrap();
        let b = assemble(b"two", &stages, HardwareOption::new(1, 1), &spec).unwrap();
        assert_ne!(a.fingerprint, b.fingerprint);
        assert_eq!(a.fingerprint.len(), 64);
    }

    #[test]
    fn version_bump_is_rejected() {
        let bundle = assemble(b"m", &demo_stages(), HardwareOption::new(1, 1), &QuantSpec::uniform(4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.emit(dir.path()).unwrap();
        let blob_path = dir.path().join(bundle.blobs[0].file_name());
        let mut bytes = std::fs::read(&blob_path).unwrap();
        bytes[4] = 9;
        std::fs::write(&blob_path, bytes).unwrap();
        assert!(matches!(DesignBundle::load(dir.path()), Err(EmitError::VersionMismatch { found: 9, .. })));
    }

    #[test]
    fn truncated_and_mangled_blobs_are_rejected() {
        let bundle = assemble(b"m", &demo_stages(), HardwareOption::new(1, 1), &QuantSpec::uniform(4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.emit(dir.path()).unwrap();
        let blob_path = dir.path().join(bundle.blobs[0].file_name());
        let original = std::fs::read(&blob_path).unwrap();

        std::fs::write(&blob_path, &original[..original.len() - 3]).unwrap();
        assert!(matches!(DesignBundle::load(dir.path()), Err(EmitError::CorruptBlob { .. })));

        let mut bad_magic = original.clone();
        bad_magic[0] = b'X';
        std::fs::write(&blob_path, bad_magic).unwrap();
        assert!(matches!(DesignBundle::load(dir.path()), Err(EmitError::CorruptBlob { .. })));

        let mut bad_stage = original.clone();
        bad_stage[8] = 7;
        std::fs::write(&blob_path, bad_stage).unwrap();
        assert!(matches!(DesignBundle::load(dir.path()), Err(EmitError::CorruptBlob { .. })));

        std::fs::remove_file(&blob_path).unwrap();
        assert!(matches!(DesignBundle::load(dir.path()), Err(EmitError::SinkFailure { .. })));
    }

    #[test]
    fn manifest_tampering_is_rejected() {
        let bundle = assemble(b"m", &demo_stages(), HardwareOption::new(1, 1), &QuantSpec::uniform(4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.emit(dir.path()).unwrap();
        let manifest_path = dir.path().join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&manifest_path).unwrap();

        std::fs::write(&manifest_path, text.replace("stages 2", "stages 3")).unwrap();
        assert!(matches!(DesignBundle::load(dir.path()), Err(EmitError::BadManifest { .. })));

        std::fs::write(&manifest_path, text.replace("laneconfig 1", "laneconfig 2")).unwrap();
        assert!(matches!(
            DesignBundle::load(dir.path()),
            Err(EmitError::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn shape_only_weights_cannot_be_emitted() {
        let mut stages = demo_stages();
        stages[0].conv.as_mut().unwrap().weights = Some(WeightTensor::shape_only(&[4, 2, 3, 3]));
        let err = assemble(b"m", &stages, HardwareOption::new(1, 1), &QuantSpec::uniform(4)).unwrap_err();
        assert!(matches!(err, EmitError::UnmaterializedWeights { stage: 0 }));
    }

    #[test]
    fn manifest_first_line_is_the_format_banner() {
        let bundle = assemble(b"m", &demo_stages(), HardwareOption::new(4, 4), &QuantSpec::uniform(4)).unwrap();
        let manifest = bundle.manifest_string();
        assert!(manifest.starts_with("laneconfig 1\n"));
        assert!(manifest.contains("option 4 4"));
        assert!(manifest.contains("blob weights stage0_weights.bin"));
    }
}
