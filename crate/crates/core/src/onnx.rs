//! ONNX binary decoding.
//!
//! Implements the protobuf wire-format subset needed to read `.onnx` files
//! produced by stock exporters: varints, length-delimited fields, fixed32/64,
//! and unknown-field skipping. Only the fields backing nodes, initializers,
//! attributes and value infos are interpreted; everything else is skipped per
//! the protobuf skipping rules. An encoder for the same subset is provided so
//! graphs can be rebuilt into wire bytes (round-trip tests, fixtures).
//!
//! Wire layout interpreted (field numbers from the ONNX schema):
//! ModelProto: graph=7, opset_import=8. GraphProto: node=1, name=2,
//! initializer=5, input=11, output=12. NodeProto: input=1, output=2, name=3,
//! op_type=4, attribute=5. AttributeProto: name=1, f=2, i=3, s=4, floats=7,
//! ints=8, type=20. TensorProto: dims=1, data_type=2, float_data=4,
//! int32_data=5, int64_data=7, name=8, raw_data=9.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OnnxError {
    #[error("malformed wire data: {0}")]
    MalformedWire(String),
    #[error("tensor {name:?} has unsupported data type code {code}")]
    UnsupportedDtype { name: String, code: i64 },
    #[error("model contains no graph")]
    MissingGraph,
    #[error("attribute {key:?} on node {node:?} is not of the requested kind")]
    AttrKindMismatch { node: String, key: String },
}

pub type Result<T> = std::result::Result<T, OnnxError>;

/// Element types accepted for initializers and value infos.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    I8,
    I32,
}

impl Dtype {
    pub fn element_size(self) -> usize {
        match self {
            Dtype::F32 | Dtype::I32 => 4,
            Dtype::I8 => 1,
        }
    }

    fn from_code(code: i64, name: &str) -> Result<Dtype> {
        match code {
            1 => Ok(Dtype::F32),
            3 => Ok(Dtype::I8),
            6 => Ok(Dtype::I32),
            _ => Err(OnnxError::UnsupportedDtype { name: name.to_string(), code }),
        }
    }

    fn code(self) -> u64 {
        match self {
            Dtype::F32 => 1,
            Dtype::I8 => 3,
            Dtype::I32 => 6,
        }
    }
}

/// A decoded initializer: dims plus a little-endian payload.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub name: String,
    pub dims: Vec<i64>,
    pub dtype: Dtype,
    pub payload: Vec<u8>,
}

impl RawTensor {
    pub fn element_count(&self) -> usize {
        // Saturating: adversarial dim lists must not overflow. Payload
        // validation compares in wide arithmetic, so a saturated count can
        // never pass as consistent.
        self.dims
            .iter()
            .map(|&d| d.max(0) as u128)
            .product::<u128>()
            .min(usize::MAX as u128) as usize
    }

    pub fn f32_values(&self) -> Vec<f32> {
        self.payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    }

    fn check_payload(&self) -> Result<()> {
        let want = self.dims.iter().map(|&d| d.max(0) as u128).product::<u128>()
            * self.dtype.element_size() as u128;
        if self.payload.len() as u128 != want {
            return Err(OnnxError::MalformedWire(format!(
                "tensor {:?}: payload is {} bytes, dims {:?} require {}",
                self.name,
                self.payload.len(),
                self.dims,
                want
            )));
        }
        Ok(())
    }
}

/// Attribute values occurring in the supported operator set.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Int(i64),
    Ints(Vec<i64>),
    Float(f32),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawNode {
    pub op_type: String,
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub attributes: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawGraph {
    pub name: String,
    pub nodes: Vec<RawNode>,
    pub initializers: BTreeMap<String, RawTensor>,
    /// Graph inputs as (name, dims); dynamic dimensions decode as 0.
    pub graph_inputs: Vec<(String, Vec<i64>)>,
    pub graph_outputs: Vec<(String, Vec<i64>)>,
    /// Default-domain opset version declared by the model, if any.
    pub opset: Option<i64>,
    /// Non-fatal findings: orphan initializers, opset quirks.
    pub diagnostics: Vec<String>,
}

/// Returns the attribute as a scalar int, or `default` when absent.
pub fn attr_int(node: &RawNode, key: &str, default: i64) -> Result<i64> {
    match node.attributes.get(key) {
        None => Ok(default),
        Some(AttrValue::Int(v)) => Ok(*v),
        Some(_) => Err(OnnxError::AttrKindMismatch { node: node.name.clone(), key: key.to_string() }),
    }
}

/// Returns the attribute as an int list, or `default` when absent.
pub fn attr_ints<'a>(node: &'a RawNode, key: &str, default: &'a [i64]) -> Result<&'a [i64]> {
    match node.attributes.get(key) {
        None => Ok(default),
        Some(AttrValue::Ints(v)) => Ok(v),
        Some(_) => Err(OnnxError::AttrKindMismatch { node: node.name.clone(), key: key.to_string() }),
    }
}

/// Returns the attribute as a float, or `default` when absent.
pub fn attr_float(node: &RawNode, key: &str, default: f32) -> Result<f32> {
    match node.attributes.get(key) {
        None => Ok(default),
        Some(AttrValue::Float(v)) => Ok(*v),
        Some(_) => Err(OnnxError::AttrKindMismatch { node: node.name.clone(), key: key.to_string() }),
    }
}

const WIRE_VARINT: u32 = 0;
const WIRE_FIXED64: u32 = 1;
const WIRE_LEN: u32 = 2;
const WIRE_FIXED32: u32 = 5;

struct PbReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PbReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        PbReader { data, pos: 0 }
    }

    fn done(&self) -> bool {
        self.pos >= self.data.len()
    }

    fn read_varint(&mut self) -> Result<u64> {
        let mut value = 0u64;
        let mut shift = 0u32;
        loop {
            if shift > 63 {
                return Err(OnnxError::MalformedWire("varint longer than 10 bytes".into()));
            }
            let byte = *self
                .data
                .get(self.pos)
                .ok_or_else(|| OnnxError::MalformedWire("truncated varint".into()))?;
            self.pos += 1;
            value |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
            shift += 7;
        }
    }

    fn read_tag(&mut self) -> Result<(u64, u32)> {
        let tag = self.read_varint()?;
        Ok((tag >> 3, (tag & 7) as u32))
    }

    fn read_len_delimited(&mut self) -> Result<&'a [u8]> {
        let len = self.read_varint()? as usize;
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| OnnxError::MalformedWire("length-delimited field overruns buffer".into()))?;
        let slice = &self.data[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn read_fixed32(&mut self) -> Result<[u8; 4]> {
        if self.pos + 4 > self.data.len() {
            return Err(OnnxError::MalformedWire("truncated fixed32".into()));
        }
        let b = [self.data[self.pos], self.data[self.pos + 1], self.data[self.pos + 2], self.data[self.pos + 3]];
        self.pos += 4;
        Ok(b)
    }

    fn skip(&mut self, wire: u32) -> Result<()> {
        match wire {
            WIRE_VARINT => {
                self.read_varint()?;
            }
            WIRE_FIXED64 => {
                if self.pos + 8 > self.data.len() {
                    return Err(OnnxError::MalformedWire("truncated fixed64".into()));
                }
                self.pos += 8;
            }
            WIRE_LEN => {
                self.read_len_delimited()?;
            }
            WIRE_FIXED32 => {
                self.read_fixed32()?;
            }
            other => {
                return Err(OnnxError::MalformedWire(format!("unsupported wire type {other}")));
            }
        }
        Ok(())
    }

    fn read_string(&mut self) -> Result<String> {
        Ok(String::from_utf8_lossy(self.read_len_delimited()?).into_owned())
    }

    /// Decodes a repeated scalar varint field that may be packed.
    fn read_varints(&mut self, wire: u32, out: &mut Vec<i64>) -> Result<()> {
        if wire == WIRE_LEN {
            let slice = self.read_len_delimited()?;
            let mut inner = PbReader::new(slice);
            while !inner.done() {
                out.push(inner.read_varint()? as i64);
            }
        } else {
            out.push(self.read_varint()? as i64);
        }
        Ok(())
    }

    /// Decodes a repeated float field that may be packed.
    fn read_floats(&mut self, wire: u32, out: &mut Vec<f32>) -> Result<()> {
        if wire == WIRE_LEN {
            let slice = self.read_len_delimited()?;
            if slice.len() % 4 != 0 {
                return Err(OnnxError::MalformedWire("packed float field not a multiple of 4 bytes".into()));
            }
            for c in slice.chunks_exact(4) {
                out.push(f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
            }
        } else {
            out.push(f32::from_le_bytes(self.read_fixed32()?));
        }
        Ok(())
    }
}

/// Decodes a serialized ONNX model into its graph records.
///
/// Node order follows file order. Tensor payloads are normalized to
/// little-endian raw bytes whether the file used `raw_data` or the repeated
/// typed fields. Unknown fields anywhere in the message tree are skipped.
pub fn decode_model(bytes: &[u8]) -> Result<RawGraph> {
    let mut reader = PbReader::new(bytes);
    let mut graph: Option<RawGraph> = None;
    let mut opset: Option<i64> = None;
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (7, WIRE_LEN) => {
                graph = Some(decode_graph(reader.read_len_delimited()?)?);
            }
            (8, WIRE_LEN) => {
                if let Some(v) = decode_opset(reader.read_len_delimited()?)? {
                    opset = Some(v);
                }
            }
            (_, w) => reader.skip(w)?,
        }
    }
    let mut graph = graph.ok_or(OnnxError::MissingGraph)?;
    graph.opset = opset;
    annotate(&mut graph);
    Ok(graph)
}

/// Returns the default-domain opset version, if this entry declares one.
fn decode_opset(bytes: &[u8]) -> Result<Option<i64>> {
    let mut reader = PbReader::new(bytes);
    let mut domain = String::new();
    let mut version = None;
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (1, WIRE_LEN) => domain = reader.read_string()?,
            (2, WIRE_VARINT) => version = Some(reader.read_varint()? as i64),
            (_, w) => reader.skip(w)?,
        }
    }
    Ok(if domain.is_empty() || domain == "ai.onnx" { version } else { None })
}

fn decode_graph(bytes: &[u8]) -> Result<RawGraph> {
    let mut reader = PbReader::new(bytes);
    let mut graph = RawGraph::default();
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (1, WIRE_LEN) => graph.nodes.push(decode_node(reader.read_len_delimited()?)?),
            (2, WIRE_LEN) => graph.name = reader.read_string()?,
            (5, WIRE_LEN) => {
                let tensor = decode_tensor(reader.read_len_delimited()?)?;
                graph.initializers.insert(tensor.name.clone(), tensor);
            }
            (11, WIRE_LEN) => graph.graph_inputs.push(decode_value_info(reader.read_len_delimited()?)?),
            (12, WIRE_LEN) => graph.graph_outputs.push(decode_value_info(reader.read_len_delimited()?)?),
            (_, w) => reader.skip(w)?,
        }
    }
    Ok(graph)
}

fn decode_node(bytes: &[u8]) -> Result<RawNode> {
    let mut reader = PbReader::new(bytes);
    let mut node = RawNode {
        op_type: String::new(),
        name: String::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        attributes: BTreeMap::new(),
    };
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (1, WIRE_LEN) => node.inputs.push(reader.read_string()?),
            (2, WIRE_LEN) => node.outputs.push(reader.read_string()?),
            (3, WIRE_LEN) => node.name = reader.read_string()?,
            (4, WIRE_LEN) => node.op_type = reader.read_string()?,
            (5, WIRE_LEN) => {
                if let Some((key, value)) = decode_attribute(reader.read_len_delimited()?)? {
                    node.attributes.insert(key, value);
                }
            }
            (_, w) => reader.skip(w)?,
        }
    }
    if node.op_type.is_empty() {
        return Err(OnnxError::MalformedWire(format!("node {:?} has empty op_type", node.name)));
    }
    Ok(node)
}

/// Attribute type-enum codes used to disambiguate decoded values.
const ATTR_FLOAT: i64 = 1;
const ATTR_INT: i64 = 2;
const ATTR_STRING: i64 = 3;
const ATTR_INTS: i64 = 7;

/// Decodes one attribute; kinds outside the supported set come back as None
/// so that graph/tensor-valued attributes on unsupported nodes do not abort
/// the decode (the lowering pass rejects those nodes by op_type instead).
fn decode_attribute(bytes: &[u8]) -> Result<Option<(String, AttrValue)>> {
    let mut reader = PbReader::new(bytes);
    let mut name = String::new();
    let mut type_code = None;
    let mut int_value = None;
    let mut float_value = None;
    let mut str_value = None;
    let mut ints = Vec::new();
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (1, WIRE_LEN) => name = reader.read_string()?,
            (2, WIRE_FIXED32) => float_value = Some(f32::from_le_bytes(reader.read_fixed32()?)),
            (3, WIRE_VARINT) => int_value = Some(reader.read_varint()? as i64),
            (4, WIRE_LEN) => str_value = Some(reader.read_string()?),
            (8, w @ (WIRE_LEN | WIRE_VARINT)) => reader.read_varints(w, &mut ints)?,
            (20, WIRE_VARINT) => type_code = Some(reader.read_varint()? as i64),
            (_, w) => reader.skip(w)?,
        }
    }
    let value = match type_code {
        Some(ATTR_INT) => int_value.map(AttrValue::Int),
        Some(ATTR_INTS) => Some(AttrValue::Ints(ints)),
        Some(ATTR_FLOAT) => float_value.map(AttrValue::Float),
        Some(ATTR_STRING) => str_value.map(AttrValue::Str),
        Some(_) => None,
        // Old exporters may omit the type field; fall back on populated slots.
        None => int_value
            .map(AttrValue::Int)
            .or(float_value.map(AttrValue::Float))
            .or(str_value.map(AttrValue::Str))
            .or((!ints.is_empty()).then_some(AttrValue::Ints(ints))),
    };
    Ok(value.map(|v| (name, v)))
}

const DTYPE_INT64: i64 = 7;

fn decode_tensor(bytes: &[u8]) -> Result<RawTensor> {
    let mut reader = PbReader::new(bytes);
    let mut name = String::new();
    let mut dims = Vec::new();
    let mut dtype_code = 0i64;
    let mut raw: Option<Vec<u8>> = None;
    let mut floats = Vec::new();
    let mut varints = Vec::new();
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (1, w @ (WIRE_LEN | WIRE_VARINT)) => reader.read_varints(w, &mut dims)?,
            (2, WIRE_VARINT) => dtype_code = reader.read_varint()? as i64,
            (4, w @ (WIRE_LEN | WIRE_FIXED32)) => reader.read_floats(w, &mut floats)?,
            (5 | 7, w @ (WIRE_LEN | WIRE_VARINT)) => reader.read_varints(w, &mut varints)?,
            (8, WIRE_LEN) => name = reader.read_string()?,
            (9, WIRE_LEN) => raw = Some(reader.read_len_delimited()?.to_vec()),
            (_, w) => reader.skip(w)?,
        }
    }
    // int64 initializers (Reshape shape operands) are narrowed to int32;
    // values outside that range are genuinely unsupported.
    let dtype = if dtype_code == DTYPE_INT64 {
        if let Some(bytes) = &raw {
            if bytes.len() % 8 != 0 {
                return Err(OnnxError::MalformedWire(format!("tensor {name:?}: int64 raw_data not a multiple of 8")));
            }
            varints = bytes
                .chunks_exact(8)
                .map(|c| i64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
                .collect();
            raw = None;
        }
        if varints.iter().any(|&v| i32::try_from(v).is_err()) {
            return Err(OnnxError::UnsupportedDtype { name, code: DTYPE_INT64 });
        }
        Dtype::I32
    } else {
        Dtype::from_code(dtype_code, &name)?
    };
    let payload = match raw {
        Some(bytes) => bytes,
        None => match dtype {
            Dtype::F32 => floats.iter().flat_map(|f| f.to_le_bytes()).collect(),
            Dtype::I32 => varints.iter().flat_map(|&v| (v as i32).to_le_bytes()).collect(),
            Dtype::I8 => varints.iter().map(|&v| v as i8 as u8).collect(),
        },
    };
    let tensor = RawTensor { name, dims, dtype, payload };
    tensor.check_payload()?;
    Ok(tensor)
}

fn decode_value_info(bytes: &[u8]) -> Result<(String, Vec<i64>)> {
    let mut reader = PbReader::new(bytes);
    let mut name = String::new();
    let mut dims = Vec::new();
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        match (field, wire) {
            (1, WIRE_LEN) => name = reader.read_string()?,
            (2, WIRE_LEN) => dims = decode_type_dims(reader.read_len_delimited()?)?,
            (_, w) => reader.skip(w)?,
        }
    }
    Ok((name, dims))
}

fn decode_type_dims(bytes: &[u8]) -> Result<Vec<i64>> {
    // TypeProto → tensor_type(1) → shape(2) → dim(1) → dim_value(1)|dim_param(2)
    let mut reader = PbReader::new(bytes);
    let mut dims = Vec::new();
    while !reader.done() {
        let (field, wire) = reader.read_tag()?;
        if field == 1 && wire == WIRE_LEN {
            let mut tt = PbReader::new(reader.read_len_delimited()?);
            while !tt.done() {
                let (f2, w2) = tt.read_tag()?;
                if f2 == 2 && w2 == WIRE_LEN {
                    let mut shape = PbReader::new(tt.read_len_delimited()?);
                    while !shape.done() {
                        let (f3, w3) = shape.read_tag()?;
                        if f3 == 1 && w3 == WIRE_LEN {
                            let mut dim = PbReader::new(shape.read_len_delimited()?);
                            let mut value = 0i64;
                            while !dim.done() {
                                let (f4, w4) = dim.read_tag()?;
                                if f4 == 1 && w4 == WIRE_VARINT {
                                    value = dim.read_varint()? as i64;
                                } else {
                                    dim.skip(w4)?;
                                }
                            }
                            dims.push(value);
                        } else {
                            shape.skip(w3)?;
                        }
                    }
                } else {
                    tt.skip(w2)?;
                }
            }
        } else {
            reader.skip(wire)?;
        }
    }
    Ok(dims)
}

/// Post-decode diagnostics: orphan initializers and opset quirks.
fn annotate(graph: &mut RawGraph) {
    let mut referenced: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for node in &graph.nodes {
        for input in &node.inputs {
            referenced.insert(input.as_str());
        }
    }
    let orphans: Vec<String> = graph
        .initializers
        .keys()
        .filter(|name| !referenced.contains(name.as_str()))
        .cloned()
        .collect();
    for name in orphans {
        graph.diagnostics.push(format!("orphan initializer {name:?} is not referenced by any node"));
    }
    // Softmax default axis changed at opset 13 (1 → -1); flag models that
    // rely on the default so the caller can double-check intent.
    for node in &graph.nodes {
        if node.op_type == "Softmax" && !node.attributes.contains_key("axis") {
            let opset = graph.opset.map_or("unspecified".to_string(), |v| v.to_string());
            graph.diagnostics.push(format!(
                "node {:?}: Softmax without explicit axis; default differs across opsets (model opset {opset})",
                node.name
            ));
        }
    }
}

struct PbWriter {
    buf: Vec<u8>,
}

impl PbWriter {
    fn new() -> Self {
        PbWriter { buf: Vec::new() }
    }

    fn varint(&mut self, mut v: u64) {
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                self.buf.push(byte);
                return;
            }
            self.buf.push(byte | 0x80);
        }
    }

    fn tag(&mut self, field: u64, wire: u32) {
        self.varint(field << 3 | u64::from(wire));
    }

    fn varint_field(&mut self, field: u64, v: u64) {
        self.tag(field, WIRE_VARINT);
        self.varint(v);
    }

    fn bytes_field(&mut self, field: u64, bytes: &[u8]) {
        self.tag(field, WIRE_LEN);
        self.varint(bytes.len() as u64);
        self.buf.extend_from_slice(bytes);
    }

    fn string_field(&mut self, field: u64, s: &str) {
        self.bytes_field(field, s.as_bytes());
    }

    fn message_field(&mut self, field: u64, inner: PbWriter) {
        self.bytes_field(field, &inner.buf);
    }

    fn fixed32_field(&mut self, field: u64, bytes: [u8; 4]) {
        self.tag(field, WIRE_FIXED32);
        self.buf.extend_from_slice(&bytes);
    }
}

/// Serializes a graph back to ONNX wire bytes.
///
/// Decoding the result yields a graph structurally equal to the input
/// (modulo diagnostics, which are recomputed).
pub fn encode_model(graph: &RawGraph) -> Vec<u8> {
    let mut model = PbWriter::new();
    model.varint_field(1, 8); // ir_version
    model.string_field(2, "lanefit");
    model.message_field(7, encode_graph(graph));
    let mut opset = PbWriter::new();
    opset.string_field(1, "");
    opset.varint_field(2, graph.opset.unwrap_or(13) as u64);
    model.message_field(8, opset);
    model.buf
}

fn encode_graph(graph: &RawGraph) -> PbWriter {
    let mut g = PbWriter::new();
    for node in &graph.nodes {
        g.message_field(1, encode_node(node));
    }
    g.string_field(2, &graph.name);
    for tensor in graph.initializers.values() {
        g.message_field(5, encode_tensor(tensor));
    }
    for (name, dims) in &graph.graph_inputs {
        g.message_field(11, encode_value_info(name, dims));
    }
    for (name, dims) in &graph.graph_outputs {
        g.message_field(12, encode_value_info(name, dims));
    }
    g
}

fn encode_node(node: &RawNode) -> PbWriter {
    let mut n = PbWriter::new();
    for input in &node.inputs {
        n.string_field(1, input);
    }
    for output in &node.outputs {
        n.string_field(2, output);
    }
    n.string_field(3, &node.name);
    n.string_field(4, &node.op_type);
    for (key, value) in &node.attributes {
        let mut a = PbWriter::new();
        a.string_field(1, key);
        match value {
            AttrValue::Float(f) => {
                a.fixed32_field(2, f.to_le_bytes());
                a.varint_field(20, ATTR_FLOAT as u64);
            }
            AttrValue::Int(i) => {
                a.varint_field(3, *i as u64);
                a.varint_field(20, ATTR_INT as u64);
            }
            AttrValue::Str(s) => {
                a.string_field(4, s);
                a.varint_field(20, ATTR_STRING as u64);
            }
            AttrValue::Ints(values) => {
                let mut packed = PbWriter::new();
                for &v in values {
                    packed.varint(v as u64);
                }
                a.bytes_field(8, &packed.buf);
                a.varint_field(20, ATTR_INTS as u64);
            }
        }
        n.message_field(5, a);
    }
    n
}

fn encode_tensor(tensor: &RawTensor) -> PbWriter {
    let mut t = PbWriter::new();
    let mut dims = PbWriter::new();
    for &d in &tensor.dims {
        dims.varint(d as u64);
    }
    if !dims.buf.is_empty() {
        t.bytes_field(1, &dims.buf);
    }
    t.varint_field(2, tensor.dtype.code());
    t.string_field(8, &tensor.name);
    t.bytes_field(9, &tensor.payload);
    t
}

fn encode_value_info(name: &str, dims: &[i64]) -> PbWriter {
    let mut vi = PbWriter::new();
    vi.string_field(1, name);
    let mut shape = PbWriter::new();
    for &d in dims {
        let mut dim = PbWriter::new();
        dim.varint_field(1, d as u64);
        shape.message_field(1, dim);
    }
    let mut tensor_type = PbWriter::new();
    tensor_type.varint_field(1, Dtype::F32.code());
    tensor_type.message_field(2, shape);
    let mut ty = PbWriter::new();
    ty.message_field(1, tensor_type);
    vi.message_field(2, ty);
    vi
}

/// Convenience constructors for building graphs in code (fixtures, tests and
/// the model generator exposed to Python).
pub mod build {
    use super::*;

    pub fn tensor_f32(name: &str, dims: &[i64], values: &[f32]) -> RawTensor {
        assert_eq!(dims.iter().product::<i64>() as usize, values.len(), "dims/payload mismatch for {name}");
        RawTensor {
            name: name.to_string(),
            dims: dims.to_vec(),
            dtype: Dtype::F32,
            payload: values.iter().flat_map(|v| v.to_le_bytes()).collect(),
        }
    }

    /// A float tensor with an all-zero payload, for topology-only fixtures.
    pub fn tensor_f32_zero(name: &str, dims: &[i64]) -> RawTensor {
        let count = dims.iter().product::<i64>() as usize;
        RawTensor {
            name: name.to_string(),
            dims: dims.to_vec(),
            dtype: Dtype::F32,
            payload: vec![0u8; count * 4],
        }
    }

    pub fn node(op_type: &str, name: &str, inputs: &[&str], outputs: &[&str], attrs: &[(&str, AttrValue)]) -> RawNode {
        RawNode {
            op_type: op_type.to_string(),
            name: name.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            attributes: attrs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    pub fn ints(values: &[i64]) -> AttrValue {
        AttrValue::Ints(values.to_vec())
    }
}
