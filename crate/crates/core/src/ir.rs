//! Layer IR and pipeline-stage fusion.
//!
//! Lowers a decoded graph into an ordered list of [`LayerDescriptor`]s
//! (convolution, max-pooling, fully-connected) with inferred shapes, then
//! groups them into [`PipelineStage`]s matching the kernel architecture: a
//! convolution unit fused with an optional following pooling unit, or a
//! fully-connected stage that reuses the convolution data path. Relu and
//! Softmax nodes are absorbed into flags; Flatten/Reshape between the
//! convolutional and fully-connected parts are absorbed into the shape chain.

use crate::onnx::{attr_int, attr_ints, AttrValue, Dtype, RawGraph, RawNode, RawTensor};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IrError {
    #[error("node {node:?}: operator {op:?} is not supported")]
    UnsupportedOp { node: String, op: String },
    #[error("node {node:?} references {tensor:?}, which is not available at that point in the graph")]
    DanglingInput { node: String, tensor: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate output shape: {0}")]
    DegenerateShape(String),
    #[error(transparent)]
    Onnx(#[from] crate::onnx::OnnxError),
}

pub type Result<T> = std::result::Result<T, IrError>;

/// Feature-map shape in channel/height/width order. Fully-connected vectors
/// use (length, 1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl TensorShape {
    pub fn new(c: usize, h: usize, w: usize) -> Self {
        TensorShape { c, h, w }
    }

    pub fn elements(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn flattened(&self) -> TensorShape {
        TensorShape::new(self.elements(), 1, 1)
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.c, self.h, self.w)
    }
}

/// Spatial window attributes shared by convolution and pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvAttrs {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub pad: (usize, usize),
    pub dilation: (usize, usize),
}

impl ConvAttrs {
    pub fn unit(kernel: (usize, usize)) -> Self {
        ConvAttrs { kernel, stride: (1, 1), pad: (0, 0), dilation: (1, 1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    MaxPool,
    Gemm,
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerKind::Conv => write!(f, "Conv"),
            LayerKind::MaxPool => write!(f, "MaxPool"),
            LayerKind::Gemm => write!(f, "Gemm"),
        }
    }
}

/// Weight or bias payload behind a descriptor.
///
/// `ShapeOnly` handles carry dims without data; they support shape analysis,
/// legality and cost estimation, but not execution or emission.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightData {
    F32(Arc<Vec<f32>>),
    /// Pre-quantized payload; the scale exponent comes from the quant table.
    I8(Arc<Vec<i8>>),
    ShapeOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    pub dims: Vec<usize>,
    pub data: WeightData,
}

impl WeightTensor {
    pub fn shape_only(dims: &[usize]) -> Self {
        WeightTensor { dims: dims.to_vec(), data: WeightData::ShapeOnly }
    }

    pub fn from_f32(dims: &[usize], values: Vec<f32>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), values.len());
        WeightTensor { dims: dims.to_vec(), data: WeightData::F32(Arc::new(values)) }
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }
}

/// One lowered layer with resolved shapes and absorbed activation flags.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDescriptor {
    pub index: usize,
    pub kind: LayerKind,
    pub name: String,
    /// Window attributes; `None` for fully-connected layers.
    pub attrs: Option<ConvAttrs>,
    pub in_shape: TensorShape,
    pub out_shape: TensorShape,
    pub weights: Option<WeightTensor>,
    pub bias: Option<WeightTensor>,
    pub has_relu: bool,
    pub has_softmax: bool,
    /// Names of the tensors this layer consumes/produces, after absorbing
    /// activation nodes. Used for fusion adjacency and diagnostics.
    pub input_tensor: String,
    pub output_tensor: String,
}

impl LayerDescriptor {
    /// Length of one output dot product: c_in*kh*kw for convolution,
    /// flattened input length for fully-connected layers.
    pub fn dot_length(&self) -> usize {
        match self.kind {
            LayerKind::Conv => {
                let a = self.attrs.expect("conv has attrs");
                self.in_shape.c * a.kernel.0 * a.kernel.1
            }
            LayerKind::Gemm => self.in_shape.elements(),
            LayerKind::MaxPool => 0,
        }
    }
}

/// Computes the spatial output shape of a window operator.
///
/// For each spatial axis: out = floor((in + 2*pad - dilation*(kernel-1) - 1)
/// / stride) + 1. The channel count is the caller's `out_channels`
/// (pooling passes its input depth through).
pub fn infer_conv_shape(in_shape: TensorShape, attrs: &ConvAttrs, out_channels: usize) -> Result<TensorShape> {
    fn axis(name: &str, input: usize, k: usize, s: usize, p: usize, d: usize) -> Result<usize> {
        if k == 0 || s == 0 || d == 0 {
            return Err(IrError::DegenerateShape(format!(
                "{name}: kernel/stride/dilation must be positive (k={k}, s={s}, d={d})"
            )));
        }
        let span = (input + 2 * p) as i64 - (d * (k - 1) + 1) as i64;
        if span < 0 {
            return Err(IrError::DegenerateShape(format!(
                "{name}: window {k} (dilation {d}) does not fit input {input} with padding {p}"
            )));
        }
        Ok((span / s as i64) as usize + 1)
    }
    let h = axis("height", in_shape.h, attrs.kernel.0, attrs.stride.0, attrs.pad.0, attrs.dilation.0)?;
    let w = axis("width", in_shape.w, attrs.kernel.1, attrs.stride.1, attrs.pad.1, attrs.dilation.1)?;
    if out_channels == 0 {
        return Err(IrError::DegenerateShape("zero output channels".into()));
    }
    Ok(TensorShape::new(out_channels, h, w))
}

/// Buffer configuration a stage requests from the memory subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferKind {
    Conv,
    Fc,
}

impl std::fmt::Display for BufferKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BufferKind::Conv => write!(f, "conv"),
            BufferKind::Fc => write!(f, "fc"),
        }
    }
}

/// One pipeline stage: a compute layer fused with an optional pooling layer.
/// Fully-connected stages run on the convolution data path with the pooling
/// unit in pass-through.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStage {
    pub conv: Option<LayerDescriptor>,
    pub pool: Option<LayerDescriptor>,
    pub buffer_kind: BufferKind,
}

impl PipelineStage {
    pub fn in_shape(&self) -> TensorShape {
        self.conv.as_ref().or(self.pool.as_ref()).expect("stage has a layer").in_shape
    }

    pub fn out_shape(&self) -> TensorShape {
        self.pool.as_ref().or(self.conv.as_ref()).expect("stage has a layer").out_shape
    }

    /// The layer driving the multiply-accumulate data path, if any.
    pub fn compute(&self) -> Option<&LayerDescriptor> {
        self.conv.as_ref()
    }

    /// Feature buffer footprint: input plus output slab, in bytes (8-bit
    /// elements).
    pub fn buffer_bytes(&self) -> usize {
        self.in_shape().elements() + self.out_shape().elements()
    }
}

/// Groups lowered layers into pipeline stages.
///
/// A convolution immediately followed by the pooling layer that consumes its
/// output becomes one fused stage; a lone convolution or pooling layer gets a
/// stage with the other unit in pass-through; a fully-connected layer becomes
/// an FC-buffer stage. Every descriptor lands in exactly one stage.
pub fn fuse_stages(layers: Vec<LayerDescriptor>) -> Vec<PipelineStage> {
    let mut stages = Vec::new();
    let mut iter = layers.into_iter().peekable();
    while let Some(layer) = iter.next() {
        match layer.kind {
            LayerKind::Gemm => stages.push(PipelineStage { conv: Some(layer), pool: None, buffer_kind: BufferKind::Fc }),
            LayerKind::MaxPool => stages.push(PipelineStage { conv: None, pool: Some(layer), buffer_kind: BufferKind::Conv }),
            LayerKind::Conv => {
                let fuse = iter
                    .peek()
                    .map(|next| next.kind == LayerKind::MaxPool && next.input_tensor == layer.output_tensor)
                    .unwrap_or(false);
                let pool = if fuse { iter.next() } else { None };
                stages.push(PipelineStage { conv: Some(layer), pool, buffer_kind: BufferKind::Conv });
            }
        }
    }
    stages
}

/// Expands stages back into the descriptor list they were fused from.
pub fn flatten_stages(stages: &[PipelineStage]) -> Vec<&LayerDescriptor> {
    let mut layers = Vec::new();
    for stage in stages {
        if let Some(conv) = &stage.conv {
            layers.push(conv);
        }
        if let Some(pool) = &stage.pool {
            layers.push(pool);
        }
    }
    layers
}

fn weight_tensor(t: &RawTensor) -> Result<WeightTensor> {
    let dims: Vec<usize> = t.dims.iter().map(|&d| d.max(0) as usize).collect();
    let data = match t.dtype {
        Dtype::F32 => WeightData::F32(Arc::new(t.f32_values())),
        Dtype::I8 => WeightData::I8(Arc::new(t.payload.iter().map(|&b| b as i8).collect())),
        Dtype::I32 => {
            return Err(IrError::ShapeMismatch(format!(
                "initializer {:?}: int32 payloads are only accepted as shape operands",
                t.name
            )))
        }
    };
    Ok(WeightTensor { dims, data })
}

fn transpose_2d(t: &WeightTensor) -> WeightTensor {
    let (rows, cols) = (t.dims[0], t.dims[1]);
    let data = match &t.data {
        WeightData::F32(v) => {
            let mut out = vec![0f32; v.len()];
            for r in 0..rows {
                for c in 0..cols {
                    out[c * rows + r] = v[r * cols + c];
                }
            }
            WeightData::F32(Arc::new(out))
        }
        WeightData::I8(v) => {
            let mut out = vec![0i8; v.len()];
            for r in 0..rows {
                for c in 0..cols {
                    out[c * rows + r] = v[r * cols + c];
                }
            }
            WeightData::I8(Arc::new(out))
        }
        WeightData::ShapeOnly => WeightData::ShapeOnly,
    };
    WeightTensor { dims: vec![t.dims[1], t.dims[0]], data }
}

struct Lowering<'a> {
    graph: &'a RawGraph,
    layers: Vec<LayerDescriptor>,
    /// Tensors available so far: name → (shape, producing layer index if any).
    tensors: std::collections::HashMap<String, (TensorShape, Option<usize>)>,
    diagnostics: Vec<String>,
}

impl<'a> Lowering<'a> {
    fn resolve(&self, node: &RawNode, tensor: &str) -> Result<(TensorShape, Option<usize>)> {
        self.tensors
            .get(tensor)
            .copied()
            .ok_or_else(|| IrError::DanglingInput { node: node.name.clone(), tensor: tensor.to_string() })
    }

    fn initializer(&self, node: &RawNode, name: &str) -> Result<&'a RawTensor> {
        self.graph
            .initializers
            .get(name)
            .ok_or_else(|| IrError::DanglingInput { node: node.name.clone(), tensor: name.to_string() })
    }

    fn window_attrs(&self, node: &RawNode) -> Result<ConvAttrs> {
        let kernel = attr_ints(node, "kernel_shape", &[])?;
        if kernel.len() != 2 {
            return Err(IrError::ShapeMismatch(format!(
                "node {:?}: expected a 2-d kernel_shape, got {kernel:?}",
                node.name
            )));
        }
        let strides = attr_ints(node, "strides", &[1, 1])?;
        let dilations = attr_ints(node, "dilations", &[1, 1])?;
        let pads = attr_ints(node, "pads", &[0, 0, 0, 0])?;
        let pad = match pads {
            [ph, pw] => (*ph, *pw),
            [pt, pl, pb, pr] => {
                if pt != pb || pl != pr {
                    return Err(IrError::UnsupportedOp {
                        node: node.name.clone(),
                        op: format!("{} with asymmetric padding {pads:?}", node.op_type),
                    });
                }
                (*pt, *pl)
            }
            _ => {
                return Err(IrError::ShapeMismatch(format!("node {:?}: malformed pads {pads:?}", node.name)));
            }
        };
        if let Some(AttrValue::Str(mode)) = node.attributes.get("auto_pad") {
            if mode != "NOTSET" {
                return Err(IrError::UnsupportedOp {
                    node: node.name.clone(),
                    op: format!("{} with auto_pad {mode:?}", node.op_type),
                });
            }
        }
        let dim2 = |v: &[i64]| (v.first().copied().unwrap_or(1) as usize, v.get(1).copied().unwrap_or(1) as usize);
        Ok(ConvAttrs {
            kernel: (kernel[0] as usize, kernel[1] as usize),
            stride: dim2(strides),
            pad: (pad.0 as usize, pad.1 as usize),
            dilation: dim2(dilations),
        })
    }

    fn push_layer(&mut self, mut layer: LayerDescriptor) {
        layer.index = self.layers.len();
        self.tensors
            .insert(layer.output_tensor.clone(), (layer.out_shape, Some(layer.index)));
        self.layers.push(layer);
    }

    fn lower_conv(&mut self, node: &RawNode) -> Result<()> {
        if node.inputs.len() < 2 {
            return Err(IrError::ShapeMismatch(format!("node {:?}: Conv needs data and weights", node.name)));
        }
        let (in_shape, _) = self.resolve(node, &node.inputs[0])?;
        let group = attr_int(node, "group", 1)?;
        if group != 1 {
            return Err(IrError::UnsupportedOp { node: node.name.clone(), op: format!("Conv with group {group}") });
        }
        let attrs = self.window_attrs(node)?;
        let w = weight_tensor(self.initializer(node, &node.inputs[1])?)?;
        if w.dims.len() != 4 {
            return Err(IrError::ShapeMismatch(format!(
                "node {:?}: weights must be 4-d (out, in, kh, kw), got {:?}",
                node.name, w.dims
            )));
        }
        if w.dims[1] != in_shape.c || w.dims[2] != attrs.kernel.0 || w.dims[3] != attrs.kernel.1 {
            return Err(IrError::ShapeMismatch(format!(
                "node {:?}: weights {:?} do not match input {in_shape} and kernel {:?}",
                node.name, w.dims, attrs.kernel
            )));
        }
        let out_shape = infer_conv_shape(in_shape, &attrs, w.dims[0])?;
        let bias = match node.inputs.get(2).filter(|n| !n.is_empty()) {
            Some(name) => {
                let b = weight_tensor(self.initializer(node, name)?)?;
                if b.element_count() != out_shape.c {
                    return Err(IrError::ShapeMismatch(format!(
                        "node {:?}: bias has {} elements for {} output channels",
                        node.name,
                        b.element_count(),
                        out_shape.c
                    )));
                }
                Some(b)
            }
            None => None,
        };
        self.push_layer(LayerDescriptor {
            index: 0,
            kind: LayerKind::Conv,
            name: node.name.clone(),
            attrs: Some(attrs),
            in_shape,
            out_shape,
            weights: Some(w),
            bias,
            has_relu: false,
            has_softmax: false,
            input_tensor: node.inputs[0].clone(),
            output_tensor: node.outputs[0].clone(),
        });
        Ok(())
    }

    fn lower_maxpool(&mut self, node: &RawNode) -> Result<()> {
        let (in_shape, _) = self.resolve(node, &node.inputs[0])?;
        for (key, bad) in [("ceil_mode", 0i64), ("storage_order", 0)] {
            if attr_int(node, key, bad)? != bad {
                return Err(IrError::UnsupportedOp {
                    node: node.name.clone(),
                    op: format!("MaxPool with nonzero {key}"),
                });
            }
        }
        let attrs = self.window_attrs(node)?;
        let out_shape = infer_conv_shape(in_shape, &attrs, in_shape.c)?;
        self.push_layer(LayerDescriptor {
            index: 0,
            kind: LayerKind::MaxPool,
            name: node.name.clone(),
            attrs: Some(attrs),
            in_shape,
            out_shape,
            weights: None,
            bias: None,
            has_relu: false,
            has_softmax: false,
            input_tensor: node.inputs[0].clone(),
            output_tensor: node.outputs[0].clone(),
        });
        Ok(())
    }

    fn lower_gemm(&mut self, node: &RawNode) -> Result<()> {
        if node.inputs.len() < 2 {
            return Err(IrError::ShapeMismatch(format!("node {:?}: Gemm needs data and weights", node.name)));
        }
        let (in_shape, _) = self.resolve(node, &node.inputs[0])?;
        let alpha = crate::onnx::attr_float(node, "alpha", 1.0)?;
        let beta = crate::onnx::attr_float(node, "beta", 1.0)?;
        if alpha != 1.0 || beta != 1.0 {
            return Err(IrError::UnsupportedOp {
                node: node.name.clone(),
                op: format!("Gemm with alpha {alpha} / beta {beta}"),
            });
        }
        if attr_int(node, "transA", 0)? != 0 {
            return Err(IrError::UnsupportedOp { node: node.name.clone(), op: "Gemm with transA".into() });
        }
        let mut w = weight_tensor(self.initializer(node, &node.inputs[1])?)?;
        if w.dims.len() != 2 {
            return Err(IrError::ShapeMismatch(format!(
                "node {:?}: Gemm weights must be 2-d, got {:?}",
                node.name, w.dims
            )));
        }
        // Canonical layout is (out, in), the transB=1 convention. A transB=0
        // matrix is transposed here so downstream stages see one layout.
        if attr_int(node, "transB", 0)? == 0 {
            w = transpose_2d(&w);
            self.diagnostics
                .push(format!("node {:?}: transposed Gemm weights to (out, in) layout", node.name));
        }
        let in_len = in_shape.elements();
        if w.dims[1] != in_len {
            return Err(IrError::ShapeMismatch(format!(
                "node {:?}: weights expect {} inputs, data provides {in_len}",
                node.name, w.dims[1]
            )));
        }
        let out_len = w.dims[0];
        let bias = match node.inputs.get(2).filter(|n| !n.is_empty()) {
            Some(name) => {
                let b = weight_tensor(self.initializer(node, name)?)?;
                if b.element_count() != out_len {
                    return Err(IrError::ShapeMismatch(format!(
                        "node {:?}: bias has {} elements for {out_len} outputs",
                        node.name,
                        b.element_count()
                    )));
                }
                Some(b)
            }
            None => None,
        };
        self.push_layer(LayerDescriptor {
            index: 0,
            kind: LayerKind::Gemm,
            name: node.name.clone(),
            attrs: None,
            in_shape: TensorShape::new(in_len, 1, 1),
            out_shape: TensorShape::new(out_len, 1, 1),
            weights: Some(w),
            bias,
            has_relu: false,
            has_softmax: false,
            input_tensor: node.inputs[0].clone(),
            output_tensor: node.outputs[0].clone(),
        });
        Ok(())
    }

    /// Relu flags the layer producing its input; Softmax flags a producing
    /// fully-connected layer.
    fn absorb_activation(&mut self, node: &RawNode) -> Result<()> {
        let (shape, producer) = self.resolve(node, &node.inputs[0])?;
        let Some(idx) = producer else {
            return Err(IrError::UnsupportedOp {
                node: node.name.clone(),
                op: format!("{} applied directly to a graph input", node.op_type),
            });
        };
        if node.op_type == "Softmax" && self.layers[idx].kind != LayerKind::Gemm {
            return Err(IrError::UnsupportedOp {
                node: node.name.clone(),
                op: format!("Softmax after a {} layer", self.layers[idx].kind),
            });
        }
        match node.op_type.as_str() {
            "Relu" => self.layers[idx].has_relu = true,
            "Softmax" => self.layers[idx].has_softmax = true,
            _ => unreachable!(),
        }
        self.layers[idx].output_tensor = node.outputs[0].clone();
        self.tensors.insert(node.outputs[0].clone(), (shape, Some(idx)));
        Ok(())
    }

    /// Flatten/Reshape to a row vector: absorbed into the shape chain.
    fn absorb_flatten(&mut self, node: &RawNode) -> Result<()> {
        let (shape, producer) = self.resolve(node, &node.inputs[0])?;
        if node.op_type == "Reshape" {
            let target = self.initializer(node, node.inputs.get(1).map(String::as_str).unwrap_or(""))?;
            let values: Vec<i64> = target
                .payload
                .chunks_exact(4)
                .map(|c| i64::from(i32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            let spatial: Vec<i64> = values.iter().copied().filter(|&v| v != 1 && v != 0).collect();
            let len = shape.elements() as i64;
            let ok = match spatial.as_slice() {
                [] => len == 1,
                [v] => *v == -1 || *v == len,
                _ => false,
            };
            if !ok {
                return Err(IrError::UnsupportedOp {
                    node: node.name.clone(),
                    op: format!("Reshape to {values:?} (only flattening reshapes are modeled)"),
                });
            }
        }
        let flat = shape.flattened();
        if let Some(idx) = producer {
            self.layers[idx].output_tensor = node.outputs[0].clone();
        }
        self.tensors.insert(node.outputs[0].clone(), (flat, producer));
        Ok(())
    }
}

/// Lowers a decoded graph to layer descriptors in execution order.
///
/// The file's node order is trusted as topological; a node referencing a
/// tensor that has not been produced yet fails with `DanglingInput`.
pub fn lower(graph: &RawGraph) -> Result<Vec<LayerDescriptor>> {
    lower_with_diagnostics(graph).map(|(layers, _)| layers)
}

/// Like [`lower`], also returning notes about normalizations applied along
/// the way (transposed weight layouts, absorbed reshape nodes, and similar).
pub fn lower_with_diagnostics(graph: &RawGraph) -> Result<(Vec<LayerDescriptor>, Vec<String>)> {
    let data_inputs: Vec<&(String, Vec<i64>)> = graph
        .graph_inputs
        .iter()
        .filter(|(name, _)| !graph.initializers.contains_key(name))
        .collect();
    let (input_name, input_dims) = match data_inputs.as_slice() {
        [one] => (&one.0, &one.1),
        [] => return Err(IrError::ShapeMismatch("graph declares no data input".into())),
        many => {
            return Err(IrError::ShapeMismatch(format!(
                "graph declares {} data inputs; single-input networks only",
                many.len()
            )))
        }
    };
    let in_shape = input_shape(input_name, input_dims)?;

    let mut state = Lowering {
        graph,
        layers: Vec::new(),
        tensors: std::collections::HashMap::new(),
        diagnostics: Vec::new(),
    };
    state.tensors.insert(input_name.clone(), (in_shape, None));

    for node in &graph.nodes {
        // Operand arity gate: handlers index their operands positionally, so
        // a node that lost inputs or outputs is rejected here, not mid-read.
        let needs_inputs = match node.op_type.as_str() {
            "Conv" | "Gemm" => 2,
            _ => 1,
        };
        if node.inputs.len() < needs_inputs || node.outputs.is_empty() {
            return Err(IrError::ShapeMismatch(format!(
                "node {:?}: {} with {} inputs and {} outputs",
                node.name,
                node.op_type,
                node.inputs.len(),
                node.outputs.len()
            )));
        }
        match node.op_type.as_str() {
            "Conv" => state.lower_conv(node)?,
            "MaxPool" => state.lower_maxpool(node)?,
            "Gemm" => state.lower_gemm(node)?,
            "Relu" | "Softmax" => state.absorb_activation(node)?,
            "Flatten" | "Reshape" => state.absorb_flatten(node)?,
            other => {
                return Err(IrError::UnsupportedOp { node: node.name.clone(), op: other.to_string() });
            }
        }
    }
    Ok((state.layers, state.diagnostics))
}

fn input_shape(name: &str, dims: &[i64]) -> Result<TensorShape> {
    // Input dims come from the file's type annotations, not from any payload,
    // so they are bounded here before anything multiplies them.
    let total: i128 = dims.iter().map(|&d| i128::from(d.max(1))).product();
    if dims.iter().any(|&d| d > 1 << 24) || total > 1 << 32 {
        return Err(IrError::DegenerateShape(format!("input {name:?}: implausible dims {dims:?}")));
    }
    let positive: Vec<usize> = dims.iter().map(|&d| d.max(0) as usize).collect();
    match positive.as_slice() {
        [n, c, h, w] => {
            if *n > 1 {
                return Err(IrError::ShapeMismatch(format!(
                    "input {name:?}: batch size {n} unsupported (expected 1 or dynamic)"
                )));
            }
            Ok(TensorShape::new(*c, *h, *w))
        }
        [c, h, w] => Ok(TensorShape::new(*c, *h, *w)),
        [_, l] | [l] => Ok(TensorShape::new(*l, 1, 1)),
        other => Err(IrError::ShapeMismatch(format!("input {name:?}: unsupported rank {}", other.len()))),
    }
}

/// Renders descriptors one per line, in a stable format suitable for golden
/// comparisons.
pub fn dump_ir(layers: &[LayerDescriptor]) -> String {
    let mut out = String::new();
    for l in layers {
        let flags = format!(
            "in={} out={} relu={} softmax={}",
            l.in_shape,
            l.out_shape,
            u8::from(l.has_relu),
            u8::from(l.has_softmax)
        );
        match l.attrs {
            Some(a) => {
                out.push_str(&format!(
                    "{} {} ks={}x{} st={}x{} pad={}x{} dil={}x{} {}\n",
                    l.index,
                    l.kind,
                    a.kernel.0,
                    a.kernel.1,
                    a.stride.0,
                    a.stride.1,
                    a.pad.0,
                    a.pad.1,
                    a.dilation.0,
                    a.dilation.1,
                    flags
                ));
            }
            None => out.push_str(&format!("{} {} {}\n", l.index, l.kind, flags)),
        }
    }
    out
}
