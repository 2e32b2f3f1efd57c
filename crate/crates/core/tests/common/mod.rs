//! Shared generators for the integration suites: random small networks with
//! real float parameters, and fixed-point formats chosen by probing so the
//! integer pipeline never saturates.

use lanefit::cost::HardwareOption;
use lanefit::dse::{ArchLimits, LegalitySpace};
use lanefit::ir::{
    infer_conv_shape, BufferKind, ConvAttrs, LayerDescriptor, LayerKind, PipelineStage, TensorShape, WeightTensor,
};
use lanefit::quant::{QuantSpec, QuantizedTensor, StageQuant};
use lanefit::sim::{self, FloatWeights};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub struct TestNetwork {
    pub stages: Vec<PipelineStage>,
    pub spec: QuantSpec,
    pub in_shape: TensorShape,
}

impl TestNetwork {
    pub fn layers(&self) -> Vec<LayerDescriptor> {
        lanefit::ir::flatten_stages(&self.stages).into_iter().cloned().collect()
    }

    pub fn legal_options(&self) -> Vec<HardwareOption> {
        let space = LegalitySpace::for_layers(&self.layers(), &ArchLimits::default()).expect("non-empty space");
        space.options().collect()
    }
}

pub fn conv_layer(
    rng: &mut ChaCha8Rng,
    index: usize,
    in_shape: TensorShape,
    out_c: usize,
    attrs: ConvAttrs,
    relu: bool,
    weight_amp: f32,
) -> LayerDescriptor {
    let out_shape = infer_conv_shape(in_shape, &attrs, out_c).expect("valid geometry");
    let wlen = out_c * in_shape.c * attrs.kernel.0 * attrs.kernel.1;
    let weights: Vec<f32> = (0..wlen).map(|_| rng.gen_range(-weight_amp..weight_amp)).collect();
    let bias: Vec<f32> = (0..out_c).map(|_| rng.gen_range(-weight_amp..weight_amp)).collect();
    LayerDescriptor {
        index,
        kind: LayerKind::Conv,
        name: format!("conv{index}"),
        attrs: Some(attrs),
        in_shape,
        out_shape,
        weights: Some(WeightTensor::from_f32(&[out_c, in_shape.c, attrs.kernel.0, attrs.kernel.1], weights)),
        bias: Some(WeightTensor::from_f32(&[out_c], bias)),
        has_relu: relu,
        has_softmax: false,
        input_tensor: format!("t{index}"),
        output_tensor: format!("t{}", index + 1),
    }
}

pub fn pool_layer(index: usize, in_shape: TensorShape, kernel: usize, stride: usize) -> LayerDescriptor {
    let attrs = ConvAttrs { kernel: (kernel, kernel), stride: (stride, stride), pad: (0, 0), dilation: (1, 1) };
    let out_shape = infer_conv_shape(in_shape, &attrs, in_shape.c).expect("valid geometry");
    LayerDescriptor {
        index,
        kind: LayerKind::MaxPool,
        name: format!("pool{index}"),
        attrs: Some(attrs),
        in_shape,
        out_shape,
        weights: None,
        bias: None,
        has_relu: false,
        has_softmax: false,
        input_tensor: format!("t{index}"),
        output_tensor: format!("t{}", index + 1),
    }
}

pub fn fc_layer(
    rng: &mut ChaCha8Rng,
    index: usize,
    in_len: usize,
    out_len: usize,
    weight_amp: f32,
) -> LayerDescriptor {
    let weights: Vec<f32> = (0..out_len * in_len).map(|_| rng.gen_range(-weight_amp..weight_amp)).collect();
    let bias: Vec<f32> = (0..out_len).map(|_| rng.gen_range(-weight_amp..weight_amp)).collect();
    LayerDescriptor {
        index,
        kind: LayerKind::Gemm,
        name: format!("fc{index}"),
        attrs: None,
        in_shape: TensorShape::new(in_len, 1, 1),
        out_shape: TensorShape::new(out_len, 1, 1),
        weights: Some(WeightTensor::from_f32(&[out_len, in_len], weights)),
        bias: Some(WeightTensor::from_f32(&[out_len], bias)),
        has_relu: false,
        has_softmax: true,
        input_tensor: format!("t{index}"),
        output_tensor: format!("t{}", index + 1),
    }
}

/// A random 1-3 stage network with unconstrained magnitudes. Saturation may
/// occur; the execution stays deterministic, which is all the lane
/// bit-exactness suite needs.
pub fn random_network(rng: &mut ChaCha8Rng) -> TestNetwork {
    let c_in = [1usize, 2, 3, 4][rng.gen_range(0..4)];
    let hw = rng.gen_range(4..=9);
    let in_shape = TensorShape::new(c_in, hw, hw);

    let mut stages = Vec::new();
    let mut shape = in_shape;
    let mut index = 0;
    let conv_stages = rng.gen_range(1..=2);
    for _ in 0..conv_stages {
        let out_c = [1usize, 2, 3, 4, 6, 8][rng.gen_range(0..6)];
        let k = rng.gen_range(1..=3.min(shape.h));
        let stride = rng.gen_range(1..=2);
        let pad = rng.gen_range(0..=1.min(k - 1));
        let attrs = ConvAttrs { kernel: (k, k), stride: (stride, stride), pad: (pad, pad), dilation: (1, 1) };
        let Ok(out) = infer_conv_shape(shape, &attrs, out_c) else { break };
        if out.h == 0 || out.w == 0 {
            break;
        }
        let relu = rng.gen_bool(0.5);
        let conv = conv_layer(rng, index, shape, out_c, attrs, relu, 1.0);
        index += 1;
        shape = out;
        let pool = if shape.h >= 2 && shape.w >= 2 && rng.gen_bool(0.5) {
            let p = pool_layer(index, shape, 2, 2);
            index += 1;
            shape = p.out_shape;
            Some(p)
        } else {
            None
        };
        stages.push(PipelineStage { conv: Some(conv), pool, buffer_kind: BufferKind::Conv });
    }
    if stages.is_empty() || rng.gen_bool(0.6) {
        let classes = rng.gen_range(2..=10);
        let fc = fc_layer(rng, index, shape.elements(), classes, 1.0);
        stages.push(PipelineStage { conv: Some(fc), pool: None, buffer_kind: BufferKind::Fc });
    }
    TestNetwork { stages, spec: QuantSpec::uniform(4), in_shape }
}

pub fn random_input_codes(rng: &mut ChaCha8Rng, shape: TensorShape, m: i32) -> QuantizedTensor {
    let values = (0..shape.elements()).map(|_| rng.gen_range(-128..=127i32) as i8).collect();
    QuantizedTensor::new(vec![shape.c, shape.h, shape.w], values, m)
}

pub fn random_float_input(rng: &mut ChaCha8Rng, shape: TensorShape) -> Vec<f32> {
    (0..shape.elements()).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

/// A fixed-topology three-stage classifier (conv+pool, conv, fc) with random
/// parameters and per-stage formats chosen by probing: m is the finest scale
/// whose range covers twice the largest activation seen on a probe batch, so
/// the integer pipeline has saturation headroom on same-distribution inputs.
pub fn calibrated_network(rng: &mut ChaCha8Rng) -> TestNetwork {
    let in_shape = TensorShape::new(3, 6, 6);
    let c0 = conv_layer(
        rng,
        0,
        in_shape,
        6,
        ConvAttrs { kernel: (3, 3), stride: (1, 1), pad: (1, 1), dilation: (1, 1) },
        true,
        0.45,
    );
    let p0 = pool_layer(1, c0.out_shape, 2, 2);
    let s0_out = p0.out_shape;
    let c1 = conv_layer(
        rng,
        2,
        s0_out,
        8,
        ConvAttrs { kernel: (2, 2), stride: (1, 1), pad: (0, 0), dilation: (1, 1) },
        true,
        0.45,
    );
    let s1_out = c1.out_shape;
    let fc = fc_layer(rng, 3, s1_out.elements(), 8, 0.4);
    let stages = vec![
        PipelineStage { conv: Some(c0), pool: Some(p0), buffer_kind: BufferKind::Conv },
        PipelineStage { conv: Some(c1), pool: None, buffer_kind: BufferKind::Conv },
        PipelineStage { conv: Some(fc), pool: None, buffer_kind: BufferKind::Fc },
    ];

    // Probe the float network to find per-stage activation ranges.
    let probe_spec = QuantSpec::uniform(0);
    let mut max_abs = vec![0f32; stages.len()];
    for _ in 0..16 {
        let mut current = random_float_input(rng, in_shape);
        for (k, stage) in stages.iter().enumerate() {
            current = sim::run_stage_float(stage, k, &current, &probe_spec, FloatWeights::Original).unwrap();
            for v in &current {
                max_abs[k] = max_abs[k].max(v.abs());
            }
        }
    }
    let fine_for = |max: f32| {
        // Finest m with 127 >= 2 * max * 2^m.
        let mut m = 0;
        while m < 7 && (2.0 * max * 2f32.powi(m + 1)) <= 127.0 {
            m += 1;
        }
        m
    };
    // Weight and bias amplitudes stay below 0.496, so codes stay below 127
    // at m = 8; the bias rescale shift m_in + m_w - m_bias is then
    // nonnegative (exact) everywhere.
    let m_w = 8;
    let mut records = BTreeMap::new();
    let mut m_in = 6; // inputs are in (-1, 1)
    for (k, &max) in max_abs.iter().enumerate() {
        let m_out = fine_for(max);
        records.insert(k, StageQuant { m_weights: m_w, m_bias: m_w, m_in, m_out });
        m_in = m_out;
    }
    TestNetwork { stages, spec: QuantSpec::with_records(records, 6), in_shape }
}
