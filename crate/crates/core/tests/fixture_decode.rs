//! Decodes a model exported by a stock toolchain and checks it field by
//! field, then cross-checks the float reference path against logits computed
//! by the exporting framework on a fixed probe input.

use lanefit::ir::{self, LayerKind};
use lanefit::onnx::{self, AttrValue, Dtype};
use lanefit::quant::{self, QuantSpec};
use lanefit::sim::{self, FloatWeights};

fn fixture_bytes() -> Vec<u8> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tiny.onnx");
    std::fs::read(path).expect("fixture present")
}

// The probe pair below was produced by the exporting framework itself:
// a fixed random input and the logits its float inference computes for it
// (see tools/gen_fixture.py).
const PROBE_INPUT: [f32; 128] = [
    0.299461, -2.64286, 0.723314, 0.839092, 0.320388, 1.80114, 0.307932, -1.09457, -0.358347, 0.197063, -2.32218,
    2.64478, 0.829861, -1.34463, -0.0913436, -0.16751, -0.961834, -1.99037, -1.65876, 0.28559, 0.138827, 0.0884043,
    0.0531314, -0.792378, -0.954213, 2.24021, -0.0182174, 1.23069, -0.345629, -0.49046, 0.612841, 3.09746, 0.321614,
    0.850288, 0.647054, 1.29655, 1.1154, -1.0095, 0.620557, 0.454213, 0.840197, -2.01879, -0.396398, -0.516735,
    -2.33623, 0.700553, -0.280457, 1.45558, -2.09279, -0.714163, 0.471747, 1.9487, 0.269381, -1.34315, -0.418851,
    -0.394482, 1.8267, 0.791222, -1.53322, -0.869394, -0.298611, -0.76478, 0.858803, -0.0824726, 0.208246, -0.15534,
    -1.39905, -0.363845, 0.476919, -0.194148, 0.399885, -0.802079, 0.0719012, -1.34543, 1.45256, 0.78682, -0.384869,
    -0.655452, -1.45046, -1.20584, 1.6921, 1.7634, -0.103549, -1.74089, -0.441424, -0.770752, 1.47334, -0.603277,
    -0.339467, 1.18229, -1.52736, -1.27097, -0.851095, 0.92896, -1.4185, -0.588789, 0.530864, 1.05478, -0.860941,
    -0.623447, -1.2927, -0.631555, -1.08315, 0.0447563, 0.775428, -1.50235, 1.06226, -1.02375, 0.614073, 0.113055,
    0.804145, -0.585597, 1.68862, -1.27366, 0.0448418, -1.02836, 2.36317, -1.40418, -0.692104, -0.11591, -0.555883,
    -0.592174, 0.885341, 2.71594, -0.427175, 0.370119, -0.243398, -0.568842,
];
const PROBE_LOGITS: [f32; 10] = [
    0.0744153, -0.134528, 0.12422, -0.22454, 0.134808, 0.555582, 0.366218, 0.144094, -0.00469374, -0.515551,
];

#[test]
fn exported_file_decodes_field_by_field() {
    let graph = onnx::decode_model(&fixture_bytes()).unwrap();
    assert_eq!(graph.opset, Some(13));
    assert_eq!(graph.graph_inputs, vec![("input".to_string(), vec![1, 2, 8, 8])]);
    assert_eq!(graph.graph_outputs, vec![("probs".to_string(), vec![1, 10])]);

    let ops: Vec<&str> = graph.nodes.iter().map(|n| n.op_type.as_str()).collect();
    assert_eq!(ops, ["Conv", "Relu", "MaxPool", "Flatten", "Gemm", "Softmax"]);

    let conv = &graph.nodes[0];
    assert_eq!(conv.inputs, ["input", "conv.weight", "conv.bias"]);
    assert_eq!(conv.attributes["kernel_shape"], AttrValue::Ints(vec![3, 3]));
    assert_eq!(conv.attributes["pads"], AttrValue::Ints(vec![1, 1, 1, 1]));
    assert_eq!(conv.attributes["strides"], AttrValue::Ints(vec![1, 1]));
    assert_eq!(conv.attributes["dilations"], AttrValue::Ints(vec![1, 1]));
    assert_eq!(conv.attributes["group"], AttrValue::Int(1));

    let pool = &graph.nodes[2];
    assert_eq!(pool.attributes["kernel_shape"], AttrValue::Ints(vec![2, 2]));
    assert_eq!(pool.attributes["strides"], AttrValue::Ints(vec![2, 2]));
    assert_eq!(pool.attributes["ceil_mode"], AttrValue::Int(0));

    let gemm = &graph.nodes[4];
    assert_eq!(gemm.attributes["transB"], AttrValue::Int(1));
    assert_eq!(gemm.attributes["alpha"], AttrValue::Float(1.0));
    assert_eq!(gemm.attributes["beta"], AttrValue::Float(1.0));

    let w = &graph.initializers["conv.weight"];
    assert_eq!((w.dims.as_slice(), w.dtype, w.payload.len()), ([4i64, 2, 3, 3].as_slice(), Dtype::F32, 288));
    let fcw = &graph.initializers["fc.weight"];
    assert_eq!((fcw.dims.as_slice(), fcw.payload.len()), ([10i64, 64].as_slice(), 2560));
    assert_eq!(graph.initializers["conv.bias"].f32_values().len(), 4);
    assert_eq!(graph.initializers["fc.bias"].f32_values().len(), 10);
}

#[test]
fn exported_file_lowers_to_two_stages() {
    let graph = onnx::decode_model(&fixture_bytes()).unwrap();
    let layers = ir::lower(&graph).unwrap();
    assert_eq!(layers.len(), 3);
    assert_eq!(layers[0].kind, LayerKind::Conv);
    assert!(layers[0].has_relu);
    assert_eq!(layers[0].out_shape.to_string(), "4x8x8");
    assert_eq!(layers[1].kind, LayerKind::MaxPool);
    assert_eq!(layers[2].kind, LayerKind::Gemm);
    assert!(layers[2].has_softmax);
    assert_eq!(layers[2].in_shape.elements(), 64);

    let stages = ir::fuse_stages(layers);
    assert_eq!(stages.len(), 2);
    assert!(stages[0].pool.is_some());
    assert_eq!(stages[0].out_shape().to_string(), "4x4x4");
}

#[test]
fn float_path_matches_the_exporting_framework() {
    let graph = onnx::decode_model(&fixture_bytes()).unwrap();
    let stages = ir::fuse_stages(ir::lower(&graph).unwrap());
    let spec = QuantSpec::uniform(4);
    let logits = sim::run_network_float(&stages, &PROBE_INPUT, &spec, FloatWeights::Original).unwrap();
    assert_eq!(logits.len(), 10);
    for (got, want) in logits.iter().zip(&PROBE_LOGITS) {
        assert!((got - want).abs() < 1e-4, "got {got}, framework computed {want}");
    }
}

#[test]
fn quantized_path_agrees_on_the_probe_argmax() {
    let graph = onnx::decode_model(&fixture_bytes()).unwrap();
    let stages = ir::fuse_stages(ir::lower(&graph).unwrap());
    // Framework-initialized weights are small (|w| < 0.5), so they need a
    // fine weight scale; activations stay within a few units at m = 5.
    let spec = QuantSpec::with_records(
        [
            (0, lanefit::quant::StageQuant { m_weights: 8, m_bias: 8, m_in: 5, m_out: 5 }),
            (1, lanefit::quant::StageQuant { m_weights: 8, m_bias: 8, m_in: 5, m_out: 6 }),
        ]
        .into(),
        5,
    );
    let (codes, saturated) = quant::quantize_slice(&PROBE_INPUT, 5);
    assert_eq!(saturated, 0);
    let input = quant::QuantizedTensor::new(vec![2, 8, 8], codes, 5);
    let opt = lanefit::cost::HardwareOption::new(2, 2);
    let (logits, _) = sim::run_network(&stages, &input, opt, &spec).unwrap();
    let dequant = logits.dequantized();
    let argmax = |xs: &[f32]| {
        xs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap()
    };
    assert_eq!(argmax(&dequant), argmax(&PROBE_LOGITS));
}

#[test]
fn reencoding_the_fixture_graph_round_trips() {
    let graph = onnx::decode_model(&fixture_bytes()).unwrap();
    let reencoded = onnx::encode_model(&graph);
    let again = onnx::decode_model(&reencoded).unwrap();
    assert_eq!(again.nodes, graph.nodes);
    assert_eq!(again.initializers, graph.initializers);
    assert_eq!(again.graph_inputs, graph.graph_inputs);
    assert_eq!(again.opset, graph.opset);
}
