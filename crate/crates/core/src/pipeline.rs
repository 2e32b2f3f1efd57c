//! End-to-end orchestration: model bytes in, explored and emitted designs
//! out. This is the layer the command line and the Python bindings call.

use crate::cost::{CostModel, HardwareOption, HardwareTarget, ResourceEstimate, ResourceEstimator};
use crate::dse::{self, AgentConfig, ArchLimits, DseError, ExplorationResult, LegalitySpace, Thresholds};
use crate::emit::{self, DesignBundle, EmitError};
use crate::ir::{self, IrError, LayerDescriptor, PipelineStage};
use crate::onnx::{self, OnnxError, RawGraph};
use crate::quant::{QuantError, QuantSpec};
use crate::sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Onnx(#[from] OnnxError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Cost(#[from] crate::cost::CostError),
    #[error(transparent)]
    Dse(#[from] DseError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// A model decoded and lowered all the way to pipeline stages.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub graph: RawGraph,
    pub layers: Vec<LayerDescriptor>,
    pub stages: Vec<PipelineStage>,
    /// Decode and lowering notes worth showing the user.
    pub diagnostics: Vec<String>,
}

pub fn parse_model_bytes(bytes: &[u8]) -> Result<ParsedModel> {
    let graph = onnx::decode_model(bytes)?;
    let (layers, lowering_notes) = ir::lower_with_diagnostics(&graph)?;
    let stages = ir::fuse_stages(layers.clone());
    let mut diagnostics = graph.diagnostics.clone();
    diagnostics.extend(lowering_notes);
    Ok(ParsedModel { graph, layers, stages, diagnostics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Brute,
    Rl { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ExplorationOutcome {
    pub space: LegalitySpace,
    pub result: ExplorationResult,
}

/// Runs design-space exploration for a lowered model on one target.
pub fn explore(
    model: &ParsedModel,
    target: &HardwareTarget,
    thresholds: &Thresholds,
    strategy: Strategy,
) -> Result<ExplorationOutcome> {
    let space = LegalitySpace::for_layers(&model.layers, &ArchLimits::default())?;
    let estimator = CostModel::default();
    let result = match strategy {
        Strategy::Brute => dse::brute_force(&space, &estimator, &model.stages, target, thresholds)?,
        Strategy::Rl { seed } => {
            dse::rl_explore(&space, &estimator, &model.stages, target, thresholds, &AgentConfig::default(), seed)?
        }
    };
    Ok(ExplorationOutcome { space, result })
}

/// Feasible options ranked best first (highest F_avg; ties to the larger
/// option). `k` = 0 means all of them.
pub fn rank_options(
    model: &ParsedModel,
    target: &HardwareTarget,
    thresholds: &Thresholds,
    k: usize,
) -> Result<Vec<(HardwareOption, ResourceEstimate, f64)>> {
    let space = LegalitySpace::for_layers(&model.layers, &ArchLimits::default())?;
    let estimator = CostModel::default();
    let mut rows: Vec<(HardwareOption, ResourceEstimate, f64)> = space
        .options()
        .map(|opt| {
            let est = estimator.estimate(&model.stages, opt, target);
            let f = dse::f_avg(&est);
            (opt, est, f)
        })
        .filter(|(_, est, _)| thresholds.admits(est))
        .collect();
    rows.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| (b.0.macs(), b.0.n_l).cmp(&(a.0.macs(), a.0.n_l)))
    });
    if k > 0 {
        rows.truncate(k);
    }
    Ok(rows)
}

/// True iff `opt` is a member of the model's legal space.
pub fn option_is_legal(model: &ParsedModel, opt: HardwareOption) -> Result<bool> {
    let space = LegalitySpace::for_layers(&model.layers, &ArchLimits::default())?;
    let legal = space.options().any(|o| o == opt);
    Ok(legal)
}

/// Quantizes parameters and packages everything into a deployable bundle.
pub fn build_bundle(
    model_bytes: &[u8],
    model: &ParsedModel,
    option: HardwareOption,
    spec: &QuantSpec,
) -> Result<DesignBundle> {
    spec.validate_chain(&model.stages)?;
    Ok(emit::assemble(model_bytes, &model.stages, option, spec)?)
}

/// A small self-contained classifier model, encoded as model bytes: a padded
/// 3x3 convolution with ReLU, a 2x2 max pool, and a softmax classifier head,
/// on an 8x8 two-channel input. Weights are deterministic. Useful for demos
/// and smoke tests without any file on disk.
pub fn demo_model_bytes() -> Vec<u8> {
    use crate::onnx::{build, AttrValue};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let conv_w: Vec<f32> = (0..4 * 2 * 3 * 3).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let conv_b: Vec<f32> = (0..4).map(|_| rng.gen_range(-0.25..0.25)).collect();
    let fc_w: Vec<f32> = (0..10 * 64).map(|_| rng.gen_range(-0.35..0.35)).collect();
    let fc_b: Vec<f32> = (0..10).map(|_| rng.gen_range(-0.25..0.25)).collect();

    let graph = RawGraph {
        name: "demo".into(),
        nodes: vec![
            build::node(
                "Conv",
                "conv0",
                &["input", "conv0_w", "conv0_b"],
                &["conv0_out"],
                &[
                    ("kernel_shape", build::ints(&[3, 3])),
                    ("strides", build::ints(&[1, 1])),
                    ("pads", build::ints(&[1, 1, 1, 1])),
                ],
            ),
            build::node("Relu", "relu0", &["conv0_out"], &["relu0_out"], &[]),
            build::node(
                "MaxPool",
                "pool0",
                &["relu0_out"],
                &["pool0_out"],
                &[("kernel_shape", build::ints(&[2, 2])), ("strides", build::ints(&[2, 2]))],
            ),
            build::node("Flatten", "flat", &["pool0_out"], &["flat_out"], &[]),
            build::node(
                "Gemm",
                "fc0",
                &["flat_out", "fc0_w", "fc0_b"],
                &["fc0_out"],
                &[("transB", AttrValue::Int(1))],
            ),
            build::node("Softmax", "sm", &["fc0_out"], &["probs"], &[("axis", AttrValue::Int(1))]),
        ],
        initializers: [
            ("conv0_w".to_string(), build::tensor_f32("conv0_w", &[4, 2, 3, 3], &conv_w)),
            ("conv0_b".to_string(), build::tensor_f32("conv0_b", &[4], &conv_b)),
            ("fc0_w".to_string(), build::tensor_f32("fc0_w", &[10, 64], &fc_w)),
            ("fc0_b".to_string(), build::tensor_f32("fc0_b", &[10], &fc_b)),
        ]
        .into(),
        graph_inputs: vec![("input".to_string(), vec![1, 2, 8, 8])],
        graph_outputs: vec![("probs".to_string(), vec![1, 10])],
        opset: Some(13),
        diagnostics: Vec::new(),
    };
    onnx::encode_model(&graph)
}
