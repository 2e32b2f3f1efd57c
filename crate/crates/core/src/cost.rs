//! FPGA resource cost model.
//!
//! Stands in for the vendor compiler's resource feedback: maps a stage list
//! and an (n_i, n_l) hardware option to absolute ALM/DSP/RAM-block/memory-bit
//! counts and, against a named device, to the four utilization percentages.
//!
//! The model is an affine family in n_l and n_i·n_l on top of quantities
//! computed from the stage list (feature-buffer packing, largest stage
//! buffer). Coefficients ship calibrated to two published reference builds of
//! the eight-stage benchmark network at (8,8) and (16,32); `calibrate` refits
//! them from user-supplied anchors where the system is determined and falls
//! back to the shipped defaults where it is not.

use crate::ir::{self, ConvAttrs, LayerDescriptor, LayerKind, PipelineStage, TensorShape, WeightTensor};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("calibration needs at least 2 anchors, got {0}")]
    RankDeficient(usize),
    #[error("no target matches {query:?}; available: {available}")]
    UnknownTarget { query: String, available: String },
    #[error("target query {query:?} is ambiguous: matches {matches}")]
    AmbiguousTarget { query: String, matches: String },
    #[error("bad target catalog: {0}")]
    BadCatalog(String),
}

pub type Result<T> = std::result::Result<T, CostError>;

/// A device and its four resource capacities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareTarget {
    pub name: String,
    pub alm_capacity: u64,
    pub dsp_capacity: u64,
    pub ram_block_capacity: u64,
    pub mem_bit_capacity: u64,
}

/// The two design-space knobs: vector width and lane count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HardwareOption {
    pub n_i: usize,
    pub n_l: usize,
}

impl HardwareOption {
    pub fn new(n_i: usize, n_l: usize) -> Self {
        HardwareOption { n_i, n_l }
    }

    /// The multiplier count n_i·n_l, the main driver of every resource class.
    pub fn macs(&self) -> usize {
        self.n_i * self.n_l
    }
}

impl std::fmt::Display for HardwareOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.n_i, self.n_l)
    }
}

/// Absolute resource counts, before relating them to a device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceCounts {
    pub alm: f64,
    pub dsp: f64,
    pub ram_blocks: f64,
    pub mem_bits: f64,
}

/// Utilization percentages for one option on one target, with the absolute
/// counts they were derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceEstimate {
    pub p_lut: f64,
    pub p_dsp: f64,
    pub p_mem: f64,
    pub p_reg: f64,
    pub counts: ResourceCounts,
}

impl ResourceEstimate {
    pub fn percentages(&self) -> [f64; 4] {
        [self.p_lut, self.p_dsp, self.p_mem, self.p_reg]
    }
}

/// Pluggable estimator seam: a vendor-toolchain adapter can replace the
/// analytic model without touching the exploration code.
pub trait ResourceEstimator {
    fn counts(&self, stages: &[PipelineStage], opt: HardwareOption) -> ResourceCounts;

    fn estimate(&self, stages: &[PipelineStage], opt: HardwareOption, target: &HardwareTarget) -> ResourceEstimate {
        let counts = self.counts(stages, opt);
        let pct = |used: f64, capacity: u64| 100.0 * used / capacity as f64;
        ResourceEstimate {
            p_lut: pct(counts.alm, target.alm_capacity),
            p_dsp: pct(counts.dsp, target.dsp_capacity),
            p_mem: pct(counts.ram_blocks, target.ram_block_capacity),
            p_reg: pct(counts.mem_bits, target.mem_bit_capacity),
            counts,
        }
    }
}

/// Bits per on-chip RAM block in the packing computation (one M10K-class
/// block). A single packing unit is used for every target so that absolute
/// counts stay target-independent; device differences are absorbed by the
/// block capacity in the catalog.
pub const RAM_BLOCK_BITS: f64 = 10_240.0;

/// Coefficients of the affine resource family.
///
/// With x = n_i·n_l:
///   dsp       = dsp[0] + dsp[1]·x
///   alm       = alm[0] + alm[1]·n_l + alm[2]·x
///   mem_bits  = mem[0] + mem[1]·x + mem[2]·max_stage_buffer_bits
///   ram_blocks = ceil(total_output_bits / RAM_BLOCK_BITS) + ram[0]·n_l + ram[1]·x
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub dsp: [f64; 2],
    pub alm: [f64; 3],
    pub mem: [f64; 3],
    pub ram: [f64; 2],
}

impl Default for CoefficientSet {
    /// Shipped defaults, calibrated to the published (8,8) and (16,32)
    /// reference builds.
    ///
    /// The DSP and RAM coefficients are the exact solutions of the two-anchor
    /// linear systems; the ALM and memory-bit families are under-determined
    /// by two anchors, so their fixed parts are engineering estimates: a
    /// control-logic ALM base, per-lane pooling/FIFO logic, 4 KB of weight
    /// cache bits per multiplier, and double-buffer registers at 1/32 of the
    /// largest stage buffer.
    fn default() -> Self {
        CoefficientSet {
            dsp: [276.0 / 7.0, 57.0 / 112.0],
            alm: [15_360.0, 16.0, 200.0],
            mem: [0.0, 32_768.0, 1.0 / 32.0],
            ram: [325.0 / 16.0, 59.0 / 128.0],
        }
    }
}

/// The shipped analytic cost model.
#[derive(Debug, Clone, Default)]
pub struct CostModel {
    pub coeffs: CoefficientSet,
}

impl CostModel {
    pub fn with_coeffs(coeffs: CoefficientSet) -> Self {
        CostModel { coeffs }
    }
}

/// Bits of the largest per-stage feature buffer (input plus output slab,
/// 8-bit elements).
pub fn max_stage_buffer_bits(stages: &[PipelineStage]) -> f64 {
    stages.iter().map(|s| 8 * s.buffer_bytes()).max().unwrap_or(0) as f64
}

/// Total output-feature bits across stages; the quantity packed into RAM
/// blocks.
pub fn total_output_bits(stages: &[PipelineStage]) -> f64 {
    stages.iter().map(|s| 8 * s.out_shape().elements()).sum::<usize>() as f64
}

/// RAM blocks consumed by feature storage alone (no lane overhead).
pub fn packing_base(stages: &[PipelineStage]) -> f64 {
    (total_output_bits(stages) / RAM_BLOCK_BITS).ceil()
}

impl ResourceEstimator for CostModel {
    fn counts(&self, stages: &[PipelineStage], opt: HardwareOption) -> ResourceCounts {
        assert!(!stages.is_empty(), "estimate requires a non-empty stage list");
        let c = &self.coeffs;
        let x = opt.macs() as f64;
        let nl = opt.n_l as f64;
        ResourceCounts {
            alm: c.alm[0] + c.alm[1] * nl + c.alm[2] * x,
            dsp: c.dsp[0] + c.dsp[1] * x,
            ram_blocks: packing_base(stages) + c.ram[0] * nl + c.ram[1] * x,
            mem_bits: c.mem[0] + c.mem[1] * x + c.mem[2] * max_stage_buffer_bits(stages),
        }
    }
}

/// One calibration observation: a workload, the option it was built at, and
/// the absolute counts the toolchain reported.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub stages: Vec<PipelineStage>,
    pub opt: HardwareOption,
    pub counts: ResourceCounts,
}

/// How one resource class came out of calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassFit {
    /// Coefficients determined by the anchors; residual is the max absolute
    /// misfit across anchors.
    Fitted { residual: f64 },
    /// The anchors cannot pin this class's coefficients; the shipped defaults
    /// were kept.
    RankDeficient,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub coeffs: CoefficientSet,
    pub dsp: ClassFit,
    pub alm: ClassFit,
    pub mem: ClassFit,
    pub ram: ClassFit,
}

/// Least-squares solve of Aᵀ·A·β = Aᵀ·y; `None` when the normal matrix is
/// singular (under-determined system).
fn least_squares(rows: &[Vec<f64>], targets: &[f64]) -> Option<Vec<f64>> {
    let n = rows.first()?.len();
    let mut ata = vec![vec![0.0; n]; n];
    let mut aty = vec![0.0; n];
    for (row, &y) in rows.iter().zip(targets) {
        for i in 0..n {
            for j in 0..n {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting on the normal equations.
    let scale = ata
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))?;
        if ata[pivot][col].abs() <= 1e-9 * scale {
            return None;
        }
        ata.swap(col, pivot);
        aty.swap(col, pivot);
        for row in col + 1..n {
            let f = ata[row][col] / ata[col][col];
            for j in col..n {
                ata[row][j] -= f * ata[col][j];
            }
            aty[row] -= f * aty[col];
        }
    }
    let mut beta = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = aty[col];
        for j in col + 1..n {
            v -= ata[col][j] * beta[j];
        }
        beta[col] = v / ata[col][col];
    }
    Some(beta)
}

fn fit_class(
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    default: &[f64],
) -> (Vec<f64>, ClassFit) {
    match least_squares(&rows, &targets) {
        Some(beta) => {
            let residual = rows
                .iter()
                .zip(&targets)
                .map(|(row, &y)| (row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() - y).abs())
                .fold(0.0f64, f64::max);
            (beta, ClassFit::Fitted { residual })
        }
        None => (default.to_vec(), ClassFit::RankDeficient),
    }
}

/// Refits the coefficient family from anchors. Classes the anchors determine
/// are fitted (exactly, when the system is square and independent); classes
/// they cannot pin keep the shipped defaults and are reported RankDeficient.
pub fn calibrate(anchors: &[Anchor]) -> Result<Calibration> {
    if anchors.len() < 2 {
        return Err(CostError::RankDeficient(anchors.len()));
    }
    let defaults = CoefficientSet::default();
    let xs: Vec<f64> = anchors.iter().map(|a| a.opt.macs() as f64).collect();
    let nls: Vec<f64> = anchors.iter().map(|a| a.opt.n_l as f64).collect();

    let (dsp, dsp_fit) = fit_class(
        xs.iter().map(|&x| vec![1.0, x]).collect(),
        anchors.iter().map(|a| a.counts.dsp).collect(),
        &defaults.dsp,
    );
    let (alm, alm_fit) = fit_class(
        xs.iter().zip(&nls).map(|(&x, &nl)| vec![1.0, nl, x]).collect(),
        anchors.iter().map(|a| a.counts.alm).collect(),
        &defaults.alm,
    );
    let (mem, mem_fit) = fit_class(
        anchors
            .iter()
            .zip(&xs)
            .map(|(a, &x)| vec![1.0, x, max_stage_buffer_bits(&a.stages)])
            .collect(),
        anchors.iter().map(|a| a.counts.mem_bits).collect(),
        &defaults.mem,
    );
    let (ram, ram_fit) = fit_class(
        xs.iter().zip(&nls).map(|(&x, &nl)| vec![nl, x]).collect(),
        anchors
            .iter()
            .map(|a| a.counts.ram_blocks - packing_base(&a.stages))
            .collect(),
        &defaults.ram,
    );

    let pick = |v: Vec<f64>| -> [f64; 2] { [v[0], v[1]] };
    let pick3 = |v: Vec<f64>| -> [f64; 3] { [v[0], v[1], v[2]] };
    Ok(Calibration {
        coeffs: CoefficientSet { dsp: pick(dsp), alm: pick3(alm), mem: pick3(mem), ram: pick(ram) },
        dsp: dsp_fit,
        alm: alm_fit,
        mem: mem_fit,
        ram: ram_fit,
    })
}

/// The three catalog devices.
pub fn default_targets() -> Vec<HardwareTarget> {
    let t = |name: &str, alm: u64, dsp: u64, ram: u64, mem: u64| HardwareTarget {
        name: name.to_string(),
        alm_capacity: alm,
        dsp_capacity: dsp,
        ram_block_capacity: ram,
        mem_bit_capacity: mem,
    };
    vec![
        t("cyclone-v-5csema4", 15_000, 83, 321, 3_287_040),
        t("cyclone-v-5csema5", 32_000, 87, 397, 4_065_280),
        t("arria-10-gx1150", 427_000, 1_516, 2_713, 55_562_240),
    ]
}

/// Parses a catalog file: one record per line, `name alm dsp ram_blocks
/// mem_bits`, `#` comments.
pub fn parse_catalog(text: &str) -> Result<Vec<HardwareTarget>> {
    let mut targets = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(CostError::BadCatalog(format!(
                "line {}: expected `name alm dsp ram mem`, got {} fields",
                lineno + 1,
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| {
            s.parse::<u64>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| CostError::BadCatalog(format!("line {}: {what} {s:?} must be a positive integer", lineno + 1)))
        };
        targets.push(HardwareTarget {
            name: fields[0].to_string(),
            alm_capacity: num(fields[1], "alm capacity")?,
            dsp_capacity: num(fields[2], "dsp capacity")?,
            ram_block_capacity: num(fields[3], "ram block capacity")?,
            mem_bit_capacity: num(fields[4], "mem bit capacity")?,
        });
    }
    Ok(targets)
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
}

/// Finds a target by normalized substring match; the query must match exactly
/// one catalog entry.
pub fn find_target<'a>(catalog: &'a [HardwareTarget], query: &str) -> Result<&'a HardwareTarget> {
    let q = normalize(query);
    let matches: Vec<&HardwareTarget> = catalog
        .iter()
        .filter(|t| normalize(&t.name).contains(&q))
        .collect();
    match matches.as_slice() {
        [one] => Ok(one),
        [] => Err(CostError::UnknownTarget {
            query: query.to_string(),
            available: catalog.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", "),
        }),
        many => Err(CostError::AmbiguousTarget {
            query: query.to_string(),
            matches: many.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", "),
        }),
    }
}

fn conv_layer(
    index: usize,
    name: &str,
    in_shape: TensorShape,
    out_c: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    relu: bool,
) -> LayerDescriptor {
    let attrs = ConvAttrs {
        kernel: (kernel, kernel),
        stride: (stride, stride),
        pad: (pad, pad),
        dilation: (1, 1),
    };
    let out_shape = ir::infer_conv_shape(in_shape, &attrs, out_c).expect("reference geometry is valid");
    LayerDescriptor {
        index,
        kind: LayerKind::Conv,
        name: name.to_string(),
        attrs: Some(attrs),
        in_shape,
        out_shape,
        weights: Some(WeightTensor::shape_only(&[out_c, in_shape.c, kernel, kernel])),
        bias: Some(WeightTensor::shape_only(&[out_c])),
        has_relu: relu,
        has_softmax: false,
        input_tensor: format!("t{index}"),
        output_tensor: format!("t{}", index + 1),
    }
}

fn pool_layer(index: usize, name: &str, in_shape: TensorShape, kernel: usize, stride: usize) -> LayerDescriptor {
    let attrs = ConvAttrs { kernel: (kernel, kernel), stride: (stride, stride), pad: (0, 0), dilation: (1, 1) };
    let out_shape = ir::infer_conv_shape(in_shape, &attrs, in_shape.c).expect("reference geometry is valid");
    LayerDescriptor {
        index,
        kind: LayerKind::MaxPool,
        name: name.to_string(),
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

fn fc_layer(index: usize, name: &str, in_len: usize, out_len: usize, relu: bool, softmax: bool) -> LayerDescriptor {
    LayerDescriptor {
        index,
        kind: LayerKind::Gemm,
        name: name.to_string(),
        attrs: None,
        in_shape: TensorShape::new(in_len, 1, 1),
        out_shape: TensorShape::new(out_len, 1, 1),
        weights: Some(WeightTensor::shape_only(&[out_len, in_len])),
        bias: Some(WeightTensor::shape_only(&[out_len])),
        has_relu: relu,
        has_softmax: softmax,
        input_tensor: format!("t{index}"),
        output_tensor: format!("t{}", index + 1),
    }
}

/// Layer list of the calibration reference workload: the classic
/// 5-convolution, 3-pooling, 3-FC ImageNet topology the shipped anchors were
/// measured on. Weight handles are shape-only; the list supports shape,
/// legality and cost analysis but not execution.
pub fn calibration_network() -> Vec<LayerDescriptor> {
    let mut layers = Vec::new();
    let s = TensorShape::new;
    layers.push(conv_layer(0, "conv1", s(3, 224, 224), 96, 11, 4, 2, true));
    layers.push(pool_layer(1, "pool1", s(96, 55, 55), 3, 2));
    layers.push(conv_layer(2, "conv2", s(96, 27, 27), 256, 5, 1, 2, true));
    layers.push(pool_layer(3, "pool2", s(256, 27, 27), 3, 2));
    layers.push(conv_layer(4, "conv3", s(256, 13, 13), 384, 3, 1, 1, true));
    layers.push(conv_layer(5, "conv4", s(384, 13, 13), 384, 3, 1, 1, true));
    layers.push(conv_layer(6, "conv5", s(384, 13, 13), 256, 3, 1, 1, true));
    layers.push(pool_layer(7, "pool5", s(256, 13, 13), 3, 2));
    layers.push(fc_layer(8, "fc6", 9216, 4096, true, false));
    layers.push(fc_layer(9, "fc7", 4096, 4096, true, false));
    layers.push(fc_layer(10, "fc8", 4096, 1000, false, true));
    layers
}

/// The reference workload fused into its eight pipeline stages.
pub fn calibration_stages() -> Vec<PipelineStage> {
    ir::fuse_stages(calibration_network())
}

/// The two published reference builds used as default calibration anchors:
/// (8,8) on the mid-size Cyclone V and (16,32) on the Arria 10, with the
/// memory-bit figures read as binary megabits.
pub fn reference_anchors() -> Vec<Anchor> {
    let stages = calibration_stages();
    vec![
        Anchor {
            stages: stages.clone(),
            opt: HardwareOption::new(8, 8),
            counts: ResourceCounts { alm: 26_000.0, dsp: 72.0, ram_blocks: 397.0, mem_bits: 2_097_152.0 },
        },
        Anchor {
            stages,
            opt: HardwareOption::new(16, 32),
            counts: ResourceCounts { alm: 129_000.0, dsp: 300.0, ram_blocks: 1091.0, mem_bits: 16_777_216.0 },
        },
    ]
}
