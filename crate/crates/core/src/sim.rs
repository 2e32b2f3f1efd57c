//! Functional simulator of the pipelined kernel architecture.
//!
//! Executes quantized inference stage by stage the way the hardware would:
//! the fetch unit streams n_i-wide operand vectors, n_l lanes each accumulate
//! one output channel into a 32-bit register, the result is shifted and
//! saturated back to 8 bits (ReLU first, when flagged), and the pooling unit
//! reduces windows by maximum. Fully-connected stages reuse the convolution
//! data path with 1×1 geometry and the pooling unit in pass-through.
//!
//! The decomposition into lanes and vectors is an exact re-partition of a
//! fixed accumulation order (input channel, then kernel row, then column), so
//! results are bit-identical for every hardware option. Work is reported as
//! multiply-accumulate counts and lane passes rather than cycles.

use crate::cost::HardwareOption;
use crate::ir::{LayerDescriptor, PipelineStage, TensorShape, WeightData};
use crate::quant::{self, QuantError, QuantSpec, QuantizedTensor, StageQuant};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("stage {stage}: schedule gap: {detail}")]
    ScheduleGap { stage: usize, detail: String },
    #[error("stage {stage}: input shape {got} does not match expected {want}")]
    ShapeMismatch { stage: usize, got: String, want: String },
    #[error("stage {stage}: input carries m={got_m}, stage expects m={want_m}")]
    FormatMismatch { stage: usize, got_m: i32, want_m: i32 },
    #[error("stage {stage}: weights carry shape information only; cannot execute")]
    MissingWeights { stage: usize },
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error("bad input file: {0}")]
    BadInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Unified window geometry for convolution and (1×1) fully-connected layers.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    c_in: usize,
    h_in: usize,
    w_in: usize,
    c_out: usize,
    h_out: usize,
    w_out: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    ph: usize,
    pw: usize,
    dh: usize,
    dw: usize,
}

impl Geometry {
    fn of(layer: &LayerDescriptor) -> Geometry {
        let (i, o) = (layer.in_shape, layer.out_shape);
        match layer.attrs {
            Some(a) => Geometry {
                c_in: i.c,
                h_in: i.h,
                w_in: i.w,
                c_out: o.c,
                h_out: o.h,
                w_out: o.w,
                kh: a.kernel.0,
                kw: a.kernel.1,
                sh: a.stride.0,
                sw: a.stride.1,
                ph: a.pad.0,
                pw: a.pad.1,
                dh: a.dilation.0,
                dw: a.dilation.1,
            },
            None => Geometry {
                c_in: i.elements(),
                h_in: 1,
                w_in: 1,
                c_out: o.c,
                h_out: 1,
                w_out: 1,
                kh: 1,
                kw: 1,
                sh: 1,
                sw: 1,
                ph: 0,
                pw: 0,
                dh: 1,
                dw: 1,
            },
        }
    }

    fn dot_len(&self) -> usize {
        self.c_in * self.kh * self.kw
    }
}

/// The memory and compute plan of one stage under one hardware option.
///
/// `lane_rounds` assigns output channels to lanes round by round;
/// `fetch_chunks` splits the dot vector into consecutive n_i-wide fetches.
/// Both are the compact form of the full fetch sequence: the same pattern
/// repeats at every output position with shifted addresses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSchedule {
    pub stage: usize,
    pub opt: HardwareOption,
    /// Round → the output channels the lanes compute (compute layer only).
    pub lane_rounds: Vec<Vec<usize>>,
    /// (offset, length) chunks tiling the dot vector.
    pub fetch_chunks: Vec<(usize, usize)>,
}

impl StageSchedule {
    pub fn plan(stage: &PipelineStage, stage_index: usize, opt: HardwareOption) -> StageSchedule {
        let (lane_rounds, fetch_chunks) = match stage.compute() {
            Some(layer) => {
                let g = Geometry::of(layer);
                let rounds = (0..g.c_out)
                    .collect::<Vec<_>>()
                    .chunks(opt.n_l.max(1))
                    .map(<[usize]>::to_vec)
                    .collect();
                let dot = g.dot_len();
                let mut chunks = Vec::new();
                let mut offset = 0;
                while offset < dot {
                    let len = opt.n_i.max(1).min(dot - offset);
                    chunks.push((offset, len));
                    offset += len;
                }
                (rounds, chunks)
            }
            None => (Vec::new(), Vec::new()),
        };
        StageSchedule { stage: stage_index, opt, lane_rounds, fetch_chunks }
    }

    /// Verifies the coverage invariant: the chunks tile the dot vector with
    /// no gap or overlap, and the rounds compute every output channel exactly
    /// once with at most n_l lanes per round. Together these guarantee every
    /// operand the stage's math needs is fetched exactly once per output.
    pub fn validate(&self, stage: &PipelineStage) -> Result<()> {
        let gap = |detail: String| SimError::ScheduleGap { stage: self.stage, detail };
        let Some(layer) = stage.compute() else {
            if !self.lane_rounds.is_empty() || !self.fetch_chunks.is_empty() {
                return Err(gap("pass-through stage carries a compute plan".into()));
            }
            return Ok(());
        };
        let g = Geometry::of(layer);
        let mut covered = 0usize;
        for &(offset, len) in &self.fetch_chunks {
            if offset != covered || len == 0 {
                return Err(gap(format!("chunk at {offset} (len {len}) does not continue from {covered}")));
            }
            if len > self.opt.n_i {
                return Err(gap(format!("chunk length {len} exceeds the vector width {}", self.opt.n_i)));
            }
            covered += len;
        }
        if covered != g.dot_len() {
            return Err(gap(format!("chunks cover {covered} of {} operand elements", g.dot_len())));
        }
        let mut seen = vec![0u32; g.c_out];
        for round in &self.lane_rounds {
            if round.len() > self.opt.n_l {
                return Err(gap(format!("round of {} channels exceeds the lane count {}", round.len(), self.opt.n_l)));
            }
            for &ch in round {
                if ch >= g.c_out {
                    return Err(gap(format!("channel {ch} out of range ({} outputs)", g.c_out)));
                }
                seen[ch] += 1;
            }
        }
        if let Some(ch) = seen.iter().position(|&n| n != 1) {
            return Err(gap(format!("output channel {ch} is computed {} times", seen[ch])));
        }
        Ok(())
    }

    /// Lane rounds launched over the whole stage.
    pub fn passes(&self, stage: &PipelineStage) -> u64 {
        match stage.compute() {
            Some(layer) => {
                let g = Geometry::of(layer);
                self.lane_rounds.len() as u64 * (g.h_out * g.w_out) as u64
            }
            None => {
                let pool = stage.pool.as_ref().expect("stage has a layer");
                let o = pool.out_shape;
                ((o.c + self.opt.n_l - 1) / self.opt.n_l) as u64 * (o.h * o.w) as u64
            }
        }
    }

    /// Operand fetches issued over the whole stage: one feature vector plus
    /// n_l weight vectors per (pass, chunk).
    pub fn fetch_count(&self, stage: &PipelineStage) -> u64 {
        self.passes(stage) * self.fetch_chunks.len() as u64
    }
}

/// Work summary of one executed stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageReport {
    pub stage: usize,
    pub mac_count: u64,
    pub passes: u64,
    /// Output values clamped during requantization (weight quantization is
    /// not counted here; it happens when the design is assembled).
    pub saturation_events: u64,
}

/// Reports rendered one line per stage.
pub fn render_reports(reports: &[StageReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "stage={} macs={} passes={} saturations={}\n",
            r.stage, r.mac_count, r.passes, r.saturation_events
        ));
    }
    out
}

/// v / 2^s with round-half-away-from-zero; negative s shifts left.
fn shift_round(v: i64, s: i32) -> i64 {
    if s <= 0 {
        return v << u32::try_from(-s).unwrap_or(0).min(62);
    }
    let s = s.min(62);
    let add = 1i64 << (s - 1);
    if v >= 0 {
        (v + add) >> s
    } else {
        -((-v + add) >> s)
    }
}

fn saturate8(v: i64, saturations: &mut u64) -> i8 {
    if v > i64::from(i8::MAX) {
        *saturations += 1;
        i8::MAX
    } else if v < i64::from(i8::MIN) {
        *saturations += 1;
        i8::MIN
    } else {
        v as i8
    }
}

fn weights_as_i8(layer: &LayerDescriptor, stage: usize, m: i32) -> Result<Vec<i8>> {
    match layer.weights.as_ref().map(|w| &w.data) {
        Some(WeightData::F32(values)) => Ok(quant::quantize_slice(values, m).0),
        Some(WeightData::I8(values)) => Ok(values.as_ref().clone()),
        Some(WeightData::ShapeOnly) | None => Err(SimError::MissingWeights { stage }),
    }
}

/// Bias codes rescaled to the accumulator's 2^−(m_in+m_w) scale. The shift
/// truncates to 32 bits like the hardware adder would.
fn bias_accumulator_init(layer: &LayerDescriptor, stage: usize, q: &StageQuant) -> Result<Vec<i32>> {
    let g = Geometry::of(layer);
    let Some(bias) = layer.bias.as_ref() else {
        return Ok(vec![0; g.c_out]);
    };
    let codes: Vec<i8> = match &bias.data {
        WeightData::F32(values) => quant::quantize_slice(values, q.m_bias).0,
        WeightData::I8(values) => values.as_ref().clone(),
        WeightData::ShapeOnly => return Err(SimError::MissingWeights { stage }),
    };
    let s = q.m_in + q.m_weights - q.m_bias;
    Ok(codes.iter().map(|&b| shift_round(i64::from(b), -s) as i32).collect())
}

fn conv_pass(
    g: &Geometry,
    input: &[i8],
    weights: &[i8],
    bias_init: &[i32],
    relu: bool,
    shift: i32,
    schedule: &StageSchedule,
    saturations: &mut u64,
) -> (Vec<i8>, u64) {
    let mut out = vec![0i8; g.c_out * g.h_out * g.w_out];
    let dot = g.dot_len();
    let khw = g.kh * g.kw;
    let mut macs = 0u64;
    for round in &schedule.lane_rounds {
        for oy in 0..g.h_out {
            for ox in 0..g.w_out {
                for &co in round {
                    let w_base = co * dot;
                    let mut acc: i32 = bias_init[co];
                    for &(offset, len) in &schedule.fetch_chunks {
                        for t in offset..offset + len {
                            let ci = t / khw;
                            let rem = t % khw;
                            let (ky, kx) = (rem / g.kw, rem % g.kw);
                            let iy = (oy * g.sh + ky * g.dh) as isize - g.ph as isize;
                            let ix = (ox * g.sw + kx * g.dw) as isize - g.pw as isize;
                            let x = if iy >= 0 && (iy as usize) < g.h_in && ix >= 0 && (ix as usize) < g.w_in {
                                input[(ci * g.h_in + iy as usize) * g.w_in + ix as usize]
                            } else {
                                0
                            };
                            acc = acc.wrapping_add(i32::from(x) * i32::from(weights[w_base + t]));
                        }
                    }
                    macs += dot as u64;
                    if relu && acc < 0 {
                        acc = 0;
                    }
                    let v = shift_round(i64::from(acc), shift);
                    out[(co * g.h_out + oy) * g.w_out + ox] = saturate8(v, saturations);
                }
            }
        }
    }
    (out, macs)
}

fn pool_pass(layer: &LayerDescriptor, input: &[i8]) -> Vec<i8> {
    let g = Geometry::of(layer);
    let mut out = vec![0i8; g.c_out * g.h_out * g.w_out];
    for c in 0..g.c_out {
        for oy in 0..g.h_out {
            for ox in 0..g.w_out {
                // Padded positions are excluded: maximum over the window's
                // real elements only (padding behaves as minus infinity).
                let mut best = i8::MIN;
                for ky in 0..g.kh {
                    for kx in 0..g.kw {
                        let iy = (oy * g.sh + ky * g.dh) as isize - g.ph as isize;
                        let ix = (ox * g.sw + kx * g.dw) as isize - g.pw as isize;
                        if iy >= 0 && (iy as usize) < g.h_in && ix >= 0 && (ix as usize) < g.w_in {
                            best = best.max(input[(c * g.h_in + iy as usize) * g.w_in + ix as usize]);
                        }
                    }
                }
                out[(c * g.h_out + oy) * g.w_out + ox] = best;
            }
        }
    }
    out
}

fn check_stage_input(stage: &PipelineStage, stage_index: usize, input: &QuantizedTensor, q: &StageQuant) -> Result<()> {
    let want = stage.in_shape();
    let matches = if stage.buffer_kind == crate::ir::BufferKind::Fc {
        input.element_count() == want.elements()
    } else {
        input.dims == vec![want.c, want.h, want.w]
    };
    if !matches {
        return Err(SimError::ShapeMismatch {
            stage: stage_index,
            got: format!("{:?}", input.dims),
            want: want.to_string(),
        });
    }
    if input.m != q.m_in {
        return Err(SimError::FormatMismatch { stage: stage_index, got_m: input.m, want_m: q.m_in });
    }
    Ok(())
}

/// Executes one stage under a caller-supplied schedule (trusted as valid).
pub fn run_with_schedule(
    stage: &PipelineStage,
    input: &QuantizedTensor,
    schedule: &StageSchedule,
    spec: &QuantSpec,
) -> Result<(QuantizedTensor, StageReport)> {
    let stage_index = schedule.stage;
    let q = spec.for_stage(stage_index);
    check_stage_input(stage, stage_index, input, &q)?;
    let mut saturations = 0u64;
    let mut macs = 0u64;

    let after_compute: Vec<i8> = match stage.compute() {
        Some(layer) => {
            let g = Geometry::of(layer);
            let weights = weights_as_i8(layer, stage_index, q.m_weights)?;
            let bias_init = bias_accumulator_init(layer, stage_index, &q)?;
            let (out, m) = conv_pass(
                &g,
                &input.values,
                &weights,
                &bias_init,
                layer.has_relu,
                q.requant_shift(),
                schedule,
                &mut saturations,
            );
            macs = m;
            out
        }
        None => input.values.clone(),
    };

    let (out_values, out_shape) = match &stage.pool {
        Some(pool) => (pool_pass(pool, &after_compute), pool.out_shape),
        None => (after_compute, stage.out_shape()),
    };
    let output = QuantizedTensor::new(vec![out_shape.c, out_shape.h, out_shape.w], out_values, q.m_out);
    let report = StageReport {
        stage: stage_index,
        mac_count: macs,
        passes: schedule.passes(stage),
        saturation_events: saturations,
    };
    Ok((output, report))
}

/// Plans, validates and executes one stage.
pub fn run_stage(
    stage: &PipelineStage,
    stage_index: usize,
    input: &QuantizedTensor,
    opt: HardwareOption,
    spec: &QuantSpec,
) -> Result<(QuantizedTensor, StageReport)> {
    let schedule = StageSchedule::plan(stage, stage_index, opt);
    schedule.validate(stage)?;
    run_with_schedule(stage, input, &schedule, spec)
}

/// Runs the whole pipeline, returning the (still quantized) logits and the
/// per-stage work reports. Softmax, when flagged, is not applied here: the
/// device pipeline ends at the logits; use [`softmax`] on the dequantized
/// values for reporting.
pub fn run_network(
    stages: &[PipelineStage],
    input: &QuantizedTensor,
    opt: HardwareOption,
    spec: &QuantSpec,
) -> Result<(QuantizedTensor, Vec<StageReport>)> {
    let mut current = input.clone();
    let mut reports = Vec::with_capacity(stages.len());
    for (k, stage) in stages.iter().enumerate() {
        if stage.buffer_kind == crate::ir::BufferKind::Fc {
            // The flattening between the convolutional and FC parts is a pure
            // layout change in channel-major order.
            let n = current.element_count();
            current.dims = vec![n, 1, 1];
        }
        let (next, report) = run_stage(stage, k, &current, opt, spec)?;
        current = next;
        reports.push(report);
    }
    Ok((current, reports))
}

/// Numerically stable softmax over dequantized logits.
pub fn softmax(logits: &QuantizedTensor) -> Vec<f32> {
    let vals = logits.dequantized();
    let max = vals.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = vals.iter().map(|v| (v - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn float_weights(layer: &LayerDescriptor, stage: usize, m_w: i32) -> Result<Vec<f32>> {
    match layer.weights.as_ref().map(|w| &w.data) {
        Some(WeightData::F32(values)) => Ok(values.as_ref().clone()),
        Some(WeightData::I8(values)) => Ok(values.iter().map(|&v| quant::dequantize(i32::from(v), m_w) as f32).collect()),
        Some(WeightData::ShapeOnly) | None => Err(SimError::MissingWeights { stage }),
    }
}

fn float_bias(layer: &LayerDescriptor, stage: usize, m_b: i32) -> Result<Vec<f32>> {
    let g = Geometry::of(layer);
    match layer.bias.as_ref().map(|b| &b.data) {
        None => Ok(vec![0.0; g.c_out]),
        Some(WeightData::F32(values)) => Ok(values.as_ref().clone()),
        Some(WeightData::I8(values)) => Ok(values.iter().map(|&v| quant::dequantize(i32::from(v), m_b) as f32).collect()),
        Some(WeightData::ShapeOnly) => Err(SimError::MissingWeights { stage }),
    }
}

fn conv_pass_float(g: &Geometry, input: &[f32], weights: &[f32], bias: &[f32], relu: bool) -> Vec<f32> {
    let dot = g.dot_len();
    let khw = g.kh * g.kw;
    let mut out = vec![0f32; g.c_out * g.h_out * g.w_out];
    for co in 0..g.c_out {
        for oy in 0..g.h_out {
            for ox in 0..g.w_out {
                let mut acc = f64::from(bias[co]);
                for t in 0..dot {
                    let ci = t / khw;
                    let rem = t % khw;
                    let (ky, kx) = (rem / g.kw, rem % g.kw);
                    let iy = (oy * g.sh + ky * g.dh) as isize - g.ph as isize;
                    let ix = (ox * g.sw + kx * g.dw) as isize - g.pw as isize;
                    if iy >= 0 && (iy as usize) < g.h_in && ix >= 0 && (ix as usize) < g.w_in {
                        let x = input[(ci * g.h_in + iy as usize) * g.w_in + ix as usize];
                        acc += f64::from(x) * f64::from(weights[co * dot + t]);
                    }
                }
                if relu && acc < 0.0 {
                    acc = 0.0;
                }
                out[(co * g.h_out + oy) * g.w_out + ox] = acc as f32;
            }
        }
    }
    out
}

fn pool_pass_float(layer: &LayerDescriptor, input: &[f32]) -> Vec<f32> {
    let g = Geometry::of(layer);
    let mut out = vec![0f32; g.c_out * g.h_out * g.w_out];
    for c in 0..g.c_out {
        for oy in 0..g.h_out {
            for ox in 0..g.w_out {
                let mut best = f32::NEG_INFINITY;
                for ky in 0..g.kh {
                    for kx in 0..g.kw {
                        let iy = (oy * g.sh + ky * g.dh) as isize - g.ph as isize;
                        let ix = (ox * g.sw + kx * g.dw) as isize - g.pw as isize;
                        if iy >= 0 && (iy as usize) < g.h_in && ix >= 0 && (ix as usize) < g.w_in {
                            best = best.max(input[(c * g.h_in + iy as usize) * g.w_in + ix as usize]);
                        }
                    }
                }
                out[(c * g.h_out + oy) * g.w_out + ox] = best;
            }
        }
    }
    out
}

/// Which weights the float reference should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloatWeights {
    /// The original float parameters: the "what the model would have
    /// computed" reference.
    Original,
    /// Parameters passed through quantize-then-dequantize, isolating the
    /// output-rounding error of the integer pipeline.
    Dequantized,
}

/// Float reference for one stage (monolithic, no lanes, no output
/// quantization).
pub fn run_stage_float(
    stage: &PipelineStage,
    stage_index: usize,
    input: &[f32],
    spec: &QuantSpec,
    mode: FloatWeights,
) -> Result<Vec<f32>> {
    let q = spec.for_stage(stage_index);
    let after_compute = match stage.compute() {
        Some(layer) => {
            let g = Geometry::of(layer);
            let mut weights = float_weights(layer, stage_index, q.m_weights)?;
            let mut bias = float_bias(layer, stage_index, q.m_bias)?;
            if mode == FloatWeights::Dequantized {
                for w in &mut weights {
                    let (c, _) = quant::quantize_value(f64::from(*w), q.m_weights);
                    *w = quant::dequantize(i32::from(c), q.m_weights) as f32;
                }
                for b in &mut bias {
                    let (c, _) = quant::quantize_value(f64::from(*b), q.m_bias);
                    *b = quant::dequantize(i32::from(c), q.m_bias) as f32;
                }
            }
            conv_pass_float(&g, input, &weights, &bias, layer.has_relu)
        }
        None => input.to_vec(),
    };
    Ok(match &stage.pool {
        Some(pool) => pool_pass_float(pool, &after_compute),
        None => after_compute,
    })
}

/// Float reference for the whole network (pre-softmax logits).
pub fn run_network_float(stages: &[PipelineStage], input: &[f32], spec: &QuantSpec, mode: FloatWeights) -> Result<Vec<f32>> {
    let mut current = input.to_vec();
    for (k, stage) in stages.iter().enumerate() {
        current = run_stage_float(stage, k, &current, spec, mode)?;
    }
    Ok(current)
}

/// True iff the stage's output is bit-identical under every given option.
pub fn lane_equivalence_check(
    stage: &PipelineStage,
    stage_index: usize,
    input: &QuantizedTensor,
    opts: &[HardwareOption],
    spec: &QuantSpec,
) -> Result<bool> {
    let mut reference: Option<QuantizedTensor> = None;
    for &opt in opts {
        let (out, _) = run_stage(stage, stage_index, input, opt, spec)?;
        match &reference {
            None => reference = Some(out),
            Some(r) => {
                if r.values != out.values {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Flat indices where two equally-shaped tensors disagree.
pub fn value_mismatches(a: &QuantizedTensor, b: &QuantizedTensor) -> Vec<usize> {
    a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .filter_map(|(i, (x, y))| (x != y).then_some(i))
        .collect()
}

/// Reads an activation file: an ASCII header line `c h w` followed by
/// c·h·w little-endian float32 values.
pub fn read_input_file(path: &Path) -> Result<(TensorShape, Vec<f32>)> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| SimError::BadInput("missing dims header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| SimError::BadInput("dims header is not ASCII".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| SimError::BadInput(format!("bad dimension {t:?}"))))
        .collect::<Result<_>>()?;
    let [c, h, w] = dims.as_slice() else {
        return Err(SimError::BadInput(format!("expected 3 dims, got {}", dims.len())));
    };
    let payload = &bytes[newline + 1..];
    let expected = c * h * w * 4;
    if payload.len() != expected {
        return Err(SimError::BadInput(format!(
            "payload is {} bytes, dims {c}x{h}x{w} require {expected}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((TensorShape::new(*c, *h, *w), values))
}

/// Writes the activation file format read by [`read_input_file`].
pub fn write_input_file(path: &Path, shape: TensorShape, values: &[f32]) -> Result<()> {
    assert_eq!(shape.elements(), values.len());
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{} {} {}", shape.c, shape.h, shape.w)?;
    for v in values {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
