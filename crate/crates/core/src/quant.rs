//! Fixed-point quantization.
//!
//! Values are stored as signed integers N interpreted as N × 2^−m. The data
//! path is 8 bits wide; m is a per-stage shift exponent supplied by the user
//! (one entry each for weights, biases, stage input and stage output).
//! Rounding is half-away-from-zero; out-of-range values saturate silently and
//! are counted.

use crate::ir::{PipelineStage, WeightData, WeightTensor};
use crate::onnx::{Dtype, RawTensor};
use std::collections::BTreeMap;
use thiserror::Error;

/// Bit width of the feature/weight data path.
pub const DATA_WIDTH: u32 = 8;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("bad quantization config: {0}")]
    BadConfig(String),
    #[error("{0} carries shape information only; no values to quantize")]
    ShapeOnlyData(String),
    #[error("stage {from} writes with m={m_out} but stage {to} reads with m={m_in}; the pipeline cannot rescale between stages")]
    ChainMismatch { from: usize, to: usize, m_out: i32, m_in: i32 },
    #[error("expected a float32 tensor, got {0:?}")]
    NotFloat(Dtype),
}

pub type Result<T> = std::result::Result<T, QuantError>;

/// Shift exponents for one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageQuant {
    pub m_weights: i32,
    pub m_bias: i32,
    pub m_in: i32,
    pub m_out: i32,
}

impl StageQuant {
    pub fn uniform(m: i32) -> Self {
        StageQuant { m_weights: m, m_bias: m, m_in: m, m_out: m }
    }

    /// Right-shift applied when requantizing the accumulator to the output
    /// format.
    pub fn requant_shift(&self) -> i32 {
        self.m_in + self.m_weights - self.m_out
    }
}

/// Per-stage quantization table. Stages without an explicit record fall back
/// to a uniform global m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantSpec {
    pub width: u32,
    pub records: BTreeMap<usize, StageQuant>,
    pub global_m: i32,
}

impl QuantSpec {
    pub fn uniform(global_m: i32) -> Self {
        QuantSpec { width: DATA_WIDTH, records: BTreeMap::new(), global_m }
    }

    pub fn with_records(records: BTreeMap<usize, StageQuant>, global_m: i32) -> Self {
        QuantSpec { width: DATA_WIDTH, records, global_m }
    }

    pub fn for_stage(&self, index: usize) -> StageQuant {
        self.records.get(&index).copied().unwrap_or_else(|| StageQuant::uniform(self.global_m))
    }

    /// Parses the plain-text config: one record per stage, whitespace
    /// separated: `stage_index m_weights m_bias m_in m_out`. `#` starts a
    /// comment; blank lines are skipped.
    pub fn parse(text: &str, global_m: i32) -> Result<Self> {
        let mut records = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(QuantError::BadConfig(format!(
                    "line {}: expected 5 fields (stage m_w m_b m_in m_out), got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str, what: &str| {
                s.parse::<i64>().map_err(|_| {
                    QuantError::BadConfig(format!("line {}: {what} {s:?} is not an integer", lineno + 1))
                })
            };
            let index = parse(fields[0], "stage index")?;
            if index < 0 {
                return Err(QuantError::BadConfig(format!("line {}: negative stage index", lineno + 1)));
            }
            let rec = StageQuant {
                m_weights: parse(fields[1], "m_weights")? as i32,
                m_bias: parse(fields[2], "m_bias")? as i32,
                m_in: parse(fields[3], "m_in")? as i32,
                m_out: parse(fields[4], "m_out")? as i32,
            };
            if records.insert(index as usize, rec).is_some() {
                return Err(QuantError::BadConfig(format!("line {}: duplicate record for stage {index}", lineno + 1)));
            }
        }
        Ok(QuantSpec { width: DATA_WIDTH, records, global_m })
    }

    /// Checks that adjacent stages agree on the shared tensor format: stage
    /// k's m_out must equal stage k+1's m_in, and a stage without a compute
    /// layer cannot rescale (m_in == m_out).
    pub fn validate_chain(&self, stages: &[PipelineStage]) -> Result<()> {
        for (k, stage) in stages.iter().enumerate() {
            let q = self.for_stage(k);
            if stage.compute().is_none() && q.m_in != q.m_out {
                return Err(QuantError::ChainMismatch { from: k, to: k, m_out: q.m_out, m_in: q.m_in });
            }
            if k + 1 < stages.len() {
                let next = self.for_stage(k + 1);
                if q.m_out != next.m_in {
                    return Err(QuantError::ChainMismatch {
                        from: k,
                        to: k + 1,
                        m_out: q.m_out,
                        m_in: next.m_in,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Quantized tensor plus the shift its integers are interpreted under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedTensor {
    pub dims: Vec<usize>,
    pub values: Vec<i8>,
    pub m: i32,
}

impl QuantizedTensor {
    pub fn new(dims: Vec<usize>, values: Vec<i8>, m: i32) -> Self {
        assert_eq!(dims.iter().product::<usize>(), values.len(), "dims/value count mismatch");
        QuantizedTensor { dims, values, m }
    }

    pub fn zeros(dims: Vec<usize>, m: i32) -> Self {
        let n = dims.iter().product();
        QuantizedTensor { dims, values: vec![0; n], m }
    }

    pub fn element_count(&self) -> usize {
        self.values.len()
    }

    pub fn dequantized(&self) -> Vec<f32> {
        self.values.iter().map(|&v| dequantize(v as i32, self.m) as f32).collect()
    }
}

/// x rounded half away from zero (f64::round's contract).
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

fn scale(m: i32) -> f64 {
    2f64.powi(m)
}

/// Quantizes one value to the 8-bit data path; the flag reports saturation.
pub fn quantize_value(x: f64, m: i32) -> (i8, bool) {
    let code = round_half_away(x * scale(m));
    if code > f64::from(i8::MAX) {
        (i8::MAX, true)
    } else if code < f64::from(i8::MIN) {
        (i8::MIN, true)
    } else {
        (code as i8, false)
    }
}

pub fn dequantize(code: i32, m: i32) -> f64 {
    f64::from(code) * scale(-m)
}

/// Quantizes a slice, returning values and the saturation count.
pub fn quantize_slice(xs: &[f32], m: i32) -> (Vec<i8>, u64) {
    let mut saturated = 0u64;
    let values = xs
        .iter()
        .map(|&x| {
            let (v, sat) = quantize_value(f64::from(x), m);
            saturated += u64::from(sat);
            v
        })
        .collect();
    (values, saturated)
}

/// Quantizes a float32 initializer tensor.
pub fn quantize_tensor(t: &RawTensor, m: i32) -> Result<(QuantizedTensor, u64)> {
    if t.dtype != Dtype::F32 {
        return Err(QuantError::NotFloat(t.dtype));
    }
    let (values, saturated) = quantize_slice(&t.f32_values(), m);
    let dims = t.dims.iter().map(|&d| d.max(0) as usize).collect();
    Ok((QuantizedTensor::new(dims, values, m), saturated))
}

/// Quantizes an IR weight handle. Float payloads are quantized; already-8-bit
/// payloads pass through and adopt m as their declared shift.
pub fn quantize_weight(w: &WeightTensor, m: i32) -> Result<(QuantizedTensor, u64)> {
    match &w.data {
        WeightData::F32(values) => {
            let (q, saturated) = quantize_slice(values, m);
            Ok((QuantizedTensor::new(w.dims.clone(), q, m), saturated))
        }
        WeightData::I8(values) => Ok((QuantizedTensor::new(w.dims.clone(), values.as_ref().clone(), m), 0)),
        WeightData::ShapeOnly => Err(QuantError::ShapeOnlyData("weight tensor".into())),
    }
}

/// Largest absolute round-trip error over the tensor's elements.
pub fn quantization_error(t: &RawTensor, m: i32) -> Result<f64> {
    if t.dtype != Dtype::F32 {
        return Err(QuantError::NotFloat(t.dtype));
    }
    let mut worst = 0f64;
    for x in t.f32_values() {
        let (code, _) = quantize_value(f64::from(x), m);
        let err = (f64::from(x) - dequantize(i32::from(code), m)).abs();
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onnx::build;
    use proptest::prelude::*;

    #[test]
    fn exactly_representable_value() {
        assert_eq!(quantize_value(0.75, 4), (12, false));
        assert_eq!(dequantize(12, 4), 0.75);
    }

    #[test]
    fn zero_maps_to_zero() {
        for m in [-3, 0, 4, 7] {
            assert_eq!(quantize_value(0.0, m), (0, false));
        }
    }

    #[test]
    fn large_value_saturates() {
        let t = build::tensor_f32("t", &[1], &[100.0]);
        let (q, saturated) = quantize_tensor(&t, 4).unwrap();
        assert_eq!(q.values, vec![127]);
        assert_eq!(saturated, 1);
    }

    #[test]
    fn negative_saturation_clamps_to_min() {
        assert_eq!(quantize_value(-100.0, 4), (-128, true));
    }

    #[test]
    fn half_rounds_away_from_zero() {
        // 0.09375·16 = 1.5 and −0.09375·16 = −1.5 sit exactly on the
        // midpoint.
        assert_eq!(quantize_value(0.09375, 4), (2, false));
        assert_eq!(quantize_value(-0.09375, 4), (-2, false));
    }

    #[test]
    fn small_value_rounds_to_zero_with_full_error() {
        let t = build::tensor_f32("t", &[1], &[0.03]);
        let (q, _) = quantize_tensor(&t, 4).unwrap();
        assert_eq!(q.values, vec![0]);
        let err = quantization_error(&t, 4).unwrap();
        assert!((err - 0.03).abs() < 1e-9, "{err}");
    }

    #[test]
    fn exact_tensor_has_zero_error() {
        let t = build::tensor_f32("t", &[4], &[0.5, -0.25, 1.0, 0.0]);
        assert_eq!(quantization_error(&t, 4).unwrap(), 0.0);
    }

    #[test]
    fn saturated_error_is_distance_to_clamp() {
        let t = build::tensor_f32("t", &[1], &[100.0]);
        let err = quantization_error(&t, 4).unwrap();
        assert!((err - (100.0 - 127.0 / 16.0)).abs() < 1e-9);
    }

    #[test]
    fn config_parser_reads_records_and_defaults() {
        let text = "# stage m_w m_b m_in m_out\n0 6 6 5 4\n\n2 7 7 4 4   # tail comment\n";
        let spec = QuantSpec::parse(text, 5).unwrap();
        assert_eq!(spec.for_stage(0), StageQuant { m_weights: 6, m_bias: 6, m_in: 5, m_out: 4 });
        assert_eq!(spec.for_stage(1), StageQuant::uniform(5));
        assert_eq!(spec.for_stage(2), StageQuant { m_weights: 7, m_bias: 7, m_in: 4, m_out: 4 });
    }

    #[test]
    fn config_parser_rejects_malformed_lines() {
        assert!(matches!(QuantSpec::parse("0 1 2 3", 5), Err(QuantError::BadConfig(_))));
        assert!(matches!(QuantSpec::parse("0 1 2 3 x", 5), Err(QuantError::BadConfig(_))));
        assert!(matches!(QuantSpec::parse("0 1 2 3 4\n0 1 2 3 4", 5), Err(QuantError::BadConfig(_))));
    }

    #[test]
    fn shape_only_weights_cannot_be_quantized() {
        let w = WeightTensor::shape_only(&[2, 2]);
        assert!(matches!(quantize_weight(&w, 4), Err(QuantError::ShapeOnlyData(_))));
    }

    proptest! {
        #[test]
        fn monotone_in_value(a in -20.0f64..20.0, b in -20.0f64..20.0, m in -2i32..8) {
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            let (qx, _) = quantize_value(x, m);
            let (qy, _) = quantize_value(y, m);
            prop_assert!(qx <= qy, "{x} -> {qx}, {y} -> {qy}");
        }

        #[test]
        fn non_saturating_round_trip_bound(x in -3.9f64..3.9, m in 0i32..5) {
            // |x|·2^m ≤ 3.9·16 < 127: never saturates in this range.
            let (q, sat) = quantize_value(x, m);
            prop_assert!(!sat);
            let err = (x - dequantize(i32::from(q), m)).abs();
            let bound = 2f64.powi(-m - 1) * (1.0 + 1e-12);
            prop_assert!(err <= bound, "err {err} > bound {bound}");
        }

        #[test]
        fn requantizing_dequantized_values_is_exact(code in -128i32..=127, m in -2i32..8) {
            let x = dequantize(code, m);
            let (q, sat) = quantize_value(x, m);
            prop_assert!(!sat);
            prop_assert_eq!(i32::from(q), code);
        }
    }
}
