//! Python bindings for the pipeline fitter.
//!
//! Exposes the round trip a notebook needs: load or synthesize a model,
//! inspect its lowered form, explore hardware options against a device,
//! write a configuration bundle, and run it in the functional simulator.
//! Results come back as plain Python values (tuples, lists, strings).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use lanefit::cost::{self, HardwareOption};
use lanefit::dse::Thresholds;
use lanefit::emit::DesignBundle;
use lanefit::ir;
use lanefit::pipeline::{self, ParsedModel, PipelineError, Strategy};
use lanefit::quant::{self, QuantSpec};
use lanefit::sim;

fn err(e: PipelineError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_strategy(strategy: &str, seed: u64) -> PyResult<Strategy> {
    match strategy {
        "bf" => Ok(Strategy::Brute),
        "rl" => Ok(Strategy::Rl { seed }),
        other => Err(PyValueError::new_err(format!("unknown strategy {other:?} (use \"bf\" or \"rl\")"))),
    }
}

fn parse_thresholds(text: Option<&str>) -> PyResult<Thresholds> {
    match text {
        Some(t) => Thresholds::parse(t).map_err(|e| PyValueError::new_err(e.to_string())),
        None => Ok(Thresholds::default()),
    }
}

/// A decoded and lowered model.
#[pyclass(frozen, name = "Model")]
struct Model {
    bytes: Vec<u8>,
    inner: ParsedModel,
}

#[pymethods]
impl Model {
    #[new]
    fn new(model_bytes: &[u8]) -> PyResult<Self> {
        let inner = pipeline::parse_model_bytes(model_bytes).map_err(err)?;
        Ok(Model { bytes: model_bytes.to_vec(), inner })
    }

    fn layer_count(&self) -> usize {
        self.inner.layers.len()
    }

    fn stage_count(&self) -> usize {
        self.inner.stages.len()
    }

    /// The lowered layers, one text line each.
    fn dump(&self) -> String {
        ir::dump_ir(&self.inner.layers)
    }

    fn diagnostics(&self) -> Vec<String> {
        self.inner.diagnostics.clone()
    }

    /// Every (n_i, n_l) pair the architecture admits for this model.
    fn legal_options(&self) -> PyResult<Vec<(usize, usize)>> {
        let space = lanefit::dse::LegalitySpace::for_layers(
            &self.inner.layers,
            &lanefit::dse::ArchLimits::default(),
        )
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(space.options().map(|o| (o.n_i, o.n_l)).collect())
    }

    /// Searches the legal space on `target`; returns
    /// `(best_option_or_None, f_avg, evaluations)`.
    #[pyo3(signature = (target, thresholds=None, strategy="bf", seed=0))]
    fn explore(
        &self,
        target: &str,
        thresholds: Option<&str>,
        strategy: &str,
        seed: u64,
    ) -> PyResult<(Option<(usize, usize)>, f64, usize)> {
        let targets = cost::default_targets();
        let target = cost::find_target(&targets, target).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let th = parse_thresholds(thresholds)?;
        let strategy = parse_strategy(strategy, seed)?;
        match pipeline::explore(&self.inner, target, &th, strategy) {
            Ok(outcome) => Ok((
                outcome.result.h_best.map(|o| (o.n_i, o.n_l)),
                outcome.result.f_max,
                outcome.result.evaluations,
            )),
            Err(PipelineError::Dse(lanefit::dse::DseError::NoFeasibleOption { evaluations })) => {
                Ok((None, 0.0, evaluations))
            }
            Err(e) => Err(err(e)),
        }
    }

    /// Quantizes and writes a bundle to `out_dir`; returns
    /// `((n_i, n_l), fingerprint, written_files)`.
    #[pyo3(signature = (target, out_dir, option=None, global_m=4, thresholds=None, strategy="bf", seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        &self,
        target: &str,
        out_dir: &str,
        option: Option<(usize, usize)>,
        global_m: i32,
        thresholds: Option<&str>,
        strategy: &str,
        seed: u64,
    ) -> PyResult<((usize, usize), String, Vec<String>)> {
        let opt = match option {
            Some((n_i, n_l)) => {
                let opt = HardwareOption::new(n_i, n_l);
                if !pipeline::option_is_legal(&self.inner, opt).map_err(err)? {
                    return Err(PyValueError::new_err(format!("option ({n_i},{n_l}) is not in the legal space")));
                }
                opt
            }
            None => {
                let (best, _, evaluations) = self.explore(target, thresholds, strategy, seed)?;
                match best {
                    Some((n_i, n_l)) => HardwareOption::new(n_i, n_l),
                    None => {
                        return Err(PyRuntimeError::new_err(format!(
                            "no feasible option on {target} ({evaluations} evaluated)"
                        )))
                    }
                }
            }
        };
        let spec = QuantSpec::uniform(global_m);
        let bundle = pipeline::build_bundle(&self.bytes, &self.inner, opt, &spec).map_err(err)?;
        let written = bundle.emit(std::path::Path::new(out_dir)).map_err(|e| err(e.into()))?;
        Ok((
            (opt.n_i, opt.n_l),
            bundle.fingerprint.clone(),
            written.iter().map(|p| p.display().to_string()).collect(),
        ))
    }
}

/// A small self-contained demo model, as ONNX-format bytes.
#[pyfunction]
fn demo_model_bytes(py: Python<'_>) -> Py<PyBytes> {
    PyBytes::new_bound(py, &pipeline::demo_model_bytes()).into()
}

/// The built-in device catalog as
/// `(name, alm, dsp, ram_blocks, mem_bits)` rows.
#[pyfunction]
fn targets() -> Vec<(String, u64, u64, u64, u64)> {
    cost::default_targets()
        .into_iter()
        .map(|t| (t.name, t.alm_capacity, t.dsp_capacity, t.ram_block_capacity, t.mem_bit_capacity))
        .collect()
}

/// Quantizes floats to 8-bit codes with m fractional bits; returns
/// `(codes, saturated_count)`.
#[pyfunction]
fn quantize(values: Vec<f32>, m: i32) -> (Vec<i8>, u64) {
    quant::quantize_slice(&values, m)
}

/// Runs a bundle on one activation tensor; returns
/// `(logits, argmax, report_lines)`.
#[pyfunction]
fn emulate(bundle_dir: &str, dims: (usize, usize, usize), values: Vec<f32>) -> PyResult<(Vec<f32>, usize, Vec<String>)> {
    let (c, h, w) = dims;
    if c * h * w != values.len() {
        return Err(PyValueError::new_err(format!(
            "dims {dims:?} require {} values, got {}",
            c * h * w,
            values.len()
        )));
    }
    let bundle = DesignBundle::load(std::path::Path::new(bundle_dir)).map_err(|e| err(e.into()))?;
    let spec = bundle.quant_spec();
    let m_in = spec.for_stage(0).m_in;
    let (codes, _) = quant::quantize_slice(&values, m_in);
    let input = quant::QuantizedTensor::new(vec![c, h, w], codes, m_in);
    let (logits, reports) =
        sim::run_network(&bundle.to_stages(), &input, bundle.option, &spec).map_err(|e| err(e.into()))?;
    let dequant = logits.dequantized();
    let argmax = dequant
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lines = sim::render_reports(&reports).lines().map(str::to_string).collect();
    Ok((dequant, argmax, lines))
}

#[pymodule]
fn lanefit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(demo_model_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(targets, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(emulate, m)?)?;
    Ok(())
}
