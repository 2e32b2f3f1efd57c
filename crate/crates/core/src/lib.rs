//! CNN-to-FPGA pipeline fitter.
//!
//! The crate takes a convolutional network in ONNX binary format and produces a
//! deployable accelerator configuration for a pipelined OpenCL-style kernel
//! architecture. The flow is: decode the model ([`onnx`]), lower it to a layer
//! IR and fuse it into pipeline stages ([`ir`]), quantize weights to 8-bit
//! fixed point ([`quant`]), search the legal (vector width, lane count) grid
//! against a calibrated resource model ([`cost`], [`dse`]), then emit the
//! configuration bundle ([`emit`]) and check it bit-exactly in the functional
//! simulator ([`sim`]).

pub mod cost;
pub mod dse;
pub mod emit;
pub mod ir;
pub mod onnx;
pub mod pipeline;
pub mod quant;
pub mod sim;
