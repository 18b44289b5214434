//! Procedurally generated spatial-reasoning image tasks, two hand-built
//! convolutional classifiers, and a scorer for prediction files.
//!
//! - [`geometry`]: shapes, areas, convexity and pair relations
//! - [`raster`]: scenes and pixel-centre rasterization
//! - [`tasks`]: dataset generation, split policies and manifests
//! - [`kernelnet`]: the corner template bank and the disk-response convexity net
//! - [`eval`]: prediction CSVs, confusion tables and reports
//! - [`cli`]: the `spatial-bench` command line

// range checks are written as `!(x > lo)` so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eval;
pub mod geometry;
pub mod imageio;
pub mod kernelnet;
pub mod raster;
pub mod rng;
pub mod tasks;
