//! Density-matrix emulation of small transmon devices with calibration-driven
//! noise, and fitting of the noise model to measured distributions.

pub mod benchmark;
pub mod channels;
pub mod circuit;
pub mod cli;
pub mod density;
pub mod device;
pub mod distribution;
pub mod emulator;
pub mod error;
pub mod fit;
pub mod report;
pub mod schedule;
pub mod transpile;

pub use circuit::{Circuit, Gate, GateKind};
pub use device::{DeviceModel, Edge};
pub use distribution::{tvd, ShotDistribution};
pub use emulator::Emulator;
pub use error::{Error, Result};
pub use transpile::{NoiseParams, NoiseToggles};
