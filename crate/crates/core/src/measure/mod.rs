//! Measurement protocols: Pauli expectation from shots, auxiliary-qubit
//! overlaps and correlation functions, FFT spectra and spectroscopy.

mod aux;
mod basis;
mod fft;
mod spectroscopy;

pub use aux::{aux_circuit, aux_overlap, correlation, correlation_circuit, AuxEstimate, AuxMode};
pub use basis::{measure_pauli, measure_pauli_with_rng, Estimate};
pub use fft::{fft_spectrum, FftOptions, Peak, SpectrumResult};
pub use spectroscopy::{spectroscopy, SpectroscopyCurve, SpectroscopyPlan};
