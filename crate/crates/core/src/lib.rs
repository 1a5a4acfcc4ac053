//! Design and verification of detuning-modulated composite pulse trains for
//! two-level systems, with a coupled-waveguide realization.
//!
//! The crate designs trains of constant pi pulses whose detunings alternate
//! or are arranged anti-symmetrically so that the population transfer is
//! complete and flat to first or second order in the pulse area, quantifies
//! their robustness to systematic area, detuning, and coupling errors, and
//! maps them onto two-waveguide directional couplers evolved by coupled-mode
//! theory.
//!
//! All values are immutable after construction and every operation is a pure
//! function, safe to call from any number of threads.

pub mod cpt;
pub mod design;
pub mod dynamics;
mod error;
mod poly;
pub mod robustness;
pub mod waveguide;

pub use error::{Error, Result};

pub use cpt::{cpt_residual_oracle, cpt_sum_even, cpt_sum_odd, DetuningRatios};
pub use design::{
    area_derivative, first_order_coefficients, solve, solve_first_order, solve_second_order,
    DesignOrder, DesignResult, DesignSpec,
};
pub use dynamics::{
    compose_sequence, evolve_trace, pulse_propagator, transfer_fidelity, CompositeSequence, Pulse,
    StateVector, TracePoint, Unitary2,
};
pub use robustness::{
    extract_cut, monte_carlo_infidelity, resonant_reference_2d, scan_2d, scan_area_error,
    threshold_width, Axis, CutLine, ErrorAxis, FidelityGrid, GridAxis, MonteCarloCurve, ScanRange,
    ThresholdStatus, ThresholdWidth,
};
pub use waveguide::{
    coupling_from_gap, device_error_map, device_from_sequence, segment_detunings, simulate_device,
    DispersionModel, IntensitySample, Segment, WaveguideDevice,
};
