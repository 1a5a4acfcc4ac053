//! Mapping of composite sequences onto two-waveguide directional couplers and
//! coupled-mode propagation with fabrication-error sweeps.
//!
//! Two evanescently coupled waveguides at a fixed gap obey the same two-state
//! equation as the driven qubit, with the coupling set by the gap,
//! `coupling = a * exp(-b * gap)`, and the phase mismatch set by the width
//! difference through a linear local model of the propagation constant,
//! `mismatch = -dbeta_dw * (w2 - w1) / 2`. A sequence maps to one segment per
//! pulse: the width of waveguide 2 realizes the pulse's detuning and the
//! segment length realizes a pi area at the segment's rates.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{propagator_elements, CompositeSequence, StateVector, Unitary2};
use crate::error::{Error, Result};
use crate::robustness::{Axis, ErrorAxis, FidelityGrid, ScanRange};

/// Dispersion calibration of a coupler family.
///
/// `coupling_prefactor` and `gap_decay` fix the coupling versus gap;
/// `dbeta_dw` is the local slope of the propagation constant versus width at
/// the reference width `w1`. The common propagation constant drops out of the
/// two-mode equations and is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionModel {
    pub coupling_prefactor: f64,
    pub gap_decay: f64,
    pub dbeta_dw: f64,
    pub reference_width: f64,
}

impl DispersionModel {
    pub fn new(
        coupling_prefactor: f64,
        gap_decay: f64,
        dbeta_dw: f64,
        reference_width: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("coupling_prefactor", coupling_prefactor),
            ("gap_decay", gap_decay),
            ("reference_width", reference_width),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if !dbeta_dw.is_finite() || dbeta_dw == 0.0 {
            return Err(Error::invalid(format!("dbeta_dw must be finite and nonzero, got {dbeta_dw}")));
        }
        Ok(DispersionModel { coupling_prefactor, gap_decay, dbeta_dw, reference_width })
    }
}

/// One propagation region: width of waveguide 2 relative to waveguide 1, and
/// physical length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub width_ratio: f64,
    pub length: f64,
}

/// A directional-coupler realization of a composite sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveguideDevice {
    pub gap: f64,
    pub segments: Vec<Segment>,
    pub label: String,
}

impl WaveguideDevice {
    pub fn new(gap: f64, segments: Vec<Segment>, label: impl Into<String>) -> Result<Self> {
        if !gap.is_finite() || gap < 0.0 {
            return Err(Error::invalid(format!("gap must be finite and >= 0, got {gap}")));
        }
        if segments.is_empty() {
            return Err(Error::invalid("device needs at least one segment"));
        }
        for s in &segments {
            if !s.width_ratio.is_finite() || s.width_ratio <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "width ratio must be > 0, got {}",
                    s.width_ratio
                )));
            }
            if !s.length.is_finite() || s.length <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "segment length must be > 0, got {}",
                    s.length
                )));
            }
        }
        Ok(WaveguideDevice { gap, segments, label: label.into() })
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Coupling strength at a given gap: `a * exp(-b * gap)`.
pub fn coupling_from_gap(model: &DispersionModel, gap: f64) -> Result<f64> {
    if !gap.is_finite() || gap < 0.0 {
        return Err(Error::invalid(format!("gap must be finite and >= 0, got {gap}")));
    }
    Ok(model.coupling_prefactor * (-model.gap_decay * gap).exp())
}

/// Realize a sequence as one segment per pulse.
///
/// The pulse's detuning ratio is rescaled to the coupler's coupling, the
/// width of waveguide 2 solves the linear mismatch model
/// `detuning = -dbeta_dw * (w2 - w1) / 2`, and the segment length realizes
/// the pulse's nominal area at the segment's generalized rate.
pub fn device_from_sequence(
    seq: &CompositeSequence,
    model: &DispersionModel,
    gap: f64,
) -> Result<WaveguideDevice> {
    let coupling = coupling_from_gap(model, gap)?;
    let w1 = model.reference_width;
    let mut segments = Vec::with_capacity(seq.len());
    for pulse in seq.pulses() {
        let detuning = pulse.detuning_ratio() * coupling;
        let w2 = w1 - 2.0 * detuning / model.dbeta_dw;
        let width_ratio = w2 / w1;
        if width_ratio <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "detuning {detuning} maps to non-positive width ratio {width_ratio}"
            )));
        }
        let length = pulse.nominal_area() / coupling.hypot(detuning);
        segments.push(Segment { width_ratio, length });
    }
    WaveguideDevice::new(gap, segments, seq.label())
}

/// Per-segment phase mismatch implied by the widths (nominal, unscaled).
pub fn segment_detunings(device: &WaveguideDevice, model: &DispersionModel) -> Vec<f64> {
    device
        .segments
        .iter()
        .map(|s| -model.dbeta_dw * (s.width_ratio - 1.0) * model.reference_width / 2.0)
        .collect()
}

/// One sampled point of the propagation: position and modal intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensitySample {
    pub z: f64,
    pub intensity1: f64,
    pub intensity2: f64,
}

fn check_scales(length_scale: f64, mismatch_scale: f64) -> Result<()> {
    if !length_scale.is_finite() || length_scale <= 0.0 {
        return Err(Error::invalid(format!(
            "length_scale must be finite and > 0, got {length_scale}"
        )));
    }
    if !mismatch_scale.is_finite() {
        return Err(Error::invalid(format!("mismatch_scale must be finite, got {mismatch_scale}")));
    }
    Ok(())
}

/// Composite propagator of the device under mismatch and length errors.
fn device_propagator(
    device: &WaveguideDevice,
    model: &DispersionModel,
    length_scale: f64,
    mismatch_scale: f64,
) -> Result<Unitary2> {
    let coupling = coupling_from_gap(model, device.gap)?;
    let detunings = segment_detunings(device, model);
    let mut total = Unitary2::identity();
    for (segment, nominal_detuning) in device.segments.iter().zip(detunings) {
        let detuning = nominal_detuning * mismatch_scale;
        let area = coupling.hypot(detuning) * segment.length * length_scale;
        total = propagator_elements(coupling, detuning, area).mul(&total);
    }
    Ok(total)
}

/// Propagate light injected into waveguide 1 through every segment.
///
/// Widths (hence mismatches) are scaled by `mismatch_scale` and physical
/// lengths by `length_scale`; the trace is sampled uniformly inside each
/// segment and conserves total power. The final `intensity2` is the device
/// fidelity.
pub fn simulate_device(
    device: &WaveguideDevice,
    model: &DispersionModel,
    n_steps_per_segment: usize,
    length_scale: f64,
    mismatch_scale: f64,
) -> Result<Vec<IntensitySample>> {
    if n_steps_per_segment < 2 {
        return Err(Error::invalid(format!(
            "n_steps_per_segment must be >= 2, got {n_steps_per_segment}"
        )));
    }
    check_scales(length_scale, mismatch_scale)?;
    let coupling = coupling_from_gap(model, device.gap)?;
    let detunings = segment_detunings(device, model);

    let mut trace = Vec::with_capacity(1 + n_steps_per_segment * device.segments.len());
    trace.push(IntensitySample { z: 0.0, intensity1: 1.0, intensity2: 0.0 });
    let mut state = StateVector::ground();
    let mut z0 = 0.0;
    for (segment, nominal_detuning) in device.segments.iter().zip(detunings) {
        let detuning = nominal_detuning * mismatch_scale;
        let length = segment.length * length_scale;
        let rate = coupling.hypot(detuning);
        for step in 1..=n_steps_per_segment {
            let fraction = step as f64 / n_steps_per_segment as f64;
            let partial = propagator_elements(coupling, detuning, rate * length * fraction);
            let (i1, i2) = partial.apply(&state).populations();
            trace.push(IntensitySample { z: z0 + fraction * length, intensity1: i1, intensity2: i2 });
        }
        state = propagator_elements(coupling, detuning, rate * length).apply(&state);
        z0 += length;
    }
    Ok(trace)
}

/// Final transferred intensity over a grid of mismatch errors (axis 1) and
/// length errors (axis 2).
pub fn device_error_map(
    device: &WaveguideDevice,
    model: &DispersionModel,
    mismatch_range: &ScanRange,
    length_range: &ScanRange,
) -> Result<FidelityGrid> {
    if length_range.lo <= -1.0 {
        return Err(Error::invalid("length error must stay above -1"));
    }
    let us = mismatch_range.values();
    let vs = length_range.values();
    let values = (0..us.len() * vs.len())
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / vs.len(), flat % vs.len());
            let u = device_propagator(device, model, 1.0 + vs[j], 1.0 + us[i])?;
            Ok(u.u12.norm_sqr())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityGrid {
        axis1: Axis { range: *mismatch_range, label: ErrorAxis::DetuningError },
        axis2: Some(Axis { range: *length_range, label: ErrorAxis::AreaError }),
        values,
    })
}
