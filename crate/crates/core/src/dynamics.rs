//! Exact two-level dynamics: single-pulse propagators, sequence composition,
//! transfer fidelity under systematic errors, and state trajectories.
//!
//! A constant-coupling, constant-detuning segment drives the two-state system
//! with the closed-form SU(2) propagator; a composite sequence is the ordered
//! product of segment propagators (first pulse applied first). All rates are
//! expressed in units of a reference coupling and all times in units of its
//! inverse, so only the ratios `detuning / rabi` and the pulse areas matter.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One constant segment: coupling strength, detuning, and nominal pulse area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pulse {
    rabi: f64,
    detuning: f64,
    nominal_area: f64,
}

impl Pulse {
    /// A pulse with the given coupling, detuning, and nominal area (radians).
    ///
    /// Zero coupling would make the segment a pure phase and is rejected; the
    /// detuning may be any finite real value including zero.
    pub fn new(rabi: f64, detuning: f64, nominal_area: f64) -> Result<Self> {
        if !rabi.is_finite() || rabi <= 0.0 {
            return Err(Error::invalid(format!("rabi must be finite and > 0, got {rabi}")));
        }
        if !detuning.is_finite() {
            return Err(Error::invalid(format!("detuning must be finite, got {detuning}")));
        }
        if !nominal_area.is_finite() || nominal_area <= 0.0 {
            return Err(Error::invalid(format!(
                "nominal_area must be finite and > 0, got {nominal_area}"
            )));
        }
        Ok(Pulse { rabi, detuning, nominal_area })
    }

    /// A nominal pi pulse (area = pi).
    pub fn pi(rabi: f64, detuning: f64) -> Result<Self> {
        Pulse::new(rabi, detuning, PI)
    }

    pub fn rabi(&self) -> f64 {
        self.rabi
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn nominal_area(&self) -> f64 {
        self.nominal_area
    }

    /// Generalized Rabi frequency sqrt(rabi^2 + detuning^2).
    pub fn generalized_rabi(&self) -> f64 {
        self.rabi.hypot(self.detuning)
    }

    /// Duration of a pi-area segment, pi / sqrt(rabi^2 + detuning^2).
    pub fn pi_duration(&self) -> f64 {
        PI / self.generalized_rabi()
    }

    /// Duration that realizes the nominal area at this pulse's rates.
    pub fn duration(&self) -> f64 {
        self.nominal_area / self.generalized_rabi()
    }

    /// Ratio detuning / rabi.
    pub fn detuning_ratio(&self) -> f64 {
        self.detuning / self.rabi
    }
}

/// Ordered list of pulses plus a free-form label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeSequence {
    pulses: Vec<Pulse>,
    label: String,
}

impl CompositeSequence {
    pub fn new(pulses: Vec<Pulse>, label: impl Into<String>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::invalid("a composite sequence needs at least one pulse"));
        }
        Ok(CompositeSequence { pulses, label: label.into() })
    }

    /// Equal-coupling pi pulses from a list of detuning/coupling ratios.
    pub fn from_ratios(rabi: f64, ratios: &[f64], label: impl Into<String>) -> Result<Self> {
        let pulses = ratios
            .iter()
            .map(|&x| Pulse::pi(rabi, x * rabi))
            .collect::<Result<Vec<_>>>()?;
        CompositeSequence::new(pulses, label)
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// True when every pulse has nominal area pi (within 1e-12).
    pub fn all_pi_areas(&self) -> bool {
        self.pulses.iter().all(|p| (p.nominal_area - PI).abs() < 1e-12)
    }
}

/// Complex 2x2 propagator.
///
/// Propagators built from single constant segments are of the symmetric
/// SU(2) form: `u21 == u12` and `u22 == conj(u11)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub u11: Complex64,
    pub u12: Complex64,
    pub u21: Complex64,
    pub u22: Complex64,
}

impl Unitary2 {
    pub fn identity() -> Self {
        Unitary2 {
            u11: Complex64::new(1.0, 0.0),
            u12: Complex64::new(0.0, 0.0),
            u21: Complex64::new(0.0, 0.0),
            u22: Complex64::new(1.0, 0.0),
        }
    }

    /// Matrix product self * rhs (rhs acts first).
    pub fn mul(&self, rhs: &Unitary2) -> Unitary2 {
        Unitary2 {
            u11: self.u11 * rhs.u11 + self.u12 * rhs.u21,
            u12: self.u11 * rhs.u12 + self.u12 * rhs.u22,
            u21: self.u21 * rhs.u11 + self.u22 * rhs.u21,
            u22: self.u21 * rhs.u12 + self.u22 * rhs.u22,
        }
    }

    /// Max-norm of U * U^dagger - I.
    pub fn unitarity_defect(&self) -> f64 {
        let a = self.u11 * self.u11.conj() + self.u12 * self.u12.conj() - 1.0;
        let b = self.u11 * self.u21.conj() + self.u12 * self.u22.conj();
        let c = self.u21 * self.u11.conj() + self.u22 * self.u12.conj();
        let d = self.u21 * self.u21.conj() + self.u22 * self.u22.conj() - 1.0;
        a.norm().max(b.norm()).max(c.norm()).max(d.norm())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    pub fn determinant(&self) -> Complex64 {
        self.u11 * self.u22 - self.u12 * self.u21
    }

    /// Apply to a state (column vector).
    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector {
            c1: self.u11 * state.c1 + self.u12 * state.c2,
            c2: self.u21 * state.c1 + self.u22 * state.c2,
        }
    }
}

/// Normalized two-component amplitude vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub c1: Complex64,
    pub c2: Complex64,
}

impl StateVector {
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm = c1.norm_sqr() + c2.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "state must be normalized: |c1|^2 + |c2|^2 = {norm}"
            )));
        }
        Ok(StateVector { c1, c2 })
    }

    /// The state with all population in level 1.
    pub fn ground() -> Self {
        StateVector { c1: Complex64::new(1.0, 0.0), c2: Complex64::new(0.0, 0.0) }
    }

    pub fn populations(&self) -> (f64, f64) {
        (self.c1.norm_sqr(), self.c2.norm_sqr())
    }
}

/// One sampled point of a piecewise evolution: cumulative time and populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub time: f64,
    pub pop1: f64,
    pub pop2: f64,
}

/// Closed-form segment propagator, total in the area argument.
pub(crate) fn propagator_elements(rabi: f64, detuning: f64, area: f64) -> Unitary2 {
    let og = rabi.hypot(detuning);
    let (sin_half, cos_half) = (area / 2.0).sin_cos();
    let u11 = Complex64::new(cos_half, detuning / og * sin_half);
    let u12 = Complex64::new(0.0, -rabi / og * sin_half);
    Unitary2 { u11, u12, u21: u12, u22: u11.conj() }
}

/// Propagator of a single pulse with its area scaled by `area_scale`.
///
/// Evaluates the closed-form SU(2) matrix with effective area
/// `nominal_area * area_scale` at the pulse's coupling and detuning.
pub fn pulse_propagator(pulse: &Pulse, area_scale: f64) -> Result<Unitary2> {
    if !area_scale.is_finite() || area_scale <= 0.0 {
        return Err(Error::invalid(format!(
            "area_scale must be finite and > 0, got {area_scale}"
        )));
    }
    Ok(propagator_elements(pulse.rabi, pulse.detuning, pulse.nominal_area * area_scale))
}

/// Product of segment propagators in application order (pulse 1 acts first).
///
/// Each pulse's effective area scale is `area_scale * per_pulse_scales[n]`
/// when per-pulse scales are given, `area_scale` otherwise.
pub fn compose_sequence(
    seq: &CompositeSequence,
    area_scale: f64,
    per_pulse_scales: Option<&[f64]>,
) -> Result<Unitary2> {
    if let Some(scales) = per_pulse_scales {
        if scales.len() != seq.len() {
            return Err(Error::invalid(format!(
                "per_pulse_scales has length {}, sequence has {} pulses",
                scales.len(),
                seq.len()
            )));
        }
    }
    let mut total = Unitary2::identity();
    for (n, pulse) in seq.pulses().iter().enumerate() {
        let scale = area_scale * per_pulse_scales.map_or(1.0, |s| s[n]);
        total = pulse_propagator(pulse, scale)?.mul(&total);
    }
    Ok(total)
}

/// Population transferred to level 2 under systematic errors.
///
/// The perturbed rates are `rabi * coupling_scale` and
/// `detuning * detuning_scale` (a zero detuning stays zero); segment
/// durations stay at their nominal design values times `area_scale`, so the
/// effective area of each pulse rescales with the perturbed generalized Rabi
/// frequency. Returns |u12|^2 of the composite propagator.
pub fn transfer_fidelity(
    seq: &CompositeSequence,
    area_scale: f64,
    detuning_scale: f64,
    coupling_scale: f64,
) -> Result<f64> {
    if !area_scale.is_finite() || area_scale <= 0.0 {
        return Err(Error::invalid(format!(
            "area_scale must be finite and > 0, got {area_scale}"
        )));
    }
    if !coupling_scale.is_finite() || coupling_scale <= 0.0 {
        return Err(Error::invalid(format!(
            "coupling_scale must be finite and > 0, got {coupling_scale}"
        )));
    }
    if !detuning_scale.is_finite() {
        return Err(Error::invalid(format!(
            "detuning_scale must be finite, got {detuning_scale}"
        )));
    }
    let mut total = Unitary2::identity();
    for pulse in seq.pulses() {
        let rabi = pulse.rabi * coupling_scale;
        let detuning = pulse.detuning * detuning_scale;
        let nominal_og = pulse.generalized_rabi();
        let perturbed_og = rabi.hypot(detuning);
        let area = pulse.nominal_area * area_scale * perturbed_og / nominal_og;
        total = propagator_elements(rabi, detuning, area).mul(&total);
    }
    Ok(total.u12.norm_sqr())
}

/// Piecewise evolution sampled uniformly inside each pulse at nominal areas.
///
/// Returns `1 + n_steps_per_pulse * N` rows; the time axis is the cumulative
/// segment duration and the endpoint matches the composed propagator.
pub fn evolve_trace(
    seq: &CompositeSequence,
    n_steps_per_pulse: usize,
    initial: &StateVector,
) -> Result<Vec<TracePoint>> {
    if n_steps_per_pulse < 2 {
        return Err(Error::invalid(format!(
            "n_steps_per_pulse must be >= 2, got {n_steps_per_pulse}"
        )));
    }
    let mut trace = Vec::with_capacity(1 + n_steps_per_pulse * seq.len());
    let (p1, p2) = initial.populations();
    trace.push(TracePoint { time: 0.0, pop1: p1, pop2: p2 });

    let mut state = *initial;
    let mut t0 = 0.0;
    for pulse in seq.pulses() {
        let duration = pulse.duration();
        for step in 1..=n_steps_per_pulse {
            let fraction = step as f64 / n_steps_per_pulse as f64;
            let partial = propagator_elements(
                pulse.rabi,
                pulse.detuning,
                pulse.nominal_area * fraction,
            );
            let (p1, p2) = partial.apply(&state).populations();
            trace.push(TracePoint { time: t0 + fraction * duration, pop1: p1, pop2: p2 });
        }
        state = propagator_elements(pulse.rabi, pulse.detuning, pulse.nominal_area).apply(&state);
        t0 += duration;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn rejects_invalid_pulses() {
        assert!(Pulse::new(0.0, 0.0, PI).is_err());
        assert!(Pulse::new(-1.0, 0.0, PI).is_err());
        assert!(Pulse::new(1.0, f64::NAN, PI).is_err());
        assert!(Pulse::new(1.0, 0.0, 0.0).is_err());
        assert!(Pulse::new(1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn resonant_pi_pulse_inverts() {
        let p = Pulse::pi(1.0, 0.0).unwrap();
        let u = pulse_propagator(&p, 1.0).unwrap();
        assert!((u.u12 - Complex64::new(0.0, -1.0)).norm() < TOL);
        assert!((u.u12.norm_sqr() - 1.0).abs() < TOL);
    }

    #[test]
    fn zero_area_limit_is_identity() {
        let p = Pulse::pi(1.0, 0.0).unwrap();
        let u = pulse_propagator(&p, 1e-300).unwrap();
        assert!((u.u11 - Complex64::new(1.0, 0.0)).norm() < 1e-150);
        assert!(u.u12.norm() < 1e-150);
        assert!(pulse_propagator(&p, 0.0).is_err());
    }

    #[test]
    fn detuned_pi_pulse_splits_evenly() {
        // rabi = detuning = 1: og = sqrt(2), cos(pi/2) = 0.
        let p = Pulse::pi(1.0, 1.0).unwrap();
        let u = pulse_propagator(&p, 1.0).unwrap();
        let inv_rt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u.u11 - Complex64::new(0.0, inv_rt2)).norm() < TOL);
        assert!((u.u12 - Complex64::new(0.0, -inv_rt2)).norm() < TOL);
        assert!((u.u12.norm_sqr() - 0.5).abs() < TOL);
    }

    #[test]
    fn pi_durations() {
        assert!((Pulse::pi(1.0, 0.0).unwrap().pi_duration() - PI).abs() < TOL);
        assert!((Pulse::pi(1.0, 1.0).unwrap().pi_duration() - PI / 2f64.sqrt()).abs() < TOL);
        assert!((Pulse::pi(1.0, 3f64.sqrt()).unwrap().pi_duration() - PI / 2.0).abs() < TOL);
    }

    #[test]
    fn single_pulse_composition_matches_propagator() {
        let seq = CompositeSequence::from_ratios(1.0, &[0.7], "single").unwrap();
        let a = compose_sequence(&seq, 1.3, None).unwrap();
        let b = pulse_propagator(&seq.pulses()[0], 1.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alternating_pair_achieves_full_transfer() {
        let seq = CompositeSequence::from_ratios(1.0, &[1.0, -1.0], "first-order N=2").unwrap();
        let u = compose_sequence(&seq, 1.0, None).unwrap();
        assert!((u.u12.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_pair_fidelity_at_ten_percent_area_error() {
        // Frozen regression: F(1.10) = 1 - sin^4(0.05 pi).
        let seq = CompositeSequence::from_ratios(1.0, &[1.0, -1.0], "first-order N=2").unwrap();
        let u = compose_sequence(&seq, 1.10, None).unwrap();
        let expected = 1.0 - (0.05 * PI).sin().powi(4);
        assert!((u.u12.norm_sqr() - expected).abs() < 1e-12);
        assert!(u.u12.norm_sqr() > 0.9994);
    }

    #[test]
    fn per_pulse_scale_length_is_checked() {
        let seq = CompositeSequence::from_ratios(1.0, &[1.0, -1.0], "pair").unwrap();
        assert!(compose_sequence(&seq, 1.0, Some(&[1.0])).is_err());
        assert!(compose_sequence(&seq, 1.0, Some(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn designed_sequence_is_exact_at_zero_error() {
        let seq = CompositeSequence::from_ratios(1.0, &[1.0, -1.0], "pair").unwrap();
        let f = transfer_fidelity(&seq, 1.0, 1.0, 1.0).unwrap();
        assert!((f - 1.0).abs() < 1e-9);
    }

    #[test]
    fn resonant_fidelity_under_area_error_is_analytic() {
        let seq = CompositeSequence::from_ratios(1.0, &[0.0], "resonant").unwrap();
        for eps in [-0.4, -0.1, 0.05, 0.3] {
            let f = transfer_fidelity(&seq, 1.0 + eps, 1.0, 1.0).unwrap();
            let expected = (PI * eps / 2.0).cos().powi(2);
            assert!((f - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_detuning_ignores_detuning_scale() {
        let seq = CompositeSequence::from_ratios(1.0, &[0.0], "resonant").unwrap();
        let a = transfer_fidelity(&seq, 1.1, 1.0, 1.0).unwrap();
        let b = transfer_fidelity(&seq, 1.1, 5.0, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn global_detuning_sign_flip_preserves_fidelity() {
        // U(-detunings) = sigma_x U sigma_x, so |u12| is invariant.
        let seq = CompositeSequence::from_ratios(1.0, &[2.5425, 0.0, -2.5425], "anti").unwrap();
        for (ds, cs) in [(0.7, 1.1), (-0.3, 0.9), (1.5, 1.3)] {
            let a = transfer_fidelity(&seq, 1.0, ds, cs).unwrap();
            let b = transfer_fidelity(&seq, 1.0, -ds, cs).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_of_resonant_pulse_ends_inverted() {
        let seq = CompositeSequence::from_ratios(1.0, &[0.0], "resonant").unwrap();
        let trace = evolve_trace(&seq, 50, &StateVector::ground()).unwrap();
        let last = trace.last().unwrap();
        assert!((last.time - PI).abs() < TOL);
        assert!(last.pop1 < 1e-9);
        assert!((last.pop2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trace_shape_and_midpoint() {
        let seq = CompositeSequence::from_ratios(1.0, &[1.0, -1.0], "pair").unwrap();
        let trace = evolve_trace(&seq, 100, &StateVector::ground()).unwrap();
        assert_eq!(trace.len(), 100 * 2 + 1);
        assert!(trace.windows(2).all(|w| w[1].time > w[0].time));
        let mid = trace[100];
        assert!(mid.pop2 > 0.0 && mid.pop2 < 1.0);
        let last = trace.last().unwrap();
        assert!((last.pop2 - 1.0).abs() < 1e-9);
        // endpoint agrees with the composed propagator
        let u = compose_sequence(&seq, 1.0, None).unwrap();
        let fin = u.apply(&StateVector::ground()).populations();
        assert!((last.pop1 - fin.0).abs() < 1e-9 && (last.pop2 - fin.1).abs() < 1e-9);
    }

    #[test]
    fn trace_rejects_too_few_steps() {
        let seq = CompositeSequence::from_ratios(1.0, &[0.0], "resonant").unwrap();
        assert!(evolve_trace(&seq, 1, &StateVector::ground()).is_err());
    }
}
