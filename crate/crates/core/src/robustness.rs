//! Robustness quantification: 1-D area-error scans, 2-D detuning/coupling
//! grids, cut-line extraction, flat-top width measurement, and seeded
//! Monte-Carlo averaging over per-pulse length errors.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{compose_sequence, transfer_fidelity, CompositeSequence};
use crate::error::{Error, Result};

/// Uniform linear grid over [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRange {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl ScanRange {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::invalid(format!("range needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if n_points < 2 {
            return Err(Error::invalid(format!("range needs >= 2 points, got {n_points}")));
        }
        Ok(ScanRange { lo, hi, n_points })
    }

    pub fn value(&self, index: usize) -> f64 {
        self.lo + (self.hi - self.lo) * index as f64 / (self.n_points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.value(i)).collect()
    }

    /// Index of the grid point closest to `at`.
    pub fn nearest_index(&self, at: f64) -> usize {
        let step = (self.hi - self.lo) / (self.n_points - 1) as f64;
        let raw = ((at - self.lo) / step).round();
        (raw.max(0.0) as usize).min(self.n_points - 1)
    }
}

/// Which systematic error a grid axis sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorAxis {
    AreaError,
    DetuningError,
    CouplingError,
}

/// A scan range with its semantic label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub range: ScanRange,
    pub label: ErrorAxis,
}

/// Fidelity samples over one or two error axes, row-major with axis 1 outer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityGrid {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub values: Vec<f64>,
}

impl FidelityGrid {
    pub fn n1(&self) -> usize {
        self.axis1.range.n_points
    }

    pub fn n2(&self) -> usize {
        self.axis2.map_or(1, |a| a.range.n_points)
    }

    /// Sample at (axis-1 index, axis-2 index).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n2() + j]
    }

    /// Number of samples strictly above the fidelity threshold.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&f| f > threshold).count()
    }
}

/// Fidelity versus a common pulse-area error: F(eps) at area scale 1 + eps.
pub fn scan_area_error(seq: &CompositeSequence, range: &ScanRange) -> Result<FidelityGrid> {
    if range.lo <= -1.0 {
        return Err(Error::invalid("area error must stay above -1"));
    }
    let values = range
        .values()
        .into_iter()
        .map(|eps| transfer_fidelity(seq, 1.0 + eps, 1.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityGrid {
        axis1: Axis { range: *range, label: ErrorAxis::AreaError },
        axis2: None,
        values,
    })
}

/// Fidelity over relative detuning errors (axis 1) and coupling errors
/// (axis 2): F(u, v) at detuning scale 1 + u and coupling scale 1 + v.
pub fn scan_2d(
    seq: &CompositeSequence,
    detuning_range: &ScanRange,
    coupling_range: &ScanRange,
) -> Result<FidelityGrid> {
    if coupling_range.lo <= -1.0 {
        return Err(Error::invalid("coupling error must stay above -1"));
    }
    let us = detuning_range.values();
    let vs = coupling_range.values();
    let values = (0..us.len() * vs.len())
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / vs.len(), flat % vs.len());
            transfer_fidelity(seq, 1.0, 1.0 + us[i], 1.0 + vs[j])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityGrid {
        axis1: Axis { range: *detuning_range, label: ErrorAxis::DetuningError },
        axis2: Some(Axis { range: *coupling_range, label: ErrorAxis::CouplingError }),
        values,
    })
}

/// Reference surface for 2-D comparisons: a single resonant pi pulse whose
/// detuning error is taken as an absolute offset `u * detuning_magnitude`.
///
/// A resonant pulse has zero detuning, so a relative detuning error leaves it
/// untouched by definition; comparisons against composite trains instead give
/// the reference the same absolute detuning excursions the train would see.
/// The pulse keeps its design duration pi / rabi, so both errors feed the
/// effective area through the generalized Rabi frequency.
pub fn resonant_reference_2d(
    rabi: f64,
    detuning_magnitude: f64,
    detuning_range: &ScanRange,
    coupling_range: &ScanRange,
) -> Result<FidelityGrid> {
    if !rabi.is_finite() || rabi <= 0.0 {
        return Err(Error::invalid(format!("rabi must be finite and > 0, got {rabi}")));
    }
    if !detuning_magnitude.is_finite() {
        return Err(Error::invalid("detuning magnitude must be finite"));
    }
    if coupling_range.lo <= -1.0 {
        return Err(Error::invalid("coupling error must stay above -1"));
    }
    let us = detuning_range.values();
    let vs = coupling_range.values();
    let duration = std::f64::consts::PI / rabi;
    let mut values = Vec::with_capacity(us.len() * vs.len());
    for &u in &us {
        for &v in &vs {
            let omega = rabi * (1.0 + v);
            let delta = u * detuning_magnitude;
            let og = omega.hypot(delta);
            let f = if og == 0.0 {
                0.0
            } else {
                (omega / og).powi(2) * (og * duration / 2.0).sin().powi(2)
            };
            values.push(f);
        }
    }
    Ok(FidelityGrid {
        axis1: Axis { range: *detuning_range, label: ErrorAxis::DetuningError },
        axis2: Some(Axis { range: *coupling_range, label: ErrorAxis::CouplingError }),
        values,
    })
}

/// Which grid axis a cut line runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridAxis {
    Axis1,
    Axis2,
}

/// A 1-D slice of a 2-D grid plus the snapped fixed coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutLine {
    pub grid: FidelityGrid,
    /// The fixed coordinate actually used (nearest grid line).
    pub fixed_coordinate: f64,
    /// Distance between the requested coordinate and the snapped one.
    pub snap_distance: f64,
}

/// Extract the 1-D cut running along `along`, at position `at` on the other
/// axis (snapped to the nearest grid line).
pub fn extract_cut(grid: &FidelityGrid, along: GridAxis, at: f64) -> Result<CutLine> {
    let axis2 = grid
        .axis2
        .ok_or_else(|| Error::invalid("cut extraction needs a 2-D grid"))?;
    let fixed_axis = match along {
        GridAxis::Axis1 => axis2,
        GridAxis::Axis2 => grid.axis1,
    };
    if at < fixed_axis.range.lo || at > fixed_axis.range.hi {
        return Err(Error::invalid(format!(
            "cut position {at} outside fixed axis range [{}, {}]",
            fixed_axis.range.lo, fixed_axis.range.hi
        )));
    }
    let index = fixed_axis.range.nearest_index(at);
    let fixed_coordinate = fixed_axis.range.value(index);
    let values = match along {
        GridAxis::Axis1 => (0..grid.n1()).map(|i| grid.value(i, index)).collect(),
        GridAxis::Axis2 => (0..grid.n2()).map(|j| grid.value(index, j)).collect(),
    };
    let kept_axis = match along {
        GridAxis::Axis1 => grid.axis1,
        GridAxis::Axis2 => axis2,
    };
    Ok(CutLine {
        grid: FidelityGrid { axis1: kept_axis, axis2: None, values },
        fixed_coordinate,
        snap_distance: (at - fixed_coordinate).abs(),
    })
}

/// Mean infidelity under seeded Gaussian per-pulse length errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCurve {
    pub axis: Axis,
    pub mean_infidelity: Vec<f64>,
    pub sigma: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Average infidelity over trials of i.i.d. Gaussian per-pulse length factors
/// (1 + g), g ~ Normal(0, sigma), clamped to at least 0.01, on top of a
/// common area error sweep.
///
/// Each grid point draws from its own substream (seed, point index), so the
/// result is reproducible and independent of evaluation order.
pub fn monte_carlo_infidelity(
    seq: &CompositeSequence,
    range: &ScanRange,
    sigma: f64,
    n_trials: usize,
    seed: u64,
) -> Result<MonteCarloCurve> {
    if range.lo <= -1.0 {
        return Err(Error::invalid("area error must stay above -1"));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if n_trials < 1 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    let eps = range.values();
    let n_pulses = seq.len();
    let mean_infidelity = eps
        .par_iter()
        .enumerate()
        .map(|(index, &e)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut factors = vec![1.0; n_pulses];
            let mut total = 0.0;
            for _ in 0..n_trials {
                for f in factors.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *f = (1.0 + sigma * g).max(0.01);
                }
                let u = compose_sequence(seq, 1.0 + e, Some(&factors))?;
                total += 1.0 - u.u12.norm_sqr();
            }
            Ok(total / n_trials as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloCurve {
        axis: Axis { range: *range, label: ErrorAxis::AreaError },
        mean_infidelity,
        sigma,
        n_trials,
        seed,
    })
}

/// Outcome of a flat-top width measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStatus {
    /// The curve crosses the threshold inside the grid.
    Crossed,
    /// The curve stays below the threshold out to the grid edge.
    ClippedAtGridEdge,
    /// The curve already exceeds the threshold at zero error.
    AboveAtZero,
}

/// Half-width of the region around zero error where infidelity stays at or
/// below a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdWidth {
    pub width: f64,
    pub status: ThresholdStatus,
}

/// Largest w such that the sampled infidelity stays <= threshold for all
/// |eps| <= w, with linear interpolation at the crossing.
///
/// The curve must be sampled on a symmetric grid around zero with an odd
/// number of points (so zero itself is sampled).
pub fn threshold_width(
    range: &ScanRange,
    infidelity: &[f64],
    threshold: f64,
) -> Result<ThresholdWidth> {
    if infidelity.len() != range.n_points {
        return Err(Error::invalid(format!(
            "curve has {} samples, range has {} points",
            infidelity.len(),
            range.n_points
        )));
    }
    let span = range.hi - range.lo;
    if (range.lo + range.hi).abs() > 1e-9 * span || range.n_points % 2 == 0 {
        return Err(Error::invalid(
            "threshold width needs a symmetric grid around 0 with an odd point count",
        ));
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold must be > 0"));
    }
    let center = range.n_points / 2;
    if infidelity[center] > threshold {
        return Ok(ThresholdWidth { width: 0.0, status: ThresholdStatus::AboveAtZero });
    }

    // walk outward; returns (crossing |eps|, crossed?)
    let walk = |step: isize| -> (f64, bool) {
        let mut i = center as isize;
        loop {
            let j = i + step;
            if j < 0 || j as usize >= range.n_points {
                return (range.value(i as usize).abs(), false);
            }
            let (fi, fj) = (infidelity[i as usize], infidelity[j as usize]);
            if fj > threshold {
                let t = (threshold - fi) / (fj - fi);
                let eps = range.value(i as usize)
                    + t * (range.value(j as usize) - range.value(i as usize));
                return (eps.abs(), true);
            }
            i = j;
        }
    };
    let (w_plus, crossed_plus) = walk(1);
    let (w_minus, crossed_minus) = walk(-1);
    let (width, crossed) =
        if w_plus <= w_minus { (w_plus, crossed_plus) } else { (w_minus, crossed_minus) };
    let status =
        if crossed { ThresholdStatus::Crossed } else { ThresholdStatus::ClippedAtGridEdge };
    Ok(ThresholdWidth { width, status })
}
