//! Sequence design: the sign-alternating polynomial and its roots for
//! first-order flat-top trains, numerical area derivatives of the transfer
//! profile, and the derivative-nullification search for second-order trains.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::cpt::cpt_residual_oracle;
use crate::dynamics::{propagator_elements, CompositeSequence};
use crate::error::{Error, Result};
use crate::poly;

/// Which derivative orders of the transfer profile the design nullifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DesignOrder {
    /// Nullifies the second derivative at area pi (sign-alternating detunings).
    First,
    /// Nullifies the second and fourth derivatives (anti-symmetric detunings,
    /// odd N, zero middle detuning).
    Second,
}

/// Request for a designed sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignSpec {
    pub n_pulses: usize,
    pub order: DesignOrder,
    pub coupling: f64,
}

impl DesignSpec {
    pub fn new(n_pulses: usize, order: DesignOrder, coupling: f64) -> Result<Self> {
        if !coupling.is_finite() || coupling <= 0.0 {
            return Err(Error::invalid(format!("coupling must be finite and > 0, got {coupling}")));
        }
        match order {
            DesignOrder::First if n_pulses < 2 => {
                return Err(Error::invalid(format!(
                    "first-order design needs N >= 2, got {n_pulses}"
                )));
            }
            DesignOrder::Second if n_pulses < 3 || n_pulses % 2 == 0 => {
                return Err(Error::invalid(format!(
                    "second-order design needs odd N >= 3, got {n_pulses}"
                )));
            }
            _ => {}
        }
        Ok(DesignSpec { n_pulses, order, coupling })
    }

    pub fn first_order(n_pulses: usize) -> Result<Self> {
        DesignSpec::new(n_pulses, DesignOrder::First, 1.0)
    }

    pub fn second_order(n_pulses: usize) -> Result<Self> {
        DesignSpec::new(n_pulses, DesignOrder::Second, 1.0)
    }
}

/// A designed sequence with its detuning magnitude and derivative diagnostics.
///
/// `delta_over_omega` is the positive representative; negating every detuning
/// gives an equally valid mirror design. `diagnostics[k]` holds the k-th
/// derivative of the transfer profile at area pi for k = 1..=6.
#[derive(Debug, Clone, Serialize)]
pub struct DesignResult {
    pub sequence: CompositeSequence,
    pub delta_over_omega: f64,
    pub diagnostics: BTreeMap<u8, f64>,
}

/// Ascending coefficients of the degree-N flat-top polynomial in the detuning
/// (coupling normalized to 1): coefficient of x^(N-2s) is
/// (-1)^s * C(N, N-2s); every second coefficient vanishes by parity.
pub fn first_order_coefficients(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!("polynomial needs N >= 2, got {n}")));
    }
    if n > 30 {
        return Err(Error::invalid(format!("polynomial degree {n} is too large")));
    }
    let mut coeffs = vec![0.0; n + 1];
    let mut sign = 1.0;
    let mut k = n as i64;
    while k >= 0 {
        coeffs[k as usize] = sign * poly::binomial(n, k as usize);
        sign = -sign;
        k -= 2;
    }
    Ok(coeffs)
}

/// Transfer profile F(A): |u12|^2 of the sequence with every nominal area
/// rescaled by A / pi. Total in A; the trigonometric closed form extends to
/// any real area.
pub(crate) fn fidelity_at_area(seq: &CompositeSequence, area: f64) -> f64 {
    let scale = area / PI;
    let mut total = crate::dynamics::Unitary2::identity();
    for p in seq.pulses() {
        total = propagator_elements(p.rabi(), p.detuning(), p.nominal_area() * scale).mul(&total);
    }
    total.u12.norm_sqr()
}

// Central stencils for the k-th derivative, minimal width, O(h^2) accurate.
fn central_stencil<F: Fn(f64) -> f64>(f: &F, k: u8, at: f64, h: f64) -> f64 {
    match k {
        1 => (f(at + h) - f(at - h)) / (2.0 * h),
        2 => (f(at + h) - 2.0 * f(at) + f(at - h)) / (h * h),
        3 => (f(at + 2.0 * h) - 2.0 * f(at + h) + 2.0 * f(at - h) - f(at - 2.0 * h))
            / (2.0 * h.powi(3)),
        4 => (f(at + 2.0 * h) - 4.0 * f(at + h) + 6.0 * f(at) - 4.0 * f(at - h)
            + f(at - 2.0 * h))
            / h.powi(4),
        5 => (f(at + 3.0 * h) - 4.0 * f(at + 2.0 * h) + 5.0 * f(at + h) - 5.0 * f(at - h)
            + 4.0 * f(at - 2.0 * h)
            - f(at - 3.0 * h))
            / (2.0 * h.powi(5)),
        6 => (f(at + 3.0 * h) - 6.0 * f(at + 2.0 * h) + 15.0 * f(at + h) - 20.0 * f(at)
            + 15.0 * f(at - h)
            - 6.0 * f(at - 2.0 * h)
            + f(at - 3.0 * h))
            / h.powi(6),
        _ => unreachable!("stencil order validated by caller"),
    }
}

/// Richardson extrapolation of the central stencil toward h -> 0.
///
/// The ladder runs upward from the base step (steps base * ratio^i): for
/// high orders the stencil's roundoff scales like eps / h^k, so the base
/// step is the roundoff-limited member and the larger steps feed the
/// truncation cancellation.
fn richardson<F: Fn(f64) -> f64>(
    f: &F,
    k: u8,
    at: f64,
    base_h: f64,
    levels: usize,
    ratio: f64,
) -> f64 {
    let steps: Vec<f64> = (0..levels).map(|i| base_h * ratio.powi(i as i32)).collect();
    let mut table: Vec<f64> = steps.iter().map(|&h| central_stencil(f, k, at, h)).collect();
    for m in 1..levels {
        for i in 0..levels - m {
            let r = (steps[i + m] / steps[i]).powi(2);
            table[i] += (table[i] - table[i + 1]) / (r - 1.0);
        }
    }
    table[0]
}

/// k-th derivative of the transfer profile F at the given area, via central
/// finite differences with Richardson extrapolation.
///
/// Accuracy targets: 1e-6 absolute for k <= 4, 1e-4 for k in {5, 6}, for
/// trains of up to roughly a dozen pulses with detuning ratios of table
/// magnitude. Step parameters are balanced per order: the k-th stencil's
/// roundoff grows as eps / h^k, so high orders start from a larger base step
/// with a gentler ladder.
pub fn area_derivative(seq: &CompositeSequence, k: u8, at: f64) -> Result<f64> {
    if !(1..=6).contains(&k) {
        return Err(Error::invalid(format!("derivative order must be 1..=6, got {k}")));
    }
    if !at.is_finite() {
        return Err(Error::invalid(format!("area must be finite, got {at}")));
    }
    let f = |a: f64| fidelity_at_area(seq, a);
    let value = if k <= 4 {
        richardson(&f, k, at, 1e-2, 4, 2.0)
    } else {
        richardson(&f, k, at, 3e-2, 5, 1.5)
    };
    if !value.is_finite() {
        return Err(Error::numeric(format!("derivative of order {k} did not evaluate")));
    }
    Ok(value)
}

/// Sign-alternating ratio pattern (+1, -1, +1, ...) of length n.
fn alternating_ratios(n: usize, magnitude: f64) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 0 { magnitude } else { -magnitude }).collect()
}

/// Anti-symmetric ratio pattern for odd n: sign-alternating first half,
/// zero middle, mirrored and negated second half.
pub(crate) fn antisymmetric_ratios(n: usize, magnitude: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 1);
    let half = (n - 1) / 2;
    let mut ratios = vec![0.0; n];
    for i in 0..half {
        let value = if i % 2 == 0 { magnitude } else { -magnitude };
        ratios[i] = value;
        ratios[n - 1 - i] = -value;
    }
    ratios
}

fn diagnostics_at_pi(seq: &CompositeSequence) -> Result<BTreeMap<u8, f64>> {
    (1..=6).map(|k| Ok((k, area_derivative(seq, k, PI)?))).collect()
}

fn verify_design(seq: &CompositeSequence, label: &str) -> Result<()> {
    let residual = cpt_residual_oracle(seq)?;
    if residual >= 1e-9 {
        return Err(Error::numeric(format!(
            "{label}: transfer residual {residual:.3e} exceeds 1e-9"
        )));
    }
    let d2 = area_derivative(seq, 2, PI)?;
    if d2.abs() >= 1e-6 {
        return Err(Error::numeric(format!(
            "{label}: second area derivative {d2:.3e} not nullified"
        )));
    }
    Ok(())
}

/// First-order design: sign-alternating detunings at the largest-magnitude
/// root of the flat-top polynomial.
///
/// All real roots are found (companion matrix plus Newton polishing), the
/// largest in absolute value is selected, and the selection is cross-checked
/// to minimize |d^4 F / dA^4| at pi among the positive roots; the two rules
/// have agreed for every N tried, and a disagreement is reported as an error
/// rather than silently resolved.
pub fn solve_first_order(spec: &DesignSpec) -> Result<DesignResult> {
    if spec.order != DesignOrder::First {
        return Err(Error::invalid("spec.order must be First"));
    }
    let coeffs = first_order_coefficients(spec.n_pulses)?;
    let roots = poly::real_roots(&coeffs)?;
    // mirror roots give identical profiles; keep positive representatives
    let positive: Vec<f64> = roots.iter().copied().filter(|&r| r > 1e-9).collect();
    if positive.is_empty() {
        return Err(Error::numeric(format!(
            "no positive real root of the flat-top polynomial for N = {}",
            spec.n_pulses
        )));
    }
    let largest = positive.iter().copied().fold(0.0f64, f64::max);

    let fourth_at = |magnitude: f64| -> Result<f64> {
        let seq = CompositeSequence::from_ratios(
            1.0,
            &alternating_ratios(spec.n_pulses, magnitude),
            "candidate",
        )?;
        area_derivative(&seq, 4, PI)
    };
    let mut best = (f64::INFINITY, 0.0);
    for &root in &positive {
        let residual = poly::normalized_residual(&coeffs, root);
        if residual >= 1e-9 {
            return Err(Error::numeric(format!(
                "root {root:.6} of the N = {} polynomial has residual {residual:.3e}",
                spec.n_pulses
            )));
        }
        let d4 = fourth_at(root)?.abs();
        if d4 < best.0 {
            best = (d4, root);
        }
    }
    if (best.1 - largest).abs() > 1e-6 * largest.max(1.0) {
        return Err(Error::numeric(format!(
            "root selection rules disagree for N = {}: largest-magnitude root {largest:.6} vs \
             minimal fourth derivative at {:.6}",
            spec.n_pulses, best.1
        )));
    }

    let label = format!("first-order N={}", spec.n_pulses);
    let ratios = alternating_ratios(spec.n_pulses, largest);
    let sequence = CompositeSequence::from_ratios(spec.coupling, &ratios, label.clone())?;
    verify_design(&sequence, &label)?;
    let normalized = CompositeSequence::from_ratios(1.0, &ratios, label.clone())?;
    let diagnostics = diagnostics_at_pi(&normalized)?;
    Ok(DesignResult { sequence, delta_over_omega: largest, diagnostics })
}

/// Second-order design: anti-symmetric detunings with the magnitude that
/// nullifies the fourth area derivative at pi and minimizes the sixth.
///
/// The magnitude is bracketed on a grid of step 0.05 over (0, 4N], each sign
/// change is bisected and polished by secant steps, and the root with the
/// smallest |d^6 F / dA^6| is returned.
pub fn solve_second_order(spec: &DesignSpec) -> Result<DesignResult> {
    if spec.order != DesignOrder::Second {
        return Err(Error::invalid("spec.order must be Second"));
    }
    let n = spec.n_pulses;
    let fourth = |magnitude: f64| -> f64 {
        let seq = CompositeSequence::from_ratios(1.0, &antisymmetric_ratios(n, magnitude), "scan")
            .expect("finite candidate ratios");
        area_derivative(&seq, 4, PI).expect("validated derivative order")
    };

    const STEP: f64 = 0.05;
    let upper = 4.0 * n as f64;
    let cells = (upper / STEP).round() as usize;
    let grid: Vec<f64> = (1..=cells).map(|i| i as f64 * STEP).collect();
    let values: Vec<f64> = grid.par_iter().map(|&d| fourth(d)).collect();

    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if values[i] * values[i + 1] < 0.0 {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let (mut flo, mut fhi) = (values[i], values[i + 1]);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                let fmid = fourth(mid);
                if flo * fmid <= 0.0 {
                    hi = mid;
                    fhi = fmid;
                } else {
                    lo = mid;
                    flo = fmid;
                }
            }
            // secant polish from the bisected bracket
            let (mut x0, mut x1) = (lo, hi);
            let (mut f0, mut f1) = (flo, fhi);
            for _ in 0..8 {
                if f1 == f0 {
                    break;
                }
                let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                if !x2.is_finite() || x2 <= 0.0 || x2 > upper {
                    break;
                }
                x0 = x1;
                f0 = f1;
                x1 = x2;
                f1 = fourth(x2);
            }
            roots.push(x1);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    if roots.is_empty() {
        return Err(Error::numeric(format!(
            "no root of the fourth area derivative in (0, {upper}] at grid step {STEP} \
             (scanned {cells} cells, no sign change)"
        )));
    }

    let mut best: Option<(f64, f64)> = None;
    for &root in &roots {
        let seq = CompositeSequence::from_ratios(1.0, &antisymmetric_ratios(n, root), "candidate")?;
        let d6 = area_derivative(&seq, 6, PI)?.abs();
        if best.is_none_or(|(b, _)| d6 < b) {
            best = Some((d6, root));
        }
    }
    let (_, magnitude) = best.expect("at least one root");

    let label = format!("second-order N={n}");
    let ratios = antisymmetric_ratios(n, magnitude);
    let sequence = CompositeSequence::from_ratios(spec.coupling, &ratios, label.clone())?;
    verify_design(&sequence, &label)?;
    let normalized = CompositeSequence::from_ratios(1.0, &ratios, label.clone())?;
    let diagnostics = diagnostics_at_pi(&normalized)?;
    Ok(DesignResult { sequence, delta_over_omega: magnitude, diagnostics })
}

/// Convenience dispatcher over the design order.
pub fn solve(spec: &DesignSpec) -> Result<DesignResult> {
    match spec.order {
        DesignOrder::First => solve_first_order(spec),
        DesignOrder::Second => solve_second_order(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_coefficients_match_small_cases() {
        // N=2: x^2 - 1, N=3: x^3 - 3x, N=5: x^5 - 10x^3 + 5x
        assert_eq!(first_order_coefficients(2).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(first_order_coefficients(3).unwrap(), vec![0.0, -3.0, 0.0, 1.0]);
        assert_eq!(
            first_order_coefficients(5).unwrap(),
            vec![0.0, 5.0, 0.0, -10.0, 0.0, 1.0]
        );
        assert!(first_order_coefficients(1).is_err());
    }

    #[test]
    fn first_order_table() {
        let expect = [(2, 1.0), (3, 3f64.sqrt()), (4, 1.0 + 2f64.sqrt()), (5, 3.0776)];
        for (n, value) in expect {
            let result = solve_first_order(&DesignSpec::first_order(n).unwrap()).unwrap();
            assert!(
                (result.delta_over_omega - value).abs() < 1e-3,
                "N={n}: got {}, expected {value}",
                result.delta_over_omega
            );
        }
    }

    #[test]
    fn first_order_matches_half_angle_cotangent() {
        // closed-form hypothesis for the largest root, checked against the
        // companion-matrix ground truth
        for n in 2..=12 {
            let result = solve_first_order(&DesignSpec::first_order(n).unwrap()).unwrap();
            let cot = 1.0 / (PI / (2.0 * n as f64)).tan();
            assert!(
                (result.delta_over_omega - cot).abs() < 1e-9 * cot,
                "N={n}: {} vs cot {}",
                result.delta_over_omega,
                cot
            );
        }
    }

    #[test]
    fn second_order_table() {
        let expect = [(3, 2.5425, 2e-3), (5, 5.0903, 2e-3), (7, 7.6375, 5e-3), (9, 10.1845, 5e-3)];
        for (n, value, tol) in expect {
            let result = solve_second_order(&DesignSpec::second_order(n).unwrap()).unwrap();
            assert!(
                (result.delta_over_omega - value).abs() < tol,
                "N={n}: got {}, expected {value}",
                result.delta_over_omega
            );
        }
    }

    #[test]
    fn derivative_examples() {
        // single resonant pi pulse: F(A) = sin^2(A/2), F''(A) = cos(A)/2
        let seq = CompositeSequence::from_ratios(1.0, &[0.0], "resonant").unwrap();
        let d2 = area_derivative(&seq, 2, PI).unwrap();
        assert!((d2 + 0.5).abs() < 1e-6, "got {d2}");
        let d1 = area_derivative(&seq, 1, PI).unwrap();
        assert!(d1.abs() < 1e-6);

        let pair = solve_first_order(&DesignSpec::first_order(2).unwrap()).unwrap();
        assert!(area_derivative(&pair.sequence, 2, PI).unwrap().abs() < 1e-6);
        assert!(area_derivative(&pair.sequence, 1, PI).unwrap().abs() < 1e-6);
    }

    #[test]
    fn derivative_rejects_bad_order() {
        let seq = CompositeSequence::from_ratios(1.0, &[0.0], "resonant").unwrap();
        assert!(area_derivative(&seq, 0, PI).is_err());
        assert!(area_derivative(&seq, 7, PI).is_err());
    }

    #[test]
    fn design_spec_preconditions() {
        assert!(DesignSpec::first_order(1).is_err());
        assert!(DesignSpec::second_order(4).is_err());
        assert!(DesignSpec::second_order(1).is_err());
        assert!(DesignSpec::new(3, DesignOrder::First, 0.0).is_err());
    }

    #[test]
    fn coupling_scales_detunings_exactly() {
        let base = solve_first_order(&DesignSpec::first_order(3).unwrap()).unwrap();
        let scaled =
            solve_first_order(&DesignSpec::new(3, DesignOrder::First, 2.5).unwrap()).unwrap();
        assert_eq!(scaled.delta_over_omega, base.delta_over_omega);
        for (a, b) in scaled.sequence.pulses().iter().zip(base.sequence.pulses()) {
            assert_eq!(a.detuning(), 2.5 * b.detuning());
            assert_eq!(a.rabi(), 2.5 * b.rabi());
        }
    }

    #[test]
    fn diagnostics_cover_orders_one_through_six() {
        let result = solve_first_order(&DesignSpec::first_order(2).unwrap()).unwrap();
        assert_eq!(result.diagnostics.keys().copied().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn antisymmetric_pattern_matches_tables() {
        assert_eq!(antisymmetric_ratios(3, 1.0), vec![1.0, 0.0, -1.0]);
        assert_eq!(antisymmetric_ratios(5, 1.0), vec![1.0, -1.0, 0.0, 1.0, -1.0]);
        assert_eq!(
            antisymmetric_ratios(7, 1.0),
            vec![1.0, -1.0, 1.0, 0.0, -1.0, 1.0, -1.0]
        );
        assert_eq!(
            antisymmetric_ratios(9, 1.0),
            vec![1.0, -1.0, 1.0, -1.0, 0.0, 1.0, -1.0, 1.0, -1.0]
        );
    }
}
