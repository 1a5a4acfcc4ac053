//! Analytical complete-population-transfer conditions for pi-pulse trains and
//! the matrix-product oracle they are checked against.
//!
//! At individual areas of pi, the composite u11 element factors as
//! `i^N * prod_n(rabi_n / og_n) * S`, where `S` is an alternating sum over
//! subset products of the detuning ratios `x_n = detuning_n / rabi_n`. Full
//! transfer (|u12| = 1) is equivalent to `S = 0`. The subset of order k
//! (k running over N, N-2, ..., down to 1 or 0) enters with sign
//! `(-1)^(i1 + ... + ik + ceil(k/2))` for 1-based indices `i1 < ... < ik`;
//! the order-0 term is 1. The sign convention is pinned by the oracle
//! equivalence test rather than read off a printed formula.

use itertools::Itertools;

use crate::dynamics::{compose_sequence, CompositeSequence};
use crate::error::{Error, Result};

/// Ordered detuning/coupling ratios of a pi-pulse train.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningRatios(Vec<f64>);

impl DetuningRatios {
    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::invalid("ratios must not be empty"));
        }
        if let Some(bad) = ratios.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("ratios must be finite, got {bad}")));
        }
        Ok(DetuningRatios(ratios))
    }

    pub fn ratios(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Alternating subset-product sum over orders k, k-2, ..., ending at 1 or 0.
fn alternating_sum(x: &[f64]) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    let mut k = n;
    loop {
        if k == 0 {
            total += 1.0;
            break;
        }
        for combo in (1..=n).combinations(k) {
            let index_sum: usize = combo.iter().sum();
            let sign = if (index_sum + k.div_ceil(2)) % 2 == 0 { 1.0 } else { -1.0 };
            let product: f64 = combo.iter().map(|&i| x[i - 1]).product();
            total += sign * product;
        }
        if k < 2 {
            break;
        }
        k -= 2;
    }
    total
}

/// Full-transfer sum for an even number of pulses (orders 0, 2, ..., N).
///
/// Zero return value is equivalent to complete population transfer.
pub fn cpt_sum_even(ratios: &DetuningRatios) -> Result<f64> {
    let n = ratios.len();
    if n % 2 != 0 || n < 2 {
        return Err(Error::invalid(format!("even sum needs even N >= 2, got N = {n}")));
    }
    Ok(alternating_sum(ratios.ratios()))
}

/// Full-transfer sum for an odd number of pulses (orders 1, 3, ..., N).
///
/// Zero return value is equivalent to complete population transfer.
pub fn cpt_sum_odd(ratios: &DetuningRatios) -> Result<f64> {
    let n = ratios.len();
    if n % 2 != 1 {
        return Err(Error::invalid(format!("odd sum needs odd N >= 1, got N = {n}")));
    }
    Ok(alternating_sum(ratios.ratios()))
}

/// |u11| of the composite propagator at nominal pi areas.
///
/// By unitarity |u11| = 0 exactly when |u12| = 1, so this is the direct
/// matrix-product criterion for complete transfer. Requires every pulse to
/// have nominal area pi.
pub fn cpt_residual_oracle(seq: &CompositeSequence) -> Result<f64> {
    if !seq.all_pi_areas() {
        return Err(Error::invalid("residual oracle requires all nominal areas = pi"));
    }
    let u = compose_sequence(seq, 1.0, None)?;
    Ok(u.u11.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CompositeSequence;

    #[test]
    fn parity_preconditions() {
        let odd = DetuningRatios::new(vec![1.0, -1.0, 1.0]).unwrap();
        let even = DetuningRatios::new(vec![1.0, -1.0]).unwrap();
        assert!(cpt_sum_even(&odd).is_err());
        assert!(cpt_sum_odd(&even).is_err());
        assert!(DetuningRatios::new(vec![f64::NAN]).is_err());
        assert!(DetuningRatios::new(vec![]).is_err());
    }

    #[test]
    fn even_sum_examples() {
        let x = DetuningRatios::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(cpt_sum_even(&x).unwrap(), 0.0);

        let x = DetuningRatios::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(cpt_sum_even(&x).unwrap(), 1.0);

        // four alternating pulses at the printed root; exact root is 1 + sqrt(2)
        let d = 2.4142;
        let x = DetuningRatios::new(vec![d, -d, d, -d]).unwrap();
        assert!(cpt_sum_even(&x).unwrap().abs() < 1e-3);
        let d = 1.0 + 2f64.sqrt();
        let x = DetuningRatios::new(vec![d, -d, d, -d]).unwrap();
        assert!(cpt_sum_even(&x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn odd_sum_examples() {
        let x = DetuningRatios::new(vec![0.0]).unwrap();
        assert_eq!(cpt_sum_odd(&x).unwrap(), 0.0);

        let d = 3f64.sqrt();
        let x = DetuningRatios::new(vec![d, -d, d]).unwrap();
        assert!(cpt_sum_odd(&x).unwrap().abs() < 1e-12);

        // anti-symmetric arrangement is a root for any magnitude
        let x = DetuningRatios::new(vec![2.5425, 0.0, -2.5425]).unwrap();
        assert!(cpt_sum_odd(&x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let seq = CompositeSequence::from_ratios(1.0, &[1.0, -1.0], "pair").unwrap();
        assert!(cpt_residual_oracle(&seq).unwrap() < 1e-12);

        let seq = CompositeSequence::from_ratios(1.0, &[0.0, 0.0], "two resonant").unwrap();
        assert!((cpt_residual_oracle(&seq).unwrap() - 1.0).abs() < 1e-12);

        let d = 5.09027;
        let seq =
            CompositeSequence::from_ratios(1.0, &[d, -d, 0.0, d, -d], "second-order N=5").unwrap();
        assert!(cpt_residual_oracle(&seq).unwrap() < 1e-4);
    }

    #[test]
    fn oracle_rejects_non_pi_areas() {
        let p = crate::dynamics::Pulse::new(1.0, 0.0, 1.0).unwrap();
        let seq = CompositeSequence::new(vec![p], "off").unwrap();
        assert!(cpt_residual_oracle(&seq).is_err());
    }
}
