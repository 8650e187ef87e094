//! Certified evaluation of infinite products with geometrically decaying
//! factors.
//!
//! The products that arise on the q-grid all have the shape
//!
//!   P = prod_{k=1}^{inf} f(k),      |1 - f(k)| <= c * q^(2k)  for k > onset,
//!
//! so the log-tail beyond a cutoff K is bounded by
//! c * q^(2(K+1)) / (1 - q^2). [`certified_product`] multiplies factors up to
//! the first K where that tail drops below `prod_tol` and reports the partial
//! product together with a rigorous error bound
//!
//!   |P - value| <= |value| * (exp(tail) - 1)    (plus rounding slack).
//!
//! A factor smaller than `tol` in absolute value short-circuits the whole
//! product to an exact structural zero: vanishing factors are a verdict, not
//! a rounding accident, and the vanishing index is reported.

use crate::param::QParam;
use thiserror::Error;

/// A number together with a bound on how far it may sit from the exact value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedValue {
    pub value: f64,
    pub error_bound: f64,
}

impl CertifiedValue {
    /// Upper bound value + error_bound; what to use when this quantity
    /// enters another bound.
    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }
}

/// Decay certificate for product factors: |1 - f(k)| <= c * q^(2k) whenever
/// k > onset. Factors at or below `onset` may be arbitrary (finite) numbers;
/// they are always multiplied in full.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayCertificate {
    pub c: f64,
    pub onset: usize,
}

impl DecayCertificate {
    pub fn new(c: f64, onset: usize) -> Self {
        Self { c, onset }
    }
}

/// Result of a certified product evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedProduct {
    pub value: CertifiedValue,
    /// Index of the first factor that vanished under `tol`, if any. When set,
    /// `value` is the structural zero (0 with error bound 0).
    pub vanished_at: Option<usize>,
    /// Number of factors actually multiplied.
    pub factors_used: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProductError {
    #[error("decay certificate constant must be finite and nonnegative, got {0}")]
    NoDecayCertificate(f64),
    #[error("certified tail needs {needed} factors but n_cap = {cap}")]
    CapExceeded { needed: usize, cap: usize },
    #[error("factor {index} is not finite ({value})")]
    NonFiniteFactor { index: usize, value: f64 },
}

/// Evaluate `prod_{k=1}^{inf} factor(k)` under a decay certificate.
///
/// The cutoff K is the smallest index at or beyond `max(onset, 1)` with
/// `c * q^(2(K+1)) / (1 - q^2) < prod_tol`; requiring more than `n_cap`
/// factors is an error rather than a silently loose answer.
pub fn certified_product(
    p: &QParam,
    mut factor: impl FnMut(usize) -> f64,
    cert: DecayCertificate,
) -> Result<CertifiedProduct, ProductError> {
    if !cert.c.is_finite() || cert.c < 0.0 {
        return Err(ProductError::NoDecayCertificate(cert.c));
    }

    // Find the cutoff from the certificate alone; the factors are not
    // consulted, so the certificate really is the source of rigor.
    let q2 = p.q2();
    let mut cutoff = cert.onset.max(1);
    let mut tail = cert.c * p.point(cutoff + 1) / (1.0 - q2);
    while tail >= p.prod_tol {
        cutoff += 1;
        tail *= q2;
        if cutoff > p.n_cap {
            return Err(ProductError::CapExceeded {
                needed: cutoff,
                cap: p.n_cap,
            });
        }
    }

    let mut value = 1.0f64;
    for k in 1..=cutoff {
        let f = factor(k);
        if !f.is_finite() {
            return Err(ProductError::NonFiniteFactor { index: k, value: f });
        }
        if f.abs() <= p.tol {
            return Ok(CertifiedProduct {
                value: CertifiedValue {
                    value: 0.0,
                    error_bound: 0.0,
                },
                vanished_at: Some(k),
                factors_used: k,
            });
        }
        value *= f;
    }

    // exp_m1(tail) bounds the relative tail defect; the epsilon term covers
    // the rounding of `cutoff` multiplications.
    let error_bound = value.abs() * (tail.exp_m1() + cutoff as f64 * f64::EPSILON);
    Ok(CertifiedProduct {
        value: CertifiedValue { value, error_bound },
        vanished_at: None,
        factors_used: cutoff,
    })
}
