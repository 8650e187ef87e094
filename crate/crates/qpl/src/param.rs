//! Deformation parameter and numeric policy.
//!
//! Everything in this crate computes over the point set
//!
//!   sp = {0} U { q^(2n) : n = 0, 1, 2, ... },   0 < q < 1,
//!
//! in binary64. A [`QParam`] bundles `q` with the three knobs every
//! tolerance-based decision uses:
//!
//! - `tol`: equality / vanishing threshold for function values,
//! - `prod_tol`: tail threshold for certified infinite products,
//! - `n_cap`: hard ceiling on grid scans.
//!
//! `q` above 0.99 is rejected unless `n_cap` is raised far enough that
//! q^(2*n_cap) is still negligible; with the default cap, 0.99^20000 ~ 1.5e-88.

use thiserror::Error;

/// Default equality / vanishing threshold.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default certified-product tail threshold.
pub const DEFAULT_PROD_TOL: f64 = 1e-12;
/// Default grid-scan ceiling.
pub const DEFAULT_N_CAP: usize = 10_000;

/// Largest `q` accepted without an explicitly raised `n_cap`.
const Q_PLAIN_MAX: f64 = 0.99;
/// A raised cap must still drive q^(2*n_cap) below this.
const RAISED_CAP_FLOOR: f64 = 1e-60;

/// Numeric policy knobs; see module docs for their roles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericPolicy {
    pub tol: f64,
    pub prod_tol: f64,
    pub n_cap: usize,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            prod_tol: DEFAULT_PROD_TOL,
            n_cap: DEFAULT_N_CAP,
        }
    }
}

/// Validated deformation parameter with its numeric policy.
///
/// `q2 = q*q` is precomputed once; every grid point is `q2.powi(n)`, so all
/// routines that evaluate at the same index agree bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QParam {
    q: f64,
    q2: f64,
    pub tol: f64,
    pub prod_tol: f64,
    pub n_cap: usize,
}

/// Rejection reasons for a deformation parameter or policy.
#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("deformation parameter must be a finite real, got {0}")]
    NonFinite(f64),
    #[error("deformation parameter must satisfy 0 < q < 1, got {0}")]
    OutOfRange(f64),
    #[error(
        "q = {q} decays too slowly for n_cap = {n_cap}; raise n_cap so that q^(2 n_cap) <= 1e-60"
    )]
    DecayTooSlow { q: f64, n_cap: usize },
    #[error("numeric policy must be finite and positive: {0}")]
    BadPolicy(&'static str),
}

impl QParam {
    /// Validate `q` with the default policy.
    pub fn new(q: f64) -> Result<Self, ParamError> {
        Self::with_policy(q, NumericPolicy::default())
    }

    /// Validate `q` with explicit policy overrides.
    pub fn with_policy(q: f64, policy: NumericPolicy) -> Result<Self, ParamError> {
        if !q.is_finite() {
            return Err(ParamError::NonFinite(q));
        }
        if q <= 0.0 || q >= 1.0 {
            return Err(ParamError::OutOfRange(q));
        }
        if !(policy.tol.is_finite() && policy.tol > 0.0) {
            return Err(ParamError::BadPolicy("tol"));
        }
        if !(policy.prod_tol.is_finite() && policy.prod_tol > 0.0) {
            return Err(ParamError::BadPolicy("prod_tol"));
        }
        if policy.n_cap == 0 {
            return Err(ParamError::BadPolicy("n_cap"));
        }
        if q > Q_PLAIN_MAX {
            // Accept only if the raised cap still reaches a negligible tail:
            // q^(2 n_cap) <= 1e-60, i.e. 2 n_cap ln(1/q) >= 60 ln 10.
            let reach = 2.0 * policy.n_cap as f64 * (-q.ln());
            if policy.n_cap == DEFAULT_N_CAP || reach < -RAISED_CAP_FLOOR.ln() {
                return Err(ParamError::DecayTooSlow {
                    q,
                    n_cap: policy.n_cap,
                });
            }
        }
        Ok(Self {
            q,
            q2: q * q,
            tol: policy.tol,
            prod_tol: policy.prod_tol,
            n_cap: policy.n_cap,
        })
    }

    /// The deformation parameter q.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// q squared: the ratio between consecutive grid points.
    pub fn q2(&self) -> f64 {
        self.q2
    }

    /// Grid point x_n = q^(2n).
    pub fn point(&self, n: usize) -> f64 {
        debug_assert!(n <= i32::MAX as usize);
        self.q2.powi(n as i32)
    }

    /// The q-geometric sum 1 + q^2 + ... + q^(2(n-1)) = (1 - q^(2n)) / (1 - q^2).
    ///
    /// This is the coefficient in d_q(x^n) = geom_sum(n) * x^(n-1); it is 0 at
    /// n = 0 and tends to 1/(1 - q^2) as n grows.
    pub fn geom_sum(&self, n: usize) -> f64 {
        (1.0 - self.point(n)) / (1.0 - self.q2)
    }
}

/// Free-function form of [`QParam::geom_sum`].
pub fn q_geom_sum(p: &QParam, n: usize) -> f64 {
    p.geom_sum(n)
}
