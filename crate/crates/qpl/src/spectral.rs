//! Functions on the grid sp = {0} U { q^(2n) : n >= 0 } and the scaled
//! q-difference calculus acting on them.
//!
//! Two representations cover everything downstream:
//!
//! - `Polynomial`: f(x) = sum_k c_k x^k, exact at every grid point.
//! - `Sampled`: values at x_0 = 1, ..., x_{M-1} = q^(2(M-1)) together with a
//!   `limit`; the function is *defined* to equal `limit` at every deeper grid
//!   point and at 0. A `delta_bound` certifies the model: it bounds the
//!   scaled difference quotient everywhere, which forces
//!   |f(q^(2n)) - limit| <= delta_bound * q^(2n) by telescoping, and the
//!   constructor checks that inequality at the deepest stored sample.
//!
//! The two operators are the scaled q-derivative and q-integral
//!
//!   (d f)(x) = (f(x) - f(q^2 x)) / ((1 - q^2) x),
//!   (I f)(x) = (1 - q^2) x sum_{m>=0} q^(2m) f(q^(2m) x),
//!
//! inverse to each other up to evaluation at 0: d(I f) = f and
//! I(d f) = f - f(0). On coefficients d maps c_k to c_k (1-q^(2k))/(1-q^2)
//! one slot down and I divides by the same factor one slot up, so the
//! identities hold to a few ulp. On samples, d uses stored pairs only and
//! extends the deepest quotient as the tail; the seam between the last
//! stored value and the constant tail is never differenced against the tail
//! itself, because objects that truncate a non-constant function would turn
//! that seam into a spurious spike. Keeping two or three copies of the limit
//! at the end of `values` makes the extended quotient exactly zero for
//! genuinely constant tails.

use crate::param::QParam;
use crate::product::CertifiedValue;
use thiserror::Error;

/// A point of the spectrum: either the grid point q^(2n) or its accumulation
/// point 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumPoint {
    Index(usize),
    Zero,
}

impl SpectrumPoint {
    /// Numeric coordinate of the point.
    pub fn value(&self, p: &QParam) -> f64 {
        match *self {
            SpectrumPoint::Index(n) => p.point(n),
            SpectrumPoint::Zero => 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("a sampled function needs at least one stored value")]
    EmptySamples,
    #[error("delta_bound must be finite and nonnegative, got {0}")]
    BadDeltaBound(f64),
    #[error(
        "tail certificate fails at index {index}: |value - limit| = {gap} exceeds {allowed}"
    )]
    TailCertificate { index: usize, gap: f64, allowed: f64 },
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Polynomial {
        /// Coefficients c_0, c_1, ...; trailing exact zeros are trimmed.
        coeffs: Vec<f64>,
    },
    Sampled {
        /// f(q^(2n)) for n = 0..values.len().
        values: Vec<f64>,
        /// Value at every deeper grid point and at 0.
        limit: f64,
        /// Bound on the scaled difference quotient |d f| over the grid.
        delta_bound: f64,
    },
}

/// A real-valued function on the spectrum grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFunction {
    repr: Repr,
}

/// Smallest n with scale * q^(2n) < threshold, clamped to n_cap.
fn flat_depth(p: &QParam, scale: f64, threshold: f64) -> usize {
    let mut t = scale;
    let mut n = 0usize;
    while t >= threshold && n < p.n_cap {
        t *= p.q2();
        n += 1;
    }
    n
}

impl SpectralFunction {
    /// Polynomial sum_k coeffs[k] x^k.
    pub fn poly(coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SpectralError::NonFinite("polynomial coefficient"));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Ok(Self {
            repr: Repr::Polynomial { coeffs },
        })
    }

    /// The constant function c.
    pub fn constant(c: f64) -> Result<Self, SpectralError> {
        Self::poly(vec![c])
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::poly(vec![0.0]).expect("zero polynomial is valid")
    }

    /// Sampled function: `values[n]` at q^(2n), `limit` beyond and at 0.
    ///
    /// `delta_bound` must bound the scaled difference quotient; the deepest
    /// stored sample is checked against the telescoped consequence
    /// |values[M-1] - limit| <= delta_bound * q^(2(M-1)) (plus `tol` slack).
    pub fn sampled(
        p: &QParam,
        values: Vec<f64>,
        limit: f64,
        delta_bound: f64,
    ) -> Result<Self, SpectralError> {
        if values.is_empty() {
            return Err(SpectralError::EmptySamples);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite("sample value"));
        }
        if !limit.is_finite() {
            return Err(SpectralError::NonFinite("tail limit"));
        }
        if !delta_bound.is_finite() || delta_bound < 0.0 {
            return Err(SpectralError::BadDeltaBound(delta_bound));
        }
        let last = values.len() - 1;
        let gap = (values[last] - limit).abs();
        let allowed = delta_bound * p.point(last) + p.tol;
        if gap > allowed {
            return Err(SpectralError::TailCertificate { index: last, gap, allowed });
        }
        Ok(Self {
            repr: Repr::Sampled {
                values,
                limit,
                delta_bound,
            },
        })
    }

    /// Evaluate at a spectrum point.
    pub fn eval(&self, p: &QParam, at: SpectrumPoint) -> f64 {
        match &self.repr {
            Repr::Polynomial { coeffs } => {
                let x = at.value(p);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Repr::Sampled { values, limit, .. } => match at {
                SpectrumPoint::Index(n) if n < values.len() => values[n],
                _ => *limit,
            },
        }
    }

    /// Value at 0, the accumulation point of the grid.
    pub fn at_zero(&self, p: &QParam) -> f64 {
        self.eval(p, SpectrumPoint::Zero)
    }

    /// Polynomial coefficients, when this is a polynomial.
    pub fn poly_coeffs(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Polynomial { coeffs } => Some(coeffs),
            Repr::Sampled { .. } => None,
        }
    }

    /// Number of explicitly stored samples (None for polynomials, which are
    /// exact at every depth).
    pub fn stored_depth(&self) -> Option<usize> {
        match &self.repr {
            Repr::Polynomial { .. } => None,
            Repr::Sampled { values, .. } => Some(values.len()),
        }
    }

    /// Certified bound on sup |d f| over the grid.
    pub fn delta_sup_bound(&self, p: &QParam) -> CertifiedValue {
        match &self.repr {
            Repr::Polynomial { .. } => self.delta_bar(p).sup_norm(p),
            Repr::Sampled { delta_bound, .. } => CertifiedValue {
                value: *delta_bound,
                error_bound: 0.0,
            },
        }
    }

    /// Sup norm over the whole spectrum, with a rigorous error bound.
    ///
    /// Sampled functions are exact (max over stored values and the limit).
    /// For a polynomial, |f(q^(2n)) - c_0| <= q^(2n) sum_{k>=1} |c_k|, so the
    /// scan stops once that envelope drops below `tol`; the envelope at the
    /// first unscanned index is the reported error bound.
    pub fn sup_norm(&self, p: &QParam) -> CertifiedValue {
        match &self.repr {
            Repr::Sampled { values, limit, .. } => {
                let m = values
                    .iter()
                    .map(|v| v.abs())
                    .fold(limit.abs(), f64::max);
                CertifiedValue { value: m, error_bound: 0.0 }
            }
            Repr::Polynomial { coeffs } => {
                let s: f64 = coeffs.iter().skip(1).map(|c| c.abs()).sum();
                let scan_to = flat_depth(p, s, p.tol);
                let mut m = coeffs[0].abs(); // value at 0
                for n in 0..=scan_to {
                    m = m.max(self.eval(p, SpectrumPoint::Index(n)).abs());
                }
                CertifiedValue {
                    value: m,
                    error_bound: s * p.point(scan_to + 1),
                }
            }
        }
    }

    /// Whether f stays away from 0 on the whole spectrum (within `tol`), i.e.
    /// is invertible in the function algebra on the grid.
    pub fn is_invertible(&self, p: &QParam) -> bool {
        match &self.repr {
            Repr::Sampled { values, limit, .. } => {
                limit.abs() > p.tol && values.iter().all(|v| v.abs() > p.tol)
            }
            Repr::Polynomial { coeffs } => {
                let c0 = coeffs[0];
                if c0.abs() <= p.tol {
                    return false;
                }
                let s: f64 = coeffs.iter().skip(1).map(|c| c.abs()).sum();
                if s == 0.0 {
                    return true;
                }
                // Beyond the scan, |f - c_0| < (|c_0| - tol) / 2 keeps f
                // safely away from zero.
                let target = (c0.abs() - p.tol) / 2.0;
                let scan_to = flat_depth(p, s, target);
                (0..=scan_to)
                    .all(|n| self.eval(p, SpectrumPoint::Index(n)).abs() > p.tol)
            }
        }
    }

    /// Whether the sampled model looks like a genuine element of the
    /// derivative's domain: the difference quotients must stabilize as the
    /// grid accumulates at 0. The final quotient increment is compared
    /// against a geometric envelope rather than raw `tol`, since any finite
    /// sampling of a smooth function still carries an O(q^(2M)) increment.
    /// Polynomials always qualify.
    pub fn in_delta_domain(&self, p: &QParam) -> bool {
        match &self.repr {
            Repr::Polynomial { .. } => true,
            Repr::Sampled { values, .. } => {
                if values.len() < 3 {
                    return true;
                }
                let dq = self.stored_quotients(p);
                let last = dq.len() - 1;
                let defect = (dq[last] - dq[last - 1]).abs();
                let peak = dq.iter().map(|d| d.abs()).fold(0.0, f64::max);
                let envelope = p.tol.max(100.0 * p.point(last)) * (1.0 + peak);
                defect <= envelope
            }
        }
    }

    /// Difference quotients over stored pairs: d_n = (v_n - v_{n+1}) /
    /// ((1 - q^2) q^(2n)) for n = 0..M-1.
    fn stored_quotients(&self, p: &QParam) -> Vec<f64> {
        match &self.repr {
            Repr::Polynomial { .. } => Vec::new(),
            Repr::Sampled { values, .. } => {
                let scale = 1.0 - p.q2();
                (0..values.len().saturating_sub(1))
                    .map(|n| (values[n] - values[n + 1]) / (scale * p.point(n)))
                    .collect()
            }
        }
    }

    /// Scaled q-derivative d f.
    ///
    /// Polynomials map coefficientwise: c_k goes to c_k (1-q^(2k))/(1-q^2)
    /// in slot k-1. Sampled functions keep one fewer sample; the tail limit
    /// of the derivative is the deepest stored quotient, never the quotient
    /// across the seam into the constant tail.
    pub fn delta_bar(&self, p: &QParam) -> Self {
        match &self.repr {
            Repr::Polynomial { coeffs } => {
                let out: Vec<f64> = (1..coeffs.len())
                    .map(|k| coeffs[k] * p.geom_sum(k))
                    .collect();
                Self::poly(out).expect("finite coefficients stay finite under d")
            }
            Repr::Sampled { values, .. } => {
                if values.len() < 2 {
                    // A single sample is a constant by the model; d f = 0.
                    return Self {
                        repr: Repr::Sampled {
                            values: vec![0.0],
                            limit: 0.0,
                            delta_bound: 0.0,
                        },
                    };
                }
                let dq = self.stored_quotients(p);
                let limit = *dq.last().expect("at least one stored pair");
                // Empirical bound on |d(d f)| from the quotients themselves.
                let scale = 1.0 - p.q2();
                let bound = (0..dq.len().saturating_sub(1))
                    .map(|k| (dq[k] - dq[k + 1]).abs() / (scale * p.point(k)))
                    .fold(0.0, f64::max);
                Self {
                    repr: Repr::Sampled {
                        values: dq,
                        limit,
                        delta_bound: bound,
                    },
                }
            }
        }
    }

    /// Scaled q-integral I f, the right inverse of the derivative:
    /// d(I f) = f exactly and I(d f) = f - f(0).
    ///
    /// Polynomials map coefficientwise (the inverse factors of `delta_bar`),
    /// with no constant term. For sampled functions
    ///
    ///   (I f)(q^(2n)) = (1 - q^2) sum_{k>=n} q^(2k) f(q^(2k)),
    ///
    /// and the constant tail sums in closed form, so the value is exact. The
    /// integral vanishes at 0; storage is deepened until the remaining tail
    /// q^(2N) ||f|| drops below `prod_tol`, and ||f|| bounds the quotient of
    /// the result since d(I f) = f.
    pub fn i_bar(&self, p: &QParam) -> Self {
        match &self.repr {
            Repr::Polynomial { coeffs } => {
                let mut out = vec![0.0; coeffs.len() + 1];
                for (k, c) in coeffs.iter().enumerate() {
                    out[k + 1] = c / p.geom_sum(k + 1);
                }
                Self::poly(out).expect("finite coefficients stay finite under I")
            }
            Repr::Sampled { values, limit, .. } => {
                let sup = self.sup_norm(p).value;
                let depth = values.len().max(flat_depth(p, sup, p.prod_tol)).max(2);
                let q2 = p.q2();
                // Backward accumulation of T(n) = sum_{k>=n} q^(2k) v_k,
                // seeded with the exact geometric tail of the constant part.
                let mut tail = limit * p.point(depth) / (1.0 - q2);
                let mut out = vec![0.0; depth];
                for n in (0..depth).rev() {
                    let v = if n < values.len() { values[n] } else { *limit };
                    tail += p.point(n) * v;
                    out[n] = (1.0 - q2) * tail;
                }
                Self {
                    repr: Repr::Sampled {
                        values: out,
                        limit: 0.0,
                        delta_bound: sup,
                    },
                }
            }
        }
    }

    /// Dilation (m_{q^(2j)} f)(x) = f(q^(2j) x): a shift j steps down the
    /// grid. The derivative contracts accordingly: d(m f) = q^(2j) m(d f).
    pub fn dilate(&self, p: &QParam, j: usize) -> Self {
        match &self.repr {
            Repr::Polynomial { coeffs } => {
                let out: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * p.point(j * k))
                    .collect();
                Self::poly(out).expect("dilation keeps coefficients finite")
            }
            Repr::Sampled {
                values,
                limit,
                delta_bound,
            } => {
                let kept = values.len().saturating_sub(j).max(1);
                let out: Vec<f64> = (0..kept)
                    .map(|n| {
                        if n + j < values.len() {
                            values[n + j]
                        } else {
                            *limit
                        }
                    })
                    .collect();
                Self {
                    repr: Repr::Sampled {
                        values: out,
                        limit: *limit,
                        delta_bound: delta_bound * p.point(j),
                    },
                }
            }
        }
    }

    /// Pointwise sum.
    pub fn add(&self, p: &QParam, other: &Self) -> Result<Self, SpectralError> {
        if let (Repr::Polynomial { coeffs: a }, Repr::Polynomial { coeffs: b }) =
            (&self.repr, &other.repr)
        {
            let mut out = vec![0.0; a.len().max(b.len())];
            for (k, c) in a.iter().enumerate() {
                out[k] += c;
            }
            for (k, c) in b.iter().enumerate() {
                out[k] += c;
            }
            return Self::poly(out);
        }
        let depth = self.join_depth(p, other);
        let values: Vec<f64> = (0..depth)
            .map(|n| {
                self.eval(p, SpectrumPoint::Index(n)) + other.eval(p, SpectrumPoint::Index(n))
            })
            .collect();
        let limit = self.at_zero(p) + other.at_zero(p);
        let bound = self.delta_sup_bound(p).upper() + other.delta_sup_bound(p).upper();
        Self::sampled(p, values, limit, bound)
    }

    /// Pointwise difference.
    pub fn sub(&self, p: &QParam, other: &Self) -> Result<Self, SpectralError> {
        self.add(p, &other.scale(-1.0)?)
    }

    /// Pointwise product. The quotient bound follows the twisted Leibniz
    /// rule d(fg) = (d f) g + (m f)(d g): b_f ||g|| + ||f|| b_g.
    pub fn mul(&self, p: &QParam, other: &Self) -> Result<Self, SpectralError> {
        if let (Repr::Polynomial { coeffs: a }, Repr::Polynomial { coeffs: b }) =
            (&self.repr, &other.repr)
        {
            let mut out = vec![0.0; a.len() + b.len() - 1];
            for (i, ca) in a.iter().enumerate() {
                for (j, cb) in b.iter().enumerate() {
                    out[i + j] += ca * cb;
                }
            }
            return Self::poly(out);
        }
        let depth = self.join_depth(p, other);
        let values: Vec<f64> = (0..depth)
            .map(|n| {
                self.eval(p, SpectrumPoint::Index(n)) * other.eval(p, SpectrumPoint::Index(n))
            })
            .collect();
        let limit = self.at_zero(p) * other.at_zero(p);
        let bound = self.delta_sup_bound(p).upper() * other.sup_norm(p).upper()
            + other.delta_sup_bound(p).upper() * self.sup_norm(p).upper();
        Self::sampled(p, values, limit, bound)
    }

    /// Scalar multiple.
    pub fn scale(&self, alpha: f64) -> Result<Self, SpectralError> {
        if !alpha.is_finite() {
            return Err(SpectralError::NonFinite("scale factor"));
        }
        let repr = match &self.repr {
            Repr::Polynomial { coeffs } => {
                return Self::poly(coeffs.iter().map(|c| c * alpha).collect());
            }
            Repr::Sampled {
                values,
                limit,
                delta_bound,
            } => Repr::Sampled {
                values: values.iter().map(|v| v * alpha).collect(),
                limit: limit * alpha,
                delta_bound: delta_bound * alpha.abs(),
            },
        };
        Ok(Self { repr })
    }

    /// Storage depth for a mixed binary operation: deep enough that every
    /// operand is flat (within `prod_tol` of its value at 0) beyond it.
    fn join_depth(&self, p: &QParam, other: &Self) -> usize {
        let one = |f: &Self| -> usize {
            match &f.repr {
                Repr::Sampled { values, .. } => values.len(),
                Repr::Polynomial { coeffs } => {
                    let s: f64 = coeffs.iter().skip(1).map(|c| c.abs()).sum();
                    flat_depth(p, s, p.prod_tol) + 1
                }
            }
        };
        one(self).max(one(other)).max(2)
    }
}
