//! Gauge transforms between connection forms on the q-grid.
//!
//! A connection form is a grid function f; a gauge transform carrying f to
//! another form h is a grid function g satisfying, one grid step at a time,
//!
//!   g(q^(2n+2)) D_n = g(q^(2n)) F_n,
//!   F_n = 1 - f(q^(2n)) + f(q^(2n+2)),    D_n = 1 - h(q^(2n)) + h(q^(2n+2)),
//!
//! equivalently, in derivative form, d g = g (d f) - (m g)(d h) with m the
//! one-step dilation. Carrying f to the zero form (h = 0, all D_n = 1) has
//! the explicit product solution
//!
//!   g(q^(2n)) = g(1) prod_{k=1}^{n} F_{k-1},
//!
//! normalized here by g(1) = 1. Its tail prod_{k>n} F_{k-1} converges
//! geometrically because |1 - F_n| = |f(q^(2n)) - f(q^(2n+2))| is controlled
//! by the slope bound of f, so the value at the accumulation point is a
//! certified infinite product.
//!
//! A step factor F_n that vanishes (within `tol`) is a *defective spot* at
//! grid index n+1: the product solution is 0 from that index on, and no
//! invertible gauge to the standard form exists. Two forms admit an
//! invertible gauge between them exactly when their defective spots agree;
//! the first asymmetric vanishing is reported as an obstruction.
//!
//! Numerically, gauge values are stored down to the resolvability horizon:
//! the deepest grid index k where a difference quotient still divides by a
//! q^(2k)(1 - q^2) large enough that binary64 rounding stays orders of
//! magnitude below the reported residuals. Beyond the horizon only the
//! certified limit is kept.

use crate::param::QParam;
use crate::product::{certified_product, CertifiedValue, DecayCertificate};
use crate::spectral::{SpectralError, SpectralFunction, SpectrumPoint};
use thiserror::Error;

/// Difference quotients at grid index k divide by q^(2k)(1 - q^2); below
/// this floor (about 1e10 ulp of 1.0) rounding noise would contaminate the
/// digits the residual checks care about.
const RESOLVE_FLOOR: f64 = 2.2e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GaugeError {
    #[error("connection form is not in the domain of the derivative")]
    NotInDomain,
    #[error("defective-spot scan needs {needed} steps but n_cap = {cap}")]
    ScanCapExceeded { needed: usize, cap: usize },
    #[error("gauge values overflow binary64 at grid index {index}")]
    Overflow { index: usize },
    #[error("defect index must be at least 1")]
    SpotAtZero,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Product(#[from] crate::product::ProductError),
}

/// A grid function in the derivative's domain, with its derivative and slope
/// bound cached: everything the gauge recursions consume.
#[derive(Clone, Debug)]
pub struct ConnectionForm {
    f: SpectralFunction,
    delta: SpectralFunction,
    slope: CertifiedValue,
}

impl ConnectionForm {
    pub fn new(p: &QParam, f: SpectralFunction) -> Result<Self, GaugeError> {
        if !f.in_delta_domain(p) {
            return Err(GaugeError::NotInDomain);
        }
        let delta = f.delta_bar(p);
        let slope = f.delta_sup_bound(p);
        Ok(Self { f, delta, slope })
    }

    pub fn function(&self) -> &SpectralFunction {
        &self.f
    }

    /// The derivative d f.
    pub fn delta(&self) -> &SpectralFunction {
        &self.delta
    }

    /// Certified bound on sup |d f|.
    pub fn slope_bound(&self) -> CertifiedValue {
        self.slope
    }

    /// Step factor F_n = 1 - f(q^(2n)) + f(q^(2n+2)).
    pub fn step_factor(&self, p: &QParam, n: usize) -> f64 {
        1.0 - self.f.eval(p, SpectrumPoint::Index(n)) + self.f.eval(p, SpectrumPoint::Index(n + 1))
    }
}

/// The connection form x / (q^(2n-2) - q^(2n)), whose only defective spot is
/// at grid index n: its step factors are F_{k-1} = 1 - q^(2(k-n)).
pub fn defect_connection(p: &QParam, n: usize) -> Result<ConnectionForm, GaugeError> {
    if n == 0 {
        return Err(GaugeError::SpotAtZero);
    }
    let denom = p.point(n - 1) - p.point(n);
    let f = SpectralFunction::poly(vec![0.0, 1.0 / denom])?;
    ConnectionForm::new(p, f)
}

/// Defective spots of a connection form, with the scan depth that certifies
/// there are none deeper.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefectSet {
    spots: Vec<usize>,
    scan_depth: usize,
}

impl DefectSet {
    pub fn spots(&self) -> &[usize] {
        &self.spots
    }

    pub fn is_empty(&self) -> bool {
        self.spots.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.spots.binary_search(&n).is_ok()
    }

    pub fn last(&self) -> Option<usize> {
        self.spots.last().copied()
    }

    /// Grid indices beyond this depth are certified spot-free: the slope
    /// bound keeps every deeper step factor within 1/2 of 1.
    pub fn scan_depth(&self) -> usize {
        self.scan_depth
    }
}

/// Smallest n >= 1 with slope * (1 - q^2) * q^(2n-2) < 1/2: beyond it no
/// step factor can vanish.
fn spot_scan_depth(p: &QParam, slope: f64) -> Result<usize, GaugeError> {
    let mut n = 1usize;
    let mut t = slope * (1.0 - p.q2());
    while t >= 0.5 {
        n += 1;
        t *= p.q2();
        if n > p.n_cap {
            return Err(GaugeError::ScanCapExceeded { needed: n, cap: p.n_cap });
        }
    }
    Ok(n)
}

/// Scan for defective spots: grid indices k >= 1 with |F_{k-1}| <= tol.
pub fn defective_spots(p: &QParam, form: &ConnectionForm) -> Result<DefectSet, GaugeError> {
    let depth = spot_scan_depth(p, form.slope.upper())?;
    let spots = (1..=depth)
        .filter(|&k| form.step_factor(p, k - 1).abs() <= p.tol)
        .collect();
    Ok(DefectSet { spots, scan_depth: depth })
}

/// Deepest grid index whose difference quotients are still resolvable; see
/// [`RESOLVE_FLOOR`].
pub(crate) fn resolve_horizon(p: &QParam) -> usize {
    let scale = 1.0 - p.q2();
    let mut k = 0usize;
    while p.point(k + 1) * scale >= RESOLVE_FLOOR && k < p.n_cap {
        k += 1;
    }
    k
}

/// A solved gauge problem.
#[derive(Clone, Debug)]
pub struct GaugeResult {
    /// The gauge transform, stored to the resolvability horizon with the
    /// certified limit as its tail value.
    pub g: SpectralFunction,
    /// Certified value of g at the accumulation point.
    pub limit: CertifiedValue,
    /// Defective spots of the source form (equal to the target's when this
    /// came from a two-form problem).
    pub spots: DefectSet,
    /// Scaled sup of |d g - (g (d f) - (m g)(d h))| over the residual
    /// window, normalized by the magnitude of the terms compared.
    pub residual: f64,
    /// Number of stored grid steps the residual was evaluated over.
    pub residual_depth: usize,
    /// Whether g is invertible on the whole grid: every stored value and the
    /// certified limit stay away from 0.
    pub invertible: bool,
}

/// Which side of a two-form gauge problem owns an unmatched defective spot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Outcome of a two-form gauge problem.
#[derive(Clone, Debug)]
pub enum BetweenOutcome {
    Solved(GaugeResult),
    /// No invertible gauge exists: exactly one of the step factors vanished.
    /// A vanishing source factor F_n forces g = 0 from index n+1 on; a
    /// vanishing target factor D_n makes step n unsatisfiable with
    /// g(q^(2n)) nonzero.
    Obstructed { index: usize, side: Side },
}

enum Mode {
    /// Target is the zero form; vanishing factors zero the solution out
    /// (the product solution is still the answer, just not invertible).
    Standard,
    /// Both forms given; asymmetric vanishing obstructs, symmetric vanishing
    /// carries the previous value through the 0 = 0 step.
    Between,
}

/// Gauge from `form` to the zero form: the product solution with g(1) = 1.
pub fn solve_gauge_to_standard(p: &QParam, form: &ConnectionForm) -> Result<GaugeResult, GaugeError> {
    match solve_impl(p, form, None, Mode::Standard)? {
        BetweenOutcome::Solved(r) => Ok(r),
        BetweenOutcome::Obstructed { .. } => {
            unreachable!("the zero form has no defective spots to mismatch")
        }
    }
}

/// Invertible gauge carrying `source` to `target`, or the obstruction.
pub fn solve_gauge_between(
    p: &QParam,
    source: &ConnectionForm,
    target: &ConnectionForm,
) -> Result<BetweenOutcome, GaugeError> {
    solve_impl(p, source, Some(target), Mode::Between)
}

/// Whether `form` is gauge equivalent to the zero form through an invertible
/// transform: no defective spots and a certified nonvanishing limit.
pub fn is_standard_class(p: &QParam, form: &ConnectionForm) -> Result<bool, GaugeError> {
    Ok(solve_gauge_to_standard(p, form)?.invertible)
}

fn solve_impl(
    p: &QParam,
    source: &ConnectionForm,
    target: Option<&ConnectionForm>,
    mode: Mode,
) -> Result<BetweenOutcome, GaugeError> {
    let mf = source.slope.upper();
    let mh = target.map(|t| t.slope.upper()).unwrap_or(0.0);

    let spots_f = defective_spots(p, source)?;
    let spots_h = match target {
        Some(t) => defective_spots(p, t)?,
        None => DefectSet { spots: Vec::new(), scan_depth: spots_f.scan_depth },
    };
    let last_spot = spots_f.last().max(spots_h.last()).unwrap_or(0);

    // Head/tail split of the factor sequence. Beyond `onset` each ratio
    // factor sits within 1/4 of 1 (and each target factor within 1/8 of 1,
    // so dividing by it is safe): (Mf + Mh)(1 - q^2) q^(2 onset) <= 1/8.
    let mut onset = spots_f.scan_depth.max(spots_h.scan_depth).max(last_spot + 1);
    {
        let scale = (mf + mh) * (1.0 - p.q2());
        while scale * p.point(onset) > 0.125 {
            onset += 1;
            if onset > p.n_cap {
                return Err(GaugeError::ScanCapExceeded { needed: onset, cap: p.n_cap });
            }
        }
    }

    // Tail length: per-factor defect beyond onset is bounded by
    // c' q^(2k) with c' anchored at the onset, so the certified-product
    // cutoff rule gives the number of explicit tail factors.
    let c_tail = match mode {
        Mode::Standard => mf * (1.0 - p.q2()) * p.point(onset - 1),
        Mode::Between => 2.0 * (mf + mh) * (1.0 - p.q2()) * p.point(onset - 1),
    };
    let mut k_tail = 1usize;
    {
        let mut t = c_tail * p.point(k_tail + 1) / (1.0 - p.q2());
        while t >= p.prod_tol {
            k_tail += 1;
            t *= p.q2();
            if onset + k_tail > p.n_cap {
                return Err(GaugeError::ScanCapExceeded {
                    needed: onset + k_tail,
                    cap: p.n_cap,
                });
            }
        }
    }

    let horizon = resolve_horizon(p);
    let n_scan = horizon.max(onset + k_tail);

    let mut values = Vec::with_capacity(n_scan + 1);
    values.push(1.0f64);
    let mut vanished = false;
    for n in 0..n_scan {
        let fnum = source.step_factor(p, n);
        let prev = values[n];
        let next = match mode {
            Mode::Standard => {
                if fnum.abs() <= p.tol {
                    vanished = true;
                    0.0
                } else if vanished {
                    0.0
                } else {
                    prev * fnum
                }
            }
            Mode::Between => {
                let den = target.expect("between mode has a target").step_factor(p, n);
                match (fnum.abs() <= p.tol, den.abs() <= p.tol) {
                    (true, true) => prev,
                    (true, false) => {
                        return Ok(BetweenOutcome::Obstructed { index: n + 1, side: Side::Source })
                    }
                    (false, true) => {
                        return Ok(BetweenOutcome::Obstructed { index: n, side: Side::Target })
                    }
                    (false, false) => prev * fnum / den,
                }
            }
        };
        if !next.is_finite() {
            return Err(GaugeError::Overflow { index: n + 1 });
        }
        values.push(next);
    }

    // Certified limit at the accumulation point.
    let limit = if vanished {
        CertifiedValue { value: 0.0, error_bound: 0.0 }
    } else {
        let ratios: Vec<f64> = (0..k_tail)
            .map(|i| {
                let n = onset + i;
                let fnum = source.step_factor(p, n);
                match target {
                    Some(t) => fnum / t.step_factor(p, n),
                    None => fnum,
                }
            })
            .collect();
        let tail = certified_product(p, |k| ratios[k - 1], DecayCertificate::new(c_tail, 0))?;
        let head = values[onset];
        let value = head * tail.value.value;
        CertifiedValue {
            value,
            error_bound: head.abs() * tail.value.error_bound
                + value.abs() * (onset as f64 + 2.0) * f64::EPSILON,
        }
    };

    let stored: Vec<f64> = values[..=horizon.min(values.len() - 1)].to_vec();

    // Slope bound for g from the derivative form of the gauge relation.
    let sup_g = values
        .iter()
        .map(|v| v.abs())
        .fold(limit.value.abs(), f64::max)
        * (1.0 + 1e-11);
    let bound_g = sup_g * (mf + mh);

    // Residual of the derivative form over the stored window, comparing the
    // stored difference quotients against g (d f) - (m g)(d h).
    let scale = 1.0 - p.q2();
    let mut max_diff = 0.0f64;
    let mut max_mag = 0.0f64;
    for k in 0..stored.len().saturating_sub(1) {
        let lhs = (stored[k] - stored[k + 1]) / (scale * p.point(k));
        let mut rhs = stored[k] * source.delta.eval(p, SpectrumPoint::Index(k));
        if let Some(t) = target {
            rhs -= stored[k + 1] * t.delta.eval(p, SpectrumPoint::Index(k));
        }
        max_diff = max_diff.max((lhs - rhs).abs());
        max_mag = max_mag.max(lhs.abs()).max(rhs.abs());
    }
    let residual = max_diff / (1.0 + max_mag);
    let residual_depth = stored.len().saturating_sub(1);

    let invertible = (limit.value.abs() - limit.error_bound) > p.tol
        && stored.iter().all(|v| v.abs() > p.tol);

    let g = SpectralFunction::sampled(p, stored, limit.value, bound_g)?;
    Ok(BetweenOutcome::Solved(GaugeResult {
        g,
        limit,
        spots: spots_f,
        residual,
        residual_depth,
        invertible,
    }))
}

/// Truncated power series solving d g = g with g(0) = 1: coefficients
/// a_0 = 1, a_k = a_{k-1} (1 - q^2)/(1 - q^(2k)). Truncation at degree d
/// leaves the exact defect g - d g = a_d x^d, so the sup residual on the
/// grid is a_d itself; the coefficients decrease but only geometrically
/// slowly, which is measured rather than assumed in the tests.
pub fn exp_series_g(p: &QParam, degree: usize) -> SpectralFunction {
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut a = 1.0f64;
    coeffs.push(a);
    for k in 1..=degree {
        a /= p.geom_sum(k);
        coeffs.push(a);
    }
    SpectralFunction::poly(coeffs).expect("series coefficients are finite")
}
