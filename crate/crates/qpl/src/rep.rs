//! Finite truncations of the one-sided weighted shift representation.
//!
//! On the first D basis vectors of the shift space, the three generators act
//! as
//!
//!   B0 e_n = q^(2n) e_n,
//!   B- e_n = q^n sqrt(1 - q^(2n)) e_{n-1},
//!   B+ e_n = q^(n+1) sqrt(1 - q^(2n+2)) e_{n+1},
//!
//! so B0 is the multiplication operator by the grid coordinate and B-, B+
//! are the lowering and raising shifts. The defining relations
//!
//!   B- B0 = q^2 B0 B-,          B+ B0 = q^-2 B0 B+,
//!   B+ B- = B0 (1 - B0),        B- B+ = q^2 B0 (1 - q^2 B0),
//!   B+ = B- transposed,
//!
//! hold exactly on the truncation except for B- B+ in the last column, where
//! the cut raising step loses the single diagonal entry q^(2D)(1 - q^(2D)).
//! That boundary defect is the whole truncation error, and it decays
//! geometrically in D; [`boundary_defect`] reports it next to its closed
//! form. Multiplication operators intertwine with the shift through the
//! one-step dilation: B- pi(f) = pi(f(q^2 .)) B-.
//!
//! [`independence_rank`] measures how many operators of the shape
//! pi(f_i) B-^(n_i) are linearly independent, which is how kernel sections
//! of different twists are separated after transporting them into the shift
//! picture.

use crate::param::QParam;
use crate::spectral::{SpectralFunction, SpectrumPoint};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Matrix acting on the first D shift basis vectors.
pub type TruncatedOperator = DMatrix<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum RepError {
    #[error("truncation dimension {dim} too small, need at least {needed}")]
    DimTooSmall { dim: usize, needed: usize },
    #[error("operator {index} has |f(1)| below tol; its top row carries no scale")]
    ZeroAtTop { index: usize },
}

/// The truncated generators (B-, B0, B+), each built from its own entry
/// formula (so the adjoint relation between B- and B+ is a real check, not
/// a construction).
pub fn rep_generators(
    p: &QParam,
    dim: usize,
) -> (TruncatedOperator, TruncatedOperator, TruncatedOperator) {
    let b0 = DMatrix::from_diagonal(&DVector::from_iterator(dim, (0..dim).map(|n| p.point(n))));
    let mut bm = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        bm[(n - 1, n)] = p.q().powi(n as i32) * (1.0 - p.point(n)).sqrt();
    }
    let mut bp = DMatrix::zeros(dim, dim);
    for n in 0..dim.saturating_sub(1) {
        bp[(n + 1, n)] = p.q().powi(n as i32 + 1) * (1.0 - p.point(n + 1)).sqrt();
    }
    (bm, b0, bp)
}

/// Multiplication operator pi(f) = diag(f(1), f(q^2), ..., f(q^(2(D-1)))).
pub fn rep_function(p: &QParam, f: &SpectralFunction, dim: usize) -> TruncatedOperator {
    DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|n| f.eval(p, SpectrumPoint::Index(n))),
    ))
}

/// Largest absolute entry within the given column range.
fn max_abs_cols(m: &TruncatedOperator, cols: std::ops::Range<usize>) -> f64 {
    let mut worst = 0.0f64;
    for c in cols {
        for r in 0..m.nrows() {
            worst = worst.max(m[(r, c)].abs());
        }
    }
    worst
}

/// Residuals of the defining relations on the truncation, measured over the
/// interior columns 0..D-2 where no truncation defect exists (the adjoint
/// and pure-scaling relations are defect-free everywhere and are measured
/// over all columns).
#[derive(Clone, Copy, Debug)]
pub struct RelationResiduals {
    /// B- B0 - q^2 B0 B-.
    pub lower_scaling: f64,
    /// B+ B0 - q^-2 B0 B+.
    pub upper_scaling: f64,
    /// B- B+ - q^2 B0 (1 - q^2 B0) over interior columns.
    pub lower_raise: f64,
    /// B+ B- - B0 (1 - B0).
    pub raise_lower: f64,
    /// B+ transposed minus B-.
    pub adjoint: f64,
    /// B- pi(x^2) - pi(q^4 x^2) B-.
    pub dilation: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        self.lower_scaling
            .max(self.upper_scaling)
            .max(self.lower_raise)
            .max(self.raise_lower)
            .max(self.adjoint)
            .max(self.dilation)
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("b_minus_b_zero", self.lower_scaling),
            ("b_plus_b_zero", self.upper_scaling),
            ("b_minus_b_plus", self.lower_raise),
            ("b_plus_b_minus", self.raise_lower),
            ("adjoint", self.adjoint),
            ("dilation", self.dilation),
        ]
    }
}

pub fn relation_residuals(p: &QParam, dim: usize) -> RelationResiduals {
    let (bm, b0, bp) = rep_generators(p, dim);
    let q2 = p.q2();
    let interior = 0..dim.saturating_sub(1);
    let all = 0..dim;

    let lower_scaling = max_abs_cols(&(&bm * &b0 - q2 * (&b0 * &bm)), all.clone());
    let upper_scaling = max_abs_cols(&(&bp * &b0 - (&b0 * &bp) / q2), all.clone());

    let id = DMatrix::identity(dim, dim);
    let lower_raise_rhs = q2 * (&b0 * (&id - q2 * &b0));
    let lower_raise = max_abs_cols(&(&bm * &bp - lower_raise_rhs), interior);
    let raise_lower = max_abs_cols(&(&bp * &bm - &b0 * (&id - &b0)), all.clone());

    let adjoint = max_abs_cols(&(bp.transpose() - &bm), all.clone());

    let xsq = SpectralFunction::poly(vec![0.0, 0.0, 1.0]).expect("x^2 is a valid polynomial");
    let dilated = xsq.dilate(p, 1);
    let dilation = max_abs_cols(
        &(&bm * rep_function(p, &xsq, dim) - rep_function(p, &dilated, dim) * &bm),
        all,
    );

    RelationResiduals {
        lower_scaling,
        upper_scaling,
        lower_raise,
        raise_lower,
        adjoint,
        dilation,
    }
}

/// The truncation defect of B- B+ in the last column, with its closed form
/// q^(2D)(1 - q^(2D)).
#[derive(Clone, Copy, Debug)]
pub struct BoundaryDefect {
    pub measured: f64,
    pub predicted: f64,
}

pub fn boundary_defect(p: &QParam, dim: usize) -> BoundaryDefect {
    let (bm, b0, bp) = rep_generators(p, dim);
    let q2 = p.q2();
    let id = DMatrix::identity(dim, dim);
    let rhs = q2 * (&b0 * (&id - q2 * &b0));
    let diff = &bm * &bp - rhs;
    let measured = max_abs_cols(&diff, dim - 1..dim);
    let predicted = p.point(dim) * (1.0 - p.point(dim));
    BoundaryDefect { measured, predicted }
}

/// Number of linearly independent operators pi(f_i) B-^(n_i).
///
/// Each operator is flattened, scaled to unit sup, and stacked; the rank is
/// the number of singular values above `rank_tol` times the largest. The
/// truncation must leave room for the deepest shift power plus a couple of
/// columns, and each f_i must carry scale at the top of the grid, where the
/// flattened rows are anchored.
pub fn independence_rank(
    p: &QParam,
    items: &[(&SpectralFunction, usize)],
    dim: usize,
    rank_tol: f64,
) -> Result<usize, RepError> {
    if items.is_empty() {
        return Ok(0);
    }
    let max_shift = items.iter().map(|(_, n)| *n).max().unwrap_or(0);
    if dim <= max_shift + 2 {
        return Err(RepError::DimTooSmall { dim, needed: max_shift + 3 });
    }
    for (i, (f, _)) in items.iter().enumerate() {
        if f.eval(p, SpectrumPoint::Index(0)).abs() <= p.tol {
            return Err(RepError::ZeroAtTop { index: i });
        }
    }

    let (bm, _, _) = rep_generators(p, dim);
    let mut stacked = DMatrix::zeros(items.len(), dim * dim);
    for (i, (f, n)) in items.iter().enumerate() {
        let mut shift = DMatrix::identity(dim, dim);
        for _ in 0..*n {
            shift = &bm * shift;
        }
        let m = rep_function(p, f, dim) * shift;
        let sup = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if sup == 0.0 {
            // A zero operator contributes nothing; leave its row zero.
            continue;
        }
        for (j, v) in m.iter().enumerate() {
            stacked[(i, j)] = v / sup;
        }
    }
    let svd = stacked.svd(false, false);
    let top = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
    if top == 0.0 {
        return Ok(0);
    }
    Ok(svd
        .singular_values
        .iter()
        .filter(|&&s| s > rank_tol * top)
        .count())
}
