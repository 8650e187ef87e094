//! Kernels of the twisted derivations attached to a connection form: the
//! holomorphic sections of the line bundles over the grid.
//!
//! For a twist n >= 0 and connection form h, a section is a grid function f
//! annihilated by the twisted operator
//!
//!   (T_n f)(x) = q^(2n) x (d f)(x) + [n] f(x) - q^(2n) x (d h)(q^(2n) x) f(x),
//!
//! with [n] = (1 - q^(2n))/(1 - q^2). Expanding the derivative turns
//! T_n f = 0 into a one-step recursion down the grid,
//!
//!   f(q^(2m)) = f(q^(2m-2)) * D_{n+m-1} / q^(2n),
//!   D_j = 1 - h(q^(2j)) + h(q^(2j+2)),
//!
//! normalized by f(1) = 1. The 1/q^(2n) per step makes f unbounded unless a
//! vanishing step factor cuts it off: a defective spot of h at index N kills
//! the twist-n recursion at m = N - n, so bounded sections exist exactly for
//! the twists 0 <= n < max spot, and their count is a lower bound for the
//! kernel dimension. A spotless form supports only the twist-0 section,
//! which is precisely the gauge transform to the standard form.
//!
//! Sections that vanish from some index on are stored exactly, with three
//! trailing zeros so the derivative model sees the genuinely constant tail.

use crate::gauge::{
    defective_spots, resolve_horizon, solve_gauge_to_standard, ConnectionForm, DefectSet,
    GaugeError,
};
use crate::param::QParam;
use crate::spectral::{SpectralFunction, SpectrumPoint};

/// A kernel element of the twist-n derivation, normalized to f(1) = 1.
#[derive(Clone, Debug)]
pub struct HolomorphicSection {
    pub twist: usize,
    pub values: SpectralFunction,
    /// First grid index from which the section is exactly zero, if any.
    pub vanishes_from: Option<usize>,
    /// Sup of |T_n f| over the residual window, divided by sup |f|.
    pub residual: f64,
    /// Number of grid steps the residual was evaluated over.
    pub residual_depth: usize,
}

/// The full kernel computation for one connection form.
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub spots: DefectSet,
    pub sections: Vec<HolomorphicSection>,
    /// Number of independent sections found: max spot, or 1 when spotless.
    pub dim_lower_bound: usize,
}

/// Scaled residual of the twist-n operator on f over the resolvable window:
/// max_k |T_n f (q^(2k))| / sup|f|, together with the window length.
///
/// The q^(2n) x prefactor cancels the 1/x in the difference quotient, so the
/// rows stay at the scale of f itself and the normalized residual is
/// meaningful at any depth.
pub fn section_residual(
    p: &QParam,
    form: &ConnectionForm,
    twist: usize,
    f: &SpectralFunction,
) -> (f64, usize) {
    let window = match f.stored_depth() {
        Some(m) => m.saturating_sub(1),
        None => resolve_horizon(p) + 1,
    };
    let sup = f.sup_norm(p).value;
    if sup == 0.0 || window == 0 {
        return (0.0, window);
    }
    let df = f.delta_bar(p);
    let bracket = p.geom_sum(twist);
    let mut worst = 0.0f64;
    for k in 0..window {
        let x_shift = p.point(twist + k);
        let row = x_shift * df.eval(p, SpectrumPoint::Index(k))
            + bracket * f.eval(p, SpectrumPoint::Index(k))
            - x_shift
                * form.delta().eval(p, SpectrumPoint::Index(twist + k))
                * f.eval(p, SpectrumPoint::Index(k));
        worst = worst.max(row.abs());
    }
    (worst / sup, window)
}

/// All bounded kernel sections of the twisted derivations for `form`.
pub fn kernel_sections(p: &QParam, form: &ConnectionForm) -> Result<KernelReport, GaugeError> {
    let spots = defective_spots(p, form)?;
    if spots.is_empty() {
        // Only the twist-0 kernel is nontrivial, and its element is the
        // gauge transform to the standard form.
        let g = solve_gauge_to_standard(p, form)?;
        let (residual, residual_depth) = section_residual(p, form, 0, &g.g);
        return Ok(KernelReport {
            spots,
            sections: vec![HolomorphicSection {
                twist: 0,
                values: g.g,
                vanishes_from: None,
                residual,
                residual_depth,
            }],
            dim_lower_bound: 1,
        });
    }

    let top = spots.last().expect("nonempty spot set");
    let mut sections = Vec::with_capacity(top);
    for twist in 0..top {
        let cutoff = spots
            .spots()
            .iter()
            .find(|&&s| s > twist)
            .map(|&s| s - twist)
            .expect("top spot exceeds every admitted twist");
        // Recurse to the cutoff, then pad the exact zero tail.
        let mut values = Vec::with_capacity(cutoff + 3);
        values.push(1.0f64);
        let qn = p.point(twist);
        for m in 1..cutoff {
            let d = form.step_factor(p, twist + m - 1);
            let next = values[m - 1] * d / qn;
            if !next.is_finite() {
                return Err(GaugeError::Overflow { index: m });
            }
            values.push(next);
        }
        values.extend_from_slice(&[0.0, 0.0, 0.0]);

        // Everything varies inside the stored window, so the stored
        // quotients bound the derivative exactly.
        let scale = 1.0 - p.q2();
        let bound = (0..values.len() - 1)
            .map(|k| (values[k] - values[k + 1]).abs() / (scale * p.point(k)))
            .fold(0.0, f64::max);
        let f = SpectralFunction::sampled(p, values, 0.0, bound)?;
        let (residual, residual_depth) = section_residual(p, form, twist, &f);
        sections.push(HolomorphicSection {
            twist,
            values: f,
            vanishes_from: Some(cutoff),
            residual,
            residual_depth,
        });
    }
    Ok(KernelReport {
        spots,
        sections,
        dim_lower_bound: top,
    })
}

/// Lower bound for the kernel dimension from the defective spots alone.
pub fn kernel_dim_lower_bound(p: &QParam, form: &ConnectionForm) -> Result<usize, GaugeError> {
    let spots = defective_spots(p, form)?;
    Ok(spots.last().unwrap_or(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::defect_connection;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    fn at(p: &QParam, f: &SpectralFunction, n: usize) -> f64 {
        f.eval(p, SpectrumPoint::Index(n))
    }

    #[test]
    fn twist_zero_section_of_deep_defect_matches_integer_recursion() {
        // h = x/(q^14 - q^16) at q = 1/2: D_k = 1 - 4^(7-k), so the twist-0
        // section values are exact integer products up to 2^53.
        let p = q(0.5);
        let form = defect_connection(&p, 8).unwrap();
        let report = kernel_sections(&p, &form).unwrap();
        assert_eq!(report.dim_lower_bound, 8);
        assert_eq!(report.sections.len(), 8);
        let s0 = &report.sections[0];
        assert_eq!(s0.twist, 0);
        assert_eq!(s0.vanishes_from, Some(8));
        let f = &s0.values;
        assert_eq!(at(&p, f, 0), 1.0);
        assert_eq!(at(&p, f, 1), -16383.0);
        assert_eq!(at(&p, f, 2), 67088385.0);
        assert_eq!(at(&p, f, 3), -68631417855.0);
        assert_eq!(at(&p, f, 4), 17501011553025.0);
        assert_eq!(at(&p, f, 5), -1102563727840575.0);
        // Beyond 2^53 the products round; check to a relative 1e-12.
        let v6 = at(&p, f, 6);
        assert!((v6 - 16538455917608625.0).abs() <= 1e-12 * v6.abs());
        let v7 = at(&p, f, 7);
        assert!((v7 + 49615367752825875.0).abs() <= 1e-12 * v7.abs());
        assert_eq!(at(&p, f, 8), 0.0);
        assert_eq!(at(&p, f, 25), 0.0);
        assert_eq!(f.at_zero(&p), 0.0);
        assert!(s0.residual <= 1e-9, "residual {}", s0.residual);
    }

    #[test]
    fn all_twists_vanish_at_the_spot_shifted_by_their_index() {
        let p = q(0.5);
        let form = defect_connection(&p, 3).unwrap();
        let report = kernel_sections(&p, &form).unwrap();
        assert_eq!(report.dim_lower_bound, 3);
        let cutoffs: Vec<Option<usize>> =
            report.sections.iter().map(|s| s.vanishes_from).collect();
        assert_eq!(cutoffs, vec![Some(3), Some(2), Some(1)]);
        for s in &report.sections {
            assert_eq!(at(&p, &s.values, 0), 1.0);
            assert!(s.residual <= 1e-9, "twist {}: residual {}", s.twist, s.residual);
        }
        // Twist 1 of the spot-3 form: f_1 = D_1 / q^2 = (1 - q^(-2)) * 4.
        let f1 = &report.sections[1].values;
        assert_eq!(at(&p, f1, 1), -12.0);
        assert_eq!(at(&p, f1, 2), 0.0);
    }

    #[test]
    fn spotless_form_has_exactly_the_gauge_section() {
        let p = q(0.5);
        let form =
            ConnectionForm::new(&p, SpectralFunction::poly(vec![0.0, 1.0]).unwrap()).unwrap();
        let report = kernel_sections(&p, &form).unwrap();
        assert_eq!(report.dim_lower_bound, 1);
        assert_eq!(report.sections.len(), 1);
        let s = &report.sections[0];
        assert_eq!(s.twist, 0);
        assert_eq!(s.vanishes_from, None);
        let g = solve_gauge_to_standard(&p, &form).unwrap();
        for n in 0..8 {
            assert_eq!(at(&p, &s.values, n), at(&p, &g.g, n));
        }
        assert!(s.residual <= 1e-9);
        assert_eq!(kernel_dim_lower_bound(&p, &form).unwrap(), 1);
    }

    #[test]
    fn two_spot_form_yields_sections_cut_by_the_nearest_spot() {
        // Build a sampled form with spots exactly at 2 and 5: the increments
        // f(q^(2j)) - f(q^(2j+2)) are 1 at j = 1, 4 and 0.3 q^(2j+2)
        // otherwise.
        let p = q(0.5);
        let depth = 14usize;
        let mut vals = vec![3.0f64];
        for j in 0..depth - 1 {
            let inc = if j == 1 || j == 4 {
                1.0
            } else {
                0.3 * p.point(j + 1)
            };
            let last = *vals.last().unwrap();
            vals.push(last - inc);
        }
        let limit = *vals.last().unwrap();
        let bound = 1.0 / ((1.0 - p.q2()) * p.point(4)) + 1.0;
        let f = SpectralFunction::sampled(&p, vals, limit, bound).unwrap();
        let form = ConnectionForm::new(&p, f).unwrap();
        let spots = defective_spots(&p, &form).unwrap();
        assert_eq!(spots.spots(), &[2, 5]);

        let report = kernel_sections(&p, &form).unwrap();
        assert_eq!(report.dim_lower_bound, 5);
        let cutoffs: Vec<Option<usize>> =
            report.sections.iter().map(|s| s.vanishes_from).collect();
        assert_eq!(
            cutoffs,
            vec![Some(2), Some(1), Some(3), Some(2), Some(1)]
        );
        for s in &report.sections {
            assert!(
                s.residual <= 1e-8,
                "twist {}: residual {}",
                s.twist,
                s.residual
            );
        }
    }

    #[test]
    fn residual_detects_a_corrupted_section() {
        let p = q(0.5);
        let form = defect_connection(&p, 4).unwrap();
        let report = kernel_sections(&p, &form).unwrap();
        let clean = &report.sections[0];
        // Rebuild the section with one value nudged by a relative 1e-6.
        let m = clean.values.stored_depth().unwrap();
        let mut vals: Vec<f64> = (0..m).map(|n| at(&p, &clean.values, n)).collect();
        vals[1] *= 1.0 + 1e-6;
        let bound = clean.values.delta_sup_bound(&p).upper() * 2.0;
        let dirty = SpectralFunction::sampled(&p, vals, 0.0, bound).unwrap();
        let (res, _) = section_residual(&p, &form, 0, &dirty);
        assert!(
            res > 100.0 * clean.residual && res > 1e-8,
            "clean {} dirty {}",
            clean.residual,
            res
        );
    }
}
