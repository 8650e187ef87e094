//! Report structure shared by all subcommands.
//!
//! One invocation produces one [`Report`]. Field order is fixed by the
//! struct declarations and every run of the same invocation serializes to
//! byte-identical JSON: no timestamps, no map iteration, floats in shortest
//! round-trip form.

use serde::Serialize;
use std::fmt::Write as _;

/// Spot verdicts depend on which algebraic form of the step factor is
/// tested for vanishing; the note pins the convention in every report.
pub const SIGN_NOTE: &str = "sign convention: product-factor vanishing - a defective spot at n \
     means the step factor 1 - f(q^(2n-2)) + f(q^(2n)) vanishes within tol";

#[derive(Serialize)]
pub struct Report {
    pub version: &'static str,
    pub q: f64,
    pub command: &'static str,
    pub inputs: Vec<String>,
    pub policy: Policy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defects: Option<DefectsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sections: Option<Vec<SectionRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub independence_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_lower_bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rep_check: Option<RepCheckBlock>,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
pub struct Policy {
    pub tol: f64,
    pub prod_tol: f64,
    pub n_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
pub struct DefectsBlock {
    pub spots: Vec<usize>,
    /// Indices above this were excluded by the slope bound, not scanned.
    pub scan_bound: usize,
    /// Certified sup of |step factor - 1| beyond the scan bound (< 1/2).
    pub certificate: f64,
}

#[derive(Serialize)]
pub struct GaugeBlock {
    /// "standard" | "non_standard" | "solved" | "obstructed".
    pub verdict: &'static str,
    pub invertible: bool,
    pub residual: Option<f64>,
    pub obstruction_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction_side: Option<&'static str>,
    pub spots: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_spots: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_depth: Option<usize>,
}

#[derive(Serialize)]
pub struct SectionRow {
    /// Twist of the derivation this section belongs to.
    pub n: usize,
    pub first_zero_index: Option<usize>,
    pub residual: f64,
}

#[derive(Serialize)]
pub struct FamilyBlock {
    pub runs: Vec<FamilyRun>,
    pub dim_lower_bounds: Vec<usize>,
    pub strictly_increasing: bool,
}

#[derive(Serialize)]
pub struct FamilyRun {
    pub input: String,
    pub spots: Vec<usize>,
    pub sections: Vec<SectionRow>,
    pub independence_rank: usize,
    pub dim_lower_bound: usize,
}

#[derive(Serialize)]
pub struct RepCheckBlock {
    pub b_minus_b_zero: f64,
    pub b_plus_b_zero: f64,
    pub b_minus_b_plus: f64,
    pub b_plus_b_minus: f64,
    pub adjoint: f64,
    pub dilation: f64,
    pub boundary_defect: f64,
    pub boundary_predicted: f64,
    pub random_dilation_probe: f64,
}

impl Report {
    pub fn new(version: &'static str, q: f64, command: &'static str) -> Self {
        Report {
            version,
            q,
            command,
            inputs: Vec::new(),
            policy: Policy {
                tol: 0.0,
                prod_tol: 0.0,
                n_cap: 0,
                dim: None,
                max_degree: None,
                seed: None,
            },
            defects: None,
            gauge: None,
            sections: None,
            independence_rank: None,
            dim_lower_bound: None,
            family: None,
            rep_check: None,
            notes: vec![SIGN_NOTE.to_string()],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Plain-text rendering for terminal use; same content, same order.
    pub fn human(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "qpl {} | {} | q = {}", self.version, self.command, self.q);
        for (i, input) in self.inputs.iter().enumerate() {
            let _ = writeln!(w, "input[{i}]: {input}");
        }
        let _ = writeln!(
            w,
            "policy: tol = {}, prod_tol = {}, n_cap = {}{}{}{}",
            self.policy.tol,
            self.policy.prod_tol,
            self.policy.n_cap,
            self.policy.dim.map_or(String::new(), |d| format!(", dim = {d}")),
            self.policy
                .max_degree
                .map_or(String::new(), |d| format!(", max_degree = {d}")),
            self.policy.seed.map_or(String::new(), |s| format!(", seed = {s}")),
        );
        if let Some(d) = &self.defects {
            let _ = writeln!(
                w,
                "spots: {:?} (scanned to {}, |step factor - 1| <= {} beyond)",
                d.spots, d.scan_bound, d.certificate
            );
        }
        if let Some(g) = &self.gauge {
            let _ = writeln!(w, "verdict: {} (invertible: {})", g.verdict, g.invertible);
            let _ = writeln!(w, "spots: {:?}", g.spots);
            if let Some(t) = &g.target_spots {
                let _ = writeln!(w, "target spots: {t:?}");
            }
            if let Some(r) = g.residual {
                let depth = g.residual_depth.unwrap_or(0);
                let _ = writeln!(w, "residual: {r} over {depth} steps");
            }
            if let (Some(l), Some(b)) = (g.limit, g.limit_error_bound) {
                let _ = writeln!(w, "limit: {l} (error bound {b})");
            }
            if let Some(i) = g.obstruction_index {
                let side = g.obstruction_side.unwrap_or("?");
                let _ = writeln!(w, "obstruction: index {i} on the {side} side");
            }
        }
        if let Some(rows) = &self.sections {
            for row in rows {
                let _ = writeln!(w, "{}", section_line(row));
            }
        }
        if let Some(r) = self.independence_rank {
            let _ = writeln!(w, "independence rank: {r}");
        }
        if let Some(d) = self.dim_lower_bound {
            let _ = writeln!(w, "kernel dimension lower bound: {d}");
        }
        if let Some(fam) = &self.family {
            for run in &fam.runs {
                let _ = writeln!(
                    w,
                    "-- {} | spots {:?} | rank {} | dim lower bound {}",
                    run.input, run.spots, run.independence_rank, run.dim_lower_bound
                );
                for row in &run.sections {
                    let _ = writeln!(w, "   {}", section_line(row));
                }
            }
            let _ = writeln!(
                w,
                "dim lower bounds: {:?} (strictly increasing: {})",
                fam.dim_lower_bounds, fam.strictly_increasing
            );
        }
        if let Some(rc) = &self.rep_check {
            let _ = writeln!(w, "relation residuals over the interior window:");
            for (name, value) in [
                ("b_minus_b_zero", rc.b_minus_b_zero),
                ("b_plus_b_zero", rc.b_plus_b_zero),
                ("b_minus_b_plus", rc.b_minus_b_plus),
                ("b_plus_b_minus", rc.b_plus_b_minus),
                ("adjoint", rc.adjoint),
                ("dilation", rc.dilation),
                ("random_dilation_probe", rc.random_dilation_probe),
            ] {
                let _ = writeln!(w, "  {name:<22} {value}");
            }
            let _ = writeln!(
                w,
                "boundary defect: {} (closed form {})",
                rc.boundary_defect, rc.boundary_predicted
            );
        }
        for note in &self.notes {
            let _ = writeln!(w, "note: {note}");
        }
        out
    }
}

fn section_line(row: &SectionRow) -> String {
    match row.first_zero_index {
        Some(z) => format!(
            "section n = {}: residual {}, exactly zero from index {}",
            row.n, row.residual, z
        ),
        None => format!("section n = {}: residual {}, nowhere zero", row.n, row.residual),
    }
}
