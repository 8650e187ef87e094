//! Command-line reports for gauge classification and kernel computation on
//! the q-projective-line grid.
//!
//! Subcommands: `defects`, `gauge-standard`, `gauge-between`, `sections`,
//! `verify-rep`. Exit codes: 0 success, 2 domain errors (invalid parameter,
//! solver refusal, truncation too small), 3 function-spec parse errors.
//! With `--json`, stdout carries exactly one JSON document; diagnostics go
//! to stderr. Identical invocations produce byte-identical output. The
//! environment variable `QPL_N_CAP` overrides the grid-scan ceiling.

mod fnspec;
mod report;

use clap::{Args, Parser, Subcommand};
use fnspec::{FnSpec, DEFAULT_MAX_DEGREE};
use qpl::{
    boundary_defect, defective_spots, independence_rank, kernel_sections, relation_residuals,
    rep_function, rep_generators, solve_gauge_between, solve_gauge_to_standard, BetweenOutcome,
    ConnectionForm, NumericPolicy, QParam, Side, SpectralFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use report::{
    DefectsBlock, FamilyBlock, FamilyRun, GaugeBlock, Policy, RepCheckBlock, Report, SectionRow,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "qpl",
    version,
    about = "gauge classification and kernel computation on the q-projective-line grid"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Locate the defective spots of a connection form
    Defects(SingleFormArgs),
    /// Gauge the form to the standard one and classify the result
    GaugeStandard(SingleFormArgs),
    /// Gauge between two forms, or report the obstruction
    GaugeBetween(BetweenArgs),
    /// Construct the kernel sections of the twisted derivations
    Sections(SectionsArgs),
    /// Check the truncated shift-representation relations
    VerifyRep(VerifyRepArgs),
}

#[derive(Args)]
struct Common {
    /// Deformation parameter, 0 < q < 1
    #[arg(long)]
    q: f64,
    /// Vanishing threshold (default 1e-9)
    #[arg(long)]
    tol: Option<f64>,
    /// Emit one JSON document on stdout
    #[arg(long)]
    json: bool,
    /// Maximum expanded polynomial degree for function specs (default 64)
    #[arg(long)]
    max_degree: Option<usize>,
}

#[derive(Args)]
struct SingleFormArgs {
    #[command(flatten)]
    common: Common,
    /// Connection form specification, e.g. "poly:0,1" or "defect:3"
    #[arg(long)]
    f: String,
}

#[derive(Args)]
struct BetweenArgs {
    #[command(flatten)]
    common: Common,
    /// Source connection form
    #[arg(long)]
    f: String,
    /// Target connection form
    #[arg(long)]
    h: String,
}

#[derive(Args)]
struct SectionsArgs {
    #[command(flatten)]
    common: Common,
    /// Connection form; repeat the flag for a family report
    #[arg(long, required = true)]
    h: Vec<String>,
    /// Truncation dimension for the independence rank
    #[arg(long, default_value_t = 64)]
    dim: usize,
}

#[derive(Args)]
struct VerifyRepArgs {
    #[command(flatten)]
    common: Common,
    /// Truncation dimension
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Seed for the randomized dilation probes
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Domain(String),
    Parse(String),
}

impl From<fnspec::ParseError> for Failure {
    fn from(e: fnspec::ParseError) -> Self {
        Failure::Parse(e.to_string())
    }
}

macro_rules! domain_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::Domain(e.to_string())
            }
        }
    )*};
}
domain_from!(qpl::ParamError, qpl::GaugeError, qpl::SpectralError, qpl::RepError);

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(Failure::Parse(msg)) => {
            eprintln!("parse error: {msg}");
            std::process::exit(3);
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Defects(a) => defects_cmd(a),
        Cmd::GaugeStandard(a) => gauge_standard_cmd(a),
        Cmd::GaugeBetween(a) => gauge_between_cmd(a),
        Cmd::Sections(a) => sections_cmd(a),
        Cmd::VerifyRep(a) => verify_rep_cmd(a),
    }
}

fn make_param(common: &Common) -> Result<QParam, Failure> {
    let mut policy = NumericPolicy::default();
    if let Some(tol) = common.tol {
        policy.tol = tol;
    }
    match std::env::var("QPL_N_CAP") {
        Ok(text) => {
            policy.n_cap = text.trim().parse().map_err(|_| {
                Failure::Domain(format!("QPL_N_CAP must be a positive integer, got {text:?}"))
            })?;
        }
        Err(std::env::VarError::NotPresent) => {}
        Err(e) => return Err(Failure::Domain(format!("QPL_N_CAP unreadable: {e}"))),
    }
    Ok(QParam::with_policy(common.q, policy)?)
}

fn base_report(p: &QParam, common: &Common, command: &'static str) -> Report {
    let mut report = Report::new(VERSION, common.q, command);
    report.policy = Policy {
        tol: p.tol,
        prod_tol: p.prod_tol,
        n_cap: p.n_cap,
        dim: None,
        max_degree: None,
        seed: None,
    };
    report
}

fn parse_form(p: &QParam, common: &Common, text: &str) -> Result<ConnectionForm, Failure> {
    let spec = FnSpec::parse(text, common.max_degree.unwrap_or(DEFAULT_MAX_DEGREE))?;
    let func = spec.to_function(p)?;
    Ok(ConnectionForm::new(p, func)?)
}

fn emit(report: &Report, json: bool) {
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.human());
    }
}

/// Certified sup of |step factor - 1| past the scan bound, from the slope.
fn scan_certificate(p: &QParam, form: &ConnectionForm, scan_bound: usize) -> f64 {
    form.slope_bound().upper() * (1.0 - p.q2()) * p.point(scan_bound)
}

fn defects_cmd(a: SingleFormArgs) -> Result<(), Failure> {
    let p = make_param(&a.common)?;
    let form = parse_form(&p, &a.common, &a.f)?;
    let spots = defective_spots(&p, &form)?;
    let mut report = base_report(&p, &a.common, "defects");
    report.inputs = vec![a.f.clone()];
    report.defects = Some(DefectsBlock {
        spots: spots.spots().to_vec(),
        scan_bound: spots.scan_depth(),
        certificate: scan_certificate(&p, &form, spots.scan_depth()),
    });
    emit(&report, a.common.json);
    Ok(())
}

fn gauge_standard_cmd(a: SingleFormArgs) -> Result<(), Failure> {
    let p = make_param(&a.common)?;
    let form = parse_form(&p, &a.common, &a.f)?;
    let r = solve_gauge_to_standard(&p, &form)?;
    let mut report = base_report(&p, &a.common, "gauge-standard");
    report.inputs = vec![a.f.clone()];
    report.gauge = Some(GaugeBlock {
        verdict: if r.invertible { "standard" } else { "non_standard" },
        invertible: r.invertible,
        residual: Some(r.residual),
        obstruction_index: None,
        obstruction_side: None,
        spots: r.spots.spots().to_vec(),
        target_spots: None,
        limit: Some(r.limit.value),
        limit_error_bound: Some(r.limit.error_bound),
        residual_depth: Some(r.residual_depth),
    });
    emit(&report, a.common.json);
    Ok(())
}

fn gauge_between_cmd(a: BetweenArgs) -> Result<(), Failure> {
    let p = make_param(&a.common)?;
    let source = parse_form(&p, &a.common, &a.f)?;
    let target = parse_form(&p, &a.common, &a.h)?;
    let source_spots = defective_spots(&p, &source)?.spots().to_vec();
    let target_spots = defective_spots(&p, &target)?.spots().to_vec();
    let mut report = base_report(&p, &a.common, "gauge-between");
    report.inputs = vec![a.f.clone(), a.h.clone()];
    report.gauge = Some(match solve_gauge_between(&p, &source, &target)? {
        BetweenOutcome::Solved(r) => GaugeBlock {
            verdict: "solved",
            invertible: r.invertible,
            residual: Some(r.residual),
            obstruction_index: None,
            obstruction_side: None,
            spots: source_spots,
            target_spots: Some(target_spots),
            limit: Some(r.limit.value),
            limit_error_bound: Some(r.limit.error_bound),
            residual_depth: Some(r.residual_depth),
        },
        BetweenOutcome::Obstructed { index, side } => GaugeBlock {
            verdict: "obstructed",
            invertible: false,
            residual: None,
            obstruction_index: Some(index),
            obstruction_side: Some(match side {
                Side::Source => "source",
                Side::Target => "target",
            }),
            spots: source_spots,
            target_spots: Some(target_spots),
            limit: None,
            limit_error_bound: None,
            residual_depth: None,
        },
    });
    emit(&report, a.common.json);
    Ok(())
}

struct SectionsRun {
    spots: Vec<usize>,
    scan_bound: usize,
    certificate: f64,
    rows: Vec<SectionRow>,
    rank: usize,
    dim_lower_bound: usize,
}

fn run_sections(p: &QParam, common: &Common, text: &str, dim: usize) -> Result<SectionsRun, Failure> {
    let form = parse_form(p, common, text)?;
    let kernel = kernel_sections(p, &form)?;
    let items: Vec<(&SpectralFunction, usize)> = kernel
        .sections
        .iter()
        .map(|s| (&s.values, s.twist))
        .collect();
    let rank = independence_rank(p, &items, dim, p.tol)?;
    let rows = kernel
        .sections
        .iter()
        .map(|s| SectionRow {
            n: s.twist,
            first_zero_index: s.vanishes_from,
            residual: s.residual,
        })
        .collect();
    Ok(SectionsRun {
        spots: kernel.spots.spots().to_vec(),
        scan_bound: kernel.spots.scan_depth(),
        certificate: scan_certificate(p, &form, kernel.spots.scan_depth()),
        rows,
        rank,
        dim_lower_bound: kernel.dim_lower_bound,
    })
}

fn sections_cmd(a: SectionsArgs) -> Result<(), Failure> {
    let p = make_param(&a.common)?;
    let mut report = base_report(&p, &a.common, "sections");
    report.inputs = a.h.clone();
    report.policy.dim = Some(a.dim);
    if a.h.len() == 1 {
        let run = run_sections(&p, &a.common, &a.h[0], a.dim)?;
        report.defects = Some(DefectsBlock {
            spots: run.spots,
            scan_bound: run.scan_bound,
            certificate: run.certificate,
        });
        report.sections = Some(run.rows);
        report.independence_rank = Some(run.rank);
        report.dim_lower_bound = Some(run.dim_lower_bound);
    } else {
        let mut runs = Vec::new();
        for text in &a.h {
            let run = run_sections(&p, &a.common, text, a.dim)?;
            runs.push(FamilyRun {
                input: text.clone(),
                spots: run.spots,
                sections: run.rows,
                independence_rank: run.rank,
                dim_lower_bound: run.dim_lower_bound,
            });
        }
        let bounds: Vec<usize> = runs.iter().map(|r| r.dim_lower_bound).collect();
        let increasing = bounds.windows(2).all(|w| w[0] < w[1]);
        report.notes.push(format!(
            "dim_lower_bounds strictly increasing: {increasing}"
        ));
        report.family = Some(FamilyBlock {
            runs,
            dim_lower_bounds: bounds,
            strictly_increasing: increasing,
        });
    }
    emit(&report, a.common.json);
    Ok(())
}

/// Worst intertwining residual B- pi(f) = pi(f(q^2 .)) B- over seeded
/// random polynomials.
fn random_dilation_probe(p: &QParam, dim: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (bm, _, _) = rep_generators(p, dim);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let degree = rng.random_range(1..=6);
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = SpectralFunction::poly(coeffs).expect("finite coefficients");
        let diff = &bm * rep_function(p, &f, dim) - rep_function(p, &f.dilate(p, 1), dim) * &bm;
        let sup = f.sup_norm(p).value.max(1.0);
        worst = worst.max(diff.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / sup);
    }
    worst
}

fn verify_rep_cmd(a: VerifyRepArgs) -> Result<(), Failure> {
    let p = make_param(&a.common)?;
    if a.dim < 2 {
        return Err(Failure::Domain(format!(
            "truncation dimension {} too small, need at least 2",
            a.dim
        )));
    }
    let residuals = relation_residuals(&p, a.dim);
    let boundary = boundary_defect(&p, a.dim);
    let mut report = base_report(&p, &a.common, "verify-rep");
    report.policy.dim = Some(a.dim);
    report.policy.seed = Some(a.seed);
    report.rep_check = Some(RepCheckBlock {
        b_minus_b_zero: residuals.lower_scaling,
        b_plus_b_zero: residuals.upper_scaling,
        b_minus_b_plus: residuals.lower_raise,
        b_plus_b_minus: residuals.raise_lower,
        adjoint: residuals.adjoint,
        dilation: residuals.dilation,
        boundary_defect: boundary.measured,
        boundary_predicted: boundary.predicted,
        random_dilation_probe: random_dilation_probe(&p, a.dim, a.seed),
    });
    report.notes.push(
        "relations are measured over the interior window; the boundary defect is the \
         whole truncation error of the lowering-raising relation"
            .to_string(),
    );
    emit(&report, a.common.json);
    Ok(())
}
