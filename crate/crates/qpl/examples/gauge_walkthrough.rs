//! The README walkthrough: spot detection, gauge obstruction, kernel rank.

use qpl::{
    defective_spots, kernel_sections, solve_gauge_to_standard, ConnectionForm, QParam,
    SpectralFunction,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = QParam::new(0.5)?;

    // A connection form with a single defective spot at n = 2.
    let f = SpectralFunction::poly(vec![0.0, 1.0 / (p.point(1) - p.point(2))])?;
    let form = ConnectionForm::new(&p, f)?;
    assert_eq!(defective_spots(&p, &form)?.spots(), &[2]);

    // The gauge flow stalls at the spot, so the form is not gauge-trivial...
    let run = solve_gauge_to_standard(&p, &form)?;
    assert!(!run.invertible);

    // ...and the twisted derivation kernel carries two independent sections.
    let report = kernel_sections(&p, &form)?;
    assert_eq!(report.dim_lower_bound, 2);

    println!("spot at 2, gauge obstructed, kernel dimension >= {}", report.dim_lower_bound);
    Ok(())
}
