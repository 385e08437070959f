//! The built-in local alternatives, their score classes, and a custom grid
//! family loaded from JSON.

use dep_lab::functional::population_c;
use dep_lab::models::{sample_family, AlternativeFamily, GridSpec, FAMILY_IDS};
use dep_lab::rng::{Domain, StreamKey};
use dep_lab::Statistic;

fn main() -> dep_lab::Result<()> {
    for id in FAMILY_IDS {
        let fam = AlternativeFamily::by_id(id)?;
        let r = fam.theta_range();
        let at = fam.at(r.hi)?;
        let s = sample_family(&fam, r.hi, 2000, StreamKey::new(4, Domain::Sampling, 0))?;
        println!(
            "{id:<13} class {:<10} I = {:.4}  θ = {:<4} C = {:.4}  spearman = {:+.4}",
            fam.score_class().to_string(),
            fam.fisher_info(),
            r.hi,
            population_c(&at, 128)?,
            Statistic::Spearman.compute(&s, None)?.value
        );
    }

    // a 3×3 grid with mass pushed onto the diagonal, linear in θ
    let bump = |t: f64| -> Vec<Vec<f64>> {
        (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 + t } else { 1.0 - t / 2.0 }).collect())
            .collect()
    };
    let spec = GridSpec {
        id: Some("diagonal".into()),
        theta: vec![0.0, 0.5],
        density: vec![bump(0.0), bump(0.5)],
    };
    let fam = AlternativeFamily::from_grid(spec)?;
    println!("grid family '{}': class {}, I = {:.4}", fam.id(), fam.score_class(), fam.fisher_info());
    Ok(())
}
