//! Fourier coefficients and a selective scan on a sample whose dependence
//! sits in the (2,2) direction, invisible to Spearman.

use dep_lab::basis::{fourier_block, selective_scan, AllocationPolicy, ScanBasis};
use dep_lab::models::{sample_family, AlternativeFamily};
use dep_lab::rng::{Domain, StreamKey};
use dep_lab::{compute_ranks, Statistic};

fn main() -> dep_lab::Result<()> {
    let fam = AlternativeFamily::coscos();
    let sample = sample_family(&fam, 0.3, 800, StreamKey::new(3, Domain::Sampling, 0))?;
    let ranks = compute_ranks(&sample, None)?;

    println!("standardized T_ij, i,j <= 3");
    for c in fourier_block(&ranks, 3)? {
        print!("{:>8.3}", c.standardized());
        if c.j == 3 {
            println!();
        }
    }
    println!("spearman = {:.4}", Statistic::Spearman.compute(&sample, None)?.value);

    let report = selective_scan(&ranks, ScanBasis::Fourier { max_order: 3 }, 0.05, AllocationPolicy::Geometric)?;
    if let Some(e) = report.most_significant() {
        println!("most significant: {:?} p = {:.2e} rejected = {}", e.index, e.p_value, e.rejected);
    }
    Ok(())
}
