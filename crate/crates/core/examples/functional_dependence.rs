//! Population and sample measures of functional dependence, the combined
//! measure D, isotonic Chatterjee and the discrete maximal correlation.

use std::f64::consts::PI;

use dep_lab::functional::{combined_d, discrete_ml, isotonic_ch, population_c, population_m, ContingencyTable};
use dep_lab::global::{bkr_statistic, chatterjee_cn};
use dep_lab::{compute_ranks, EmpiricalCopula, PairedSample};

fn main() -> dep_lab::Result<()> {
    let fgm = |theta: f64| move |u: f64, v: f64| 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
    for theta in [0.2, 0.6, 1.0] {
        println!(
            "fgm θ={theta}: C = {:.5}, M = {:.5}",
            population_c(&fgm(theta), 256)?,
            population_m(&fgm(theta), 256)?
        );
    }

    let n = 2000;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    for (name, h) in [("sin(πx)", (|x: f64| (PI * x).sin()) as fn(f64) -> f64), ("x", |x| x)] {
        let ys = xs.iter().map(|&x| h(x)).collect();
        let s = PairedSample::new(xs.clone(), ys)?;
        let r = compute_ranks(&s, None)?;
        let d = combined_d(&bkr_statistic(&EmpiricalCopula::new(&r)), &chatterjee_cn(&r)?);
        println!("Y = {name}: D = {:.4} ({:?}), isotonic C = {:.4}", d.d, d.branch, isotonic_ch(&s)?.value);
    }

    let table = ContingencyTable::new(vec![vec![20, 5, 1], vec![4, 18, 6], vec![1, 3, 22]])?;
    println!("discrete maximal correlation: {:.4}", discrete_ml(&table)?);
    Ok(())
}
