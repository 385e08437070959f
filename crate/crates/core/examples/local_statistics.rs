//! Statistics of adjacent pairs in the rank sequence, which respond to
//! Y being a function of X rather than to global association.

use dep_lab::local::{local_bkr, local_score_statistic, local_spearman, m_hat, ScoreFunction, ScoreGrid};
use dep_lab::{compute_ranks, PairedSample};

fn main() -> dep_lab::Result<()> {
    let n = 400;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let zigzag: Vec<f64> = xs.iter().map(|x| (6.0 * x).fract() + 0.01 * x).collect();
    let sample = PairedSample::new(xs, zigzag)?;
    let ranks = compute_ranks(&sample, None)?;

    println!("spearman-local      {:.4}", local_spearman(&ranks)?.value);
    println!("m-hat               {:.4}", m_hat(&ranks)?.value);
    println!("normal-scores-local {:.4}", local_score_statistic(&ranks, &ScoreFunction::normal_scores())?.value);
    println!("bkr-local           {:.6}", local_bkr(&ranks)?.value);
    let cubic = ScoreFunction::custom("cube", ScoreGrid::N, |u| (u - 0.5).powi(3));
    println!("custom score        {:.4}", local_score_statistic(&ranks, &cubic)?.value);
    Ok(())
}
