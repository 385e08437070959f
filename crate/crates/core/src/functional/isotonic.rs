use crate::error::{Error, Result};
use crate::sample::PairedSample;
use crate::statistic::{Complexity, StatValue};

/// Weighted pool-adjacent-violators: the nondecreasing fit minimizing
/// `Σ w_i (y_i − f_i)²`.
pub fn pava(ys: &[f64], weights: &[f64]) -> Vec<f64> {
    // blocks of (weighted mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(ys.len());
    for (&y, &w) in ys.iter().zip(weights) {
        blocks.push((y, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

/// Plug-in Ĉ_H for H the monotone functions: the larger of Var(fit)/Var(Y)
/// over the isotonic and antitonic least-squares fits of Y on X.
pub fn isotonic_ch(sample: &PairedSample) -> Result<StatValue> {
    let n = sample.n();
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    let xs = sample.xs();
    let ys = sample.ys();
    let nf = n as f64;
    let mean = ys.iter().sum::<f64>() / nf;
    let var_y = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / nf;
    if var_y <= 0.0 {
        return Err(Error::degenerate("Y is constant"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    // tied X values share one fitted value: pool them first
    let mut means = Vec::new();
    let mut weights = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let s: f64 = order[start..end].iter().map(|&i| ys[i]).sum();
        means.push(s / (end - start) as f64);
        weights.push((end - start) as f64);
        start = end;
    }

    let explained = |fit: &[f64]| -> f64 {
        fit.iter()
            .zip(&weights)
            .map(|(f, w)| w * (f - mean) * (f - mean))
            .sum::<f64>()
            / nf
            / var_y
    };
    let up = explained(&pava(&means, &weights));
    let negated: Vec<f64> = means.iter().map(|m| -m).collect();
    let down_fit: Vec<f64> = pava(&negated, &weights).iter().map(|m| -m).collect();
    let down = explained(&down_fit);
    Ok(StatValue::new(
        "isotonic-ch",
        up.max(down).min(1.0),
        0.0,
        n,
        Complexity::Linearithmic,
    ))
}
