use super::StatsError;

/// Largest number of nonzero differences handled by the exact distribution.
pub const EXACT_LIMIT: usize = 25;

const MIN_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W−)`
    pub statistic: f64,
    /// Sum of ranks of the positive differences `a − b`.
    pub w_plus: f64,
    pub p_value: f64,
    /// Pairs left after discarding zero differences.
    pub n: usize,
    pub exact: bool,
}

/// Doubled average ranks of `|d|`, so tied ranks stay integral.
pub(crate) fn doubled_ranks(abs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0u64; abs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && abs[idx[end]] == abs[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end share the mean rank (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &i in &idx[start..end] {
            ranks[i] = doubled;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are discarded and tied magnitudes get average ranks.
/// Up to [`EXACT_LIMIT`] pairs the p-value comes from the exact null
/// distribution of `W+` (every sign assignment equally likely); beyond that
/// a normal approximation with tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::UnequalSamples(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::DegenerateSample("non-finite difference".into()));
    }
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Err(StatsError::DegenerateSample(format!("{n} nonzero differences, need at least {MIN_PAIRS}")));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let total2: u64 = ranks.iter().sum();
    let wplus2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let wminus2 = total2 - wplus2;
    let statistic = wplus2.min(wminus2) as f64 / 2.0;
    let w_plus = wplus2 as f64 / 2.0;

    if n <= EXACT_LIMIT {
        let dist = exact_distribution(&ranks);
        let below: u64 = dist[..=wplus2 as usize].iter().sum();
        let above: u64 = dist[wplus2 as usize..].iter().sum();
        let p = (2 * below.min(above)) as f64 / (1u64 << n) as f64;
        return Ok(WilcoxonResult { statistic, w_plus, p_value: p.min(1.0), n, exact: true });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = libm::erfc(z / std::f64::consts::SQRT_2);
    Ok(WilcoxonResult { statistic, w_plus, p_value: p.min(1.0), n, exact: false })
}

/// Number of sign assignments giving each doubled `W+` value.
fn exact_distribution(ranks: &[u64]) -> Vec<u64> {
    let max: u64 = ranks.iter().sum();
    let mut dist = vec![0u64; max as usize + 1];
    dist[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if dist[s] != 0 {
                dist[s + r] += dist[s];
            }
        }
        reach += r;
    }
    dist
}
