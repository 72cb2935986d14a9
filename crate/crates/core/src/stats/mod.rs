//! Rank-frequency tables, log-log Zipf fits and the Wilcoxon signed-rank
//! comparison of label distributions between two tree populations.

mod wilcoxon;

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::tree::AstTree;

pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_LIMIT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("need at least 2 usable rows for a fit, found {0}")]
    InsufficientData(usize),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("samples differ in size ({0} vs {1})")]
    UnequalSamples(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub label: String,
    pub count: u64,
    pub rank: usize,
    /// `log10(rank)`
    pub log_rank: f64,
    /// `log10(count / total)`
    pub log_freq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
    pub total: u64,
}

impl RankTable {
    /// Ranks `(label, count)` pairs by descending count, then label.
    /// Zero counts are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut pairs: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total: u64 = pairs.iter().map(|(_, c)| c).sum();
        let rows = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (label, count))| RankRow {
                label,
                count,
                rank: i + 1,
                log_rank: ((i + 1) as f64).log10(),
                log_freq: (count as f64 / total as f64).log10(),
            })
            .collect();
        RankTable { rows, total }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,label,count,log_rank,log_freq\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{:.6},{:.6}", r.rank, csv_field(&r.label), r.count, r.log_rank, r.log_freq);
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn tally<'a>(trees: impl IntoIterator<Item = &'a AstTree>, inner_only: bool) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in trees {
        for n in t.nodes() {
            if inner_only && n.is_leaf() {
                continue;
            }
            *counts.entry(n.label.clone()).or_default() += 1;
        }
    }
    counts
}

/// Label counts across a corpus, ranked by frequency. With `inner_only`, leaf
/// tokens are ignored.
pub fn rank_frequencies(trees: &[AstTree], inner_only: bool) -> Result<RankTable, StatsError> {
    if trees.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    Ok(RankTable::from_counts(tally(trees, inner_only)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

impl ZipfFit {
    pub fn to_csv(&self) -> String {
        format!(
            "slope,intercept,r_squared,points_used\n{:.6},{:.6},{:.6},{}\n",
            self.slope, self.intercept, self.r_squared, self.points_used
        )
    }
}

/// Ordinary least squares of `log_freq` on `log_rank`.
pub fn fit_zipf(table: &RankTable, drop_singletons: bool) -> Result<ZipfFit, StatsError> {
    let pts: Vec<(f64, f64)> =
        table.rows.iter().filter(|r| !(drop_singletons && r.count == 1)).map(|r| (r.log_rank, r.log_freq)).collect();
    let n = pts.len();
    if n < 2 {
        return Err(StatsError::InsufficientData(n));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(StatsError::InsufficientData(n));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a flat line through equal frequencies is an exact fit
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(ZipfFit { slope, intercept, r_squared, points_used: n })
}

/// Outcome of a population comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationComparison {
    pub test: WilcoxonResult,
    /// Per-population tables in pooled rank order: row `i` of both tables
    /// holds the same label.
    pub defective: RankTable,
    pub clean: RankTable,
    /// Labels dropped because they occur in only one population.
    pub excluded: Vec<String>,
}

/// Compares label distributions of two equally sized populations.
///
/// Labels are ordered by their pooled count. Each population's normalized
/// log-frequency is taken per label and the paired values are tested with
/// the Wilcoxon signed-rank test. Labels absent from either population have
/// no finite log-frequency and are left out of the pairing.
pub fn compare_populations(
    defective: &[AstTree],
    clean: &[AstTree],
    inner_only: bool,
) -> Result<PopulationComparison, StatsError> {
    if defective.is_empty() || clean.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    if defective.len() != clean.len() {
        return Err(StatsError::UnequalSamples(defective.len(), clean.len()));
    }
    let cd = tally(defective, inner_only);
    let cc = tally(clean, inner_only);
    let mut pooled: HashMap<String, u64> = cd.clone();
    for (k, v) in &cc {
        *pooled.entry(k.clone()).or_default() += v;
    }
    let order = RankTable::from_counts(pooled);
    let total_d: u64 = cd.values().sum();
    let total_c: u64 = cc.values().sum();
    let mut dt = RankTable { rows: Vec::new(), total: total_d };
    let mut ct = RankTable { rows: Vec::new(), total: total_c };
    let mut excluded = Vec::new();
    for row in &order.rows {
        let (a, b) = (cd.get(&row.label).copied().unwrap_or(0), cc.get(&row.label).copied().unwrap_or(0));
        if a == 0 || b == 0 {
            excluded.push(row.label.clone());
            continue;
        }
        let mk = |count: u64, total: u64| RankRow {
            label: row.label.clone(),
            count,
            rank: row.rank,
            log_rank: row.log_rank,
            log_freq: (count as f64 / total as f64).log10(),
        };
        dt.rows.push(mk(a, total_d));
        ct.rows.push(mk(b, total_c));
    }
    let xs: Vec<f64> = dt.rows.iter().map(|r| r.log_freq).collect();
    let ys: Vec<f64> = ct.rows.iter().map(|r| r.log_freq).collect();
    let test = wilcoxon_signed_rank(&xs, &ys)?;
    Ok(PopulationComparison { test, defective: dt, clean: ct, excluded })
}
