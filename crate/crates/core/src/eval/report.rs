use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldEntropy {
    pub fold: usize,
    pub entropy_bits: f64,
    pub n_examples: usize,
}

/// Per-fold held-out entropies with their mean and sample standard
/// deviation (`n − 1` denominator; 0 for a single fold).
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub per_fold: Vec<FoldEntropy>,
    pub mean: f64,
    pub std: f64,
    pub k: usize,
    pub model_tag: String,
}

impl EntropyReport {
    pub fn new(per_fold: Vec<FoldEntropy>, k: usize, model_tag: &str) -> Self {
        let n = per_fold.len() as f64;
        let mean = per_fold.iter().map(|f| f.entropy_bits).sum::<f64>() / n;
        let std = if per_fold.len() > 1 {
            (per_fold.iter().map(|f| (f.entropy_bits - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        EntropyReport { per_fold, mean, std, k, model_tag: model_tag.to_string() }
    }

    pub fn n_examples(&self) -> usize {
        self.per_fold.iter().map(|f| f.n_examples).sum()
    }
}

/// One `k` of a length sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepPoint {
    Report(EntropyReport),
    /// Too few trees survived filtering at this `k`.
    Gap {
        k: usize,
        n_trees: usize,
    },
}

impl SweepPoint {
    pub fn k(&self) -> usize {
        match self {
            SweepPoint::Report(r) => r.k,
            SweepPoint::Gap { k, .. } => *k,
        }
    }
}

/// `model_tag,k,fold,entropy_bits,n_examples`
pub fn report_csv(reports: &[&EntropyReport]) -> String {
    let mut out = String::from("model_tag,k,fold,entropy_bits,n_examples\n");
    for r in reports {
        for f in &r.per_fold {
            let _ = writeln!(out, "{},{},{},{:.6},{}", r.model_tag, r.k, f.fold, f.entropy_bits, f.n_examples);
        }
    }
    out
}

/// Per-fold rows of one report followed by a `mean` row that carries the
/// standard deviation.
pub fn fold_summary_csv(report: &EntropyReport) -> String {
    let mut out = String::from("model_tag,k,fold,entropy_bits,std_bits,n_examples\n");
    for f in &report.per_fold {
        let _ = writeln!(out, "{},{},{},{:.6},,{}", report.model_tag, report.k, f.fold, f.entropy_bits, f.n_examples);
    }
    let _ = writeln!(
        out,
        "{},{},mean,{:.6},{:.6},{}",
        report.model_tag,
        report.k,
        report.mean,
        report.std,
        report.n_examples()
    );
    out
}

/// `model_tag,k,status,mean_bits,std_bits,n_examples`; gaps have empty
/// statistics.
pub fn summary_csv(model_tag: &str, points: &[SweepPoint]) -> String {
    let mut out = String::from("model_tag,k,status,mean_bits,std_bits,n_examples\n");
    for p in points {
        match p {
            SweepPoint::Report(r) => {
                let _ = writeln!(out, "{},{},ok,{:.6},{:.6},{}", r.model_tag, r.k, r.mean, r.std, r.n_examples());
            }
            SweepPoint::Gap { k, n_trees } => {
                let _ = writeln!(out, "{model_tag},{k},gap,,,{n_trees}");
            }
        }
    }
    out
}

/// `model_tag,k,mean,std` triples for plotting; gaps are omitted.
pub fn plot_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("model_tag,k,mean,std\n");
    for p in points {
        if let SweepPoint::Report(r) = p {
            let _ = writeln!(out, "{},{},{:.6},{:.6}", r.model_tag, r.k, r.mean, r.std);
        }
    }
    out
}
