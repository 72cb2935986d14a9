use std::fmt;
use std::fmt::Write as _;

use super::JitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn from_predictions(y_true: &[bool], y_pred: &[bool]) -> Result<Self, JitError> {
        if y_true.len() != y_pred.len() {
            return Err(JitError::LengthMismatch(y_true.len(), y_pred.len()));
        }
        if y_true.is_empty() {
            return Err(JitError::EmptyEvaluation);
        }
        let mut c = Confusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Commit-level classification metrics on the positive (defect) class. Any
/// ratio with a zero denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub acc_balanced: f64,
    pub acc_plain: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    pub confusion: Confusion,
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
        let recall = ratio(tp, tp + fn_);
        let tnr = ratio(tn, tn + fp);
        let precision = ratio(tp, tp + fp);
        Metrics {
            acc_balanced: (recall + tnr) / 2.0,
            acc_plain: ratio(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f1: ratio(2.0 * tp, 2.0 * tp + fp + fn_),
            mcc: ratio(tp * tn - fp * fn_, ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt()),
            confusion: c,
        }
    }

    pub fn n(&self) -> u64 {
        let c = self.confusion;
        c.tp + c.fp + c.fn_ + c.tn
    }

    pub fn n_positive(&self) -> u64 {
        self.confusion.tp + self.confusion.fn_
    }
}

pub fn metrics(y_true: &[bool], y_pred: &[bool]) -> Result<Metrics, JitError> {
    Ok(Metrics::from_confusion(Confusion::from_predictions(y_true, y_pred)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldId {
    Fold(usize),
    Overall,
}

impl fmt::Display for FoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldId::Fold(i) => write!(f, "{i}"),
            FoldId::Overall => f.write_str("overall"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldMetrics {
    pub fold: FoldId,
    pub undersampled: bool,
    pub metrics: Metrics,
}

pub const METRICS_HEADER: &str =
    "fold,undersampled,acc_balanced,acc_plain,precision,recall,f1,mcc,n_commits,n_defective";

pub fn metrics_csv(rows: &[FoldMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.fold,
            r.undersampled,
            m.acc_balanced,
            m.acc_plain,
            m.precision,
            m.recall,
            m.f1,
            m.mcc,
            m.n(),
            m.n_positive()
        );
    }
    out
}
