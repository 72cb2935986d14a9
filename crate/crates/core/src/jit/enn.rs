use super::{JitError, LabeledVector};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Edited-nearest-neighbours under-sampling of the majority class.
///
/// A majority sample is dropped when most of its `k` nearest neighbours
/// (Euclidean, itself excluded, distance ties broken by input order) carry
/// the other label. Minority samples are always kept. With equal class
/// sizes the negative class is treated as the majority. Output keeps input
/// order.
pub fn enn_undersample(data: &[LabeledVector], k: usize) -> Result<Vec<LabeledVector>, JitError> {
    let pos = data.iter().filter(|v| v.label).count();
    if pos == 0 || pos == data.len() {
        return Err(JitError::MissingClass);
    }
    if k == 0 || data.len() <= k {
        return Err(JitError::InvalidConfig(format!("ENN with k={k} needs more than {k} samples")));
    }
    let majority = pos > data.len() - pos;
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(data.len());
    let mut keep = Vec::with_capacity(data.len());
    for (i, v) in data.iter().enumerate() {
        if v.label != majority {
            keep.push(v.clone());
            continue;
        }
        dists.clear();
        dists.extend(
            data.iter().enumerate().filter(|(j, _)| *j != i).map(|(j, w)| (sq_dist(&v.features, &w.features), j)),
        );
        dists.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let other = dists[..k].iter().filter(|(_, j)| data[*j].label != majority).count();
        if 2 * other <= k {
            keep.push(v.clone());
        }
    }
    Ok(keep)
}
