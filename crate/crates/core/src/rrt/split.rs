/// Outcome of partitioning weighted targets by a node test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitScore {
    /// Weighted variance reduction, parent minus weighted children.
    pub reduction: f64,
    pub yes_weight: f64,
    pub no_weight: f64,
    pub yes_count: usize,
    pub no_count: usize,
}

impl SplitScore {
    /// Both sides must hold at least `min_leaf` examples.
    pub fn is_valid(&self, min_leaf: usize) -> bool {
        self.yes_count >= min_leaf && self.no_count >= min_leaf
    }
}

#[derive(Default)]
struct Moments {
    weight: f64,
    count: usize,
    sum: f64,
}

/// Weighted mean of `(target, weight)` pairs; 0 when the total weight is 0.
/// Updated incrementally, so equal targets give their value exactly.
pub fn weighted_mean(samples: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut w, mut mean) = (0.0, 0.0);
    for (t, wt) in samples {
        if wt <= 0.0 {
            continue;
        }
        w += wt;
        mean += wt / w * (t - mean);
    }
    mean
}

/// Weighted population variance, computed in two passes.
pub fn weighted_variance(samples: &[(f64, f64)]) -> f64 {
    let w: f64 = samples.iter().map(|&(_, wt)| wt).sum();
    if w <= 0.0 {
        return 0.0;
    }
    let mean = weighted_mean(samples.iter().copied());
    samples.iter().map(|&(t, wt)| wt * (t - mean) * (t - mean)).sum::<f64>() / w
}

/// Scores a partition of `(target, weight)` samples; `yes[i]` says which
/// side sample `i` falls on.
pub fn score_partition(samples: &[(f64, f64)], yes: &[bool]) -> SplitScore {
    debug_assert_eq!(samples.len(), yes.len());
    let mut sides = [Moments::default(), Moments::default()];
    for (&(t, w), &y) in samples.iter().zip(yes) {
        let m = &mut sides[usize::from(y)];
        m.weight += w;
        m.count += 1;
        m.sum += w * t;
    }
    let total_w = sides[0].weight + sides[1].weight;
    let total_mean = if total_w > 0.0 { (sides[0].sum + sides[1].sum) / total_w } else { 0.0 };
    let means = sides.each_ref().map(|m| if m.weight > 0.0 { m.sum / m.weight } else { 0.0 });
    let (mut ss_total, mut ss_within) = (0.0, 0.0);
    for (&(t, w), &y) in samples.iter().zip(yes) {
        ss_total += w * (t - total_mean) * (t - total_mean);
        let d = t - means[usize::from(y)];
        ss_within += w * d * d;
    }
    let reduction = if total_w > 0.0 { (ss_total - ss_within) / total_w } else { 0.0 };
    SplitScore {
        reduction,
        yes_weight: sides[1].weight,
        no_weight: sides[0].weight,
        yes_count: sides[1].count,
        no_count: sides[0].count,
    }
}
