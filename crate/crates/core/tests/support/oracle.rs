//! Brute-force reference implementations. Deliberately naive: every
//! candidate is recounted from scratch, nothing is shared with the library.

#![allow(dead_code)]

/// Exhaustive Youden sweep over `-inf`, every midpoint and `+inf` for the
/// rule `v > t`. Returns `(threshold, |TPR - FPR|, tpr_minus_fpr_sign)` or
/// `None` when a class is absent among the observed cells.
pub fn roc_sweep(values: &[Option<f64>], labels: &[u8]) -> Option<(f64, f64, i8)> {
    let obs: Vec<(f64, u8)> = values
        .iter()
        .zip(labels)
        .filter_map(|(v, y)| v.map(|v| (v, *y)))
        .collect();
    let p = obs.iter().filter(|o| o.1 == 1).count() as i64;
    let n = obs.len() as i64 - p;
    if p == 0 || n == 0 {
        return None;
    }
    let mut distinct: Vec<f64> = obs.iter().map(|o| o.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() == 1 {
        return Some((distinct[0], 0.0, 1));
    }
    let mut candidates = vec![f64::NEG_INFINITY];
    for w in distinct.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push(f64::INFINITY);

    let mut best: Option<(f64, i64)> = None;
    for &t in &candidates {
        let tp = obs.iter().filter(|o| o.1 == 1 && o.0 > t).count() as i64;
        let fp = obs.iter().filter(|o| o.1 == 0 && o.0 > t).count() as i64;
        // TPR - FPR scaled by P*N
        let score = tp * n - fp * p;
        match best {
            Some((bt, bs)) if score.abs() < bs.abs() || (score.abs() == bs.abs() && t >= bt) => {}
            _ => best = Some((t, score)),
        }
    }
    let (t, s) = best.unwrap();
    Some((t, s.unsigned_abs() as f64 / (p as f64 * n as f64), if s < 0 { -1 } else { 1 }))
}

/// Best `|TPR - FPR|` over every subset of levels declared Up.
pub fn best_level_subset(codes: &[Option<u32>], n_levels: usize, labels: &[u8]) -> f64 {
    let p = codes.iter().zip(labels).filter(|(c, y)| c.is_some() && **y == 1).count() as f64;
    let n = codes.iter().zip(labels).filter(|(c, y)| c.is_some() && **y == 0).count() as f64;
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n_levels) {
        let up = |c: &Option<u32>| c.is_some_and(|c| mask & (1 << c) != 0);
        let tp = codes.iter().zip(labels).filter(|(c, y)| up(c) && **y == 1).count() as f64;
        let fp = codes.iter().zip(labels).filter(|(c, y)| up(c) && **y == 0).count() as f64;
        best = best.max((tp / p - fp / n).abs());
    }
    best
}

/// Direct Naive Bayes in probability space:
/// `argmax_c P(c) · Π p_c^x (1 - p_c)^(1 - x)`, class 0 on ties.
pub fn naive_bayes(priors: [f64; 2], p_up: &[[f64; 2]], record: &[Option<bool>]) -> u8 {
    let mut joint = priors;
    for (p, cell) in p_up.iter().zip(record) {
        if let Some(up) = cell {
            for c in 0..2 {
                joint[c] *= if *up { p[c] } else { 1.0 - p[c] };
            }
        }
    }
    u8::from(joint[1] > joint[0])
}

/// Closed-form metrics from raw counts, ordered as balanced accuracy,
/// recall, precision, F1, accuracy. `None` exactly when a denominator is 0.
pub fn metrics(tp: u64, fp: u64, tn: u64, fn_: u64) -> [Option<f64>; 5] {
    let div = |a: u64, b: u64| (b != 0).then(|| a as f64 / b as f64);
    let recall = div(tp, tp + fn_);
    let specificity = div(tn, tn + fp);
    let ba = recall.zip(specificity).map(|(r, s)| (r + s) / 2.0);
    // 2PR/(P+R) reduces to 2tp/(2tp+fp+fn); defined iff precision and recall
    // exist and are not both zero, i.e. iff tp > 0
    let f1 = (tp > 0).then(|| 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64);
    [ba, recall, div(tp, tp + fp), f1, div(tp + tn, tp + fp + tn + fn_)]
}

fn weighted_gini(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        0.0
    } else {
        n * (1.0 - (c0 / n).powi(2) - (c1 / n).powi(2))
    }
}

/// Largest weighted Gini decrease over every threshold split of every
/// continuous, fully observed feature, with both children holding at least
/// `min_leaf` rows. `rows` may repeat (bootstrap multiplicity).
pub fn best_gini_split(columns: &[Vec<f64>], labels: &[u8], rows: &[usize], min_leaf: usize) -> Option<(usize, f64, f64)> {
    let count = |rs: &mut dyn Iterator<Item = usize>| {
        let mut c = [0.0, 0.0];
        for r in rs {
            c[labels[r] as usize] += 1.0;
        }
        c
    };
    let parent = count(&mut rows.iter().copied());
    let parent_gini = weighted_gini(parent[0], parent[1]);
    let mut best: Option<(usize, f64, f64)> = None;
    for (f, col) in columns.iter().enumerate() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| col[r]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let l = count(&mut rows.iter().copied().filter(|&r| col[r] <= t));
            let r = count(&mut rows.iter().copied().filter(|&r| col[r] > t));
            if ((l[0] + l[1]) as usize) < min_leaf || ((r[0] + r[1]) as usize) < min_leaf {
                continue;
            }
            let d = parent_gini - weighted_gini(l[0], l[1]) - weighted_gini(r[0], r[1]);
            if best.is_none_or(|b| d > b.2) {
                best = Some((f, t, d));
            }
        }
    }
    best
}
