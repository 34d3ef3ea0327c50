//! Separation metrics between two score samples.
//!
//! Scores are competencies: the positive group (misclassified, OOD or
//! unfamiliar) is expected to score lower.

use crate::error::{domain, Result};

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("metric needs two nonempty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(domain("metric samples must be finite"));
    }
    Ok(())
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Count of elements `<= x` in a sorted slice.
fn count_le(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|v| *v <= x)
}

/// Kolmogorov–Smirnov distance `sup_t |F_a(t) − F_b(t)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    // the ECDF difference only changes at sample values
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < sa.len() || j < sb.len() {
        let t = match (sa.get(i), sb.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(best)
}

/// Mann–Whitney form: fraction of (pos, neg) pairs with pos < neg, ties
/// counting one half.
pub fn auroc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check(pos, neg)?;
    let sn = sorted(neg);
    let mut wins = 0.0;
    for &p in pos {
        let lt = sn.partition_point(|v| *v < p);
        let le = count_le(&sn, p);
        wins += (sn.len() - le) as f64 + 0.5 * (le - lt) as f64;
    }
    Ok(wins / (pos.len() as f64 * sn.len() as f64))
}

/// Fraction of `neg` at or below the smallest threshold that places at
/// least `tpr_target` of `pos` at or below it.
pub fn fpr_at_tpr(pos: &[f64], neg: &[f64], tpr_target: f64) -> Result<f64> {
    check(pos, neg)?;
    if !(tpr_target > 0.0 && tpr_target <= 1.0) {
        return Err(domain("target TPR must lie in (0, 1]"));
    }
    let sp = sorted(pos);
    // k-th order statistic with k = ⌈target·n⌉, guarded against round-off
    let k = ((tpr_target * sp.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let threshold = sp[k.min(sp.len()) - 1];
    let sn = sorted(neg);
    Ok(count_le(&sn, threshold) as f64 / sn.len() as f64)
}

/// FPR at the conventional 95% TPR.
pub fn fpr_at_95_tpr(pos: &[f64], neg: &[f64]) -> Result<f64> {
    fpr_at_tpr(pos, neg, 0.95)
}

/// Sample median, averaging the two middle values for even sizes; `NaN`
/// when empty.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let s = sorted(v);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
