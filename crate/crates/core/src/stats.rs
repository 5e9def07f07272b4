//! Statistical test helpers shared by the test suites and the CLI.
//!
//! Everything here works in `f64`: these routines judge empirical evidence
//! (goodness of fit, distances, trend fits) and are not part of the
//! generic-scalar sampling path.

use statrs::function::gamma::gamma_ur;

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Clone, Copy, Debug)]
pub struct GofResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed `counts` against cell probabilities
/// `probs`. Adjacent cells are merged until every group has expected count
/// at least 5 (a trailing light group folds into its predecessor), so callers
/// can pass fine-grained histograms directly.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> GofResult {
    assert_eq!(counts.len(), probs.len(), "counts and probs must align");
    assert!(!counts.is_empty(), "empty histogram");
    let n: u64 = counts.iter().sum();
    let n = n as f64;

    // An observation in a zero-probability cell falsifies the law outright.
    if counts.iter().zip(probs).any(|(&c, &p)| c > 0 && p == 0.0) {
        return GofResult {
            statistic: f64::INFINITY,
            df: counts.len().saturating_sub(1),
            p_value: 0.0,
        };
    }

    // Greedy left-to-right merge to expected >= 5.
    let mut groups: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        assert!(p >= 0.0 && p.is_finite(), "bad cell probability {p}");
        acc_obs += c as f64;
        acc_exp += n * p;
        if acc_exp >= 5.0 {
            groups.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = groups.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        } else {
            groups.push((acc_obs, acc_exp));
        }
    }

    if groups.len() < 2 {
        return GofResult { statistic: 0.0, df: 0, p_value: 1.0 };
    }
    let mut statistic = 0.0;
    for &(obs, exp) in &groups {
        if exp <= 0.0 {
            continue;
        }
        let d = obs - exp;
        statistic += d * d / exp;
    }
    let df = groups.len() - 1;
    // gamma_ur needs a strictly positive argument; Q(df/2, 0) = 1 exactly.
    let p_value = if statistic > 0.0 { gamma_ur(df as f64 / 2.0, statistic / 2.0) } else { 1.0 };
    GofResult { statistic, df, p_value }
}

/// Goodness-of-fit of iid trial counts (each >= 1) against a geometric law
/// with the given per-trial success probability. Degenerate success (within
/// 1e−12 of 1) collapses to checking that every observation is exactly one
/// trial.
pub fn geometric_gof(trials: &[u64], success: f64) -> GofResult {
    assert!(!trials.is_empty(), "no observations");
    assert!(success > 0.0 && success <= 1.0, "bad success probability {success}");
    if success >= 1.0 - 1e-12 {
        let all_one = trials.iter().all(|&t| t == 1);
        return GofResult {
            statistic: if all_one { 0.0 } else { f64::INFINITY },
            df: 0,
            p_value: if all_one { 1.0 } else { 0.0 },
        };
    }
    let max_k = *trials.iter().max().expect("nonempty") as usize;
    let mut counts = vec![0u64; max_k];
    for &t in trials {
        assert!(t >= 1, "trial counts start at one");
        counts[(t - 1) as usize] += 1;
    }
    let q = 1.0 - success;
    // Cells k = 1..max_k−1 carry the geometric pmf; the last cell is the
    // whole tail P(X >= max_k) so the probabilities sum to one exactly.
    let mut probs = Vec::with_capacity(max_k);
    for k in 1..max_k {
        probs.push(q.powi(k as i32 - 1) * success);
    }
    probs.push(q.powi(max_k as i32 - 1));
    chi2_gof(&counts, &probs)
}

/// Total variation distance between two finite distributions on a shared
/// index set: half the L1 distance.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share a domain");
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let term = (a - b).abs();
        let t = sum + term;
        comp += if sum.abs() >= term { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    0.5 * (sum + comp)
}

/// Ordinary least-squares line fit; returns `(slope, intercept)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len(), "mismatched series");
    assert!(xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    assert!(sxx > 0.0, "degenerate xs");
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Sample mean and sample standard deviation (n − 1 normalization; zero for
/// a single observation).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty(), "no observations");
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
