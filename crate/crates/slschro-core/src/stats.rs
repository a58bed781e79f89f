//! Reduction and regression helpers.
//!
//! All reductions are order-fixed pairwise sums so ensemble results do not
//! depend on worker count or scheduling.

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_by<T>(xs: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().map(f).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

pub fn pairwise_sum_by_pair<T>(a: &[T], b: &[T], f: impl Fn(&T, &T) -> f64 + Copy) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 32 {
        return a.iter().zip(b.iter()).map(|(x, y)| f(x, y)).sum();
    }
    let mid = a.len() / 2;
    pairwise_sum_by_pair(&a[..mid], &b[..mid], f) + pairwise_sum_by_pair(&a[mid..], &b[mid..], f)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = pairwise_sum_by(xs, |&x| (x - m) * (x - m));
    ss / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

/// Weighted least-squares line through (x, y) with precision weights `w`
/// (w_i ∝ 1/σ_i²). If every weight is zero or non-finite the fit is
/// unweighted and the slope error comes from the residual variance.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n {
        return None;
    }
    let usable: Vec<f64> = w
        .iter()
        .map(|&wi| if wi.is_finite() && wi > 0.0 { wi } else { 0.0 })
        .collect();
    let wsum = pairwise_sum(&usable);
    let (weights, weighted): (Vec<f64>, bool) = if wsum > 0.0 {
        (usable, true)
    } else {
        (vec![1.0; n], false)
    };
    let wtot = pairwise_sum(&weights);
    let xbar = pairwise_sum_by_pair(&weights, x, |&wi, &xi| wi * xi) / wtot;
    let ybar = pairwise_sum_by_pair(&weights, y, |&wi, &yi| wi * yi) / wtot;
    let sxx: f64 = (0..n).map(|i| weights[i] * (x[i] - xbar) * (x[i] - xbar)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = (0..n)
        .map(|i| weights[i] * (x[i] - xbar) * (y[i] - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let slope_se = if weighted {
        // precision weights: Var(slope) = 1/Σw(x-x̄)²
        (1.0 / sxx).sqrt()
    } else {
        let rss: f64 = (0..n)
            .map(|i| {
                let r = y[i] - intercept - slope * x[i];
                r * r
            })
            .sum();
        if n > 2 {
            (rss / (n as f64 - 2.0) / sxx).sqrt()
        } else {
            0.0
        }
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
    })
}
