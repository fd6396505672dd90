//! Statistical plumbing shared by the diagnostics and the estimators:
//! error function and normal CDF, one-sample Kolmogorov-Smirnov distance,
//! Wilson score intervals, correlation, medians, and weighted least squares.

use crate::scalar::Real;

/// Error function, series for `|x| <= 4` and asymptotic `erfc` beyond;
/// absolute error well under `1e-10` everywhere it is used here.
pub fn erf<F: Real>(x: F) -> F {
    let ax = x.abs();
    if ax <= F::of(4.0) {
        // erf(x) = 2/sqrt(pi) * sum (-1)^k x^(2k+1) / (k! (2k+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = F::zero();
        loop {
            k += F::one();
            term = term * (-x2) / k;
            let contrib = term / (F::of(2.0) * k + F::one());
            sum += contrib;
            if contrib.abs() < F::of(1e-18) * sum.abs().max(F::of(1e-18)) || k > F::of(200.0) {
                break;
            }
        }
        sum * F::of(2.0) / F::PI().sqrt()
    } else {
        // erfc(ax) ~ exp(-ax^2)/(ax sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - ...)
        let x2 = ax * ax;
        let mut term = F::one();
        let mut sum = F::one();
        let mut k = F::zero();
        for _ in 0..8 {
            k += F::one();
            term = term * -(F::of(2.0) * k - F::one()) / (F::of(2.0) * x2);
            sum += term;
        }
        let erfc = (-x2).exp() / (ax * F::PI().sqrt()) * sum;
        let val = F::one() - erfc;
        if x > F::zero() {
            val
        } else {
            -val
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf<F: Real>(x: F) -> F {
    F::of(0.5) * (F::one() + erf(x / F::of(2.0).sqrt()))
}

/// One-sample Kolmogorov-Smirnov distance of `samples` against a reference
/// CDF.
pub fn ks_statistic<F: Real>(samples: &[F], cdf: impl Fn(F) -> F) -> F {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = F::of_usize(xs.len());
    let mut stat = F::zero();
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let hi = F::of_usize(i + 1) / n - f;
        let lo = f - F::of_usize(i) / n;
        stat = stat.max(hi).max(lo);
    }
    stat
}

/// Asymptotic one-sample KS critical value `c(alpha) / sqrt(n)` with
/// `c(alpha) = sqrt(-ln(alpha/2) / 2)`.
pub fn ks_critical_value<F: Real>(alpha: F, n: usize) -> F {
    let c = (-(alpha / F::of(2.0)).ln() / F::of(2.0)).sqrt();
    c / F::of_usize(n).sqrt()
}

/// Wilson score interval for `successes / trials` at normal quantile `z`.
/// The interval always contains the point estimate, also under floating
/// rounding at the endpoints `p = 0` and `p = 1`.
pub fn wilson_interval<F: Real>(successes: u64, trials: u64, z: F) -> (F, F) {
    if trials == 0 {
        return (F::zero(), F::one());
    }
    let n = F::of(trials as f64);
    let p = F::of(successes as f64) / n;
    let z2 = z * z;
    let denom = F::one() + z2 / n;
    let center = p + z2 / (F::of(2.0) * n);
    let half = z * (p * (F::one() - p) / n + z2 / (F::of(4.0) * n * n)).sqrt();
    (
        ((center - half) / denom).max(F::zero()).min(p),
        ((center + half) / denom).min(F::one()).max(p),
    )
}

pub fn mean<F: Real>(xs: &[F]) -> F {
    xs.iter().copied().sum::<F>() / F::of_usize(xs.len())
}

/// Unbiased sample variance.
pub fn variance<F: Real>(xs: &[F]) -> F {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<F>() / F::of_usize(xs.len() - 1)
}

/// Standard error of the sample mean.
pub fn standard_error<F: Real>(xs: &[F]) -> F {
    (variance(xs) / F::of_usize(xs.len())).sqrt()
}

/// Pearson correlation coefficient.
pub fn correlation<F: Real>(a: &[F], b: &[F]) -> F {
    assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = F::zero();
    let mut va = F::zero();
    let mut vb = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

pub fn median<F: Real>(xs: &[F]) -> F {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / F::of(2.0)
    }
}

/// Weighted least-squares fit of `y = intercept + slope * t`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit<F> {
    pub intercept: F,
    pub slope: F,
    /// Known-variance standard errors, inflated by `sqrt(max(1, chi2/dof))`
    /// so model misfit widens the reported uncertainty.
    pub se_intercept: F,
    pub se_slope: F,
    /// Weighted coefficient of determination.
    pub r_squared: F,
}

/// `weights[i]` should be `1 / Var(y_i)`; pass uniform weights for ordinary
/// least squares. Requires at least 2 points (3 for a finite misfit factor).
pub fn weighted_line_fit<F: Real>(t: &[F], y: &[F], weights: &[F]) -> LineFit<F> {
    assert!(t.len() >= 2 && t.len() == y.len() && t.len() == weights.len());
    let sw: F = weights.iter().copied().sum();
    let swt: F = t.iter().zip(weights).map(|(&a, &w)| w * a).sum();
    let swy: F = y.iter().zip(weights).map(|(&a, &w)| w * a).sum();
    let tbar = swt / sw;
    let ybar = swy / sw;
    let mut stt = F::zero();
    let mut sty = F::zero();
    for ((&ti, &yi), &w) in t.iter().zip(y).zip(weights) {
        stt += w * (ti - tbar) * (ti - tbar);
        sty += w * (ti - tbar) * (yi - ybar);
    }
    let slope = sty / stt;
    let intercept = ybar - slope * tbar;

    let mut chi2 = F::zero();
    let mut ss_tot = F::zero();
    for ((&ti, &yi), &w) in t.iter().zip(y).zip(weights) {
        let resid = yi - intercept - slope * ti;
        chi2 += w * resid * resid;
        ss_tot += w * (yi - ybar) * (yi - ybar);
    }
    let r_squared = if ss_tot > F::zero() {
        F::one() - chi2 / ss_tot
    } else {
        F::one()
    };
    let dof = t.len().saturating_sub(2);
    let inflation = if dof > 0 {
        (chi2 / F::of_usize(dof)).max(F::one()).sqrt()
    } else {
        F::one()
    };
    let se_slope = (F::one() / stt).sqrt() * inflation;
    let se_intercept = ((F::one() / sw) + tbar * tbar / stt).sqrt() * inflation;
    LineFit {
        intercept,
        slope,
        se_intercept,
        se_slope,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalSource;

    #[test]
    fn erf_anchors() {
        // Reference values (Abramowitz & Stegun table accuracy).
        assert!((erf(0.5f64) - 0.5204998778130465).abs() < 1e-12);
        assert!((erf(1.0f64) - 0.8427007929497149).abs() < 1e-12);
        assert!((erf(2.0f64) - 0.9953222650189527).abs() < 1e-12);
        assert!((erf(-1.0f64) + 0.8427007929497149).abs() < 1e-12);
        assert!((erf(5.0f64) - 0.9999999999984626).abs() < 1e-12);
        assert_eq!(erf(0.0f64), 0.0);
    }

    #[test]
    fn normal_cdf_symmetry() {
        for &x in &[0.0f64, 0.3, 1.0, 2.5, 4.5] {
            let p = normal_cdf(x);
            let q = normal_cdf(-x);
            assert!((p + q - 1.0).abs() < 1e-12);
        }
        assert!((normal_cdf(1.959963984540054f64) - 0.975).abs() < 1e-9);
    }

    #[test]
    fn ks_statistic_detects_and_accepts() {
        // Standard normal samples against the normal CDF: below the 1%
        // critical value.
        let mut src = NormalSource::for_path(9, 0);
        let samples: Vec<f64> = (0..10_000).map(|_| src.sample()).collect();
        let d = ks_statistic(&samples, normal_cdf);
        assert!(d < ks_critical_value(0.01, samples.len()));

        // Shifted samples: clearly rejected.
        let shifted: Vec<f64> = samples.iter().map(|x| x + 0.2).collect();
        let d = ks_statistic(&shifted, normal_cdf);
        assert!(d > ks_critical_value(0.01, samples.len()));
    }

    #[test]
    fn ks_critical_matches_asymptotic_table() {
        // c(alpha)^2 = -ln(alpha/2)/2, and the classical table values
        // c(0.01) = 1.6276, c(0.05) = 1.3581.
        let c01 = ks_critical_value(0.01f64, 1);
        let c05 = ks_critical_value(0.05f64, 1);
        assert!((c01 * c01 + 0.5 * (0.005f64).ln()).abs() < 1e-14);
        assert!((c05 * c05 + 0.5 * (0.025f64).ln()).abs() < 1e-14);
        assert!((c01 - 1.6276).abs() < 1e-4);
        assert!((c05 - 1.3581).abs() < 1e-4);
    }

    #[test]
    fn wilson_interval_brackets_proportion() {
        let (lo, hi) = wilson_interval::<f64>(50, 100, 1.959963984540054);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((lo - 0.40383).abs() < 1e-4 && (hi - 0.59617).abs() < 1e-4);
        let (lo, hi) = wilson_interval::<f64>(0, 100, 1.959963984540054);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        // Degenerate endpoints still bracket the point estimate.
        let (lo, hi) = wilson_interval::<f64>(2000, 2000, 1.959963984540054);
        assert!(lo < 1.0 && hi >= 1.0);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 - 3.0 * x).collect();
        let w = vec![1.0; 10];
        let fit = weighted_line_fit(&t, &y, &w);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.slope + 3.0).abs() < 1e-12);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn line_fit_weights_matter() {
        let t = vec![0.0f64, 1.0, 2.0, 3.0];
        let y = vec![0.0f64, 1.0, 2.0, 10.0];
        let flat = weighted_line_fit(&t, &y, &[1.0; 4]);
        // Heavily down-weighting the outlier recovers the clean slope.
        let fit = weighted_line_fit(&t, &y, &[1.0, 1.0, 1.0, 1e-9]);
        assert!((fit.slope - 1.0).abs() < 1e-3);
        assert!(flat.slope > 2.0);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0f64, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0f64, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn correlation_of_independent_streams_is_small() {
        let mut a = NormalSource::for_path(11, 0);
        let mut b = NormalSource::for_path(11, 1);
        let xs: Vec<f64> = (0..20_000).map(|_| a.sample()).collect();
        let ys: Vec<f64> = (0..20_000).map(|_| b.sample()).collect();
        assert!(correlation(&xs, &ys).abs() < 3.0 / (20_000f64).sqrt());
    }
}
