use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares slope of `ln y` against `ln n` with a 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slope {
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

pub const MIN_POINTS: usize = 4;

/// `None` with fewer than four points or a nonpositive `y`.
pub fn log_log_slope(n: &[usize], y: &[f64]) -> Option<Slope> {
    if n.len() != y.len() || n.len() < MIN_POINTS || y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = n.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let df = k - 2.0;
    let se = (rss / df / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, df).ok()?.inverse_cdf(0.975);
    Some(Slope {
        slope,
        intercept,
        se,
        ci_low: slope - q * se,
        ci_high: slope + q * se,
        points: xs.len(),
    })
}
