//! Extrapolation of the blowup time from the growth of max |W_z|.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("at least 4 samples above the floor are needed, got {0}")]
    TooFewSamples(usize),
    #[error("sample times must be strictly increasing")]
    Unordered,
    #[error("no blowup detected (slope {slope:e}, r2 {r2})")]
    NoBlowup { slope: f64, r2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    /// Samples with y at or below this are ignored.
    pub floor: f64,
    pub min_r2: f64,
    pub min_samples: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            floor: 1e-12,
            min_r2: 0.99,
            min_samples: 4,
        }
    }
}

/// Least-squares line through (t, 1/y) and its root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "T_est")]
    pub t_est: f64,
    pub r2: f64,
    pub n_samples: usize,
    pub t_first: f64,
    pub t_last: f64,
}

pub fn estimate_blowup_time(samples: &[(f64, f64)]) -> Result<BlowupFit, FitError> {
    estimate_blowup_time_with(samples, &FitSettings::default())
}

pub fn estimate_blowup_time_with(
    samples: &[(f64, f64)],
    settings: &FitSettings,
) -> Result<BlowupFit, FitError> {
    let used: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(_, y)| y.is_finite() && *y > settings.floor)
        .collect();
    if used.len() < settings.min_samples.max(2) {
        return Err(FitError::TooFewSamples(used.len()));
    }
    if used.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(FitError::Unordered);
    }
    let n = used.len() as f64;
    let mean_t = used.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_v = used.iter().map(|s| 1.0 / s.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stv = 0.0;
    let mut svv = 0.0;
    for (t, y) in &used {
        let dt = t - mean_t;
        let dv = 1.0 / y - mean_v;
        stt += dt * dt;
        stv += dt * dv;
        svv += dv * dv;
    }
    let slope = stv / stt;
    let intercept = mean_v - slope * mean_t;
    let ss_res: f64 = used
        .iter()
        .map(|(t, y)| (1.0 / y - (intercept + slope * t)).powi(2))
        .sum();
    let r2 = if svv > 0.0 {
        (1.0 - ss_res / svv).clamp(0.0, 1.0)
    } else {
        0.0
    };
    if !(slope < 0.0) || r2 < settings.min_r2 {
        return Err(FitError::NoBlowup { slope, r2 });
    }
    Ok(BlowupFit {
        slope,
        intercept,
        t_est: -intercept / slope,
        r2,
        n_samples: used.len(),
        t_first: used[0].0,
        t_last: used[used.len() - 1].0,
        samples: used,
    })
}

/// Picks at most `count` samples for the fit. When the data below `ceiling` span a
/// decade in y, the samples nearest to log-spaced levels across the last decade are
/// used; otherwise the samples are spread evenly over the whole record.
pub fn select_fit_window(samples: &[(f64, f64)], ceiling: f64, count: usize) -> Vec<(f64, f64)> {
    let below: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(_, y)| y.is_finite() && *y < ceiling)
        .collect();
    if below.len() <= count || count < 2 {
        return below;
    }
    let y_end = below[below.len() - 1].1;
    let start = below.iter().rposition(|(_, y)| *y <= y_end / 10.0);
    let mut idx: Vec<usize> = match start {
        Some(start) if below.len() - start >= count => {
            let ln_lo = below[start].1.ln();
            let ln_hi = y_end.ln();
            let last = below.len() - 1;
            let mut picked: Vec<usize> = Vec::with_capacity(count);
            for k in 0..count {
                let target = ln_lo + (ln_hi - ln_lo) * k as f64 / (count - 1) as f64;
                let nearest = (start..below.len())
                    .min_by(|&a, &b| {
                        (below[a].1.ln() - target)
                            .abs()
                            .total_cmp(&(below[b].1.ln() - target).abs())
                    })
                    .unwrap();
                // keep indices distinct and leave room for the remaining levels
                let floor = picked.last().map_or(start, |p| p + 1);
                let ceil = last - (count - 1 - k);
                picked.push(nearest.clamp(floor, ceil));
            }
            picked
        }
        _ => (0..count)
            .map(|k| k * (below.len() - 1) / (count - 1))
            .collect(),
    };
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter().map(|i| below[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_self_similar_samples() {
        let s: Vec<_> = (0..6)
            .map(|i| {
                let t = 0.1 * i as f64;
                (t, 1.5 / (1.0 - t))
            })
            .collect();
        let fit = estimate_blowup_time(&s).unwrap();
        assert!((fit.t_est - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_line() {
        let s: Vec<_> = (0..8).map(|i| (i as f64 * 0.2, 1.0 / (2.0 - i as f64 * 0.2))).collect();
        assert!((estimate_blowup_time(&s).unwrap().t_est - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_are_not_blowup() {
        let s: Vec<_> = (0..8).map(|i| (i as f64, 3.0)).collect();
        assert!(matches!(estimate_blowup_time(&s), Err(FitError::NoBlowup { .. })));
    }

    #[test]
    fn too_few_or_unordered() {
        assert!(matches!(
            estimate_blowup_time(&[(0.0, 1.0), (0.1, 2.0), (0.2, 0.0)]),
            Err(FitError::TooFewSamples(2))
        ));
        let s = [(0.0, 1.0), (0.2, 2.0), (0.1, 3.0), (0.3, 4.0)];
        assert_eq!(estimate_blowup_time(&s), Err(FitError::Unordered));
    }

    #[test]
    fn window_spans_last_decade() {
        let s: Vec<_> = (0..1000)
            .map(|i| {
                let t = i as f64 * 0.000999;
                (t, 1.0 / (1.0 - t))
            })
            .collect();
        let w = select_fit_window(&s, f64::INFINITY, 10);
        assert_eq!(w.len(), 10);
        let ratio = w[9].1 / w[0].1;
        assert!(ratio > 9.0 && ratio < 11.0, "{ratio}");
    }

    #[test]
    fn window_without_decade_spreads_out() {
        let s: Vec<_> = (0..100).map(|i| (i as f64 * 0.003, 1.0 / (1.0 - i as f64 * 0.003))).collect();
        let w = select_fit_window(&s, f64::INFINITY, 10);
        assert_eq!(w.len(), 10);
        assert_eq!(w[0], s[0]);
        assert_eq!(w[9], s[99]);
    }
}
