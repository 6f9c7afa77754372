//! Welch-averaged spectra on the positive-frequency grid shared with
//! [`SampledPsd`]: Hann-windowed overlapping segments, global mean removal,
//! and complex cross-spectrum averaging for the transfer-magnitude
//! estimator.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::contrasts::SampledPsd;
use crate::error::{Error, Result};

/// Estimation settings for the spectral pipeline. `segment` must be a power
/// of two no longer than the series; `overlap` is the fractional segment
/// overlap in [0, 1).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SpectralConfig {
    pub segment: usize,
    pub overlap: f64,
    /// Undecided band for |log ratio| comparisons.
    pub epsilon: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            segment: 256,
            overlap: 0.5,
            epsilon: 0.01,
        }
    }
}

fn validate(series_len: usize, config: &SpectralConfig) -> Result<()> {
    let l = config.segment;
    if l == 0 || !l.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "segment length must be a power of two, got {l}"
        )));
    }
    if l > series_len {
        return Err(Error::InvalidConfig(format!(
            "segment length {l} exceeds the series length {series_len}"
        )));
    }
    if !(0.0..1.0).contains(&config.overlap) {
        return Err(Error::InvalidConfig(format!(
            "overlap fraction must lie in [0, 1), got {}",
            config.overlap
        )));
    }
    Ok(())
}

fn hann(l: usize) -> Vec<f64> {
    (0..l)
        .map(|t| 0.5 * (1.0 - (std::f64::consts::TAU * t as f64 / l as f64).cos()))
        .collect()
}

fn remove_mean(series: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|x| x - mean).collect()
}

fn segment_starts(series_len: usize, segment: usize, overlap: f64) -> Vec<usize> {
    let hop = ((segment as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let mut starts = Vec::new();
    let mut start = 0;
    while start + segment <= series_len {
        starts.push(start);
        start += hop;
    }
    starts
}

/// Averaged segment spectra of one or two series. When `other` is given,
/// the returned cross values are mean(Y_k * conj(X_k)) / sum(w^2), whose
/// modulus feeds the transfer-magnitude estimator.
fn welch_segments(
    series: &[f64],
    other: Option<&[f64]>,
    config: &SpectralConfig,
) -> Result<(Vec<f64>, Option<Vec<Complex<f64>>>)> {
    validate(series.len(), config)?;
    if let Some(o) = other {
        if o.len() != series.len() {
            return Err(Error::ShapeMismatch(format!(
                "series lengths differ: {} vs {}",
                series.len(),
                o.len()
            )));
        }
    }
    let l = config.segment;
    let x = remove_mean(series);
    let y = other.map(remove_mean);
    let window = hann(l);
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(l);
    let bins = l / 2;
    let mut auto = vec![0.0f64; bins];
    let mut cross = y.as_ref().map(|_| vec![Complex::new(0.0, 0.0); bins]);
    let starts = segment_starts(series.len(), l, config.overlap);

    let mut buf_x = vec![Complex::new(0.0, 0.0); l];
    let mut buf_y = vec![Complex::new(0.0, 0.0); l];
    for &start in &starts {
        for t in 0..l {
            buf_x[t] = Complex::new(x[start + t] * window[t], 0.0);
        }
        fft.process(&mut buf_x);
        if let (Some(yv), Some(cr)) = (y.as_ref(), cross.as_mut()) {
            for t in 0..l {
                buf_y[t] = Complex::new(yv[start + t] * window[t], 0.0);
            }
            fft.process(&mut buf_y);
            for b in 0..bins {
                cr[b] += buf_y[b] * buf_x[b].conj();
            }
        }
        for b in 0..bins {
            auto[b] += buf_x[b].norm_sqr();
        }
    }

    let norm = 1.0 / (starts.len() as f64 * window_power);
    for v in &mut auto {
        *v *= norm;
    }
    if let Some(cr) = cross.as_mut() {
        for v in cr.iter_mut() {
            *v *= norm;
        }
    }
    Ok((auto, cross))
}

/// Welch estimate of the power spectral density on the positive-frequency
/// grid. The global mean is removed first, so a constant series maps to the
/// zero spectrum. Normalization is chosen so the Riemann-sum `total_power`
/// estimates the series variance.
pub fn welch_psd(series: &[f64], config: &SpectralConfig) -> Result<SampledPsd> {
    let (auto, _) = welch_segments(series, None, config)?;
    SampledPsd::new(auto)
}

/// Transfer-magnitude estimate together with the bins where the input
/// spectrum had to be floored.
#[derive(Debug, Clone)]
pub struct TransferEstimate {
    pub h2: SampledPsd,
    pub input_psd: SampledPsd,
    pub floored_bins: Vec<usize>,
}

/// |h(nu)|^2 = |S_yx(nu)|^2 / S_xx(nu)^2 per bin with Welch cross-spectra
/// under the same windowing. Bins where S_xx falls below 1e-12 times its
/// maximum are floored and reported.
pub fn estimate_transfer_magnitude(
    x: &[f64],
    y: &[f64],
    config: &SpectralConfig,
) -> Result<TransferEstimate> {
    let (s_xx, cross) = welch_segments(x, Some(y), config)?;
    let s_yx = cross.expect("cross spectrum requested");
    let max_sxx = s_xx.iter().cloned().fold(0.0f64, f64::max);
    if max_sxx <= 0.0 {
        return Err(Error::InvalidSpectrum(
            "input series has an identically zero spectrum".into(),
        ));
    }
    let floor = 1e-12 * max_sxx;
    let mut floored = Vec::new();
    let mut h2 = Vec::with_capacity(s_xx.len());
    for (b, (&sx, sy)) in s_xx.iter().zip(&s_yx).enumerate() {
        let denom = if sx > floor {
            sx
        } else {
            floored.push(b);
            floor
        };
        h2.push(sy.norm_sqr() / (denom * denom));
    }
    Ok(TransferEstimate {
        h2: SampledPsd::new(h2)?,
        input_psd: SampledPsd::new(s_xx)?,
        floored_bins: floored,
    })
}
