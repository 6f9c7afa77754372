//! Cause-effect pair direction inference: the trace condition on fitted
//! linear pairs and the spectral-independence ratio on weakly stationary
//! time-series pairs, each applied in both directions with an
//! epsilon-undecided band on |log ratio|.

mod spectral;

pub use spectral::{estimate_transfer_magnitude, welch_psd, SpectralConfig, TransferEstimate};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contrasts::{normalized_trace, total_power, CovarianceMatrix, SampledPsd};
use crate::error::{Error, Result};

/// Fitted linear pair Y := M X + E.
#[derive(Debug, Clone)]
pub struct LinearPairModel {
    m: DMatrix<f64>,
    sigma_x: CovarianceMatrix,
    sigma_e: CovarianceMatrix,
}

impl LinearPairModel {
    pub fn new(m: DMatrix<f64>, sigma_x: CovarianceMatrix, sigma_e: CovarianceMatrix) -> Result<Self> {
        if m.ncols() != sigma_x.dim() || m.nrows() != sigma_e.dim() {
            return Err(Error::ShapeMismatch(format!(
                "structure matrix is {}x{}, cause covariance {}x{}, noise covariance {}x{}",
                m.nrows(),
                m.ncols(),
                sigma_x.dim(),
                sigma_x.dim(),
                sigma_e.dim(),
                sigma_e.dim()
            )));
        }
        Ok(LinearPairModel { m, sigma_x, sigma_e })
    }

    pub fn structure(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn sigma_x(&self) -> &CovarianceMatrix {
        &self.sigma_x
    }

    pub fn sigma_e(&self) -> &CovarianceMatrix {
        &self.sigma_e
    }
}

/// A pair of equally long, weakly stationary series.
#[derive(Debug, Clone)]
pub struct TimeSeriesPair {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TimeSeriesPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "series lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 256 {
            return Err(Error::InvalidInput(format!(
                "spectral estimation needs at least 256 samples, got {}",
                x.len()
            )));
        }
        Ok(TimeSeriesPair { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn swapped(&self) -> TimeSeriesPair {
        TimeSeriesPair {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XCausesY,
    YCausesX,
    Undecided,
}

/// Direction call with the two generic ratios behind it. `margin` is
/// |log forward_ratio| - |log backward_ratio|; the verdict is undecided
/// exactly when |margin| falls inside the epsilon band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionVerdict {
    pub direction: Direction,
    pub forward_ratio: f64,
    pub backward_ratio: f64,
    pub margin: f64,
}

fn decide(forward_ratio: f64, backward_ratio: f64, epsilon: f64) -> DirectionVerdict {
    let margin = forward_ratio.ln().abs() - backward_ratio.ln().abs();
    let direction = if margin.abs() < epsilon {
        Direction::Undecided
    } else if margin < 0.0 {
        Direction::XCausesY
    } else {
        Direction::YCausesX
    };
    DirectionVerdict {
        direction,
        forward_ratio,
        backward_ratio,
        margin,
    }
}

fn center_rows(samples: &DMatrix<f64>) -> DMatrix<f64> {
    let n = samples.nrows() as f64;
    let mean = samples.row_sum() / n;
    let mut out = samples.clone();
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

fn symmetric_condition_number(s: &DMatrix<f64>) -> (f64, f64) {
    let eig = s.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Ordinary least squares fit of Y := M X + E from row-major samples.
/// Covariances use 1/(N-1) normalization after mean removal.
pub fn fit_linear_pair(
    x_samples: &DMatrix<f64>,
    y_samples: &DMatrix<f64>,
) -> Result<LinearPairModel> {
    let n_obs = x_samples.nrows();
    if y_samples.nrows() != n_obs {
        return Err(Error::ShapeMismatch(format!(
            "sample counts differ: {} vs {}",
            n_obs,
            y_samples.nrows()
        )));
    }
    let n = x_samples.ncols();
    let m_dim = y_samples.ncols();
    if n == 0 || m_dim == 0 {
        return Err(Error::InvalidDimension("empty variable blocks".into()));
    }
    if n_obs <= n.max(m_dim) + 1 {
        return Err(Error::IllConditionedData(format!(
            "need more than max(n, m) + 1 = {} samples, got {n_obs}",
            n.max(m_dim) + 1
        )));
    }

    let xc = center_rows(x_samples);
    let yc = center_rows(y_samples);
    let denom = (n_obs - 1) as f64;
    let sxx = (xc.transpose() * &xc) / denom;
    let sxx = (&sxx + sxx.transpose()) * 0.5;
    let (min_eig, cond) = symmetric_condition_number(&sxx);
    if min_eig <= 0.0 || cond >= 1e12 {
        return Err(Error::IllConditionedData(format!(
            "empirical cause covariance has condition number {cond:.3e}"
        )));
    }
    let sxy = (xc.transpose() * &yc) / denom; // n x m
    let chol = sxx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditionedData("cause covariance is not positive definite".into()))?;
    let m_hat_t = chol.solve(&sxy); // n x m, equals Sxx^{-1} Sxy
    let m_hat = m_hat_t.transpose(); // m x n

    let residuals = &yc - &xc * &m_hat_t;
    let sigma_e_raw = (residuals.transpose() * &residuals) / denom;
    // Clamp tiny negative eigenvalue noise from exact fits.
    let sigma_e = CovarianceMatrix::new(&sigma_e_raw + DMatrix::identity(m_dim, m_dim) * 1e-14)?;
    let sigma_x = CovarianceMatrix::new(sxx)?;
    LinearPairModel::new(m_hat, sigma_x, sigma_e)
}

/// Noiseless generic ratio of the trace condition:
/// tau_m(M S_X M^T) / (tau_n(S_X) tau_m(M M^T)).
pub fn trace_condition_ratio(model: &LinearPairModel) -> Result<f64> {
    let m = model.structure();
    let sigma = model.sigma_x();
    let m_rows = m.nrows() as f64;
    let numerator = (m * sigma.entries() * m.transpose()).trace() / m_rows;
    let tau_mmt = (m * m.transpose()).trace() / m_rows;
    let denominator = normalized_trace(sigma) * tau_mmt;
    if denominator.abs() <= 1e-12 * numerator.abs().max(1.0) {
        return Err(Error::DegenerateModel(
            "trace condition denominator vanishes (zero mechanism or cause)".into(),
        ));
    }
    Ok(numerator / denominator)
}

/// Trace-method direction inference on square, invertible fitted pairs.
/// The backward mechanism is the independently refitted regression y -> x.
pub fn infer_direction_trace(
    x_samples: &DMatrix<f64>,
    y_samples: &DMatrix<f64>,
    epsilon: f64,
) -> Result<DirectionVerdict> {
    if x_samples.ncols() != y_samples.ncols() {
        return Err(Error::NotApplicable(format!(
            "trace method needs square mechanisms; got n = {}, m = {}",
            x_samples.ncols(),
            y_samples.ncols()
        )));
    }
    let forward = fit_linear_pair(x_samples, y_samples)?;
    let backward = fit_linear_pair(y_samples, x_samples)?;
    for (label, model) in [("forward", &forward), ("backward", &backward)] {
        let svd = model.structure().clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if smin <= 0.0 || smax / smin >= 1e10 {
            return Err(Error::NotApplicable(format!(
                "{label} fitted mechanism is numerically singular"
            )));
        }
    }
    let forward_ratio = trace_condition_ratio(&forward)?;
    let backward_ratio = trace_condition_ratio(&backward)?;
    Ok(decide(forward_ratio, backward_ratio, epsilon))
}

/// Spectral-independence generic ratio:
/// [2 dnu sum_b S_xx(b) h2(b)] / (total_power(S_xx) * total_power(h2)).
/// With the unit-interval frequency convention the Haar average of the
/// shifted overlap equals the denominator, so a ratio near 1 is the generic
/// case.
pub fn sic_ratio(s_xx: &SampledPsd, h2: &SampledPsd) -> Result<f64> {
    if s_xx.bins() != h2.bins() {
        return Err(Error::ShapeMismatch(format!(
            "bin counts differ: {} vs {}",
            s_xx.bins(),
            h2.bins()
        )));
    }
    let overlap: f64 = 2.0
        * s_xx.delta_nu()
        * s_xx
            .values()
            .iter()
            .zip(h2.values())
            .map(|(a, b)| a * b)
            .sum::<f64>();
    let denom = total_power(s_xx) * total_power(h2);
    if denom <= 0.0 {
        return Err(Error::DegenerateContrast(
            "zero total power on one of the spectra".into(),
        ));
    }
    Ok(overlap / denom)
}

/// Everything the spectral direction test produced, for reporting. The
/// transfer magnitudes come from the Welch cross-spectral estimator
/// |S_yx|^2 / S_xx^2 (an artifact choice; the model only supplies the
/// filter implicitly).
#[derive(Debug, Clone)]
pub struct SicAnalysis {
    pub verdict: DirectionVerdict,
    pub forward_floored_bins: usize,
    pub backward_floored_bins: usize,
}

pub fn sic_analysis(pair: &TimeSeriesPair, config: &SpectralConfig) -> Result<SicAnalysis> {
    let forward = estimate_transfer_magnitude(pair.x(), pair.y(), config)?;
    let backward = estimate_transfer_magnitude(pair.y(), pair.x(), config)?;
    let forward_ratio = sic_ratio(&forward.input_psd, &forward.h2)?;
    let backward_ratio = sic_ratio(&backward.input_psd, &backward.h2)?;
    Ok(SicAnalysis {
        verdict: decide(forward_ratio, backward_ratio, config.epsilon),
        forward_floored_bins: forward.floored_bins.len(),
        backward_floored_bins: backward.floored_bins.len(),
    })
}

/// Spectral-independence direction inference: forward ratio from
/// (S_xx, |h_{x->y}|^2), backward from (S_yy, |h_{y->x}|^2), smaller
/// |log ratio| wins.
pub fn infer_direction_sic(
    pair: &TimeSeriesPair,
    config: &SpectralConfig,
) -> Result<DirectionVerdict> {
    Ok(sic_analysis(pair, config)?.verdict)
}
