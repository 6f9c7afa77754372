//! Expected generic contrasts, generic ratios, and the randomization test.
//!
//! The Monte-Carlo engine is contrast-agnostic: callers pass a group
//! sampler and an evaluation closure `g -> C(m g x)`, and the closed-form
//! companions (`egc_trace`, `egc_nmf`, `egc_mixture`) serve as oracles for
//! it in the tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contrasts::{
    center_columns, mixture_quartic_contrast, normalized_trace, CovarianceMatrix,
    GaussianMixture, NmfFactors,
};
use crate::error::{Error, Result};

/// Monte-Carlo estimate of an expected generic contrast. The raw samples
/// are retained so the randomization test can reuse them as the null
/// distribution without a second sampling pass.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: Vec<f64>,
}

/// Summary of one genericity diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericityReport {
    pub contrast_value: f64,
    pub egc: f64,
    pub generic_ratio: f64,
    pub mc_stderr: Option<f64>,
    pub p_value: Option<f64>,
    pub n_group_samples: usize,
}

impl GenericityReport {
    /// Assemble a report from a contrast value, an EGC, and optionally the
    /// Monte-Carlo null that produced the EGC.
    pub fn from_parts(contrast_value: f64, egc: f64, mc: Option<&McEstimate>) -> Result<Self> {
        let ratio = generic_ratio(contrast_value, egc)?;
        let p_value = match mc {
            Some(est) if est.samples.len() >= 20 => {
                Some(randomization_test(contrast_value, &est.samples)?)
            }
            _ => None,
        };
        Ok(GenericityReport {
            contrast_value,
            egc,
            generic_ratio: ratio,
            mc_stderr: mc.map(|e| e.stderr),
            p_value,
            n_group_samples: mc.map(|e| e.samples.len()).unwrap_or(0),
        })
    }
}

/// Estimate E_{g ~ Haar} C(m g x) by averaging `evaluate` over `n_samples`
/// draws from `sample_group`. Evaluation failures propagate with the
/// offending group element attached.
pub fn egc_monte_carlo<R, E, S, C>(
    mut sample_group: S,
    evaluate: C,
    n_samples: usize,
    rng: &mut R,
) -> Result<McEstimate>
where
    R: Rng + ?Sized,
    E: std::fmt::Debug,
    S: FnMut(&mut R) -> Result<E>,
    C: Fn(&E) -> Result<f64>,
{
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo EGC needs at least 2 samples, got {n_samples}"
        )));
    }
    let mut samples = Vec::with_capacity(n_samples);
    for index in 0..n_samples {
        let element = sample_group(rng)?;
        let value = evaluate(&element).map_err(|e| Error::Evaluation {
            sample_index: index,
            element: format!("{element:.6?}"),
            source: Box::new(e),
        })?;
        samples.push(value);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples,
    })
}

/// Closed-form EGC of the normalized-trace contrast for Y := M X + E under
/// Haar rotations of the cause:
/// tau_n(S_X) * tau_m(M M^T) + tau_m(S_E).
pub fn egc_trace(
    m: &DMatrix<f64>,
    sigma_x: &CovarianceMatrix,
    sigma_e: Option<&CovarianceMatrix>,
) -> Result<f64> {
    if m.ncols() != sigma_x.dim() {
        return Err(Error::ShapeMismatch(format!(
            "M has {} columns but the cause covariance is {}x{}",
            m.ncols(),
            sigma_x.dim(),
            sigma_x.dim()
        )));
    }
    if let Some(se) = sigma_e {
        if se.dim() != m.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "noise covariance is {}x{} but M has {} rows",
                se.dim(),
                se.dim(),
                m.nrows()
            )));
        }
    }
    let tau_x = normalized_trace(sigma_x);
    let tau_mmt = (m * m.transpose()).trace() / m.nrows() as f64;
    let noise = sigma_e.map(normalized_trace).unwrap_or(0.0);
    Ok(tau_x * tau_mmt + noise)
}

/// Closed form of E_{P ~ uniform} P A P^T. In the orthogonal basis B whose
/// last column is 1/sqrt(n), the average is diag(alpha I_{n-1}, lambda)
/// with alpha = (tr A - tr(J A)/n) / (n - 1) and lambda = tr(J A)/n, J the
/// all-ones matrix. B is completed deterministically by a Householder
/// reflection.
pub fn expected_permutation_conjugation(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n < 2 || a.ncols() != n {
        return Err(Error::InvalidDimension(format!(
            "permutation averaging needs a square matrix with n >= 2, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let nf = n as f64;
    let trace = a.trace();
    // tr(J A) = sum of all entries of A.
    let grand_sum: f64 = a.iter().sum();
    let lambda = grand_sum / nf;
    let alpha = (trace - lambda) / (nf - 1.0);

    let b = householder_with_last_column_ones(n);
    let mut diag = DMatrix::<f64>::identity(n, n) * alpha;
    diag[(n - 1, n - 1)] = lambda;
    Ok(&b * diag * b.transpose())
}

/// Orthogonal matrix whose last column is 1/sqrt(n), built as the
/// Householder reflection swapping e_n and that unit vector.
fn householder_with_last_column_ones(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let u = DVector::from_element(n, 1.0 / nf.sqrt());
    let mut e_last = DVector::zeros(n);
    e_last[n - 1] = 1.0;
    let v = &e_last - &u;
    let denom = v.norm_squared();
    if denom < 1e-30 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / denom)
}

/// Closed-form EGC of the centered factor contrast under uniform column
/// permutations: tr[W~^T W~] tr[V~^T V~] / (n - 1).
pub fn egc_nmf(factors: &NmfFactors) -> Result<f64> {
    let n = factors.components();
    if n < 2 {
        return Err(Error::DegenerateFactorization(format!(
            "permutation EGC divides by n - 1; got n = {n}"
        )));
    }
    let wc = center_columns(factors.w());
    let vc = center_columns(factors.v());
    let tr_w = (wc.transpose() * &wc).trace();
    let tr_v = (vc.transpose() * &vc).trace();
    Ok(tr_w * tr_v / (n as f64 - 1.0))
}

/// Closed-form EGC of the quartic contrast under random orthogonal
/// transformations of the component means:
/// C(X) - 4 sum_k pi_k ( mu_k^T S_k mu_k - ||mu_k||^2 tr(S_k) / p ).
pub fn egc_mixture(mixture: &GaussianMixture) -> Result<f64> {
    let contrast = mixture_quartic_contrast(mixture)?;
    let p = mixture.dim() as f64;
    let mut alignment = 0.0;
    for k in 0..mixture.component_count() {
        let pi = mixture.weights()[k];
        let mu = &mixture.means()[k];
        let sigma = mixture.covariances()[k].entries();
        let quad = (mu.transpose() * sigma * mu)[(0, 0)];
        alignment += pi * (quad - mu.norm_squared() * sigma.trace() / p);
    }
    Ok(contrast - 4.0 * alignment)
}

/// C(mx) / <C>, guarded against near-zero denominators (relative to the
/// contrast scale, since contrasts span many orders of magnitude).
pub fn generic_ratio(contrast_value: f64, egc: f64) -> Result<f64> {
    if egc.abs() <= 1e-12 * contrast_value.abs().max(1.0) {
        return Err(Error::DegenerateContrast(format!(
            "EGC {egc:.3e} is too close to zero for a ratio"
        )));
    }
    Ok(contrast_value / egc)
}

/// Two-sided empirical p-value with add-one correction, centered at the
/// null median:
/// p = (1 + #{ |s_i - med| >= |observed - med| }) / (N + 1).
pub fn randomization_test(observed: f64, null_samples: &[f64]) -> Result<f64> {
    let n = null_samples.len();
    if n < 20 {
        return Err(Error::InsufficientNullSamples { needed: 20, got: n });
    }
    let mut sorted = null_samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite null sample"));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let observed_dev = (observed - median).abs();
    let count = null_samples
        .iter()
        .filter(|s| (**s - median).abs() >= observed_dev)
        .count();
    Ok((1 + count) as f64 / (n + 1) as f64)
}
