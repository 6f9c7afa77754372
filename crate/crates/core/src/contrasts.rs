//! Cause-mechanism contrast functions, each a pure evaluation on the
//! attribute of the relevant generative model: normalized traces on
//! covariances, the centered Gram-product contrast on factor pairs, the
//! quartic tensor contrast on Gaussian mixtures, and total spectral power.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric positive semidefinite matrix attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry (1e-10, scale-adjusted) and eigenvalues >= -1e-10.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "covariance must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::InvalidInput(format!(
                "covariance is not symmetric: max |a_ij - a_ji| = {asym:.3e}"
            )));
        }
        // Symmetrize before the eigenvalue check so roundoff in callers
        // cannot leak through.
        let sym = (&entries + entries.transpose()) * 0.5;
        let min_eig = sym
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * scale {
            return Err(Error::InvalidInput(format!(
                "covariance has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(CovarianceMatrix { entries: sym })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(values)))
    }

    pub fn identity(p: usize) -> Self {
        CovarianceMatrix {
            entries: DMatrix::identity(p, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

/// Nonnegative factor pair (W, V) with X ~ W V^T.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactors {
    w: DMatrix<f64>,
    v: DMatrix<f64>,
}

impl NmfFactors {
    pub fn new(w: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if w.ncols() != v.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "factor column counts differ: W has {}, V has {}",
                w.ncols(),
                v.ncols()
            )));
        }
        if w.ncols() == 0 || w.nrows() == 0 || v.nrows() == 0 {
            return Err(Error::InvalidDimension(
                "factors must have at least one row and one component".into(),
            ));
        }
        if w.iter().any(|&x| x < 0.0) || v.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidInput(
                "factor matrices must be entrywise nonnegative".into(),
            ));
        }
        Ok(NmfFactors { w, v })
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Number of components n (shared column count).
    pub fn components(&self) -> usize {
        self.w.ncols()
    }
}

/// Subtract the mean column from each column.
pub(crate) fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols() as f64;
    let mean = m.column_sum() / n;
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        col -= &mean;
    }
    out
}

/// Gaussian mixture attribute: weights, means, covariances.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<CovarianceMatrix>,
}

impl GaussianMixture {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<CovarianceMatrix>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "component counts differ: {} weights, {} means, {} covariances",
                k,
                means.len(),
                covariances.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidInput("mixture weights must be >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        let p = means[0].len();
        if means.iter().any(|m| m.len() != p)
            || covariances.iter().any(|c| c.dim() != p)
        {
            return Err(Error::ShapeMismatch(
                "all means and covariances must share one dimension".into(),
            ));
        }
        Ok(GaussianMixture {
            weights,
            means,
            covariances,
        })
    }

    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[CovarianceMatrix] {
        &self.covariances
    }

    /// Mixture mean sum_k pi_k mu_k.
    pub fn mixture_mean(&self) -> DVector<f64> {
        let mut mean = DVector::zeros(self.dim());
        for (w, mu) in self.weights.iter().zip(&self.means) {
            mean += mu * *w;
        }
        mean
    }

    /// Copy with the mixture mean subtracted from every component mean.
    pub fn centered(&self) -> Self {
        let mean = self.mixture_mean();
        GaussianMixture {
            weights: self.weights.clone(),
            means: self.means.iter().map(|m| m - &mean).collect(),
            covariances: self.covariances.clone(),
        }
    }

    pub(crate) fn check_centered(&self) -> Result<()> {
        let norm = self.mixture_mean().norm();
        if norm > 1e-8 {
            return Err(Error::NotCentered { norm, tol: 1e-8 });
        }
        Ok(())
    }
}

/// Sampled even power spectrum: only the positive-frequency half is stored,
/// on the grid nu_b = b / (2B) with delta_nu = 1 / (2B).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPsd {
    values: Vec<f64>,
}

impl SampledPsd {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("spectrum has no bins".into()));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidSpectrum(
                "spectrum values must be finite and nonnegative".into(),
            ));
        }
        Ok(SampledPsd { values })
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bin width 1 / (2B).
    pub fn delta_nu(&self) -> f64 {
        1.0 / (2.0 * self.values.len() as f64)
    }

    /// Extent of the stored positive-frequency half (always 1/2 with the
    /// unit-interval frequency convention).
    pub fn half_range(&self) -> f64 {
        0.5
    }
}

/// Normalized trace tr(S) / p.
pub fn normalized_trace(sigma: &CovarianceMatrix) -> f64 {
    sigma.trace() / sigma.dim() as f64
}

/// tr[W~^T W~ V~^T V~] on column-centered factors. The centering makes the
/// permutation-group expectation exact (see the companion closed form in
/// the genericity module).
pub fn nmf_centered_contrast(factors: &NmfFactors) -> Result<f64> {
    let n = factors.components();
    if n < 2 {
        return Err(Error::DegenerateFactorization(format!(
            "centered contrast needs at least 2 components, got {n}"
        )));
    }
    let wc = center_columns(factors.w());
    let vc = center_columns(factors.v());
    let gram_w = wc.transpose() * &wc;
    let gram_v = vc.transpose() * &vc;
    Ok((gram_w * gram_v).trace())
}

/// Closed-form E tr[X X^T X X^T] = E ||X||^4 for a centered Gaussian
/// mixture:
/// sum_k pi_k ( ||mu_k||^4 + (tr S_k)^2 + 2 tr(S_k^2)
///              + 4 mu_k^T S_k mu_k + 2 ||mu_k||^2 tr S_k ).
pub fn mixture_quartic_contrast(mixture: &GaussianMixture) -> Result<f64> {
    mixture.check_centered()?;
    let mut total = 0.0;
    for k in 0..mixture.component_count() {
        let pi = mixture.weights()[k];
        let mu = &mixture.means()[k];
        let sigma = mixture.covariances()[k].entries();
        let mu_sq = mu.norm_squared();
        let tr = sigma.trace();
        let tr_sq = (sigma * sigma).trace();
        let quad = (mu.transpose() * sigma * mu)[(0, 0)];
        total += pi * (mu_sq * mu_sq + tr * tr + 2.0 * tr_sq + 4.0 * quad + 2.0 * mu_sq * tr);
    }
    Ok(total)
}

/// Empirical mean of ||x_i||^4 over pre-centered samples (rows of
/// `samples`).
pub fn empirical_quartic_contrast(samples: &DMatrix<f64>) -> Result<f64> {
    if samples.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    let mut sum = 0.0;
    for row in samples.row_iter() {
        let sq = row.iter().map(|x| x * x).sum::<f64>();
        sum += sq * sq;
    }
    Ok(sum / samples.nrows() as f64)
}

/// Total power 2 * delta_nu * sum_b values[b]; the factor 2 accounts for the
/// even negative-frequency half.
pub fn total_power(psd: &SampledPsd) -> f64 {
    2.0 * psd.delta_nu() * psd.values().iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{sample_special_orthogonal, RngState};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn normalized_trace_basics() {
        assert_eq!(normalized_trace(&CovarianceMatrix::identity(3)), 1.0);
        assert_eq!(
            normalized_trace(&CovarianceMatrix::diagonal(&[1.0, 3.0]).unwrap()),
            2.0
        );
        assert_eq!(
            normalized_trace(&CovarianceMatrix::diagonal(&[2.0, 0.0, 0.0, 0.0]).unwrap()),
            0.5
        );
    }

    #[test]
    fn normalized_trace_is_rotation_invariant() {
        let mut rng = RngState::new(300).rng();
        for _ in 0..20 {
            let p = 4;
            let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let sigma = CovarianceMatrix::new(&a * a.transpose()).unwrap();
            let q = sample_special_orthogonal(p, &mut rng).unwrap();
            let rotated =
                CovarianceMatrix::new(q.entries() * sigma.entries() * q.entries().transpose())
                    .unwrap();
            assert!((normalized_trace(&sigma) - normalized_trace(&rotated)).abs() < 1e-10);
        }
    }

    #[test]
    fn covariance_rejects_asymmetry_and_negative_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(CovarianceMatrix::new(m).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(CovarianceMatrix::new(neg).is_err());
    }

    #[test]
    fn centered_contrast_annihilates_identical_columns() {
        let w = DMatrix::from_fn(4, 3, |i, _| (i + 1) as f64);
        let v = DMatrix::from_fn(5, 3, |i, _| 1.0 + i as f64 * 0.5);
        let f = NmfFactors::new(w, v).unwrap();
        assert_eq!(nmf_centered_contrast(&f).unwrap(), 0.0);
    }

    #[test]
    fn centered_contrast_two_column_closed_form() {
        // Any 2-column pair centers to [u, -u], [s, -s], giving
        // 4 |u|^2 |s|^2.
        let w = DMatrix::from_columns(&[
            DVector::from_row_slice(&[1.0, 2.0, 0.5]),
            DVector::from_row_slice(&[0.2, 0.1, 3.0]),
        ]);
        let v = DMatrix::from_columns(&[
            DVector::from_row_slice(&[0.7, 0.0, 1.5, 2.0]),
            DVector::from_row_slice(&[1.0, 0.4, 0.0, 0.3]),
        ]);
        let u = (w.column(0) - w.column(1)) / 2.0;
        let s = (v.column(0) - v.column(1)) / 2.0;
        let expected = 4.0 * u.norm_squared() * s.norm_squared();
        let f = NmfFactors::new(w, v).unwrap();
        let got = nmf_centered_contrast(&f).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn centered_contrast_matches_cyclic_trace_identity() {
        // tr[W~^T W~ V~^T V~] = tr[(W~ V~^T)(W~ V~^T)^T].
        let mut rng = RngState::new(301).rng();
        let w = DMatrix::from_fn(4, 3, |_, _| rng.gen::<f64>());
        let v = DMatrix::from_fn(5, 3, |_, _| rng.gen::<f64>());
        let wc = center_columns(&w);
        let vc = center_columns(&v);
        let x = &wc * vc.transpose();
        let oracle = (&x * x.transpose()).trace();
        let f = NmfFactors::new(w, v).unwrap();
        let got = nmf_centered_contrast(&f).unwrap();
        assert!((got - oracle).abs() < 1e-10 * oracle.max(1.0));
    }

    #[test]
    fn centered_contrast_invariant_under_simultaneous_column_permutation() {
        let mut rng = RngState::new(302).rng();
        let w = DMatrix::from_fn(6, 4, |_, _| rng.gen::<f64>());
        let v = DMatrix::from_fn(7, 4, |_, _| rng.gen::<f64>());
        let f = NmfFactors::new(w.clone(), v.clone()).unwrap();
        let base = nmf_centered_contrast(&f).unwrap();
        let perm = crate::groups::sample_permutation(4, &mut rng).unwrap();
        let fp = NmfFactors::new(perm.permute_columns(&w), perm.permute_columns(&v)).unwrap();
        assert_eq!(nmf_centered_contrast(&fp).unwrap(), base);
    }

    fn worked_two_component_mixture() -> GaussianMixture {
        let sigma = CovarianceMatrix::diagonal(&[2.0, 1.0]).unwrap();
        GaussianMixture::new(
            vec![0.5, 0.5],
            vec![
                DVector::from_row_slice(&[1.0, 0.0]),
                DVector::from_row_slice(&[-1.0, 0.0]),
            ],
            vec![sigma.clone(), sigma],
        )
        .unwrap()
    }

    #[test]
    fn quartic_contrast_standard_normal() {
        for p in [1usize, 2, 5, 8] {
            let g = GaussianMixture::new(
                vec![1.0],
                vec![DVector::zeros(p)],
                vec![CovarianceMatrix::identity(p)],
            )
            .unwrap();
            let expected = (p * p + 2 * p) as f64;
            assert!((mixture_quartic_contrast(&g).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_contrast_worked_example_is_34() {
        let g = worked_two_component_mixture();
        assert!((mixture_quartic_contrast(&g).unwrap() - 34.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_contrast_requires_centering() {
        let g = GaussianMixture::new(
            vec![1.0],
            vec![DVector::from_row_slice(&[1.0, 1.0])],
            vec![CovarianceMatrix::identity(2)],
        )
        .unwrap();
        assert!(matches!(
            mixture_quartic_contrast(&g),
            Err(Error::NotCentered { .. })
        ));
        assert!(mixture_quartic_contrast(&g.centered()).is_ok());
    }

    #[test]
    fn quartic_contrast_matches_monte_carlo() {
        // E ||X||^4 for the worked mixture, 10^6 draws, within 1%.
        let g = worked_two_component_mixture();
        let closed = mixture_quartic_contrast(&g).unwrap();
        let mut rng = RngState::new(303).rng();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let k = if rng.gen::<f64>() < 0.5 { 0usize } else { 1 };
            let mu = &g.means()[k];
            let x0 = mu[0] + 2f64.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let x1 = mu[1] + rng.sample::<f64, _>(StandardNormal);
            let sq = x0 * x0 + x1 * x1;
            sum += sq * sq;
        }
        let empirical = sum / n as f64;
        assert!(
            (empirical - closed).abs() < 0.01 * closed,
            "empirical {empirical} vs closed {closed}"
        );
    }

    #[test]
    fn quartic_contrast_invariant_under_global_rotation() {
        let g = worked_two_component_mixture();
        let base = mixture_quartic_contrast(&g).unwrap();
        let q = sample_special_orthogonal(2, &mut RngState::new(304).rng()).unwrap();
        let rotated = GaussianMixture::new(
            g.weights().to_vec(),
            g.means().iter().map(|m| q.entries() * m).collect(),
            g.covariances()
                .iter()
                .map(|c| {
                    CovarianceMatrix::new(q.entries() * c.entries() * q.entries().transpose())
                        .unwrap()
                })
                .collect(),
        )
        .unwrap();
        assert!((mixture_quartic_contrast(&rotated).unwrap() - base).abs() < 1e-8);
    }

    #[test]
    fn empirical_quartic_basics() {
        let zeros = DMatrix::zeros(5, 3);
        assert_eq!(empirical_quartic_contrast(&zeros).unwrap(), 0.0);
        let single = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_eq!(empirical_quartic_contrast(&single).unwrap(), 625.0);
        let empty = DMatrix::zeros(0, 2);
        assert!(matches!(
            empirical_quartic_contrast(&empty),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn total_power_basics() {
        let flat = SampledPsd::new(vec![1.0; 8]).unwrap();
        assert!((total_power(&flat) - 1.0).abs() < 1e-15);
        let spike = SampledPsd::new(vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((total_power(&spike) - 1.0).abs() < 1e-15);
        let doubled = SampledPsd::new(vec![8.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(total_power(&doubled), 2.0 * total_power(&spike));
    }

    #[test]
    fn total_power_invariant_under_shift() {
        let psd = SampledPsd::new(vec![0.3, 1.7, 0.0, 2.5, 0.9, 0.1, 0.0, 4.0]).unwrap();
        let base = total_power(&psd);
        let mut rng = RngState::new(305).rng();
        for _ in 0..50 {
            let shift = crate::groups::sample_circular_shift(0.5, &mut rng).unwrap();
            let shifted = crate::groups::apply_shift_to_psd(&psd, &shift).unwrap();
            assert!((total_power(&shifted) - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn psd_rejects_negative_values() {
        assert!(matches!(
            SampledPsd::new(vec![1.0, -0.1]),
            Err(Error::InvalidSpectrum(_))
        ));
    }
}
