//! Synthetic Gaussian-mixture instances, the two clustering algorithms
//! under study (Lloyd k-means with k-means++ seeding, and full-covariance
//! EM), label-matched accuracy, and the plug-in generic ratio of a fitted
//! mixture.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::assignment::assign_max;
use crate::contrasts::{mixture_quartic_contrast, CovarianceMatrix, GaussianMixture};
use crate::error::{Error, Result};
use crate::genericity::{egc_mixture, generic_ratio};
use crate::groups::sample_orthogonal;

/// Ground truth and data for one clustering trial.
#[derive(Debug, Clone)]
pub struct GmmInstance {
    pub truth: GaussianMixture,
    /// Row-major samples, N x p.
    pub samples: DMatrix<f64>,
    pub labels: Vec<usize>,
}

/// Means from an isotropic Gaussian with the given standard deviation;
/// covariances with Haar-random axes and log-uniform eigenvalues; equal
/// weights; labeled samples.
pub fn generate_gmm_instance<R: Rng + ?Sized>(
    k: usize,
    p: usize,
    mean_std: f64,
    eigenvalue_range: (f64, f64),
    n_samples: usize,
    rng: &mut R,
) -> Result<GmmInstance> {
    if k == 0 || p == 0 || n_samples == 0 {
        return Err(Error::InvalidDimension(
            "cluster instance needs k, p, n >= 1".into(),
        ));
    }
    let (lo, hi) = eigenvalue_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    let mut factors = Vec::with_capacity(k);
    for _ in 0..k {
        means.push(DVector::from_fn(p, |_, _| {
            mean_std * rng.sample::<f64, _>(StandardNormal)
        }));
        let q = sample_orthogonal(p, rng)?;
        let eigs = DVector::from_fn(p, |_, _| {
            if hi > lo {
                (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
            } else {
                lo
            }
        });
        let sigma = q.entries() * DMatrix::from_diagonal(&eigs) * q.entries().transpose();
        covariances.push(CovarianceMatrix::new(sigma)?);
        // Factor for sampling: Q diag(sqrt(eigs)).
        factors.push(q.entries() * DMatrix::from_diagonal(&eigs.map(f64::sqrt)));
    }
    let weights = vec![1.0 / k as f64; k];
    let truth = GaussianMixture::new(weights, means, covariances)?;

    let mut samples = DMatrix::zeros(n_samples, p);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let z = rng.gen_range(0..k);
        labels.push(z);
        let g = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &truth.means()[z] + &factors[z] * g;
        samples.set_row(i, &x.transpose());
    }
    Ok(GmmInstance {
        truth,
        samples,
        labels,
    })
}

/// Result of a k-means run.
#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub assignments: Vec<usize>,
    pub mixture: GaussianMixture,
    /// Within-cluster sum of squares after each update.
    pub objective_history: Vec<f64>,
    pub converged: bool,
}

fn squared_distance(samples: &DMatrix<f64>, row: usize, center: &DVector<f64>) -> f64 {
    (0..samples.ncols())
        .map(|j| {
            let d = samples[(row, j)] - center[j];
            d * d
        })
        .sum()
}

/// Lloyd iterations from a k-means++ seeding; empty clusters are reseeded
/// from the point farthest from its current center. The fitted mixture
/// carries per-cluster empirical means, covariances, and weights.
pub fn kmeans<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Result<KmeansFit> {
    let n = samples.nrows();
    let p = samples.ncols();
    if k == 0 {
        return Err(Error::InvalidDimension("k must be at least 1".into()));
    }
    if n < k * (p + 1) {
        return Err(Error::InvalidInput(format!(
            "need at least k (p + 1) = {} samples for nondegenerate covariances, got {n}",
            k * (p + 1)
        )));
    }

    // k-means++ seeding.
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    centers.push(samples.row(rng.gen_range(0..n)).transpose());
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(samples, i, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        let center = samples.row(next).transpose();
        for (i, d) in dist2.iter_mut().enumerate() {
            *d = d.min(squared_distance(samples, i, &center));
        }
        centers.push(center);
    }

    let mut assignments = vec![0usize; n];
    let mut objective_history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        // Assignment step.
        let mut changed = false;
        let mut objective = 0.0;
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = squared_distance(samples, i, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
            objective += best_d;
        }
        objective_history.push(objective);

        // Update step with farthest-point reseeding for empty clusters.
        let mut counts = vec![0usize; k];
        let mut sums = vec![DVector::<f64>::zeros(p); k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            sums[assignments[i]] += samples.row(i).transpose();
        }
        for c in 0..k {
            if counts[c] == 0 {
                let farthest = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(samples, a, &centers[assignments[a]]);
                        let db = squared_distance(samples, b, &centers[assignments[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centers[c] = samples.row(farthest).transpose();
                changed = true;
            } else {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }

    let mixture = moments_by_cluster(samples, &assignments, k, &centers)?;
    Ok(KmeansFit {
        assignments,
        mixture,
        objective_history,
        converged,
    })
}

fn moments_by_cluster(
    samples: &DMatrix<f64>,
    assignments: &[usize],
    k: usize,
    fallback_centers: &[DVector<f64>],
) -> Result<GaussianMixture> {
    let n = samples.nrows();
    let p = samples.ncols();
    let mut counts = vec![0usize; k];
    let mut means = vec![DVector::<f64>::zeros(p); k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        means[c] += samples.row(i).transpose();
    }
    for c in 0..k {
        if counts[c] > 0 {
            means[c] /= counts[c] as f64;
        } else {
            means[c] = fallback_centers[c].clone();
        }
    }
    let mut covs = vec![DMatrix::<f64>::zeros(p, p); k];
    for (i, &c) in assignments.iter().enumerate() {
        let dev = samples.row(i).transpose() - &means[c];
        covs[c] += &dev * dev.transpose();
    }
    let mut covariances = Vec::with_capacity(k);
    for c in 0..k {
        let denom = counts[c].max(1) as f64;
        let sym = (&covs[c] + covs[c].transpose()) * (0.5 / denom);
        covariances.push(CovarianceMatrix::new(sym)?);
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    GaussianMixture::new(weights, means, covariances)
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct EmFit {
    /// N x K responsibilities from the final E-step.
    pub responsibilities: DMatrix<f64>,
    pub mixture: GaussianMixture,
    pub log_likelihood_history: Vec<f64>,
    pub converged: bool,
    /// Set when a component covariance collapsed beyond what the ridge
    /// could repair; the trial is reported, not aborted.
    pub degenerate: bool,
}

struct ComponentDensity {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

fn component_density(sigma: &DMatrix<f64>, p: usize) -> Option<ComponentDensity> {
    // Ridge 1e-6 tr(S)/p stabilizes the factorization without changing the
    // reported covariance.
    let base_ridge = 1e-6 * sigma.trace().max(1e-300) / p as f64;
    let mut ridge = base_ridge;
    for _ in 0..4 {
        let regularized = sigma + DMatrix::identity(p, p) * ridge;
        if let Some(chol) = regularized.clone().cholesky() {
            let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let log_norm = -0.5 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
            return Some(ComponentDensity { chol, log_norm });
        }
        ridge *= 100.0;
    }
    None
}

impl ComponentDensity {
    fn log_pdf(&self, dev: &DVector<f64>) -> f64 {
        let solved = self.chol.solve(dev);
        self.log_norm - 0.5 * dev.dot(&solved)
    }
}

/// Full-covariance EM initialized from k-means. The log-likelihood is
/// non-decreasing; covariance collapse sets the `degenerate` flag instead
/// of failing the run.
pub fn gmm_em<R: Rng + ?Sized>(
    samples: &DMatrix<f64>,
    k: usize,
    max_iters: usize,
    tol: f64,
    rng: &mut R,
) -> Result<EmFit> {
    let n = samples.nrows();
    let p = samples.ncols();
    let init = kmeans(samples, k, 100, rng)?;
    let mut weights: Vec<f64> = init.mixture.weights().to_vec();
    let mut means: Vec<DVector<f64>> = init.mixture.means().to_vec();
    let mut covs: Vec<DMatrix<f64>> = init
        .mixture
        .covariances()
        .iter()
        .map(|c| c.entries().clone())
        .collect();

    let mut responsibilities = DMatrix::<f64>::zeros(n, k);
    let mut ll_history = Vec::new();
    let mut converged = false;
    let mut degenerate = false;

    for _ in 0..max_iters {
        // E-step.
        let mut densities = Vec::with_capacity(k);
        for sigma in &covs {
            match component_density(sigma, p) {
                Some(d) => densities.push(d),
                None => {
                    degenerate = true;
                    break;
                }
            }
        }
        if degenerate {
            break;
        }
        let mut ll = 0.0;
        for i in 0..n {
            let xi = samples.row(i).transpose();
            let mut logs = Vec::with_capacity(k);
            for c in 0..k {
                let dev = &xi - &means[c];
                let lw = if weights[c] > 0.0 {
                    weights[c].ln()
                } else {
                    f64::NEG_INFINITY
                };
                logs.push(lw + densities[c].log_pdf(&dev));
            }
            let max_log = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = logs.iter().map(|l| (l - max_log).exp()).sum();
            let log_total = max_log + sum_exp.ln();
            ll += log_total;
            for c in 0..k {
                responsibilities[(i, c)] = (logs[c] - log_total).exp();
            }
        }
        let prev = ll_history.last().copied();
        ll_history.push(ll);
        if let Some(prev) = prev {
            if (ll - prev).abs() <= tol * (1.0 + ll.abs()) {
                converged = true;
                break;
            }
        }

        // M-step.
        for c in 0..k {
            let resp_sum: f64 = (0..n).map(|i| responsibilities[(i, c)]).sum();
            if resp_sum <= 1e-300 {
                degenerate = true;
                break;
            }
            weights[c] = resp_sum / n as f64;
            let mut mean = DVector::<f64>::zeros(p);
            for i in 0..n {
                mean += samples.row(i).transpose() * responsibilities[(i, c)];
            }
            mean /= resp_sum;
            let mut cov = DMatrix::<f64>::zeros(p, p);
            for i in 0..n {
                let dev = samples.row(i).transpose() - &mean;
                cov += &dev * dev.transpose() * responsibilities[(i, c)];
            }
            cov /= resp_sum;
            means[c] = mean;
            covs[c] = (&cov + cov.transpose()) * 0.5;
        }
        if degenerate {
            break;
        }
        // Exact weight renormalization against accumulated roundoff.
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
    }

    let covariances: Result<Vec<_>> = covs.into_iter().map(CovarianceMatrix::new).collect();
    let mixture = GaussianMixture::new(weights, means, covariances?)?;
    Ok(EmFit {
        responsibilities,
        mixture,
        log_likelihood_history: ll_history,
        converged,
        degenerate,
    })
}

/// Hard labels from EM responsibilities.
pub fn argmax_labels(responsibilities: &DMatrix<f64>) -> Vec<usize> {
    (0..responsibilities.nrows())
        .map(|i| {
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for c in 0..responsibilities.ncols() {
                if responsibilities[(i, c)] > best_v {
                    best_v = responsibilities[(i, c)];
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Classification accuracy under the optimal matching of estimated labels
/// to true labels (Hungarian on the confusion matrix).
pub fn cluster_performance(true_labels: &[usize], est_labels: &[usize]) -> Result<f64> {
    if true_labels.len() != est_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "label lengths differ: {} vs {}",
            true_labels.len(),
            est_labels.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::EmptyData);
    }
    let k_true = true_labels.iter().max().unwrap() + 1;
    let k_est = est_labels.iter().max().unwrap() + 1;
    let mut confusion = DMatrix::<f64>::zeros(k_true, k_est);
    for (&t, &e) in true_labels.iter().zip(est_labels) {
        confusion[(t, e)] += 1.0;
    }
    let pairs = assign_max(&confusion);
    let matched: f64 = pairs.iter().map(|&(t, e)| confusion[(t, e)]).sum();
    Ok(matched / true_labels.len() as f64)
}

/// Plug-in generic ratio of a fitted mixture after re-centering by the
/// mixture mean.
pub fn cluster_generic_ratio(fit: &GaussianMixture) -> Result<f64> {
    let centered = fit.centered();
    generic_ratio(
        mixture_quartic_contrast(&centered)?,
        egc_mixture(&centered)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::RngState;

    #[test]
    fn instance_with_collapsed_eigenvalues_is_isotropic() {
        let mut rng = RngState::new(70).rng();
        let inst = generate_gmm_instance(3, 4, 2.0, (1.0, 1.0), 200, &mut rng).unwrap();
        for cov in inst.truth.covariances() {
            assert!((cov.entries() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
        }
    }

    #[test]
    fn instance_class_frequencies_are_multinomial() {
        let mut rng = RngState::new(71).rng();
        let k = 5;
        let n = 10_000;
        let inst = generate_gmm_instance(k, 3, 2.0, (0.1, 1.0), n, &mut rng).unwrap();
        let kf = k as f64;
        let bound = 3.0 * ((1.0 / kf) * (1.0 - 1.0 / kf) / n as f64).sqrt();
        for c in 0..k {
            let freq = inst.labels.iter().filter(|&&z| z == c).count() as f64 / n as f64;
            assert!((freq - 1.0 / kf).abs() < bound, "class {c} frequency {freq}");
        }
    }

    #[test]
    fn instance_per_cluster_means_satisfy_clt_bound() {
        let mut rng = RngState::new(72).rng();
        let inst = generate_gmm_instance(3, 4, 2.0, (0.1, 1.0), 6000, &mut rng).unwrap();
        for c in 0..3 {
            let rows: Vec<usize> = (0..inst.samples.nrows())
                .filter(|&i| inst.labels[i] == c)
                .collect();
            let n_c = rows.len() as f64;
            let mut mean = DVector::<f64>::zeros(4);
            for &i in &rows {
                mean += inst.samples.row(i).transpose();
            }
            mean /= n_c;
            // Coordinate std is at most 1 (eigenvalues <= 1).
            let bound = 4.0 / n_c.sqrt();
            let diff = (&mean - &inst.truth.means()[c]).amax();
            assert!(diff < bound, "cluster {c} mean error {diff} vs {bound}");
        }
    }

    #[test]
    fn kmeans_single_cluster_recovers_the_mean() {
        let mut rng = RngState::new(73).rng();
        let inst = generate_gmm_instance(1, 3, 2.0, (0.1, 1.0), 500, &mut rng).unwrap();
        let fit = kmeans(&inst.samples, 1, 50, &mut rng).unwrap();
        let mut mean = DVector::<f64>::zeros(3);
        for i in 0..inst.samples.nrows() {
            mean += inst.samples.row(i).transpose();
        }
        mean /= inst.samples.nrows() as f64;
        assert!((&fit.mixture.means()[0] - &mean).amax() < 1e-12);
    }

    #[test]
    fn kmeans_objective_is_monotone() {
        let mut rng = RngState::new(74).rng();
        let inst = generate_gmm_instance(4, 5, 3.0, (0.1, 1.0), 800, &mut rng).unwrap();
        let fit = kmeans(&inst.samples, 4, 100, &mut rng).unwrap();
        for pair in fit.objective_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0));
        }
    }

    #[test]
    fn kmeans_recovers_well_separated_clusters() {
        let mut rng = RngState::new(75).rng();
        // Pairwise mean distance ~ mean_std * sqrt(2p) = 40 with unit-scale
        // covariances: strongly separated.
        let inst = generate_gmm_instance(4, 8, 10.0, (0.05, 0.1), 600, &mut rng).unwrap();
        let fit = kmeans(&inst.samples, 4, 200, &mut rng).unwrap();
        let acc = cluster_performance(&inst.labels, &fit.assignments).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn kmeans_rejects_insufficient_samples() {
        let samples = DMatrix::<f64>::zeros(5, 4);
        let mut rng = RngState::new(76).rng();
        assert!(matches!(
            kmeans(&samples, 2, 10, &mut rng),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn em_single_component_matches_empirical_moments() {
        let mut rng = RngState::new(77).rng();
        let inst = generate_gmm_instance(1, 3, 1.0, (0.2, 0.8), 400, &mut rng).unwrap();
        let fit = gmm_em(&inst.samples, 1, 50, 1e-7, &mut rng).unwrap();
        let n = inst.samples.nrows() as f64;
        let mut mean = DVector::<f64>::zeros(3);
        for i in 0..inst.samples.nrows() {
            mean += inst.samples.row(i).transpose();
        }
        mean /= n;
        let mut cov = DMatrix::<f64>::zeros(3, 3);
        for i in 0..inst.samples.nrows() {
            let dev = inst.samples.row(i).transpose() - &mean;
            cov += &dev * dev.transpose();
        }
        cov /= n;
        assert!((&fit.mixture.means()[0] - &mean).amax() < 1e-8);
        assert!((fit.mixture.covariances()[0].entries() - &cov).amax() < 1e-8);
    }

    #[test]
    fn em_log_likelihood_is_monotone() {
        let mut rng = RngState::new(78).rng();
        let inst = generate_gmm_instance(3, 4, 2.0, (0.1, 1.0), 600, &mut rng).unwrap();
        let fit = gmm_em(&inst.samples, 3, 80, 1e-9, &mut rng).unwrap();
        for pair in fit.log_likelihood_history.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-8 * pair[0].abs().max(1.0),
                "log-likelihood decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn em_recovers_well_separated_clusters() {
        let mut rng = RngState::new(79).rng();
        let inst = generate_gmm_instance(3, 6, 10.0, (0.05, 0.1), 500, &mut rng).unwrap();
        let fit = gmm_em(&inst.samples, 3, 100, 1e-7, &mut rng).unwrap();
        let labels = argmax_labels(&fit.responsibilities);
        assert_eq!(cluster_performance(&inst.labels, &labels).unwrap(), 1.0);
    }

    #[test]
    fn performance_examples() {
        let truth = vec![0, 0, 1, 1, 2, 2];
        // Relabeled estimate scores 1.
        let relabeled = vec![2, 2, 0, 0, 1, 1];
        assert_eq!(cluster_performance(&truth, &relabeled).unwrap(), 1.0);
        // Constant estimate scores the majority fraction.
        let constant = vec![0; 6];
        assert!((cluster_performance(&truth, &constant).unwrap() - 2.0 / 6.0).abs() < 1e-12);
        assert!(cluster_performance(&truth, &[0, 1]).is_err());
    }

    #[test]
    fn random_labels_score_near_chance() {
        let mut rng = RngState::new(80).rng();
        let n = 1000;
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let est: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let acc = cluster_performance(&truth, &est).unwrap();
        assert!(
            acc > 0.19 && acc < 0.27,
            "random-label accuracy {acc} not near chance + matching inflation"
        );
    }

    #[test]
    fn generic_ratio_isotropic_is_exactly_one() {
        let g = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![
                DVector::from_row_slice(&[2.0, 1.0, 0.0]),
                DVector::from_row_slice(&[-1.0, 0.5, 1.5]),
            ],
            vec![
                CovarianceMatrix::new(DMatrix::identity(3, 3) * 0.7).unwrap(),
                CovarianceMatrix::new(DMatrix::identity(3, 3) * 1.3).unwrap(),
            ],
        )
        .unwrap();
        assert!((cluster_generic_ratio(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generic_ratio_worked_example() {
        let sigma = CovarianceMatrix::diagonal(&[2.0, 1.0]).unwrap();
        let g = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![
                DVector::from_row_slice(&[1.0, 0.0]),
                DVector::from_row_slice(&[-1.0, 0.0]),
            ],
            vec![sigma.clone(), sigma],
        )
        .unwrap();
        assert!((cluster_generic_ratio(&g).unwrap() - 1.0625).abs() < 1e-12);
    }

    #[test]
    fn split_elongated_gaussian_has_ratio_below_one() {
        // One zero-mean Gaussian with covariance diag(4, 0.25) split across
        // its short axis: each half has mean (0, +-E|v|) and the half
        // variance along axis 2. The centroid difference then points along
        // the smallest-variance direction, so mu^T S mu < |mu|^2 tr(S)/p
        // and the ratio falls below 1.
        let e_abs = 0.5 * (2.0 / std::f64::consts::PI).sqrt();
        let half_var = 0.25 * (1.0 - 2.0 / std::f64::consts::PI);
        let sigma = CovarianceMatrix::diagonal(&[4.0, half_var]).unwrap();
        let g = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![
                DVector::from_row_slice(&[0.0, e_abs]),
                DVector::from_row_slice(&[0.0, -e_abs]),
            ],
            vec![sigma.clone(), sigma],
        )
        .unwrap();
        // Sign check of the alignment term, then the ratio itself.
        let mu_sq = e_abs * e_abs;
        let quad = mu_sq * half_var;
        let iso = mu_sq * (4.0 + half_var) / 2.0;
        assert!(quad < iso);
        assert!(cluster_generic_ratio(&g).unwrap() < 1.0);
    }

    #[test]
    fn generic_ratio_invariant_under_global_rotation() {
        let mut rng = RngState::new(81).rng();
        let inst = generate_gmm_instance(3, 4, 2.0, (0.1, 1.0), 200, &mut rng).unwrap();
        let base = cluster_generic_ratio(&inst.truth).unwrap();
        let q = sample_orthogonal(4, &mut rng).unwrap();
        let rotated = GaussianMixture::new(
            inst.truth.weights().to_vec(),
            inst.truth.means().iter().map(|m| q.entries() * m).collect(),
            inst.truth
                .covariances()
                .iter()
                .map(|c| {
                    CovarianceMatrix::new(q.entries() * c.entries() * q.entries().transpose())
                        .unwrap()
                })
                .collect(),
        )
        .unwrap();
        assert!((cluster_generic_ratio(&rotated).unwrap() - base).abs() < 1e-8);
    }
}
