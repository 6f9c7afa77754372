//! Latent-variable model diagnostics end to end: synthetic generators, the
//! solvers under study, performance metrics, and per-trial generic-ratio
//! records for the factorization and clustering benchmarks.

mod assignment;
mod cluster;
mod nmf;

pub use assignment::assign_max;
pub use cluster::{
    argmax_labels, cluster_generic_ratio, cluster_performance, generate_gmm_instance, gmm_em,
    kmeans, EmFit, GmmInstance, KmeansFit,
};
pub use nmf::{
    generate_nmf_instance, nmf_als, nmf_generic_ratio, nmf_multiplicative, nmf_performance,
    NmfFit, NmfInstance,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrasts::{mixture_quartic_contrast, nmf_centered_contrast, GaussianMixture};
use crate::error::{Error, Result};
use crate::genericity::{egc_monte_carlo, randomization_test};
use crate::groups::{sample_orthogonal, sample_permutation, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmfAlgorithm {
    Mult,
    Als,
}

impl std::fmt::Display for NmfAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NmfAlgorithm::Mult => write!(f, "mult"),
            NmfAlgorithm::Als => write!(f, "als"),
        }
    }
}

impl std::str::FromStr for NmfAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mult" => Ok(NmfAlgorithm::Mult),
            "als" => Ok(NmfAlgorithm::Als),
            other => Err(Error::InvalidConfig(format!(
                "unknown factorization algorithm '{other}' (expected mult or als)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterAlgorithm {
    Kmeans,
    GmEm,
}

impl std::fmt::Display for ClusterAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterAlgorithm::Kmeans => write!(f, "kmeans"),
            ClusterAlgorithm::GmEm => write!(f, "gm-em"),
        }
    }
}

impl std::str::FromStr for ClusterAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(ClusterAlgorithm::Kmeans),
            "gm-em" | "gm_em" | "gmem" => Ok(ClusterAlgorithm::GmEm),
            other => Err(Error::InvalidConfig(format!(
                "unknown clustering algorithm '{other}' (expected kmeans or gm-em)"
            ))),
        }
    }
}

/// Settings for the factorization benchmark. Defaults follow the 20 x 50,
/// 5-component, 10%-sparse protocol with small uniform noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmfExperimentConfig {
    pub d: usize,
    pub s: usize,
    pub n_true: usize,
    pub p_bernoulli: f64,
    pub noise_amplitude: f64,
    pub n_est: usize,
    pub algorithm: NmfAlgorithm,
    pub n_trials: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// When set, also run a Monte-Carlo EGC with this many group samples
    /// per trial and report the randomization-test p-value.
    pub mc_check: Option<usize>,
}

impl Default for NmfExperimentConfig {
    fn default() -> Self {
        NmfExperimentConfig {
            d: 20,
            s: 50,
            n_true: 5,
            p_bernoulli: 0.1,
            noise_amplitude: 0.01,
            n_est: 5,
            algorithm: NmfAlgorithm::Mult,
            n_trials: 200,
            seed: 0,
            max_iters: 500,
            tol: 1e-6,
            mc_check: None,
        }
    }
}

impl NmfExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_true < 1 || self.d < self.n_true || self.s < self.n_true {
            return Err(Error::InvalidConfig(format!(
                "need d, s >= n_true >= 1; got d = {}, s = {}, n_true = {}",
                self.d, self.s, self.n_true
            )));
        }
        if !(self.p_bernoulli > 0.0 && self.p_bernoulli <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sparsity probability must lie in (0, 1], got {}",
                self.p_bernoulli
            )));
        }
        if self.noise_amplitude < 0.0 {
            return Err(Error::InvalidConfig(
                "noise amplitude must be nonnegative".into(),
            ));
        }
        if self.n_est < 1 || self.n_trials < 1 || self.max_iters < 1 {
            return Err(Error::InvalidConfig(
                "n_est, n_trials, and max_iters must be at least 1".into(),
            ));
        }
        if let Some(mc) = self.mc_check {
            if mc < 20 {
                return Err(Error::InvalidConfig(
                    "mc_check needs at least 20 group samples".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Settings for the clustering benchmark. Defaults follow the 5-cluster,
/// 20-dimensional protocol with isotropic mean scatter 2 and log-uniform
/// covariance eigenvalues on [0.1, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterExperimentConfig {
    pub k: usize,
    pub p: usize,
    pub mean_std: f64,
    pub eigenvalue_min: f64,
    pub eigenvalue_max: f64,
    pub samples_per_trial: usize,
    pub algorithm: ClusterAlgorithm,
    pub n_trials: usize,
    pub success_threshold: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub mc_check: Option<usize>,
}

impl Default for ClusterExperimentConfig {
    fn default() -> Self {
        ClusterExperimentConfig {
            k: 5,
            p: 20,
            mean_std: 2.0,
            eigenvalue_min: 0.1,
            eigenvalue_max: 1.0,
            samples_per_trial: 1000,
            algorithm: ClusterAlgorithm::Kmeans,
            n_trials: 100,
            success_threshold: 0.99,
            seed: 0,
            max_iters: 200,
            mc_check: None,
        }
    }
}

impl ClusterExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.p < 2 {
            return Err(Error::InvalidConfig(format!(
                "need k >= 2 and p >= 2; got k = {}, p = {}",
                self.k, self.p
            )));
        }
        if !(self.mean_std > 0.0) {
            return Err(Error::InvalidConfig("mean_std must be positive".into()));
        }
        if !(self.eigenvalue_min > 0.0 && self.eigenvalue_max >= self.eigenvalue_min) {
            return Err(Error::InvalidConfig(format!(
                "eigenvalue range must satisfy 0 < min <= max, got [{}, {}]",
                self.eigenvalue_min, self.eigenvalue_max
            )));
        }
        if self.samples_per_trial < self.k * (self.p + 1) {
            return Err(Error::InvalidConfig(format!(
                "samples_per_trial must be at least k (p + 1) = {}",
                self.k * (self.p + 1)
            )));
        }
        if !(0.0..=1.0).contains(&self.success_threshold) {
            return Err(Error::InvalidConfig(
                "success threshold must lie in [0, 1]".into(),
            ));
        }
        if self.n_trials < 1 || self.max_iters < 1 {
            return Err(Error::InvalidConfig(
                "n_trials and max_iters must be at least 1".into(),
            ));
        }
        if let Some(mc) = self.mc_check {
            if mc < 20 {
                return Err(Error::InvalidConfig(
                    "mc_check needs at least 20 group samples".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One benchmark trial: performance of the fitted model against ground
/// truth, plus the generic ratios of the estimated and true parameters.
/// Ratios are NaN when the trial's diagnostic was degenerate; such trials
/// are recorded, never dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub performance: f64,
    pub generic_ratio_estimated: f64,
    pub generic_ratio_ground_truth: f64,
    pub converged: bool,
    pub p_value: Option<f64>,
}

/// Run the factorization benchmark; trials execute in parallel on derived
/// streams and are reported in trial order, so the output is independent
/// of the worker count.
pub fn run_nmf_experiment(cfg: &NmfExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let master = RngState::new(cfg.seed);
    let records: Vec<TrialRecord> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = master.derive(trial as u64).rng();
            let inst = generate_nmf_instance(
                cfg.d,
                cfg.s,
                cfg.n_true,
                cfg.p_bernoulli,
                cfg.noise_amplitude,
                &mut rng,
            );
            let fit = match cfg.algorithm {
                NmfAlgorithm::Mult => {
                    nmf_multiplicative(&inst.x, cfg.n_est, cfg.max_iters, cfg.tol, &mut rng)
                }
                NmfAlgorithm::Als => {
                    nmf_als(&inst.x, cfg.n_est, cfg.max_iters, cfg.tol, &mut rng)
                }
            };
            let truth =
                crate::contrasts::NmfFactors::new(inst.w_true.clone(), inst.v_true.clone())
                    .expect("ground-truth factors are nonnegative");
            let ratio_truth = nmf_generic_ratio(&truth).unwrap_or(f64::NAN);
            match fit {
                Ok(fit) => {
                    let performance =
                        nmf_performance(&inst.w_true, fit.factors.w()).unwrap_or(f64::NAN);
                    let ratio_est = nmf_generic_ratio(&fit.factors).unwrap_or(f64::NAN);
                    let p_value = cfg.mc_check.and_then(|n_mc| {
                        nmf_ratio_p_value(&fit.factors, n_mc, master.derive(trial as u64), trial)
                    });
                    TrialRecord {
                        trial_index: trial,
                        performance,
                        generic_ratio_estimated: ratio_est,
                        generic_ratio_ground_truth: ratio_truth,
                        converged: fit.converged,
                        p_value,
                    }
                }
                Err(_) => TrialRecord {
                    trial_index: trial,
                    performance: f64::NAN,
                    generic_ratio_estimated: f64::NAN,
                    generic_ratio_ground_truth: ratio_truth,
                    converged: false,
                    p_value: None,
                },
            }
        })
        .collect();
    Ok(records)
}

fn nmf_ratio_p_value(
    factors: &crate::contrasts::NmfFactors,
    n_mc: usize,
    state: RngState,
    salt: usize,
) -> Option<f64> {
    let observed = nmf_centered_contrast(factors).ok()?;
    let mut rng = state.derive(0x4d43 + salt as u64).rng();
    let n = factors.components();
    let est = egc_monte_carlo(
        |r: &mut rand_chacha::ChaCha8Rng| sample_permutation(n, r),
        |p| {
            let permuted = crate::contrasts::NmfFactors::new(
                factors.w().clone(),
                p.permute_columns(factors.v()),
            )?;
            nmf_centered_contrast(&permuted)
        },
        n_mc,
        &mut rng,
    )
    .ok()?;
    randomization_test(observed, &est.samples).ok()
}

/// Run the clustering benchmark; parallelization and determinism follow
/// [`run_nmf_experiment`].
pub fn run_cluster_experiment(cfg: &ClusterExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let master = RngState::new(cfg.seed);
    let records: Vec<TrialRecord> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = master.derive(trial as u64).rng();
            let inst = generate_gmm_instance(
                cfg.k,
                cfg.p,
                cfg.mean_std,
                (cfg.eigenvalue_min, cfg.eigenvalue_max),
                cfg.samples_per_trial,
                &mut rng,
            );
            let inst = match inst {
                Ok(inst) => inst,
                Err(_) => {
                    return TrialRecord {
                        trial_index: trial,
                        performance: f64::NAN,
                        generic_ratio_estimated: f64::NAN,
                        generic_ratio_ground_truth: f64::NAN,
                        converged: false,
                        p_value: None,
                    }
                }
            };
            let ratio_truth = cluster_generic_ratio(&inst.truth).unwrap_or(f64::NAN);
            let fitted: Result<(Vec<usize>, GaussianMixture, bool)> = match cfg.algorithm {
                ClusterAlgorithm::Kmeans => kmeans(&inst.samples, cfg.k, cfg.max_iters, &mut rng)
                    .map(|fit| (fit.assignments, fit.mixture, fit.converged)),
                ClusterAlgorithm::GmEm => {
                    gmm_em(&inst.samples, cfg.k, cfg.max_iters, 1e-7, &mut rng).map(|fit| {
                        (
                            argmax_labels(&fit.responsibilities),
                            fit.mixture,
                            fit.converged && !fit.degenerate,
                        )
                    })
                }
            };
            match fitted {
                Ok((labels, mixture, converged)) => {
                    let performance =
                        cluster_performance(&inst.labels, &labels).unwrap_or(f64::NAN);
                    let ratio_est = cluster_generic_ratio(&mixture).unwrap_or(f64::NAN);
                    let p_value = cfg.mc_check.and_then(|n_mc| {
                        cluster_ratio_p_value(&mixture, n_mc, master.derive(trial as u64), trial)
                    });
                    TrialRecord {
                        trial_index: trial,
                        performance,
                        generic_ratio_estimated: ratio_est,
                        generic_ratio_ground_truth: ratio_truth,
                        converged,
                        p_value,
                    }
                }
                Err(_) => TrialRecord {
                    trial_index: trial,
                    performance: f64::NAN,
                    generic_ratio_estimated: f64::NAN,
                    generic_ratio_ground_truth: ratio_truth,
                    converged: false,
                    p_value: None,
                },
            }
        })
        .collect();
    Ok(records)
}

fn cluster_ratio_p_value(
    mixture: &GaussianMixture,
    n_mc: usize,
    state: RngState,
    salt: usize,
) -> Option<f64> {
    let centered = mixture.centered();
    let observed = mixture_quartic_contrast(&centered).ok()?;
    let p = centered.dim();
    let mut rng = state.derive(0x4d44 + salt as u64).rng();
    let est = egc_monte_carlo(
        |r: &mut rand_chacha::ChaCha8Rng| sample_orthogonal(p, r),
        |u| {
            let rotated = GaussianMixture::new(
                centered.weights().to_vec(),
                centered.means().iter().map(|m| u.entries() * m).collect(),
                centered.covariances().to_vec(),
            )?;
            mixture_quartic_contrast(&rotated)
        },
        n_mc,
        &mut rng,
    )
    .ok()?;
    randomization_test(observed, &est.samples).ok()
}
