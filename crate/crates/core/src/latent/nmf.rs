//! Synthetic factorization instances, the two NMF solvers under study
//! (multiplicative updates and clamped alternating least squares), and the
//! matched-column performance metric.

use nalgebra::DMatrix;
use rand::Rng;

use super::assignment::assign_max;
use crate::contrasts::{nmf_centered_contrast, NmfFactors};
use crate::error::{Error, Result};
use crate::genericity::{egc_nmf, generic_ratio};

/// Ground truth and observation for one synthetic factorization trial.
#[derive(Debug, Clone)]
pub struct NmfInstance {
    pub w_true: DMatrix<f64>,
    pub v_true: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

/// Draw W ~ U[0,1]^{d x n}; V sparse with Bernoulli(p)-selected U[0,1]
/// entries (all-zero columns regenerated); X = W V^T plus uniform noise.
pub fn generate_nmf_instance<R: Rng + ?Sized>(
    d: usize,
    s: usize,
    n_true: usize,
    p_bernoulli: f64,
    noise_amplitude: f64,
    rng: &mut R,
) -> NmfInstance {
    let w_true = DMatrix::from_fn(d, n_true, |_, _| rng.gen::<f64>());
    let mut v_true = DMatrix::zeros(s, n_true);
    for j in 0..n_true {
        loop {
            let mut any = false;
            for i in 0..s {
                if rng.gen::<f64>() < p_bernoulli {
                    v_true[(i, j)] = rng.gen::<f64>();
                    any = true;
                } else {
                    v_true[(i, j)] = 0.0;
                }
            }
            if any {
                break;
            }
        }
    }
    let mut x = &w_true * v_true.transpose();
    if noise_amplitude > 0.0 {
        for v in x.iter_mut() {
            *v += noise_amplitude * rng.gen::<f64>();
        }
    }
    NmfInstance { w_true, v_true, x }
}

/// A solver run: the factors, the Frobenius loss per iteration, and
/// whether the relative-change stopping rule fired before `max_iters`.
#[derive(Debug, Clone)]
pub struct NmfFit {
    pub factors: NmfFactors,
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

fn frobenius_loss(x: &DMatrix<f64>, w: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    (x - w * v.transpose()).norm()
}

fn validate_nmf_input(x: &DMatrix<f64>, n_est: usize) -> Result<()> {
    if x.iter().any(|&e| e < 0.0) {
        return Err(Error::InvalidInput(
            "factorization input must be entrywise nonnegative".into(),
        ));
    }
    if n_est == 0 || x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidDimension(
            "factorization needs a non-empty matrix and n_est >= 1".into(),
        ));
    }
    Ok(())
}

/// Multiplicative Frobenius updates
/// W <- W .* (X V) ./ (W V^T V), V <- V .* (X^T W) ./ (V W^T W),
/// denominators floored at 1e-12. The loss is non-increasing.
pub fn nmf_multiplicative<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    n_est: usize,
    max_iters: usize,
    tol: f64,
    rng: &mut R,
) -> Result<NmfFit> {
    validate_nmf_input(x, n_est)?;
    let (d, s) = (x.nrows(), x.ncols());
    let mut w = DMatrix::from_fn(d, n_est, |_, _| rng.gen::<f64>());
    let mut v = DMatrix::from_fn(s, n_est, |_, _| rng.gen::<f64>());
    let mut loss_history = vec![frobenius_loss(x, &w, &v)];
    let mut converged = false;
    for _ in 0..max_iters {
        let numer_w = x * &v;
        let denom_w = &w * (v.transpose() * &v);
        for (wv, (nu, de)) in w.iter_mut().zip(numer_w.iter().zip(denom_w.iter())) {
            *wv *= nu / de.max(1e-12);
        }
        let numer_v = x.transpose() * &w;
        let denom_v = &v * (w.transpose() * &w);
        for (vv, (nu, de)) in v.iter_mut().zip(numer_v.iter().zip(denom_v.iter())) {
            *vv *= nu / de.max(1e-12);
        }
        let loss = frobenius_loss(x, &w, &v);
        let prev = *loss_history.last().unwrap();
        loss_history.push(loss);
        if (prev - loss).abs() <= tol * prev.max(1e-30) {
            converged = true;
            break;
        }
    }
    Ok(NmfFit {
        factors: NmfFactors::new(w, v)?,
        loss_history,
        converged,
    })
}

/// Alternating unconstrained least squares with negative entries clamped to
/// zero after each solve. Clamping breaks the descent guarantee, which is
/// exactly the failure mode the diagnostics are meant to expose.
pub fn nmf_als<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    n_est: usize,
    max_iters: usize,
    tol: f64,
    rng: &mut R,
) -> Result<NmfFit> {
    validate_nmf_input(x, n_est)?;
    let (d, s) = (x.nrows(), x.ncols());
    let mut w = DMatrix::from_fn(d, n_est, |_, _| rng.gen::<f64>());
    let mut v = DMatrix::from_fn(s, n_est, |_, _| rng.gen::<f64>());
    let mut loss_history = vec![frobenius_loss(x, &w, &v)];
    let mut converged = false;
    for _ in 0..max_iters {
        let gram_v = v.transpose() * &v;
        let pinv_v = gram_v.pseudo_inverse(1e-10).map_err(|e| {
            Error::DegenerateFactorization(format!("V Gram pseudo-inverse failed: {e}"))
        })?;
        w = x * &v * pinv_v;
        w.iter_mut().for_each(|e| *e = e.max(0.0));

        let gram_w = w.transpose() * &w;
        let pinv_w = gram_w.pseudo_inverse(1e-10).map_err(|e| {
            Error::DegenerateFactorization(format!("W Gram pseudo-inverse failed: {e}"))
        })?;
        v = x.transpose() * &w * pinv_w;
        v.iter_mut().for_each(|e| *e = e.max(0.0));

        let loss = frobenius_loss(x, &w, &v);
        let prev = *loss_history.last().unwrap();
        loss_history.push(loss);
        if (prev - loss).abs() <= tol * prev.max(1e-30) {
            converged = true;
            break;
        }
    }
    Ok(NmfFit {
        factors: NmfFactors::new(w, v)?,
        loss_history,
        converged,
    })
}

/// Mean cosine similarity between ground-truth columns and their optimally
/// matched estimated columns (Hungarian assignment over min(n_true, n_est)
/// pairs). Zero columns contribute zero similarity.
pub fn nmf_performance(w_true: &DMatrix<f64>, w_est: &DMatrix<f64>) -> Result<f64> {
    if w_true.nrows() != w_est.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "row counts differ: {} vs {}",
            w_true.nrows(),
            w_est.nrows()
        )));
    }
    if w_true.nrows() == 0 || w_true.ncols() == 0 || w_est.ncols() == 0 {
        return Err(Error::InvalidInput("empty factor matrices".into()));
    }
    let similarity = DMatrix::from_fn(w_true.ncols(), w_est.ncols(), |i, j| {
        let a = w_true.column(i);
        let b = w_est.column(j);
        let na = a.norm();
        let nb = b.norm();
        if na <= 0.0 || nb <= 0.0 {
            0.0
        } else {
            a.dot(&b) / (na * nb)
        }
    });
    let pairs = assign_max(&similarity);
    let matched = pairs.len() as f64;
    Ok(pairs.iter().map(|&(i, j)| similarity[(i, j)]).sum::<f64>() / matched)
}

/// Generic ratio of a factor pair: centered contrast over its permutation
/// EGC. n = 2 is excluded (the ratio is identically 1 there).
pub fn nmf_generic_ratio(factors: &NmfFactors) -> Result<f64> {
    if factors.components() < 3 {
        return Err(Error::DegenerateContrast(format!(
            "the factor ratio is uninformative for n = {} (needs n >= 3)",
            factors.components()
        )));
    }
    generic_ratio(nmf_centered_contrast(factors)?, egc_nmf(factors)?)
}
