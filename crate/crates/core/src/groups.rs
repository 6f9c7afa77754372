//! Seeded samplers and enumerators for the generic groups used by the
//! diagnostics: orthogonal matrices under the Haar measure, uniform
//! permutations, and circular frequency shifts.
//!
//! Every sampler is a pure function of an explicit [`RngState`]-derived
//! generator, so identical seeds reproduce identical draws across runs and
//! platforms.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::contrasts::SampledPsd;
use crate::error::{Error, Result};

/// Seed plus stream index for the portable counter-based generator
/// (ChaCha8). Equal `(seed, stream)` pairs reproduce identical sample
/// sequences; [`RngState::derive`] splits off independent streams for
/// parallel trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed, stream: 0 }
    }

    /// Derive the stream for a sub-task (e.g. one trial of a benchmark).
    /// Distinct `(stream, index)` pairs map to distinct derived streams.
    pub fn derive(&self, index: u64) -> Self {
        RngState {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(1))),
        }
    }

    /// Instantiate the generator for this state.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// An element of O(n) or SO(n) with its matrix representation.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    entries: DMatrix<f64>,
}

impl OrthogonalMatrix {
    /// Wrap a matrix, checking U^T U = I within 1e-10 (Frobenius) and
    /// |det| = 1 within 1e-8.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "orthogonal matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        let gram = entries.transpose() * &entries;
        let defect = (&gram - DMatrix::<f64>::identity(n, n)).norm();
        if defect > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix is not orthogonal: |U^T U - I|_F = {defect:.3e}"
            )));
        }
        let det = entries.determinant();
        if (det.abs() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "orthogonal matrix has |det| = {} far from 1",
                det.abs()
            )));
        }
        Ok(OrthogonalMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }
}

/// A permutation of {0..n-1}, stored as an index array. `mapping[i]` is the
/// image of `i`; the matrix form `P` with `P[mapping[i], i] = 1` is
/// materialized only on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        if mapping.is_empty() {
            return Err(Error::InvalidDimension(
                "permutation size must be at least 1".into(),
            ));
        }
        let mut seen = vec![false; mapping.len()];
        for &image in &mapping {
            if image >= mapping.len() || seen[image] {
                return Err(Error::InvalidInput(format!(
                    "mapping {mapping:?} is not a bijection on 0..{}",
                    mapping.len()
                )));
            }
            seen[image] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// Matrix P with P[mapping[i], i] = 1, so P e_i = e_{mapping[i]}.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.mapping.len();
        let mut m = DMatrix::zeros(n, n);
        for (src, &dst) in self.mapping.iter().enumerate() {
            m[(dst, src)] = 1.0;
        }
        m
    }

    /// Conjugation P A P^T without materializing P: entry (i, j) of A moves
    /// to (mapping[i], mapping[j]).
    pub fn conjugate(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.mapping.len();
        assert_eq!(a.nrows(), n, "conjugate: dimension mismatch");
        assert_eq!(a.ncols(), n, "conjugate: dimension mismatch");
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.mapping[i], self.mapping[j])] = a[(i, j)];
            }
        }
        out
    }

    /// Permute the columns of `m`: column i of the result is column
    /// `mapping^{-1}(i)` of the input, i.e. column j moves to position
    /// `mapping[j]`.
    pub fn permute_columns(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(m.ncols(), self.mapping.len(), "permute_columns: mismatch");
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (src, &dst) in self.mapping.iter().enumerate() {
            out.set_column(dst, &m.column(src));
        }
        out
    }
}

/// A circular shift acting on sampled spectra: translation by `offset`
/// modulo `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularShift {
    period: f64,
    offset: f64,
}

impl CircularShift {
    pub fn new(period: f64, offset: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shift period must be positive, got {period}"
            )));
        }
        let offset = offset.rem_euclid(period);
        Ok(CircularShift { period, offset })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Group composition: offsets add modulo the period.
    pub fn compose(&self, other: &CircularShift) -> Result<Self> {
        if (self.period - other.period).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "cannot compose shifts with periods {} and {}",
                self.period, other.period
            )));
        }
        CircularShift::new(self.period, self.offset + other.offset)
    }
}

/// Haar-distributed element of O(n): fill with i.i.d. standard normals,
/// take the QR factorization, and fix the sign of each column of Q by the
/// sign of the corresponding diagonal entry of R.
pub fn sample_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<OrthogonalMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "orthogonal sampler needs n >= 1".into(),
        ));
    }
    let gauss = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(OrthogonalMatrix { entries: q })
}

/// Haar-distributed element of SO(n): as [`sample_orthogonal`], then if
/// det = -1 negate the first column (a fixed measure-preserving bijection
/// between the two components of O(n)).
pub fn sample_special_orthogonal<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<OrthogonalMatrix> {
    let mut u = sample_orthogonal(n, rng)?;
    if u.determinant() < 0.0 {
        for i in 0..n {
            u.entries[(i, 0)] = -u.entries[(i, 0)];
        }
    }
    Ok(u)
}

/// Uniformly distributed permutation of {0..n-1} (Fisher-Yates).
pub fn sample_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "permutation sampler needs n >= 1".into(),
        ));
    }
    let mut mapping: Vec<usize> = (0..n).collect();
    mapping.shuffle(rng);
    Ok(Permutation { mapping })
}

/// All n! permutations, each exactly once. Guarded at n <= 8 to keep the
/// factorial enumeration bounded; used as the exact-expectation oracle for
/// the permutation-group formulas.
pub fn enumerate_permutations(n: usize) -> Result<Vec<Permutation>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "permutation enumeration needs n >= 1".into(),
        ));
    }
    if n > 8 {
        return Err(Error::SizeLimit(format!(
            "refusing to enumerate {n}! permutations (limit n <= 8)"
        )));
    }
    // Heap's algorithm, iterative form.
    let mut perms = Vec::with_capacity((1..=n).product());
    let mut items: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    perms.push(Permutation {
        mapping: items.clone(),
    });
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(counters[i], i);
            }
            perms.push(Permutation {
                mapping: items.clone(),
            });
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(perms)
}

/// Offset uniform on [0, period).
pub fn sample_circular_shift<R: Rng + ?Sized>(period: f64, rng: &mut R) -> Result<CircularShift> {
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shift period must be positive, got {period}"
        )));
    }
    let offset = rng.gen_range(0.0..period);
    CircularShift::new(period, offset)
}

/// Rotate the positive-frequency bins of `psd` by `round(offset / dnu)`
/// whole bins. Whole-bin rotation is a permutation of the stored values, so
/// the Riemann-sum power is preserved exactly; the even negative-frequency
/// half is a representation convention and needs no storage.
pub fn apply_shift_to_psd(psd: &SampledPsd, shift: &CircularShift) -> Result<SampledPsd> {
    let b = psd.bins();
    if (shift.period() - psd.half_range()).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "shift period {} does not match the spectrum half-range {}",
            shift.period(),
            psd.half_range()
        )));
    }
    let bin_shift = (shift.offset() / psd.delta_nu()).round() as usize % b;
    let values = psd.values();
    let mut rotated = vec![0.0; b];
    for (src, &v) in values.iter().enumerate() {
        rotated[(src + bin_shift) % b] = v;
    }
    SampledPsd::new(rotated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob_identity_defect(u: &OrthogonalMatrix) -> f64 {
        let n = u.dim();
        (u.entries().transpose() * u.entries() - DMatrix::<f64>::identity(n, n)).norm()
    }

    #[test]
    fn orthogonal_rejects_zero_dim() {
        let mut rng = RngState::new(1).rng();
        assert!(matches!(
            sample_orthogonal(0, &mut rng),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn orthogonal_n1_is_sign_flip_with_equal_mass() {
        let mut rng = RngState::new(7).rng();
        let mut plus = 0usize;
        let draws = 4000;
        for _ in 0..draws {
            let u = sample_orthogonal(1, &mut rng).unwrap();
            let v = u.entries()[(0, 0)];
            assert!((v.abs() - 1.0).abs() < 1e-12);
            if v > 0.0 {
                plus += 1;
            }
        }
        let frac = plus as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.03, "sign fraction {frac}");
    }

    #[test]
    fn orthogonal_invariants_hold_per_draw() {
        let mut rng = RngState::new(42).rng();
        for _ in 0..100 {
            let u = sample_orthogonal(3, &mut rng).unwrap();
            assert!(frob_identity_defect(&u) < 1e-10);
            assert!((u.determinant().abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn orthogonal_first_column_moments_match_uniform_sphere() {
        // First column of a Haar O(4) matrix is uniform on S^3: mean 0,
        // covariance I/4.
        let mut rng = RngState::new(3).rng();
        let n = 4;
        let draws = 100_000;
        let mut mean = vec![0.0; n];
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for _ in 0..draws {
            let u = sample_orthogonal(n, &mut rng).unwrap();
            let col = u.entries().column(0);
            for i in 0..n {
                mean[i] += col[i];
                for j in 0..n {
                    cov[(i, j)] += col[i] * col[j];
                }
            }
        }
        let tol_mean = 3.0 * 10f64.powf(-2.5) * (1.0f64 / 4.0).sqrt();
        for i in 0..n {
            let m = mean[i] / draws as f64;
            assert!(m.abs() < tol_mean, "coordinate {i} mean {m} vs {tol_mean}");
            for j in 0..n {
                let c = cov[(i, j)] / draws as f64;
                let expected = if i == j { 0.25 } else { 0.0 };
                assert!((c - expected).abs() < 0.01, "cov[{i},{j}] = {c}");
            }
        }
    }

    #[test]
    fn special_orthogonal_n1_is_trivial() {
        let mut rng = RngState::new(5).rng();
        for _ in 0..50 {
            let u = sample_special_orthogonal(1, &mut rng).unwrap();
            assert_eq!(u.entries()[(0, 0)], 1.0);
        }
    }

    #[test]
    fn special_orthogonal_has_unit_determinant() {
        let mut rng = RngState::new(11).rng();
        for _ in 0..200 {
            let u = sample_special_orthogonal(2, &mut rng).unwrap();
            assert!((u.determinant() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn so2_angle_is_uniform_on_circle() {
        // SO(2) is the circle with uniform Haar measure; check the rotation
        // angle with a Kolmogorov-Smirnov statistic.
        let mut rng = RngState::new(13).rng();
        let draws = 100_000;
        let mut angles: Vec<f64> = (0..draws)
            .map(|_| {
                let u = sample_special_orthogonal(2, &mut rng).unwrap();
                let e = u.entries();
                e[(1, 0)].atan2(e[(0, 0)]).rem_euclid(std::f64::consts::TAU)
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &a) in angles.iter().enumerate() {
            let f = a / std::f64::consts::TAU;
            let hi = (i + 1) as f64 / draws as f64;
            let lo = i as f64 / draws as f64;
            ks = ks.max((f - lo).abs()).max((hi - f).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn haar_left_invariance_of_moments() {
        // For fixed Q in SO(3) the laws of U and QU agree; compare entrywise
        // first and second moments.
        let n = 3;
        let q = sample_special_orthogonal(n, &mut RngState::new(99).rng()).unwrap();
        let draws = 10_000;
        let mut m1 = DMatrix::<f64>::zeros(n, n);
        let mut m2 = DMatrix::<f64>::zeros(n, n);
        let mut m1q = DMatrix::<f64>::zeros(n, n);
        let mut m2q = DMatrix::<f64>::zeros(n, n);
        let mut rng = RngState::new(100).rng();
        for _ in 0..draws {
            let u = sample_special_orthogonal(n, &mut rng).unwrap();
            let qu = q.entries() * u.entries();
            for i in 0..n {
                for j in 0..n {
                    m1[(i, j)] += u.entries()[(i, j)];
                    m2[(i, j)] += u.entries()[(i, j)].powi(2);
                    m1q[(i, j)] += qu[(i, j)];
                    m2q[(i, j)] += qu[(i, j)].powi(2);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((m1[(i, j)] - m1q[(i, j)]).abs() / (draws as f64) < 0.02);
                assert!((m2[(i, j)] - m2q[(i, j)]).abs() / (draws as f64) < 0.02);
            }
        }
    }

    #[test]
    fn permutation_n1_is_identity() {
        let mut rng = RngState::new(1).rng();
        let p = sample_permutation(1, &mut rng).unwrap();
        assert_eq!(p.mapping(), &[0]);
    }

    #[test]
    fn permutation_is_bijection() {
        let mut rng = RngState::new(2).rng();
        let p = sample_permutation(5, &mut rng).unwrap();
        let mut image: Vec<usize> = p.mapping().to_vec();
        image.sort_unstable();
        assert_eq!(image, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn permutation_matrix_is_orthogonal() {
        let mut rng = RngState::new(21).rng();
        let p = sample_permutation(6, &mut rng).unwrap();
        let m = p.matrix();
        let defect = (&m * m.transpose() - DMatrix::<f64>::identity(6, 6)).norm();
        assert_eq!(defect, 0.0);
    }

    #[test]
    fn permutations_are_uniform_on_s3() {
        let mut rng = RngState::new(8).rng();
        let draws = 60_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let p = sample_permutation(3, &mut rng).unwrap();
            *counts.entry(p.mapping().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (_, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn enumeration_counts_and_distinctness() {
        assert_eq!(enumerate_permutations(2).unwrap().len(), 2);
        let perms = enumerate_permutations(4).unwrap();
        assert_eq!(perms.len(), 24);
        let distinct: std::collections::HashSet<_> =
            perms.iter().map(|p| p.mapping().to_vec()).collect();
        assert_eq!(distinct.len(), 24);
        assert!(matches!(
            enumerate_permutations(9),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn circular_shift_range_and_mean() {
        let mut rng = RngState::new(17).rng();
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let s = sample_circular_shift(0.5, &mut rng).unwrap();
            assert!(s.offset() >= 0.0 && s.offset() < 0.5);
            sum += s.offset();
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.25).abs() < 0.005, "mean offset {mean}");
        assert!(matches!(
            sample_circular_shift(0.0, &mut rng),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn circular_shift_composition_wraps() {
        let a = CircularShift::new(0.5, 0.3).unwrap();
        let b = CircularShift::new(0.5, 0.4).unwrap();
        let c = a.compose(&b).unwrap();
        assert!((c.offset() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn shift_acts_on_psd_by_whole_bins() {
        let psd = SampledPsd::new(vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let id = CircularShift::new(0.5, 0.0).unwrap();
        assert_eq!(apply_shift_to_psd(&psd, &id).unwrap().values(), psd.values());

        let by_two = CircularShift::new(0.5, 0.25).unwrap();
        let shifted = apply_shift_to_psd(&psd, &by_two).unwrap();
        assert_eq!(shifted.values(), &[0.0, 0.0, 4.0, 0.0]);
        assert_eq!(
            shifted.values().iter().sum::<f64>(),
            psd.values().iter().sum::<f64>()
        );

        let flat = SampledPsd::new(vec![2.0; 8]).unwrap();
        let any = CircularShift::new(0.5, 0.37).unwrap();
        assert_eq!(apply_shift_to_psd(&flat, &any).unwrap().values(), flat.values());
    }

    #[test]
    fn determinism_per_seed_and_stream() {
        let state = RngState::new(123).derive(4);
        let a = sample_orthogonal(5, &mut state.rng()).unwrap();
        let b = sample_orthogonal(5, &mut state.rng()).unwrap();
        assert_eq!(a.entries(), b.entries());
        let p1 = sample_permutation(7, &mut state.rng()).unwrap();
        let p2 = sample_permutation(7, &mut state.rng()).unwrap();
        assert_eq!(p1, p2);
    }
}
