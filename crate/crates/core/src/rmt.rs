//! Gaussian matrix ensembles: sampling, eigenvalues, the 2×2 spacing
//! constructions and the matrix-element Ornstein–Uhlenbeck evolution.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::stats::rescale_unit_mean;

/// Largest matrix dimension handled by the eigensolver.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dyson_index: u32,
    pub dim: usize,
    /// a²
    pub scale2: f64,
    /// ν; only the product a²ν enters the OU time scale
    pub friction: f64,
}

impl EnsembleSpec {
    pub fn new(dyson_index: u32, dim: usize, scale2: f64, friction: f64) -> Result<Self> {
        let spec = Self { dyson_index, dim, scale2, friction };
        spec.validate()?;
        Ok(spec)
    }

    /// Ensemble with the Dyson scaling a² = β_D n and ν = 1.
    pub fn dyson_scaled(dyson_index: u32, dim: usize) -> Result<Self> {
        Self::new(dyson_index, dim, dyson_index as f64 * dim as f64, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.dyson_index, 1 | 2 | 4) {
            return Err(Error::UnsupportedClass(format!("Dyson index {} is not in {{1, 2, 4}}", self.dyson_index)));
        }
        if self.dyson_index == 4 && self.dim != 2 {
            return Err(Error::UnsupportedClass(format!("symplectic ensemble supported only for n = 2, got n = {}", self.dim)));
        }
        if !(2..=MAX_DIM).contains(&self.dim) {
            return Err(Error::InvalidParameter(format!("matrix dimension must be in 2..={MAX_DIM}, got {}", self.dim)));
        }
        if !(self.scale2 > 0.0 && self.scale2.is_finite()) {
            return Err(Error::InvalidParameter(format!("a² must be positive, got {}", self.scale2)));
        }
        if !(self.friction > 0.0 && self.friction.is_finite()) {
            return Err(Error::InvalidParameter(format!("friction must be positive, got {}", self.friction)));
        }
        Ok(())
    }

    /// N = n + n(n−1)β_D/2
    pub fn independent_elements(&self) -> usize {
        self.dim + self.dim * (self.dim - 1) / 2 * self.dyson_index as usize
    }

    /// Variance of component `c` in the [`MatrixState`] layout:
    /// (a²/2β)(1 + δ_ij).
    pub fn component_variance(&self, c: usize) -> f64 {
        let b = self.dyson_index as f64;
        if c < self.dim {
            self.scale2 / b
        } else {
            self.scale2 / (2.0 * b)
        }
    }
}

/// Independent real components of a Hermitian matrix.
///
/// Layout: the n diagonal entries, then for each pair i < j (row-major)
/// β_D real components of M_ij (real part, then imaginary parts). For
/// β_D = 4 the off-diagonal block is one quaternion (q0, q1, q2, q3).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixState {
    pub spec: EnsembleSpec,
    pub components: Vec<f64>,
}

impl MatrixState {
    pub fn new(spec: EnsembleSpec, components: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if components.len() != spec.independent_elements() {
            return Err(Error::InvalidParameter(format!(
                "{} components for an ensemble with {} independent elements",
                components.len(),
                spec.independent_elements()
            )));
        }
        Ok(Self { spec, components })
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let n = self.spec.dim;
        // number of pairs (p, q), p < q, preceding (i, j) in row-major order
        let before = i * n - i * (i + 1) / 2 + (j - i - 1);
        n + before * self.spec.dyson_index as usize
    }

    /// Complex entry M_ij for β_D ∈ {1, 2}.
    pub fn entry(&self, i: usize, j: usize) -> (f64, f64) {
        if i == j {
            return (self.components[i], 0.0);
        }
        let (p, q, conj) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let k = self.pair_index(p, q);
        match self.spec.dyson_index {
            1 => (self.components[k], 0.0),
            _ => (self.components[k], conj * self.components[k + 1]),
        }
    }

    /// Tr(M M*) = Σ diagonal² + 2 Σ off-diagonal component².
    pub fn trace_mm(&self) -> f64 {
        let n = self.spec.dim;
        let diag: f64 = self.components[..n].iter().map(|x| x * x).sum();
        let off: f64 = self.components[n..].iter().map(|x| x * x).sum();
        diag + 2.0 * off
    }

    /// Dense real symmetric form: M itself for β_D = 1, the 2n×2n embedding
    /// [[A, −B], [B, A]] of M = A + iB for β_D = 2.
    pub fn real_embedding(&self) -> Result<(Vec<f64>, usize)> {
        let n = self.spec.dim;
        match self.spec.dyson_index {
            1 => {
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        m[i * n + j] = self.entry(i, j).0;
                    }
                }
                Ok((m, n))
            }
            2 => {
                let d = 2 * n;
                let mut m = vec![0.0; d * d];
                for i in 0..n {
                    for j in 0..n {
                        let (a, b) = self.entry(i, j);
                        m[i * d + j] = a;
                        m[(i + n) * d + j + n] = a;
                        m[i * d + j + n] = -b;
                        m[(i + n) * d + j] = b;
                    }
                }
                Ok((m, d))
            }
            _ => Err(Error::UnsupportedClass("no real embedding implemented for quaternion matrices".into())),
        }
    }

    /// Ascending eigenvalues. Each eigenvalue of a quaternion self-dual
    /// matrix is doubly degenerate and reported once.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self.spec.dyson_index {
            4 => {
                let c = &self.components;
                let (a, b) = (c[0], c[1]);
                let q2: f64 = c[2..6].iter().map(|x| x * x).sum();
                let half_gap = (((a - b) / 2.0).powi(2) + q2).sqrt();
                let mid = 0.5 * (a + b);
                Ok(vec![mid - half_gap, mid + half_gap])
            }
            2 => {
                let (m, d) = self.real_embedding()?;
                let ev = symmetric_eigenvalues(&m, d)?;
                // each eigenvalue appears twice in the embedding
                Ok(ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
            }
            _ => {
                let (m, d) = self.real_embedding()?;
                symmetric_eigenvalues(&m, d)
            }
        }
    }
}

/// One draw from P(M) ∝ exp[−β_D Tr(MM*)/2a²].
pub fn sample_matrix<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<MatrixState> {
    spec.validate()?;
    let components = (0..spec.independent_elements())
        .map(|c| spec.component_variance(c).sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(MatrixState { spec: *spec, components })
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues of the real symmetric `n×n` matrix `a`
/// (row-major) by cyclic Jacobi rotations, iterated until the off-diagonal
/// Frobenius norm drops below 1e-12‖a‖.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 || a.len() != n * n {
        return Err(Error::InvalidParameter(format!("expected a square matrix of size {n}, got {} entries", a.len())));
    }
    if n > 2 * MAX_DIM {
        return Err(Error::InvalidParameter(format!("dimension {n} exceeds {}", 2 * MAX_DIM)));
    }
    for i in 0..n {
        for j in 0..i {
            if a[i * n + j] != a[j * n + i] {
                return Err(Error::InvalidParameter(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut m = a.to_vec();
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |m: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) >= 1e-12 * norm && norm > 0.0 {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence { iterations: sweeps, reason: "Jacobi sweeps exhausted".into() });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok(())
}

/// Gaps |λ₂ − λ₁| of `count` independent 2×2 matrices, rescaled to unit
/// empirical mean. Draw `i` uses stream `i` of `seed`.
pub fn spacing_from_matrix(spec: &EnsembleSpec, seed: u64, count: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.dim != 2 {
        return Err(Error::InvalidParameter(format!("spacings need 2×2 matrices, got n = {}", spec.dim)));
    }
    check_count(count)?;
    let mut gaps = (0..count)
        .into_par_iter()
        .map(|i| {
            let m = sample_matrix(spec, &mut stream(seed, i as u64))?;
            let ev = m.eigenvalues()?;
            Ok(ev[1] - ev[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    rescale_unit_mean(&mut gaps);
    Ok(gaps)
}

/// Gaps built as the norm of `k` i.i.d. standard Gaussians, rescaled to
/// unit empirical mean; k = 2, 3, 4, 5 reproduce the GOE, GUE, Ginibre
/// and GSE surmises.
pub fn spacing_from_components(k: u32, seed: u64, count: usize) -> Result<Vec<f64>> {
    if !(2..=5).contains(&k) {
        return Err(Error::InvalidParameter(format!("component count must be in 2..=5, got {k}")));
    }
    check_count(count)?;
    let mut gaps: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            (0..k)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * z
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    rescale_unit_mean(&mut gaps);
    Ok(gaps)
}

/// β_D [Σ_{i<j} ln|λ_i − λ_j| − Σ λ_i²/2a²], the unnormalized log joint
/// eigenvalue density; −∞ unless `lambdas` is strictly increasing.
pub fn joint_eigen_logdensity(spec: &EnsembleSpec, lambdas: &[f64]) -> f64 {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return f64::NEG_INFINITY;
    }
    let mut repulsion = 0.0;
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            repulsion += (lambdas[j] - lambdas[i]).ln();
        }
    }
    let confinement: f64 = lambdas.iter().map(|x| x * x).sum::<f64>() / (2.0 * spec.scale2);
    spec.dyson_index as f64 * (repulsion - confinement)
}

/// Exact OU transition of every matrix element over time `t`:
/// M(t) = q M' + √(1 − q²) G with q = exp(−t/a²ν) and G a fresh ensemble
/// draw.
pub fn matrix_ou_step<R: Rng + ?Sized>(current: &MatrixState, t: f64, rng: &mut R) -> Result<MatrixState> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("OU step needs t > 0, got {t}")));
    }
    let spec = current.spec;
    let q = (-t / (spec.scale2 * spec.friction)).exp();
    let g = sample_matrix(&spec, rng)?;
    let w = (-(-2.0 * t / (spec.scale2 * spec.friction)).exp_m1()).sqrt();
    let components = current.components.iter().zip(&g.components).map(|(m, z)| q * m + w * z).collect();
    Ok(MatrixState { spec, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{DensityModel, SurmiseLabel};
    use crate::rng::{derive_seed, stream};
    use crate::stats::{ks_two_sample, mean, variance, Histogram};

    #[test]
    fn element_count_and_validation() {
        assert_eq!(EnsembleSpec::new(1, 3, 1.0, 1.0).unwrap().independent_elements(), 6);
        assert_eq!(EnsembleSpec::new(2, 3, 1.0, 1.0).unwrap().independent_elements(), 9);
        assert_eq!(EnsembleSpec::new(4, 2, 1.0, 1.0).unwrap().independent_elements(), 6);
        assert!(matches!(EnsembleSpec::new(4, 3, 1.0, 1.0), Err(Error::UnsupportedClass(_))));
        assert!(matches!(EnsembleSpec::new(3, 2, 1.0, 1.0), Err(Error::UnsupportedClass(_))));
        assert!(EnsembleSpec::new(1, 1, 1.0, 1.0).is_err());
        assert!(EnsembleSpec::new(1, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn element_variances() {
        let spec = EnsembleSpec::new(1, 2, 1.7, 1.0).unwrap();
        let draws: Vec<MatrixState> = (0..100_000).map(|i| sample_matrix(&spec, &mut stream(11, i)).unwrap()).collect();
        for c in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|m| m.components[c] * m.components[c]).collect();
            let target = spec.component_variance(c);
            assert!((mean(&xs) - target).abs() < 3.0 * crate::stats::std_err(&xs), "component {c}");
        }
        assert_eq!(spec.component_variance(0), 1.7);
        assert_eq!(spec.component_variance(2), 0.85);
    }

    #[test]
    fn hermitian_by_construction() {
        let spec = EnsembleSpec::new(2, 3, 1.0, 1.0).unwrap();
        let m = sample_matrix(&spec, &mut stream(5, 0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = m.entry(i, j);
                let (c, d) = m.entry(j, i);
                assert_eq!(a, c);
                assert_eq!(b, -d);
            }
        }
    }

    #[test]
    fn jacobi_examples() {
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(symmetric_eigenvalues(&id, 3).unwrap(), vec![1.0; 3]);
        let ev = symmetric_eigenvalues(&[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        assert!(symmetric_eigenvalues(&[0.0, 1.0, 2.0, 0.0], 2).is_err());
    }

    #[test]
    fn trace_identities() {
        for (beta, n) in [(1, 8), (2, 6), (1, 40), (4, 2)] {
            let spec = EnsembleSpec::new(beta, n, 1.0, 1.0).unwrap();
            for seed in 0..5 {
                let m = sample_matrix(&spec, &mut stream(seed, 0)).unwrap();
                let ev = m.eigenvalues().unwrap();
                let tr: f64 = m.components[..n].iter().sum();
                // quaternion eigenvalues are doubled in the full trace
                let mult = if beta == 4 { 2.0 } else { 1.0 };
                assert!((mult * ev.iter().sum::<f64>() - mult * tr).abs() < 1e-10);
                let tr2 = mult * ev.iter().map(|x| x * x).sum::<f64>();
                let direct = if beta == 4 { 2.0 * m.trace_mm() } else { m.trace_mm() };
                assert!((tr2 - direct).abs() < 1e-10 * direct.max(1.0), "β={beta} n={n}");
                assert!(ev.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    fn l1(samples: &[f64], label: SurmiseLabel) -> f64 {
        let h = Histogram::new(samples, 50, 0.0, 4.0).unwrap();
        let m = DensityModel::surmise(label);
        h.l1_to_cdf(|x| m.cdf(x))
    }

    #[test]
    fn spacings_follow_surmises() {
        for beta in [1, 2, 4] {
            let spec = EnsembleSpec::new(beta, 2, 1.0, 1.0).unwrap();
            let s = spacing_from_matrix(&spec, 7, 100_000).unwrap();
            assert!((mean(&s) - 1.0).abs() < 1e-12);
            let d = l1(&s, SurmiseLabel::for_dyson_index(beta).unwrap());
            assert!(d < 0.02, "β={beta}: {d}");
        }
        for k in 2..=5 {
            let s = spacing_from_components(k, 9, 100_000).unwrap();
            let d = l1(&s, SurmiseLabel::for_components(k).unwrap());
            assert!(d < 0.02, "k={k}: {d}");
        }
        assert!(spacing_from_matrix(&EnsembleSpec::new(1, 3, 1.0, 1.0).unwrap(), 1, 10).is_err());
        assert!(spacing_from_components(6, 1, 10).is_err());
    }

    #[test]
    fn matrix_and_component_gaps_agree() {
        for (k, beta) in [(2, 1), (3, 2), (5, 4)] {
            let spec = EnsembleSpec::new(beta, 2, 1.0, 1.0).unwrap();
            let a = spacing_from_matrix(&spec, derive_seed(21, 1), 100_000).unwrap();
            let b = spacing_from_components(k, derive_seed(21, 2), 100_000).unwrap();
            let d = ks_two_sample(&a, &b).unwrap();
            assert!(d < 0.01, "k={k} β={beta}: {d}");
        }
    }

    #[test]
    fn joint_logdensity_examples() {
        let spec = EnsembleSpec::new(1, 2, 1.0, 1.0).unwrap();
        assert!((joint_eigen_logdensity(&spec, &[-1.0, 1.0]) - (2f64.ln() - 1.0)).abs() < 1e-15);
        assert_eq!(joint_eigen_logdensity(&spec, &[0.5, 0.5]), f64::NEG_INFINITY);
        assert_eq!(joint_eigen_logdensity(&spec, &[1.0, 0.0]), f64::NEG_INFINITY);
        let spec = EnsembleSpec::new(2, 3, 2.0, 1.0).unwrap();
        let x = [-0.7, 0.1, 1.3];
        let c = 0.4;
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let n = 3.0;
        let m = x.iter().sum::<f64>() / n;
        let expect = -2.0 * (n * c * m + n * c * c / 2.0) / 2.0;
        let got = joint_eigen_logdensity(&spec, &shifted) - joint_eigen_logdensity(&spec, &x);
        assert!((got - expect).abs() < 1e-13);
    }

    #[test]
    fn ou_step_limits_and_semigroup() {
        let spec = EnsembleSpec::new(2, 2, 1.0, 1.0).unwrap();
        let start = sample_matrix(&spec, &mut stream(1, 0)).unwrap();
        assert!(matrix_ou_step(&start, 0.0, &mut stream(1, 1)).is_err());
        // short times stay close
        let near = matrix_ou_step(&start, 1e-8, &mut stream(1, 1)).unwrap();
        let dist: f64 = near.components.iter().zip(&start.components).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(dist < 1e-6);
        // two steps of t: mean is e^{−2t} M'
        let t = 0.3;
        let trials = 100_000;
        let ends: Vec<MatrixState> = (0..trials)
            .map(|i| {
                let mut rng = stream(2, i);
                let m = matrix_ou_step(&start, t, &mut rng).unwrap();
                matrix_ou_step(&m, t, &mut rng).unwrap()
            })
            .collect();
        let q2 = (-2.0 * t).exp();
        for c in 0..start.components.len() {
            let xs: Vec<f64> = ends.iter().map(|m| m.components[c]).collect();
            let se = (variance(&xs) / trials as f64).sqrt();
            assert!((mean(&xs) - q2 * start.components[c]).abs() < 4.0 * se, "component {c}");
        }
    }

    #[test]
    fn ou_step_preserves_stationary_variances() {
        let spec = EnsembleSpec::new(1, 3, 2.0, 0.5).unwrap();
        let ends: Vec<MatrixState> = (0..50_000)
            .map(|i| {
                let mut rng = stream(4, i);
                let m = sample_matrix(&spec, &mut rng).unwrap();
                matrix_ou_step(&m, 0.7, &mut rng).unwrap()
            })
            .collect();
        for c in 0..spec.independent_elements() {
            let xs: Vec<f64> = ends.iter().map(|m| m.components[c].powi(2)).collect();
            assert!((mean(&xs) - spec.component_variance(c)).abs() < 3.5 * crate::stats::std_err(&xs), "component {c}");
        }
    }
}
