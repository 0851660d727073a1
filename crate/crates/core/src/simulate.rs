//! Monte Carlo study of how well pseudo-PCA recovers known loadings.
//!
//! Four base variables are drawn jointly normal (independently for each of the
//! four feature channels) and two further variables are exact sums of pairs of
//! them, so the 6×6 correlation matrix has rank four.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::eigen::{symmetric_eigen, EigenDecomposition};
use crate::error::{Error, Result};
use crate::feature_space::FeatureMatrix;
use crate::linalg::Matrix;
use crate::ohlc::FeatureVec;
use crate::ppca::PseudoPcModel;

/// Eigenvalues closer than this are treated as one degenerate eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Eigenvalues below this count as zero in the rank check.
pub const ZERO_EIGEN_TOL: f64 = 1e-8;
const UNIT_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel {
    /// Covariance of the base variables.
    pub base_cov: Matrix<f64>,
    /// Each entry `(a, b)` appends a variable equal to `base[a] + base[b]`.
    pub redundancies: Vec<(usize, usize)>,
}

impl Default for StructuralModel {
    /// Standard deviations 1, 2, 3, 4 with every pairwise covariance 0.25, plus
    /// `Y5 = Y1 + Y2` and `Y6 = Y3 + Y4`.
    fn default() -> Self {
        let sd = [1.0, 2.0, 3.0, 4.0];
        let base_cov = Matrix::from_fn(4, 4, |i, j| if i == j { sd[i] * sd[i] } else { 0.25 });
        Self { base_cov, redundancies: vec![(0, 1), (2, 3)] }
    }
}

impl StructuralModel {
    pub fn n_base(&self) -> usize {
        self.base_cov.rows()
    }

    pub fn n_vars(&self) -> usize {
        self.n_base() + self.redundancies.len()
    }

    pub fn labels(&self) -> Vec<String> {
        (1..=self.n_vars()).map(|j| format!("Y{j}")).collect()
    }

    /// Map from base variables to all variables (rows: variables).
    fn design(&self) -> Matrix<f64> {
        let k = self.n_base();
        Matrix::from_fn(self.n_vars(), k, |v, b| {
            if v < k {
                f64::from(u8::from(v == b))
            } else {
                let (x, y) = self.redundancies[v - k];
                f64::from(u8::from(b == x)) + f64::from(u8::from(b == y))
            }
        })
    }

    /// Covariance of all variables implied by the structure.
    pub fn implied_cov(&self) -> Matrix<f64> {
        let t = self.design();
        t.matmul(&self.base_cov).and_then(|tb| tb.matmul(&t.transpose())).expect("conformant")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalStructure {
    pub corr: Matrix<f64>,
    pub eigen: EigenDecomposition<f64>,
}

pub fn theoretical_correlation(model: &StructuralModel) -> Result<TheoreticalStructure> {
    let cov = model.implied_cov();
    let p = cov.rows();
    let corr =
        Matrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt() });
    let eigen = symmetric_eigen(&corr)?;
    Ok(TheoreticalStructure { corr, eigen })
}

/// Draws `n` observations of every variable. Observation `i` depends only on
/// `(seed, i)`, so a smaller sample is a prefix of a larger one with the same seed.
pub fn generate_sample(model: &StructuralModel, n: usize, seed: u64) -> Result<FeatureMatrix<f64>> {
    let chol = model.base_cov.cholesky()?;
    let k = model.n_base();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut z = vec![0.0; k];
    for _ in 0..n {
        let mut base = vec![[0.0f64; 4]; k];
        for d in 0..4 {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for (v, cell) in base.iter_mut().enumerate() {
                cell[d] = (0..=v).map(|c| chol[(v, c)] * z[c]).sum();
            }
        }
        let mut row: Vec<FeatureVec<f64>> = base.iter().copied().map(FeatureVec).collect();
        for &(a, b) in &model.redundancies {
            row.push(row[a] + row[b]);
        }
        rows.push(row);
    }
    let obs = (1..=n).map(|i| format!("obs{i}")).collect();
    FeatureMatrix::from_rows(obs, model.labels(), &rows)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_unit(v: &[f64]) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitNorm { norm: n });
    }
    Ok(())
}

/// `‖û − u‖ / ‖u‖ × 100` after flipping `û` to agree in sign with `u`.
pub fn mape(estimated: &[f64], truth: &[f64]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::DimensionMismatch { left: estimated.len(), right: truth.len() });
    }
    check_unit(estimated)?;
    check_unit(truth)?;
    let dot: f64 = estimated.iter().zip(truth).map(|(a, b)| a * b).sum();
    let sign = if dot < 0.0 { -1.0 } else { 1.0 };
    let diff: Vec<f64> = estimated.iter().zip(truth).map(|(a, b)| sign * a - b).collect();
    Ok(norm(&diff) / norm(truth) * 100.0)
}

/// Orthogonal `R` minimising `‖M_est R − M_truth‖` given `m = M_estᵀ M_truth`.
fn procrustes_rotation(m: &Matrix<f64>) -> Result<Matrix<f64>> {
    let k = m.rows();
    let gram = m.transpose().matmul(m)?;
    let dec = symmetric_eigen(&gram)?;
    let mv = m.matmul(&dec.vectors)?;
    let scale = dec.values.first().copied().unwrap_or(0.0).max(1.0);
    // left singular vectors, completed to an orthonormal basis where singular
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(k);
    for h in 0..k {
        let sigma2 = dec.values[h];
        let col = if sigma2 > 1e-24 * scale {
            let s = sigma2.sqrt();
            Some((0..k).map(|i| mv[(i, h)] / s).collect::<Vec<_>>())
        } else {
            None
        };
        let col = col.or_else(|| {
            (0..k).find_map(|e| {
                let mut c: Vec<f64> = (0..k).map(|i| f64::from(u8::from(i == e))).collect();
                for prev in &left {
                    let d: f64 = prev.iter().zip(&c).map(|(a, b)| a * b).sum();
                    c.iter_mut().zip(prev).for_each(|(x, p)| *x -= d * p);
                }
                let n = norm(&c);
                (n > 1e-6).then(|| c.into_iter().map(|x| x / n).collect())
            })
        });
        left.push(col.expect("orthonormal completion exists"));
    }
    Ok(Matrix::from_fn(k, k, |i, j| (0..k).map(|h| left[h][i] * dec.vectors[(j, h)]).sum()))
}

/// Per-component MAPE of estimated eigenvectors (columns of `estimated`)
/// against a reference decomposition. Within a degenerate reference eigenspace
/// the estimated basis is first rotated onto the reference basis; for a simple
/// eigenvalue this reduces to a sign flip.
pub fn eigen_mape(estimated: &Matrix<f64>, truth: &EigenDecomposition<f64>) -> Result<Vec<f64>> {
    let p = truth.dim();
    if estimated.rows() != p || estimated.cols() != p {
        return Err(Error::DimensionMismatch { left: estimated.rows(), right: p });
    }
    for h in 0..p {
        check_unit(&estimated.column(h))?;
        check_unit(&truth.vector(h))?;
    }
    let mut out = Vec::with_capacity(p);
    let mut start = 0;
    while start < p {
        let mut end = start + 1;
        while end < p && (truth.values[end - 1] - truth.values[end]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        let k = end - start;
        let est = Matrix::from_fn(p, k, |i, h| estimated[(i, start + h)]);
        let tru = Matrix::from_fn(p, k, |i, h| truth.vectors[(i, start + h)]);
        let rotation = procrustes_rotation(&est.transpose().matmul(&tru)?)?;
        let aligned = est.matmul(&rotation)?;
        for h in 0..k {
            let diff: Vec<f64> = (0..p).map(|i| aligned[(i, h)] - tru[(i, h)]).collect();
            out.push(norm(&diff) / norm(&tru.column(h)) * 100.0);
        }
        start = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub sample_sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    /// Number of leading components whose cumulative contribution is reported.
    pub component_count: usize,
    pub model: StructuralModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![50, 100, 150, 200],
            repeats: 300,
            seed: 42,
            component_count: 4,
            model: StructuralModel::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig("no sample sizes".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|n| **n < 5) {
            return Err(Error::InvalidConfig(format!("sample size {n} is below 5")));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.component_count == 0 || self.component_count > self.model.n_vars() {
            return Err(Error::ComponentsOutOfRange {
                requested: self.component_count,
                available: self.model.n_vars(),
            });
        }
        Ok(())
    }
}

/// Outcome of one simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub mape_pct: Vec<f64>,
    pub contribution: f64,
    pub zero_eigenvalues: usize,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSizeSummary {
    pub sample_size: usize,
    pub completed: usize,
    /// `(repeat index, error message)` for repeats whose fit failed.
    pub failures: Vec<(usize, String)>,
    /// Mean MAPE per component, in percent.
    pub mape_mean_pct: Vec<f64>,
    /// Empirical standard deviation of MAPE per component (n−1 divisor), as a fraction.
    pub mape_sd: Vec<f64>,
    pub contribution_mean: f64,
    /// Zero-eigenvalue count of every completed repeat, in repeat order.
    pub zero_eigen_counts: Vec<usize>,
    pub mean_spectrum: Vec<f64>,
}

impl SampleSizeSummary {
    pub fn overall_mape_pct(&self) -> f64 {
        mean(&self.mape_mean_pct)
    }

    pub fn overall_sd(&self) -> f64 {
        mean(&self.mape_sd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub component_count: usize,
    pub repeats: usize,
    pub seed: u64,
    pub theoretical_eigenvalues: Vec<f64>,
    pub summaries: Vec<SampleSizeSummary>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn run_repeat(
    model: &StructuralModel,
    truth: &EigenDecomposition<f64>,
    n: usize,
    seed: u64,
    component_count: usize,
) -> Result<RepeatOutcome> {
    let sample = generate_sample(model, n, seed)?;
    let p = sample.n_cols();
    let fit = PseudoPcModel::fit(&sample, p)?;
    let spectrum = fit.spectrum().to_vec();
    Ok(RepeatOutcome {
        mape_pct: eigen_mape(fit.loadings(), truth)?,
        contribution: fit.cumulative_contribution()[component_count - 1],
        zero_eigenvalues: spectrum.iter().filter(|l| **l < ZERO_EIGEN_TOL).count(),
        spectrum,
    })
}

/// Runs every sample size of the study. Repeat `r` uses seed `seed + r`.
pub fn run_study(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let truth = theoretical_correlation(&config.model)?.eigen;
    let p = config.model.n_vars();
    let summaries = config
        .sample_sizes
        .iter()
        .map(|&n| {
            let outcomes: Vec<Result<RepeatOutcome>> = (0..config.repeats)
                .into_par_iter()
                .map(|r| {
                    let seed = config.seed.wrapping_add(r as u64);
                    run_repeat(&config.model, &truth, n, seed, config.component_count)
                })
                .collect();
            summarize(n, p, outcomes)
        })
        .collect();
    Ok(SimReport {
        component_count: config.component_count,
        repeats: config.repeats,
        seed: config.seed,
        theoretical_eigenvalues: truth.values.clone(),
        summaries,
    })
}

fn summarize(n: usize, p: usize, outcomes: Vec<Result<RepeatOutcome>>) -> SampleSizeSummary {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => ok.push(o),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    let per_pc = |h: usize| ok.iter().map(|o| o.mape_pct[h]).collect::<Vec<_>>();
    SampleSizeSummary {
        sample_size: n,
        completed: ok.len(),
        mape_mean_pct: (0..p).map(|h| mean(&per_pc(h))).collect(),
        mape_sd: (0..p).map(|h| sd(&per_pc(h)) / 100.0).collect(),
        contribution_mean: mean(&ok.iter().map(|o| o.contribution).collect::<Vec<_>>()),
        zero_eigen_counts: ok.iter().map(|o| o.zero_eigenvalues).collect(),
        mean_spectrum: (0..p).map(|h| mean(&ok.iter().map(|o| o.spectrum[h]).collect::<Vec<_>>())).collect(),
        failures,
    }
}
