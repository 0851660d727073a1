//! Pseudo principal components of a feature matrix.
//!
//! Each component is a linear combination `F_h = Σ_j u_hj ⊗ Y_j` of the
//! standardized feature variables, with weights taken from the eigenvectors of
//! their correlation matrix. Component scores are themselves feature vectors
//! and so map back to OHLC bars.

use crate::eigen::{orient_signs, symmetric_eigen, EigenDecomposition};
use crate::error::{Error, Result};
use crate::feature_space::{corr_matrix, standardize, FeatureMatrix, FeatureSeries, SummaryStats};
use crate::linalg::Matrix;
use crate::ohlc::{from_feature, Direction, OhlcBar};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPcModel<T> {
    labels: Vec<String>,
    stats: SummaryStats<T>,
    /// p×m, column h is the oriented eigenvector of component h.
    loadings: Matrix<T>,
    /// All p eigenvalues of the correlation matrix, descending.
    spectrum: Vec<T>,
    variance_contribution: Vec<T>,
    cumulative_contribution: Vec<T>,
}

/// `VCR_h = λ_h / p` for every entry of `eigenvalues`.
pub fn variance_contribution<T: Scalar>(eigenvalues: &[T], p: usize) -> Vec<T> {
    let p = T::from_usize(p).expect("p representable");
    eigenvalues.iter().map(|l| *l / p).collect()
}

/// `Q_m = (1/p) Σ_{h ≤ m} λ_h` for m = 1..len.
pub fn cumulative_contribution<T: Scalar>(eigenvalues: &[T], p: usize) -> Vec<T> {
    variance_contribution(eigenvalues, p)
        .into_iter()
        .scan(T::zero(), |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

impl<T: Scalar> PseudoPcModel<T> {
    /// Standardizes, builds the correlation matrix, eigendecomposes it, orients
    /// the eigenvectors and keeps the leading `components` of them.
    pub fn fit(m: &FeatureMatrix<T>, components: usize) -> Result<Self> {
        let p = m.n_cols();
        if components == 0 || components > p {
            return Err(Error::ComponentsOutOfRange { requested: components, available: p });
        }
        if m.n_rows() < 2 {
            return Err(Error::TooFewObservations { required: 2, got: m.n_rows() });
        }
        let (standardized, stats) = standardize(m)?;
        let w = corr_matrix(&standardized)?.corr;
        let dec = orient_signs(symmetric_eigen(&w)?);
        Ok(Self::from_decomposition(m.col_labels().to_vec(), stats, &dec, components))
    }

    pub(crate) fn from_decomposition(
        labels: Vec<String>,
        stats: SummaryStats<T>,
        dec: &EigenDecomposition<T>,
        components: usize,
    ) -> Self {
        let p = dec.dim();
        let loadings = Matrix::from_fn(p, components, |j, h| dec.vectors[(j, h)]);
        let spectrum = dec.values.clone();
        let kept = &spectrum[..components];
        Self {
            variance_contribution: variance_contribution(kept, p),
            cumulative_contribution: cumulative_contribution(kept, p),
            labels,
            stats,
            loadings,
            spectrum,
        }
    }

    /// A model with explicit loadings (p×m) and eigenvalues (length p), for
    /// applying known components.
    pub fn from_parts(
        labels: Vec<String>,
        stats: SummaryStats<T>,
        loadings: Matrix<T>,
        spectrum: Vec<T>,
    ) -> Result<Self> {
        let p = labels.len();
        if loadings.rows() != p || spectrum.len() != p || stats.means.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "{p} labels, {}x{} loadings, {} eigenvalues",
                loadings.rows(),
                loadings.cols(),
                spectrum.len()
            )));
        }
        let m = loadings.cols();
        if m == 0 || m > p {
            return Err(Error::ComponentsOutOfRange { requested: m, available: p });
        }
        Ok(Self {
            variance_contribution: variance_contribution(&spectrum[..m], p),
            cumulative_contribution: cumulative_contribution(&spectrum[..m], p),
            labels,
            stats,
            loadings,
            spectrum,
        })
    }

    pub fn n_variables(&self) -> usize {
        self.labels.len()
    }

    pub fn n_components(&self) -> usize {
        self.loadings.cols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn stats(&self) -> &SummaryStats<T> {
        &self.stats
    }

    pub fn loadings(&self) -> &Matrix<T> {
        &self.loadings
    }

    pub fn loading_vector(&self, h: usize) -> Vec<T> {
        self.loadings.column(h)
    }

    /// Eigenvalues of the retained components.
    pub fn eigenvalues(&self) -> &[T] {
        &self.spectrum[..self.n_components()]
    }

    /// Every eigenvalue of the correlation matrix, including discarded components.
    pub fn spectrum(&self) -> &[T] {
        &self.spectrum
    }

    pub fn variance_contribution(&self) -> &[T] {
        &self.variance_contribution
    }

    pub fn cumulative_contribution(&self) -> &[T] {
        &self.cumulative_contribution
    }

    /// Q for the full retained set.
    pub fn retained_contribution(&self) -> T {
        *self.cumulative_contribution.last().expect("at least one component")
    }

    /// Correlation between component h and each variable, `sqrt(λ_h) u_hj`.
    pub fn variable_correlations(&self, h: usize) -> Vec<T> {
        let root = self.spectrum[h].max(T::zero()).sqrt();
        self.loading_vector(h).into_iter().map(|u| u * root).collect()
    }

    /// Scores of a raw feature matrix, standardized with the model's statistics.
    pub fn scores(&self, m: &FeatureMatrix<T>) -> Result<ScoreMatrix<T>> {
        self.check_labels(m)?;
        self.scores_standardized(&self.stats.apply(m)?)
    }

    /// Scores of a matrix that is already standardized.
    pub fn scores_standardized(&self, m: &FeatureMatrix<T>) -> Result<ScoreMatrix<T>> {
        self.check_labels(m)?;
        let n = m.n_rows();
        let components = (0..self.n_components())
            .map(|h| {
                m.columns()
                    .iter()
                    .enumerate()
                    .try_fold(FeatureSeries::zeros(n), |acc, (j, y)| acc.add(&y.scale(self.loadings[(j, h)])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreMatrix { row_labels: m.row_labels().to_vec(), components })
    }

    fn check_labels(&self, m: &FeatureMatrix<T>) -> Result<()> {
        if m.col_labels() != self.labels.as_slice() {
            return Err(Error::LabelMismatch { expected: self.labels.clone(), got: m.col_labels().to_vec() });
        }
        Ok(())
    }
}

/// Convenience wrapper for [`PseudoPcModel::fit`].
pub fn fit<T: Scalar>(m: &FeatureMatrix<T>, components: usize) -> Result<PseudoPcModel<T>> {
    PseudoPcModel::fit(m, components)
}

pub fn component_label(h: usize) -> String {
    format!("PC{}", h + 1)
}

/// n observations × m components, each cell a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T> {
    row_labels: Vec<String>,
    components: Vec<FeatureSeries<T>>,
}

impl<T: Scalar> ScoreMatrix<T> {
    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, h: usize) -> &FeatureSeries<T> {
        &self.components[h]
    }

    pub fn components(&self) -> &[FeatureSeries<T>] {
        &self.components
    }

    pub fn to_ohlc(&self) -> Result<ScoreBars<T>> {
        scores_to_ohlc(self)
    }
}

/// Component scores mapped back to bars, stored per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBars<T> {
    row_labels: Vec<String>,
    bars: Vec<Vec<OhlcBar<T>>>,
}

impl<T: Scalar> ScoreBars<T> {
    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn n_components(&self) -> usize {
        self.bars.len()
    }

    pub fn component(&self, h: usize) -> &[OhlcBar<T>] {
        &self.bars[h]
    }

    pub fn direction(&self, i: usize, h: usize) -> Direction {
        self.bars[h][i].direction()
    }

    /// `(entity, bar)` pairs for one component, in row order.
    pub fn labeled(&self, h: usize) -> Vec<(String, OhlcBar<T>)> {
        self.row_labels.iter().cloned().zip(self.bars[h].iter().copied()).collect()
    }
}

pub fn scores_to_ohlc<T: Scalar>(s: &ScoreMatrix<T>) -> Result<ScoreBars<T>> {
    let bars = s
        .components
        .iter()
        .map(|c| c.iter().map(from_feature).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreBars { row_labels: s.row_labels.clone(), bars })
}
