//! Vector-space algebra over sequences of feature vectors and the sample
//! statistics built on it.
//!
//! A [`FeatureSeries`] is one variable observed `n` times; each observation is a
//! 4-vector. The inner product sums over observations and all four channels.
//! Covariance uses the `1/(4n)` normalisation throughout, so for standardized
//! inputs a linear combination with unit weights `u` has variance `uᵀWu`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ohlc::FeatureVec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSeries<T> {
    entries: Vec<FeatureVec<T>>,
}

impl<T: Scalar> FeatureSeries<T> {
    pub fn new(entries: Vec<FeatureVec<T>>) -> Self {
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: vec![FeatureVec::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FeatureVec<T>] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureVec<T>> {
        self.entries.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(FeatureVec::is_finite)
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    /// `self ⊕ other`
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::new(self.entries.iter().zip(&other.entries).map(|(a, b)| *a + *b).collect()))
    }

    /// `beta ⊗ self`
    pub fn scale(&self, beta: T) -> Self {
        Self::new(self.entries.iter().map(|a| a.scale(beta)).collect())
    }

    /// `self ⊖ other = self ⊕ (−1) ⊗ other`
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_len(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a.dot(b)).sum())
    }

    pub fn mean(&self) -> Result<FeatureVec<T>> {
        if self.is_empty() {
            return Err(Error::EmptySeries);
        }
        let mut total = FeatureVec::zero();
        for e in &self.entries {
            total += *e;
        }
        Ok(total.scale(T::one() / count::<T>(self.len())))
    }

    /// The series minus its mean vector.
    pub fn centered(&self) -> Result<Self> {
        let mean = self.mean()?;
        Ok(Self::new(self.entries.iter().map(|e| *e - mean).collect()))
    }

    pub fn variance(&self) -> Result<T> {
        sample_cov(self, self)
    }

    fn is_constant(&self) -> bool {
        self.entries.windows(2).all(|w| w[0] == w[1])
    }
}

fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable")
}

pub fn series_add<T: Scalar>(a: &FeatureSeries<T>, b: &FeatureSeries<T>) -> Result<FeatureSeries<T>> {
    a.add(b)
}

pub fn series_scale<T: Scalar>(beta: T, a: &FeatureSeries<T>) -> FeatureSeries<T> {
    a.scale(beta)
}

pub fn series_subtract<T: Scalar>(a: &FeatureSeries<T>, b: &FeatureSeries<T>) -> Result<FeatureSeries<T>> {
    a.sub(b)
}

pub fn series_inner<T: Scalar>(a: &FeatureSeries<T>, b: &FeatureSeries<T>) -> Result<T> {
    a.inner(b)
}

pub fn sample_mean<T: Scalar>(a: &FeatureSeries<T>) -> Result<FeatureVec<T>> {
    a.mean()
}

/// `S_ab = (1/(4n)) Σᵢ ⟨aᵢ − ā, bᵢ − b̄⟩`
pub fn sample_cov<T: Scalar>(a: &FeatureSeries<T>, b: &FeatureSeries<T>) -> Result<T> {
    a.check_len(b)?;
    let (ca, cb) = (a.centered()?, b.centered()?);
    Ok(ca.inner(&cb)? / (T::lit(4.0) * count::<T>(a.len())))
}

pub fn sample_var<T: Scalar>(a: &FeatureSeries<T>) -> Result<T> {
    sample_cov(a, a)
}

pub fn sample_corr<T: Scalar>(a: &FeatureSeries<T>, b: &FeatureSeries<T>) -> Result<T> {
    let (va, vb) = (sample_var(a)?, sample_var(b)?);
    if va <= T::zero() || a.is_constant() {
        return Err(Error::ZeroVariance("left".into()));
    }
    if vb <= T::zero() || b.is_constant() {
        return Err(Error::ZeroVariance("right".into()));
    }
    Ok(sample_cov(a, b)? / (va.sqrt() * vb.sqrt()))
}

/// `n` observations of `p` feature variables, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    columns: Vec<FeatureSeries<T>>,
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn from_columns(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        columns: Vec<FeatureSeries<T>>,
    ) -> Result<Self> {
        if col_labels.len() != columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} column labels for {} columns",
                col_labels.len(),
                columns.len()
            )));
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != row_labels.len()) {
            return Err(Error::ShapeMismatch(format!(
                "column of length {} with {} row labels",
                bad.len(),
                row_labels.len()
            )));
        }
        check_unique(&row_labels)?;
        check_unique(&col_labels)?;
        Ok(Self { row_labels, col_labels, columns })
    }

    /// Builds a matrix from row-major cells (`rows[i][j]` is observation `i` of variable `j`).
    pub fn from_rows(row_labels: Vec<String>, col_labels: Vec<String>, rows: &[Vec<FeatureVec<T>>]) -> Result<Self> {
        let p = col_labels.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::ShapeMismatch(format!("row of length {} with {p} columns", bad.len())));
        }
        let columns = (0..p).map(|j| FeatureSeries::new(rows.iter().map(|r| r[j]).collect())).collect();
        Self::from_columns(row_labels, col_labels, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn columns(&self) -> &[FeatureSeries<T>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &FeatureSeries<T> {
        &self.columns[j]
    }

    pub fn cell(&self, i: usize, j: usize) -> FeatureVec<T> {
        self.columns[j].entries[i]
    }

    fn check_nonconstant(&self) -> Result<Vec<T>> {
        self.columns
            .iter()
            .zip(&self.col_labels)
            .map(|(c, label)| {
                let var = sample_var(c)?;
                if c.is_constant() || var <= T::zero() {
                    Err(Error::ZeroVariance(label.clone()))
                } else {
                    Ok(var)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats<T> {
    pub means: Vec<FeatureVec<T>>,
    pub variances: Vec<T>,
}

impl<T: Scalar> SummaryStats<T> {
    pub fn std_dev(&self, j: usize) -> T {
        self.variances[j].sqrt()
    }

    /// Statistics that leave a matrix unchanged.
    pub fn identity(p: usize) -> Self {
        Self { means: vec![FeatureVec::zero(); p], variances: vec![T::one(); p] }
    }

    /// `y* = (y − Ȳ_j) / S_j` with these stored statistics.
    pub fn apply(&self, m: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        if m.n_cols() != self.means.len() {
            return Err(Error::ShapeMismatch(format!("{} columns, statistics for {}", m.n_cols(), self.means.len())));
        }
        let columns = m
            .columns
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let (mean, inv_sd) = (self.means[j], T::one() / self.std_dev(j));
                FeatureSeries::new(col.iter().map(|e| (*e - mean).scale(inv_sd)).collect())
            })
            .collect();
        FeatureMatrix::from_columns(m.row_labels.clone(), m.col_labels.clone(), columns)
    }

    /// Inverse of [`SummaryStats::apply`].
    pub fn restore(&self, m: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        let columns = m
            .columns
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let (mean, sd) = (self.means[j], self.std_dev(j));
                FeatureSeries::new(col.iter().map(|e| e.scale(sd) + mean).collect())
            })
            .collect();
        FeatureMatrix::from_columns(m.row_labels.clone(), m.col_labels.clone(), columns)
    }
}

/// Covariance matrix Σ and correlation matrix W of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix<T> {
    pub cov: Matrix<T>,
    pub corr: Matrix<T>,
}

pub fn cov_matrix<T: Scalar>(m: &FeatureMatrix<T>) -> Result<Matrix<T>> {
    let p = m.n_cols();
    if m.n_rows() == 0 {
        return Err(Error::EmptySeries);
    }
    let centered = m.columns.iter().map(FeatureSeries::centered).collect::<Result<Vec<_>>>()?;
    let norm = T::lit(4.0) * count::<T>(m.n_rows());
    let mut cov = Matrix::zeros(p, p);
    for j in 0..p {
        for k in j..p {
            let s = centered[j].inner(&centered[k])? / norm;
            cov[(j, k)] = s;
            cov[(k, j)] = s;
        }
    }
    Ok(cov)
}

pub fn corr_matrix<T: Scalar>(m: &FeatureMatrix<T>) -> Result<CorrMatrix<T>> {
    m.check_nonconstant()?;
    let cov = cov_matrix(m)?;
    let p = cov.rows();
    let sd: Vec<T> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    let corr = Matrix::from_fn(p, p, |j, k| {
        if j == k {
            T::one()
        } else {
            let (a, b) = if j < k { (j, k) } else { (k, j) };
            cov[(a, b)] / (sd[a] * sd[b])
        }
    });
    Ok(CorrMatrix { cov, corr })
}

pub fn standardize<T: Scalar>(m: &FeatureMatrix<T>) -> Result<(FeatureMatrix<T>, SummaryStats<T>)> {
    let variances = m.check_nonconstant()?;
    let means = m.columns.iter().map(FeatureSeries::mean).collect::<Result<Vec<_>>>()?;
    let stats = SummaryStats { means, variances };
    Ok((stats.apply(m)?, stats))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn fv(v: [f64; 4]) -> FeatureVec<f64> {
        FeatureVec(v)
    }

    fn series(rows: &[[f64; 4]]) -> FeatureSeries<f64> {
        FeatureSeries::new(rows.iter().copied().map(FeatureVec).collect())
    }

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrix(cols: Vec<FeatureSeries<f64>>) -> FeatureMatrix<f64> {
        let n = cols[0].len();
        FeatureMatrix::from_columns(labels("r", n), labels("Y", cols.len()), cols).unwrap()
    }

    #[test]
    fn addition_examples() {
        let a = series(&[[1., 0., 0., 0.]]);
        let b = series(&[[0., 1., 0., 0.]]);
        assert_eq!(series_add(&a, &b).unwrap(), series(&[[1., 1., 0., 0.]]));
        assert_eq!(series_add(&a, &FeatureSeries::zeros(1)).unwrap(), a);
        let a = series(&[[1., 2., 3., 4.], [0., 0., 0., 0.]]);
        let b = series(&[[1., 1., 1., 1.], [2., 2., 2., 2.]]);
        assert_eq!(series_add(&a, &b).unwrap(), series(&[[2., 3., 4., 5.], [2., 2., 2., 2.]]));
        assert_eq!(series_add(&a, &FeatureSeries::zeros(3)), Err(Error::LengthMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn scaling_and_subtraction() {
        let a = series(&[[1., 2., 3., 4.]]);
        assert_eq!(series_scale(0.0, &a), FeatureSeries::zeros(1));
        assert_eq!(series_scale(1.0, &a), a);
        assert_eq!(series_scale(2.0, &a), series(&[[2., 4., 6., 8.]]));
        assert_eq!(series_subtract(&a, &a).unwrap(), FeatureSeries::zeros(1));
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(series_inner(&series(&[[1., 0., 0., 0.]]), &series(&[[0., 1., 0., 0.]])).unwrap(), 0.0);
        let ones = series(&[[1.; 4]]);
        assert_eq!(series_inner(&ones, &ones).unwrap(), 4.0);
        let a = series(&[[1.; 4], [-1.; 4]]);
        let b = series(&[[2.; 4], [-2.; 4]]);
        assert_eq!(series_inner(&a, &b).unwrap(), 16.0);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(sample_mean(&series(&[[1.; 4], [-1.; 4]])).unwrap(), FeatureVec::zero());
        assert_eq!(sample_mean(&series(&[[2., 3., 4., 5.]])).unwrap(), fv([2., 3., 4., 5.]));
        assert_eq!(sample_mean(&series(&[[1., 2., 3., 4.], [3., 2., 1., 0.]])).unwrap(), fv([2.; 4]));
        assert_eq!(sample_mean(&FeatureSeries::<f64>::zeros(0)), Err(Error::EmptySeries));
    }

    #[test]
    fn covariance_examples() {
        let a = series(&[[1.; 4], [-1.; 4]]);
        assert_eq!(sample_var(&a).unwrap(), 1.0);
        let b = series_scale(2.0, &a);
        assert_eq!(sample_cov(&a, &b).unwrap(), 2.0);
        assert!((sample_corr(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(sample_cov(&a, &FeatureSeries::zeros(2)).unwrap(), 0.0);
        assert!(matches!(sample_corr(&a, &FeatureSeries::zeros(2)), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn correlation_matrix_examples() {
        let a = series(&[[1., 2., 0., 1.], [-1., 0.5, 3., 2.], [0., 0., 1., 1.]]);
        let w = corr_matrix(&matrix(vec![a.clone()])).unwrap();
        assert_eq!(w.corr, Matrix::identity(1));
        let w = corr_matrix(&matrix(vec![a.clone(), a.clone()])).unwrap();
        assert!(w.corr.max_abs_diff(&Matrix::from_rows(&[vec![1., 1.], vec![1., 1.]]).unwrap()) < 1e-15);
        let constant = series(&[[0.1, 0.2, 0.3, 0.4]; 3]);
        assert_eq!(corr_matrix(&matrix(vec![a, constant])), Err(Error::ZeroVariance("Y2".into())));
    }

    #[test]
    fn standardize_examples() {
        let a = series(&[[1.; 4], [-1.; 4]]);
        let (s, stats) = standardize(&matrix(vec![a.clone()])).unwrap();
        assert_eq!(s.column(0), &a);
        assert_eq!(stats.std_dev(0), 1.0);

        let b = series(&[[3.; 4], [1.; 4]]);
        let (s, stats) = standardize(&matrix(vec![b.clone()])).unwrap();
        assert_eq!(s.column(0), &a);
        assert_eq!(stats.means[0], fv([2.; 4]));
        assert_eq!(stats.restore(&s).unwrap(), matrix(vec![b]));

        let (again, _) = standardize(&s).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let c = FeatureSeries::<f64>::zeros(2);
        let err = FeatureMatrix::from_columns(vec!["a".into(), "a".into()], vec!["Y".into()], vec![c]);
        assert_eq!(err, Err(Error::DuplicateLabel("a".into())));
    }

    fn brute_cov(a: &FeatureSeries<f64>, b: &FeatureSeries<f64>) -> f64 {
        let n = a.len();
        let mut ma = [0.0; 4];
        let mut mb = [0.0; 4];
        for i in 0..n {
            for d in 0..4 {
                ma[d] += a.entries()[i][d] / n as f64;
                mb[d] += b.entries()[i][d] / n as f64;
            }
        }
        let mut s = 0.0;
        for i in 0..n {
            for d in 0..4 {
                s += (a.entries()[i][d] - ma[d]) * (b.entries()[i][d] - mb[d]);
            }
        }
        s / (4.0 * n as f64)
    }

    fn series_strategy(n: usize) -> impl Strategy<Value = FeatureSeries<f64>> {
        prop::collection::vec(prop::array::uniform4(-10.0f64..10.0), n)
            .prop_map(|v| FeatureSeries::new(v.into_iter().map(FeatureVec).collect()))
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn inner_product_axioms(
            (a, b, c) in (1usize..20).prop_flat_map(|n| (series_strategy(n), series_strategy(n), series_strategy(n))),
            beta in -5.0f64..5.0,
        ) {
            let aa = series_inner(&a, &a).unwrap();
            prop_assert!(aa >= 0.0);
            prop_assert_eq!(series_inner(&FeatureSeries::<f64>::zeros(a.len()), &FeatureSeries::zeros(a.len())).unwrap(), 0.0);
            if a.iter().any(|e| e.0.iter().any(|v| *v != 0.0)) {
                prop_assert!(aa > 0.0);
            }
            prop_assert!(close(series_inner(&a, &b).unwrap(), series_inner(&b, &a).unwrap(), 1e-10));
            let lhs = series_inner(&a, &series_add(&b, &c).unwrap()).unwrap();
            let rhs = series_inner(&a, &b).unwrap() + series_inner(&a, &c).unwrap();
            prop_assert!(close(lhs, rhs, 1e-10));
            let lhs = series_inner(&series_scale(beta, &a), &b).unwrap();
            prop_assert!(close(lhs, beta * series_inner(&a, &b).unwrap(), 1e-10));
        }

        #[test]
        fn cov_matches_double_loop((a, b) in (1usize..=20).prop_flat_map(|n| (series_strategy(n), series_strategy(n)))) {
            prop_assert!(close(sample_cov(&a, &b).unwrap(), brute_cov(&a, &b), 1e-12));
        }

        #[test]
        fn standardized_moments_and_cauchy_schwarz(
            cols in (2usize..15, 1usize..6).prop_flat_map(|(n, p)| prop::collection::vec(series_strategy(n), p))
        ) {
            let m = matrix(cols);
            let (s, _) = standardize(&m).unwrap();
            for col in s.columns() {
                prop_assert!(col.mean().unwrap().max_abs_diff(&FeatureVec::zero()) < 1e-12);
                prop_assert!((sample_var(col).unwrap() - 1.0).abs() < 1e-12);
            }
            let w = corr_matrix(&s).unwrap();
            prop_assert!(w.corr.max_abs_diff(&w.cov) < 1e-12);
            let raw = corr_matrix(&m).unwrap();
            let p = m.n_cols();
            for j in 0..p {
                for k in 0..p {
                    let bound = (raw.cov[(j, j)] * raw.cov[(k, k)]).sqrt();
                    prop_assert!(raw.cov[(j, k)].abs() <= bound + 1e-12 * bound.max(1.0));
                    prop_assert!(raw.corr[(j, k)].abs() <= 1.0 + 1e-12);
                }
            }
        }
    }
}
