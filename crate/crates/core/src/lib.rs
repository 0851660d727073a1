//! Principal component analysis for interval-valued OHLC data.
//!
//! Each bar is mapped to an unconstrained vector in R⁴, the bars of a variable
//! form a series in a product space with its own mean and covariance, and the
//! correlation matrix of those series yields components that are again series
//! of bars. The math is generic over [`Scalar`] (`f32` or `f64`); simulation
//! and file IO work in `f64`.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod feature_space;
pub mod io;
pub mod linalg;
pub mod ohlc;
pub mod ppca;
pub mod scalar;
pub mod simulate;

pub use eigen::{orient_signs, symmetric_eigen, EigenDecomposition};
pub use error::{Error, Result};
pub use feature_space::{
    corr_matrix, cov_matrix, sample_corr, sample_cov, sample_mean, sample_var, standardize, CorrMatrix, FeatureMatrix,
    FeatureSeries, SummaryStats,
};
pub use linalg::Matrix;
pub use ohlc::{
    from_feature, preprocess, to_feature, validate_ohlc, ConvexCoeffs, Direction, FeatureVec, FlatPolicy, OhlcBar,
    PreprocessConfig, Preprocessed, Preprocessor, RawBar,
};
pub use ppca::{PseudoPcModel, ScoreBars, ScoreMatrix};
pub use scalar::Scalar;
pub use simulate::{run_study, SimConfig, SimReport, StructuralModel};

pub type OhlcBarF64 = OhlcBar<f64>;
pub type OhlcBarF32 = OhlcBar<f32>;
pub type RawBarF64 = RawBar<f64>;
pub type FeatureVecF64 = FeatureVec<f64>;
pub type FeatureVecF32 = FeatureVec<f32>;
pub type FeatureSeriesF64 = FeatureSeries<f64>;
pub type FeatureMatrixF64 = FeatureMatrix<f64>;
pub type FeatureMatrixF32 = FeatureMatrix<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type PseudoPcModelF64 = PseudoPcModel<f64>;
pub type PseudoPcModelF32 = PseudoPcModel<f32>;
