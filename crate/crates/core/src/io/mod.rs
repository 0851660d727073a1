//! CSV tables, model output files, SVG charts and the bundled data sets.

pub mod fixtures;
pub mod svg;
pub mod table;

pub use svg::{render_candlestick_svg, render_loading_svg, render_scree_svg, ChartSpec};
pub use table::{
    fmt_sig6, parse_feature_csv, parse_ohlc_csv, read_eigenvalues, read_loadings, read_scores_ohlc, write_feature_csv,
    write_model, write_ohlc_csv, EigenRow, FeatureRecord, FeatureTable, LoadingRow, ModelFiles, OhlcRecord, OhlcTable,
    Pivot, ScoreRow,
};
