//! The 20-market by 6-food price table bundled with the crate.

use crate::error::Result;
use crate::io::table::{parse_feature_str, parse_ohlc_str, FeatureTable, OhlcTable};

pub const RAW_OHLC_CSV: &str = include_str!("../../fixtures/raw_ohlc.csv");
pub const FEATURES_STD_CSV: &str = include_str!("../../fixtures/features_std.csv");
pub const MARKETS_CSV: &str = include_str!("../../fixtures/markets.csv");

pub fn raw_ohlc() -> Result<OhlcTable> {
    parse_ohlc_str("raw_ohlc.csv", RAW_OHLC_CSV)
}

/// Standardized features rounded to two decimals.
pub fn features_std() -> Result<FeatureTable> {
    parse_feature_str("features_std.csv", FEATURES_STD_CSV)
}

/// `(full name, abbreviation)` pairs.
pub fn markets() -> Vec<(String, String)> {
    let mut reader = csv::Reader::from_reader(MARKETS_CSV.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r.expect("bundled markets table is valid");
            (r[0].to_string(), r[1].to_string())
        })
        .collect()
}
