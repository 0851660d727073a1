//! OHLC bars, the degenerate-bar preprocessing rules, and the bijective
//! feature transform between constrained bars and unconstrained 4-vectors.
//!
//! A bar `(open, high, low, close)` maps to
//!
//! ```text
//! y1 = ln(low)
//! y2 = ln(high - low)
//! y3 = logit(λo),  λo = (open  - low) / (high - low)
//! y4 = logit(λc),  λc = (close - low) / (high - low)
//! ```
//!
//! and back through `exp` and the logistic function.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relaxed price tuple as read from a data source, before any validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawBar<T> {
    pub open: T,
    pub high: T,
    pub low: T,
    pub close: T,
}

impl<T: Scalar> RawBar<T> {
    pub fn new(open: T, high: T, low: T, close: T) -> Self {
        Self { open, high, low, close }
    }

    fn fields(&self) -> [(&'static str, T); 4] {
        [("open", self.open), ("high", self.high), ("low", self.low), ("close", self.close)]
    }
}

/// A validated OHLC bar: `low > 0`, `low < high`, and open/close inside `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcBar<T> {
    open: T,
    high: T,
    low: T,
    close: T,
}

/// Candle body colour class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// close > open
    Bull,
    /// open > close
    Bear,
    Neutral,
}

impl<T: Scalar> OhlcBar<T> {
    pub fn new(open: T, high: T, low: T, close: T) -> Result<Self> {
        validate_ohlc(RawBar::new(open, high, low, close))
    }

    pub fn open(&self) -> T {
        self.open
    }

    pub fn high(&self) -> T {
        self.high
    }

    pub fn low(&self) -> T {
        self.low
    }

    pub fn close(&self) -> T {
        self.close
    }

    pub fn range(&self) -> T {
        self.high - self.low
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.open, self.high, self.low, self.close]
    }

    pub fn raw(&self) -> RawBar<T> {
        RawBar::new(self.open, self.high, self.low, self.close)
    }

    pub fn direction(&self) -> Direction {
        if self.close > self.open {
            Direction::Bull
        } else if self.open > self.close {
            Direction::Bear
        } else {
            Direction::Neutral
        }
    }

    pub fn coeffs(&self) -> ConvexCoeffs<T> {
        let range = self.range();
        ConvexCoeffs { lambda_open: (self.open - self.low) / range, lambda_close: (self.close - self.low) / range }
    }

    /// Largest relative deviation between the four prices of two bars.
    pub fn max_rel_diff(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (*a - b).abs() / a.abs().max(b.abs()))
            .fold(T::zero(), T::max)
    }
}

/// Position of the open and close prices inside `[low, high]` as fractions of the range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexCoeffs<T> {
    pub lambda_open: T,
    pub lambda_close: T,
}

impl<T: Scalar> ConvexCoeffs<T> {
    /// Rebuilds `(open, close)` as convex combinations of `high` and `low`.
    pub fn prices(&self, low: T, high: T) -> (T, T) {
        (convex(self.lambda_open, low, high), convex(self.lambda_close, low, high))
    }

    pub fn is_interior(&self) -> bool {
        let inside = |l: T| l > T::zero() && l < T::one();
        inside(self.lambda_open) && inside(self.lambda_close)
    }
}

fn convex<T: Scalar>(lambda: T, low: T, high: T) -> T {
    lambda * high + (T::one() - lambda) * low
}

/// Checks the three OHLC constraints. Open or close sitting exactly on a bound is
/// allowed here; [`to_feature`] rejects those separately.
pub fn validate_ohlc<T: Scalar>(raw: RawBar<T>) -> Result<OhlcBar<T>> {
    if let Some((field, v)) = raw.fields().into_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{field} = {v}")));
    }
    let RawBar { open, high, low, close } = raw;
    if low <= T::zero() {
        return Err(Error::NonPositiveLow { low: low.to_f64_lossy() });
    }
    if high <= low {
        return Err(Error::DegenerateRange { high: high.to_f64_lossy(), low: low.to_f64_lossy() });
    }
    for (which, value) in [("open", open), ("close", close)] {
        if value < low || value > high {
            return Err(Error::OutOfRangeOpenClose {
                which,
                value: value.to_f64_lossy(),
                low: low.to_f64_lossy(),
                high: high.to_f64_lossy(),
            });
        }
    }
    Ok(OhlcBar { open, high, low, close })
}

/// Unconstrained feature representation `(y1, y2, y3, y4)` of a bar.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVec<T>(pub [T; 4]);

impl<T: Scalar> FeatureVec<T> {
    pub fn new(y1: T, y2: T, y3: T, y4: T) -> Self {
        Self([y1, y2, y3, y4])
    }

    pub fn zero() -> Self {
        Self([T::zero(); 4])
    }

    pub fn splat(v: T) -> Self {
        Self([v; 4])
    }

    /// Log of the low price.
    pub fn y1(&self) -> T {
        self.0[0]
    }

    /// Log of the high-low range.
    pub fn y2(&self) -> T {
        self.0[1]
    }

    /// Log-odds of the open position.
    pub fn y3(&self) -> T {
        self.0[2]
    }

    /// Log-odds of the close position.
    pub fn y4(&self) -> T {
        self.0[3]
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(a, b)| *a * *b).sum()
    }

    pub fn scale(&self, beta: T) -> Self {
        Self(self.0.map(|v| v * beta))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
    }
}

impl<T: Scalar> Add for FeatureVec<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|d| self.0[d] + rhs.0[d]))
    }
}

impl<T: Scalar> AddAssign for FeatureVec<T> {
    fn add_assign(&mut self, rhs: Self) {
        for d in 0..4 {
            self.0[d] += rhs.0[d];
        }
    }
}

impl<T: Scalar> Sub for FeatureVec<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|d| self.0[d] - rhs.0[d]))
    }
}

impl<T: Scalar> Neg for FeatureVec<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self(self.0.map(|v| -v))
    }
}

impl<T: Scalar> Mul<T> for FeatureVec<T> {
    type Output = Self;

    fn mul(self, beta: T) -> Self {
        self.scale(beta)
    }
}

impl<T> Index<usize> for FeatureVec<T> {
    type Output = T;

    fn index(&self, d: usize) -> &T {
        &self.0[d]
    }
}

/// Maps a bar to its feature vector.
pub fn to_feature<T: Scalar>(bar: &OhlcBar<T>) -> Result<FeatureVec<T>> {
    let log_odds = |which: &'static str, price: T| {
        let below = price - bar.low;
        let above = bar.high - price;
        if below <= T::zero() || above <= T::zero() {
            let lambda = if below <= T::zero() { 0.0 } else { 1.0 };
            return Err(Error::DegenerateLambda { which, lambda });
        }
        // λ/(1-λ) written with the price gaps directly keeps precision near the bounds.
        Ok((below / above).ln())
    };
    let fv =
        FeatureVec::new(bar.low.ln(), bar.range().ln(), log_odds("open", bar.open)?, log_odds("close", bar.close)?);
    if !fv.is_finite() {
        return Err(Error::NonFinite(format!("feature vector {:?}", fv.0)));
    }
    Ok(fv)
}

/// Logistic function split by sign so neither branch overflows.
pub(crate) fn logistic<T: Scalar>(y: T) -> T {
    if y >= T::zero() {
        T::one() / (T::one() + (-y).exp())
    } else {
        let e = y.exp();
        e / (T::one() + e)
    }
}

/// Maps a feature vector back to the unique bar it represents.
pub fn from_feature<T: Scalar>(fv: &FeatureVec<T>) -> Result<OhlcBar<T>> {
    if !fv.is_finite() {
        return Err(Error::NonFinite(format!("feature vector {:?}", fv.0)));
    }
    let low = fv.y1().exp();
    let range = fv.y2().exp();
    let high = low + range;
    if low <= T::zero() || !high.is_finite() {
        return Err(Error::NonFinite(format!("exp overflow/underflow for {:?}", fv.0)));
    }
    if high <= low {
        return Err(Error::RangeBelowResolution { low: low.to_f64_lossy(), range: range.to_f64_lossy() });
    }
    let place = |y: T| {
        let price = if y <= T::zero() { low + range * logistic(y) } else { high - range * logistic(-y) };
        price.max(low).min(high)
    };
    Ok(OhlcBar { open: place(fv.y3()), high, low, close: place(fv.y4()) })
}

/// Direction used to widen an all-equal bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlatPolicy {
    /// Scale close and high by 1.1.
    #[default]
    LimitUp,
    /// Scale open and high by 1.1.
    LimitDown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Replacement for a convex coefficient that sits on 0 (or 1 − epsilon for 1).
    pub epsilon: f64,
    pub flat_policy: FlatPolicy,
    /// When set, nudges are drawn uniformly from `[epsilon/2, epsilon)` with this seed.
    pub jitter_seed: Option<u64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { epsilon: 0.01, flat_policy: FlatPolicy::LimitUp, jitter_seed: None }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 0.5), got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preprocessed<T> {
    Bar(OhlcBar<T>),
    /// All four prices were zero (trading suspension).
    Dropped,
}

impl<T> Preprocessed<T> {
    pub fn bar(self) -> Option<OhlcBar<T>> {
        match self {
            Preprocessed::Bar(b) => Some(b),
            Preprocessed::Dropped => None,
        }
    }
}

const FLAT_WIDENING: f64 = 1.1;

/// Applies the preprocessing rules to a stream of bars. Holds the jitter
/// generator so a whole table draws from one seeded sequence.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    rng: Option<ChaCha8Rng>,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Result<Self> {
        config.validate()?;
        let rng = config.jitter_seed.map(ChaCha8Rng::seed_from_u64);
        Ok(Self { config, rng })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    fn nudge(&mut self) -> f64 {
        let eps = self.config.epsilon;
        match &mut self.rng {
            Some(rng) => rng.random_range(eps / 2.0..eps),
            None => eps,
        }
    }

    pub fn apply<T: Scalar>(&mut self, raw: RawBar<T>) -> Result<Preprocessed<T>> {
        for (field, value) in raw.fields() {
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("{field} = {value}")));
            }
            if value < T::zero() {
                return Err(Error::NegativePrice { field, value: value.to_f64_lossy() });
            }
        }
        let RawBar { mut open, mut high, low, mut close } = raw;
        let flat = open == high && high == low && low == close;
        if flat && low == T::zero() {
            return Ok(Preprocessed::Dropped);
        }
        if flat {
            let widen = T::lit(FLAT_WIDENING);
            match self.config.flat_policy {
                FlatPolicy::LimitUp => close *= widen,
                FlatPolicy::LimitDown => open *= widen,
            }
            high *= widen;
        }
        if low <= T::zero() {
            return Err(Error::NonPositiveLow { low: low.to_f64_lossy() });
        }
        for (which, value) in [("open", open), ("close", close)] {
            if value < low || value > high {
                return Err(Error::InconsistentBounds {
                    which,
                    value: value.to_f64_lossy(),
                    low: low.to_f64_lossy(),
                    high: high.to_f64_lossy(),
                });
            }
        }
        let range = high - low;
        open = self.interior(open, low, high, range);
        close = self.interior(close, low, high, range);
        let bar = validate_ohlc(RawBar::new(open, high, low, close))?;
        if !bar.coeffs().is_interior() || open == low || open == high || close == low || close == high {
            return Err(Error::RangeBelowResolution { low: low.to_f64_lossy(), range: range.to_f64_lossy() });
        }
        Ok(Preprocessed::Bar(bar))
    }

    fn interior<T: Scalar>(&mut self, price: T, low: T, high: T, range: T) -> T {
        let lambda = (price - low) / range;
        if lambda <= T::zero() {
            convex(T::lit(self.nudge()), low, high)
        } else if lambda >= T::one() {
            convex(T::one() - T::lit(self.nudge()), low, high)
        } else {
            price
        }
    }
}

/// Preprocesses a single bar with a fresh [`Preprocessor`].
pub fn preprocess<T: Scalar>(raw: RawBar<T>, config: &PreprocessConfig) -> Result<Preprocessed<T>> {
    Preprocessor::new(config.clone())?.apply(raw)
}
