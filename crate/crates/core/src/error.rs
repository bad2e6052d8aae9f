use thiserror::Error;

/// Errors surfaced by parameter validation across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{name} = {value} is not finite")]
    NotFinite { name: &'static str, value: f64 },

    #[error("matrix is not unitary (max |U U† - I| entry = {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("state is not normalized (|norm² - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("keys have mismatched lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NotFinite { name, value });
    }
    if value < min || value > max {
        return Err(Error::OutOfRange {
            name,
            value,
            min,
            max,
        });
    }
    Ok(value)
}
