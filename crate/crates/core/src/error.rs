use thiserror::Error;

/// Errors produced while loading, validating or evaluating a scene.
#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("scene validation failed: {0}")]
    Validation(String),
    #[error("point ({x}, {y}, {z}) is outside the domain")]
    OutsideDomain { x: f64, y: f64, z: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Errors from closed-form ellipsoid reconstruction.
#[derive(Debug, Error, PartialEq)]
pub enum EllipsoidError {
    #[error("degenerate ellipsoid: travel distance {path} does not exceed focal distance {focal}")]
    Degenerate { path: f64, focal: f64 },
}

/// Errors raised by the event analyzer.
#[derive(Debug, Error, PartialEq)]
pub enum AnalyzerError {
    #[error(
        "protocol violation: frequency {xi} transmitted more than once in period [{start}, {end}]"
    )]
    DuplicateFrequency { xi: u32, start: f64, end: f64 },
    #[error("palette error: {0}")]
    Palette(String),
}

/// Errors from reading or writing the on-disk formats.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error: {0}")]
    Format(String),
}
