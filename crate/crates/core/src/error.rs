use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{0} diverges at this argument")]
    Divergent(&'static str),

    #[error("Weierstrass function has a pole at u = {0}")]
    Pole(f64),

    #[error("phase equation is singular at |Z| = 1 (Z = {0})")]
    Singular(f64),

    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepSizeUnderflow { s: f64, h: f64 },

    #[error("Z = {0} lies outside the classically allowed region")]
    OutsideAllowedRegion(f64),

    #[error("no real root of the characteristic quartic bounds Z0 = {0}")]
    NoRealRoot(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no local minima found in the fundamental cell")]
    DegenerateLandscape,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}
