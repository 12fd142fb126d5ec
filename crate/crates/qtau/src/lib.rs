//! q-deformed conformal blocks and q-Painlevé VI tau functions.
//!
//! The crate evaluates the combinatorial series behind q-Virasoro conformal
//! blocks at `c = 1` and the associated q-PVI tau functions, and checks the
//! identities that connect them: Nekrasov-factor lemmas (exactly, over the
//! rationals), the braiding of degenerate fields, the tau-ratio formulas for
//! the q-PVI unknowns, the bilinear relations, and the structure of the
//! underlying Riemann problem.
//!
//! All numerics are generic over [`Scalar`]; [`Exact`] runs the rational
//! identities and [`C128`] (or any [`Mp`] width) the analytic ones.

pub mod blocks;
pub mod matrix;
pub mod nekrasov;
pub mod partitions;
pub mod qpvi;
pub mod qspecial;
pub mod report;
pub mod riemann;
pub mod scalar;
pub mod tau;

pub use matrix::Matrix2;
pub use partitions::{Partition, PartitionPair};
pub use qspecial::QContext;
pub use report::Report;
pub use scalar::{Analytic, Mode, Mp, Scalar};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;
/// 128-bit complex scalar, the default float mode.
pub type C128 = Mp<128>;
/// 192-bit complex scalar.
pub type C192 = Mp<192>;
/// 256-bit complex scalar.
pub type C256 = Mp<256>;
/// Hardware double-precision complex scalar.
pub type C64 = num_complex::Complex64;
/// Hardware single-precision complex scalar.
pub type C32 = num_complex::Complex32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cannot parse scalar from {0:?}")]
    Parse(String),
    #[error("pole at {0}")]
    Pole(String),
    #[error("resonance: {0}")]
    Resonance(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("singular: {0}")]
    Singular(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Sign label `+` / `-`, mapped to matrix index 0 / 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn int(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn idx(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// `self * x` for a scalar `x`.
    pub fn apply<S: Scalar>(self, x: &S) -> S {
        match self {
            Sign::Plus => x.clone(),
            Sign::Minus => -x.clone(),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}
