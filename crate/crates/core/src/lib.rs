//! Generalized Cantor integers and the distribution of their normalized
//! sequence `b_n = a_n / n^(log_s p)`.

pub mod certified;
pub mod digits;
pub mod distribution;
pub mod error;
pub mod hiprec;
pub mod limitfn;
pub mod linearcase;
pub mod measure;
pub mod sary;
pub mod sequence;

pub use certified::{CertifiedValue, Cmp, Interval, PowerTerm, Precision, Truth};
pub use digits::{BigNat, CantorSystem, DigitString};
pub use error::{Error, Result};
pub use num_rational::BigRational;
