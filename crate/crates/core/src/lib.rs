//! Gauge (Henstock-Kurzweil, "Riemann-complete") integration on finite, structured and
//! infinite-dimensional product domains.
//!
//! The crate builds gauge-fine divisions by successive bisection, validates them, forms
//! Riemann sums of cell functions `h(x, I)`, and applies the machinery to Brownian
//! distribution functions and barrier-payoff expectations.

pub mod domain;
pub mod sum;
pub mod gauge;
pub mod division;
pub mod integrate;
pub mod brownian;
pub mod par;
pub mod cli;
