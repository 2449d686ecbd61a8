use serde::{Deserialize, Serialize};

use crate::domain::{Cell1D, ExtReal};

/// The `(s, q)`-binary cells of the real line: `]-inf, -q]`, the dyadic cells of width
/// `2^-q` covering `]-q, q]`, and `]q, +inf[`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCellScheme {
    pub q: u32,
}

impl BinaryCellScheme {
    pub fn new(q: u32) -> Self {
        assert!((1..=20).contains(&q), "binary depth must be in 1..=20");
        BinaryCellScheme { q }
    }

    pub fn cells(&self) -> Vec<Cell1D> {
        let q = self.q as f64;
        let w = (-(self.q as f64)).exp2();
        let n = (self.q as i64) << self.q;
        let mut out = Vec::with_capacity(2 * n as usize + 2);
        out.push(Cell1D::new(ExtReal::NegInf, -q).expect("valid tail"));
        for s in -n..n {
            out.push(Cell1D::new(s as f64 * w, (s + 1) as f64 * w).expect("valid dyadic cell"));
        }
        out.push(Cell1D::new(q, ExtReal::PosInf).expect("valid tail"));
        out
    }

    /// The cell of the scheme that contains `x`.
    pub fn locate(&self, x: f64) -> Cell1D {
        let q = self.q as f64;
        if x <= -q {
            return Cell1D::new(ExtReal::NegInf, -q).expect("valid tail");
        }
        if x > q {
            return Cell1D::new(q, ExtReal::PosInf).expect("valid tail");
        }
        let scale = (self.q as f64).exp2();
        let s = (x * scale).ceil() - 1.0;
        Cell1D::new(s / scale, (s + 1.0) / scale).expect("valid dyadic cell")
    }
}
