//! Compensated summation (Kahan-Babuska / Neumaier).

use std::iter::Sum;
use std::ops::{Add, AddAssign};

/// Running sum that carries the rounding error of every addition in a separate term.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, err)
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> f64 {
        self.s + self.c
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        let (s, e) = two_sum(self.s, rhs);
        self.s = s;
        self.c += e;
    }
}

impl Add for NeumaierSum {
    type Output = NeumaierSum;

    /// Merges two partial sums, e.g. from separate workers.
    fn add(mut self, rhs: NeumaierSum) -> NeumaierSum {
        self += rhs.s;
        self += rhs.c;
        self
    }
}

impl Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// Compensated sum of an iterator of terms.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    terms.into_iter().sum::<NeumaierSum>().total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    #[test]
    fn recovers_cancelled_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(terms), 2.0);
        assert_eq!(terms.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn million_tenths() {
        let s = compensated_sum(std::iter::repeat(0.1).take(1_000_000));
        assert!((s - 100_000.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn permutations_agree(
            xs in proptest::collection::vec(-1e6f64..1e6, 1..400),
            seed in any::<u64>(),
        ) {
            let a = compensated_sum(xs.iter().copied());
            let mut ys = xs.clone();
            ys.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = compensated_sum(ys.iter().copied());
            let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            let bound = 2.0 * f64::EPSILON * a.abs() + xs.len() as f64 * f64::EPSILON * f64::EPSILON * scale;
            prop_assert!((a - b).abs() <= bound);
        }

        #[test]
        fn merged_partials_match_sequential(xs in proptest::collection::vec(-1e3f64..1e3, 2..200), cut in 1usize..100) {
            let cut = cut.min(xs.len() - 1);
            let whole = compensated_sum(xs.iter().copied());
            let l: NeumaierSum = xs[..cut].iter().copied().sum();
            let r: NeumaierSum = xs[cut..].iter().copied().sum();
            prop_assert!(((l + r).total() - whole).abs() <= 1e-9);
        }
    }
}
