//! Compensated (Neumaier) summation.

use std::iter::Sum;
use std::ops::AddAssign;

/// Running sum carrying the rounding error of every addition.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for Neumaier {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl Sum<f64> for Neumaier {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn csum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<Neumaier>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_next_to_large_ones() {
        let v = [1e100, 1.0, -1e100];
        assert_eq!(csum(v), 1.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn tenths() {
        let s = csum(std::iter::repeat_n(0.1, 10));
        assert_eq!(s, 1.0);
    }
}
