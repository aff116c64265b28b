//! Neumaier compensated summation.
//!
//! Every total-variation and pairing sum in the crate goes through these
//! helpers, always in a fixed order, so results do not depend on how the
//! caller schedules work.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a sequence of reals, in iteration order.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Compensated sum of complex values (real and imaginary parts separately).
pub fn sum_complex(values: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for v in values {
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.total(), im.total())
}
