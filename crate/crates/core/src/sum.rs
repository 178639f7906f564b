//! Exactly-rounded floating-point accumulation.
//!
//! Outcome scores are compared for ties, and identical multisets of entry
//! scores must produce bit-identical totals regardless of the row order they
//! arrive in. [`ExactSum`] keeps a list of non-overlapping partials (Shewchuk's
//! algorithm, as used by Python's `math.fsum`) and rounds once at the end, so
//! the result is the correctly rounded value of the exact sum.

#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.partials.clear();
    }

    /// Adds a finite value.
    #[inline]
    pub fn add(&mut self, mut x: f64) {
        let mut kept = 0;
        for k in 0..self.partials.len() {
            let mut y = self.partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    /// Correctly rounded value of the exact running sum.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            n -= 1;
            let x = hi;
            let y = p[n];
            hi = x + y;
            let y_rounded = hi - x;
            lo = y - y_rounded;
            if lo != 0.0 {
                break;
            }
        }
        // Half-way case: the remaining partials decide the rounding direction.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }

    /// Exact sum divided by `count`, with one residual correction step so
    /// that a sum of `count` copies of `t` yields exactly `t`.
    pub fn mean(&self, count: usize) -> f64 {
        let n = count as f64;
        let q = self.value() / n;
        let h = q * n;
        let l = q.mul_add(n, -h);
        let mut residual = self.clone();
        residual.add(-h);
        residual.add(-l);
        q + residual.value() / n
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Correctly rounded sum of the values.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    acc.extend(values);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum([]), 0.0);
    }

    #[test]
    fn halfway_rounding() {
        // 1 + 2^-53 + 2^-106: the tail pushes the tie upwards.
        let v = exact_sum([1.0, 2f64.powi(-53), 2f64.powi(-106)]);
        assert_eq!(v, 1.0 + f64::EPSILON);
    }

    #[test]
    fn mean_of_identical_values_is_exact() {
        for &t in &[0.1, 1.0 / 3.0, std::f64::consts::E, 1e-300, 7.77e10] {
            for n in 1..200 {
                let mut acc = ExactSum::new();
                acc.extend(std::iter::repeat_n(t, n));
                assert_eq!(acc.mean(n), t, "t={t} n={n}");
            }
        }
    }
}
