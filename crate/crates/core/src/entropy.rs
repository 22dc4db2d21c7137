//! Shannon entropy helpers shared by the metric modules.
//!
//! Everything is base 2 (bits) and uses plug-in maximum-likelihood
//! estimates: probabilities are raw count ratios, no smoothing.

/// Entropy in bits of a count vector. Zero counts contribute nothing;
/// an empty or all-zero vector has entropy 0.
///
/// Computed as -sum p*log2(p) with p = c/n. Scaling every count by the
/// same factor reproduces the identical probabilities (2c/2n divides
/// to the same float), so duplication leaves the result bit-identical.
pub fn shannon_bits<I>(counts: I) -> f64
where
    I: IntoIterator<Item = u64>,
{
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut h = 0.0;
    for c in counts {
        let p = c as f64 / n;
        h -= p * p.log2();
    }
    h.max(0.0)
}

/// Entropy in bits of a binary distribution with `a` and `b` counts.
pub fn binary_entropy_bits(a: u64, b: u64) -> f64 {
    shannon_bits([a, b])
}

/// Neumaier-compensated running sum. Used where per-window statistics
/// are maintained incrementally over long streams and the plain f64
/// accumulation error would be visible at oracle tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sub(&mut self, value: f64) {
        self.add(-value);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
