//! Log-space arithmetic and deterministic reductions.
//!
//! Powers such as `|u_i - u_j|^m` with `m` in the tens routinely leave the
//! `f64` range, so sums of them are carried as `(shift, scaled sum)` pairs and
//! reported as logarithms. Every reduction here has a fixed evaluation order so
//! results do not depend on the number of worker threads.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Natural log of `|x|`, with magnitudes below the floor mapped to `-inf`.
#[inline]
pub fn ln_abs_floored(x: f64) -> f64 {
    let a = x.abs();
    if a < POWER_FLOOR {
        f64::NEG_INFINITY
    } else {
        a.ln()
    }
}

/// Differences below this magnitude contribute a zero summand.
pub const POWER_FLOOR: f64 = 1e-300;

/// `ln(sum_k exp(x_k))` over a slice, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let shift = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if shift == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add((x - shift).exp());
    }
    shift + acc.value().ln()
}

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    let lo = a.min(b);
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(exp(a) - exp(b))` for `a > b`; NaN otherwise.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NAN;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// Number of work units a pair loop is split into. Fixed, so that the
/// reduction tree is the same whatever the thread pool size is.
pub const REDUCTION_CHUNKS: usize = 32;

/// Maps `f` over `ranges` (possibly in parallel) and returns results in input order.
pub fn map_chunks<T, F>(ranges: &[std::ops::Range<usize>], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ranges.par_iter().cloned().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.iter().cloned().map(&f).collect()
    }
}

/// Pairwise (binary tree) combination of `items` in index order.
pub fn tree_reduce<T, F>(mut items: Vec<T>, combine: F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Splits `0..n` rows of an upper-triangular pair loop (row `i` pairs with
/// `i+1..n`) into at most `chunks` contiguous ranges of similar pair counts.
pub fn triangular_ranges(n: usize, chunks: usize) -> Vec<std::ops::Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let total = n * (n - 1) / 2;
    let target = total.div_ceil(chunks.max(1)).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    let mut acc = 0;
    for i in 0..n {
        acc += n - 1 - i;
        if acc >= target {
            out.push(start..i + 1);
            start = i + 1;
            acc = 0;
        }
    }
    if start < n {
        out.push(start..n);
    }
    out
}

/// Splits `0..n` into at most `chunks` equal contiguous ranges.
pub fn even_ranges(n: usize, chunks: usize) -> Vec<std::ops::Range<usize>> {
    let size = n.div_ceil(chunks.max(1)).max(1);
    (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn log_sum_exp_handles_huge_arguments() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_add_and_sub_are_inverse() {
        let a = 3.2;
        let b = 1.1;
        let s = log_add_exp(a, b);
        assert!((log_sub_exp(s, b) - a).abs() < 1e-12);
        assert!(log_sub_exp(b, a).is_nan());
    }

    #[test]
    fn triangular_ranges_cover_rows() {
        for n in [0usize, 1, 2, 7, 100] {
            let r = triangular_ranges(n, 8);
            let covered: usize = r.iter().map(|x| x.len()).sum();
            assert_eq!(covered, n);
            for w in r.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
        }
    }

    #[test]
    fn tree_reduce_is_order_preserving() {
        let v: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        assert_eq!(tree_reduce(v, |a, b| a + &b).unwrap(), "01234");
    }
}
