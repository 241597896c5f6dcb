//! One-dimensional maximization on a bounded interval.

use serde::{Deserialize, Serialize};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// Bracketing scan followed by golden-section refinement.
    GoldenSection,
    /// The scan found more than one local maximum; a dense grid picked the
    /// bracket instead.
    DenseGridFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub method: SearchMethod,
    pub evaluations: usize,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `tol`. Ties keep the left (smaller) point.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64, usize) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        evals += 1;
    }
    if fc >= fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn strict_local_maxima(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == n || values[i] > values[i + 1];
            left && right
        })
        .count()
}

/// Maximizes `f` over the open interval `(lo, hi)`.
///
/// A `scan_points` uniform interior scan picks the bracket around the best
/// sample, then golden-section refines it to `tol`. When the scan shows
/// more than one strict local maximum the bracket comes from a
/// `fallback_points` grid instead, and the result says so.
pub fn scan_and_refine<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    scan_points: usize,
    fallback_points: usize,
    tol: f64,
) -> Maximum {
    let grid = |n: usize| -> Vec<f64> {
        (1..=n)
            .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
            .collect()
    };
    let mut xs = grid(scan_points);
    let mut ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut evaluations = xs.len();
    let mut method = SearchMethod::GoldenSection;
    if strict_local_maxima(&ys) > 1 {
        method = SearchMethod::DenseGridFallback;
        xs = grid(fallback_points);
        ys = xs.iter().map(|&x| f(x)).collect();
        evaluations += xs.len();
    }
    let best = argmax(&ys);
    let left = if best == 0 { lo } else { xs[best - 1] };
    let right = if best + 1 == xs.len() {
        hi
    } else {
        xs[best + 1]
    };
    let (x, value, evals) = golden_section_max(&mut f, left, right, tol);
    evaluations += evals;
    // Keep the sampled point when refinement cannot beat it.
    let (x, value) = if ys[best] > value {
        (xs[best], ys[best])
    } else {
        (x, value)
    };
    Maximum {
        x,
        value,
        method,
        evaluations,
    }
}
