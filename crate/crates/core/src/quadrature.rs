//! Numerical integration.
//!
//! Two tools live here: a globally adaptive 7/15-point Gauss–Kronrod
//! integrator used by the direct (validation) evaluation paths, and
//! Gauss–Legendre node tables used to build the fixed tensor-product and
//! composite rules behind the memoized distributions and batched sums.

// node and weight digits are kept as tabulated
#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae for the 15-point rule; odd entries are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// `breakpoints` inside `(a, b)` seed the initial partition so kinks and
/// discontinuities sit on segment edges. Subdivision bisects the segment
/// with the largest error estimate until the total falls below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_segments: usize,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges: Vec<f64> = std::iter::once(lo)
        .chain(breakpoints.iter().copied().filter(|&x| x > lo && x < hi))
        .chain(std::iter::once(hi))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap: BinaryHeap<Segment> = edges.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    let mut total_error: f64 = heap.iter().map(|s| s.error).sum();

    while total_error > tol && heap.len() < max_segments {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // recompute from scratch to shed accumulated rounding in the running sums
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() || error > tol {
        return Err(Error::Quadrature {
            estimate: sign * value,
            error,
            tolerance: tol,
        });
    }
    Ok(Estimate {
        value: sign * value,
        error,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed composite quadrature rule: parallel node and weight arrays.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss–Legendre rule with `order` nodes on each panel
    /// between consecutive `edges`.
    pub fn composite(edges: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut rule = Rule::default();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(c + h * xi);
                rule.weights.push(h * wi);
            }
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `count + 1` evenly spaced edges over `[a, b]`.
pub fn even_edges(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|k| {
            if k == count {
                b
            } else {
                a + (b - a) * k as f64 / count as f64
            }
        })
        .collect()
}
