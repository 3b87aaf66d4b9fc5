//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! complex integrands.
//!
//! Several moments of the same distribution are usually needed at once, so the
//! integrand returns a fixed-size array and every node evaluation is shared.

use crate::C64;

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the nodes `KRONROD_NODES[1], [3], [5], [7]`.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Accuracy targets for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureTolerance {
    /// Absolute error target.
    pub absolute: f64,
    /// Relative error target (relative to the largest component magnitude).
    pub relative: f64,
    /// Maximum number of subintervals.
    pub max_intervals: usize,
}

impl Default for QuadratureTolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-15,
            relative: 1e-13,
            max_intervals: 4000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureEstimate<const K: usize> {
    /// Integral estimate for each component.
    pub value: [C64; K],
    /// Estimated absolute error (maximum over components).
    pub error: f64,
    /// `false` when the interval budget ran out before the target was met.
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Panel<const K: usize> {
    lower: f64,
    upper: f64,
    value: [C64; K],
    error: f64,
}

fn gauss_kronrod<const K: usize, F>(f: &F, lower: f64, upper: f64) -> Panel<K>
where
    F: Fn(f64) -> [C64; K],
{
    let centre = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let zero = C64::new(0.0, 0.0);
    let mut kronrod = [zero; K];
    let mut gauss = [zero; K];

    let mid = f(centre);
    for c in 0..K {
        kronrod[c] = mid[c] * KRONROD_WEIGHTS[7];
        gauss[c] = mid[c] * GAUSS_WEIGHTS[3];
    }
    for (j, &node) in KRONROD_NODES.iter().enumerate().take(7) {
        let left = f(centre - half * node);
        let right = f(centre + half * node);
        for c in 0..K {
            let pair = left[c] + right[c];
            kronrod[c] += pair * KRONROD_WEIGHTS[j];
            if j % 2 == 1 {
                gauss[c] += pair * GAUSS_WEIGHTS[j / 2];
            }
        }
    }
    let mut error = 0.0f64;
    for c in 0..K {
        kronrod[c] *= half;
        gauss[c] *= half;
        error = error.max((kronrod[c] - gauss[c]).norm());
    }
    Panel {
        lower,
        upper,
        value: kronrod,
        error,
    }
}

/// Integrates `f` over the union of consecutive intervals delimited by
/// `breakpoints` (which must be increasing and contain at least two points).
pub fn integrate<const K: usize, F>(
    f: F,
    breakpoints: &[f64],
    tol: QuadratureTolerance,
) -> QuadratureEstimate<K>
where
    F: Fn(f64) -> [C64; K],
{
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut panels: Vec<Panel<K>> = breakpoints
        .windows(2)
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();

    loop {
        let mut total = [C64::new(0.0, 0.0); K];
        let mut error = 0.0;
        for p in &panels {
            for (sum, v) in total.iter_mut().zip(&p.value) {
                *sum += v;
            }
            error += p.error;
        }
        let magnitude = total.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let target = tol.absolute.max(tol.relative * magnitude);
        if error <= target || panels.len() >= tol.max_intervals {
            return QuadratureEstimate {
                value: total,
                error,
                converged: error <= target,
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("non-empty panel list");
        let panel = panels.swap_remove(worst);
        let mid = 0.5 * (panel.lower + panel.upper);
        if mid <= panel.lower || mid >= panel.upper {
            // Interval can no longer be split in floating point.
            return QuadratureEstimate {
                value: total,
                error,
                converged: false,
            };
        }
        panels.push(gauss_kronrod(&f, panel.lower, mid));
        panels.push(gauss_kronrod(&f, mid, panel.upper));
    }
}
