//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature in one and two
//! dimensions.

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` to absolute error `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<QuadResult> {
    let mut segments = vec![kronrod(&mut f, a, b)];
    let mut evaluations = 15;
    loop {
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= abs_tol {
            break;
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                estimate: error,
                target: abs_tol,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod(&mut f, s.a, mid));
        segments.push(kronrod(&mut f, mid, s.b));
        evaluations += 30;
    }
    // Sum in a fixed order so results do not depend on the refinement history.
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(QuadResult {
        value: segments.iter().map(|s| s.value).sum(),
        error: segments.iter().map(|s| s.error).sum(),
        evaluations,
    })
}

/// Iterated integral of `f(x, y)` over a rectangle.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    x: (f64, f64),
    y: (f64, f64),
    abs_tol: f64,
) -> Result<QuadResult> {
    let inner_tol = abs_tol / (4.0 * (x.1 - x.0));
    let mut inner_error: f64 = 0.0;
    let mut evaluations = 0;
    let mut failure = None;
    let outer = integrate(
        |xv| match integrate(|yv| f(xv, yv), y.0, y.1, inner_tol) {
            Ok(r) => {
                inner_error = inner_error.max(r.error);
                evaluations += r.evaluations;
                r.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        x.0,
        x.1,
        abs_tol / 2.0,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    Ok(QuadResult {
        value: outer.value,
        error: outer.error + (x.1 - x.0) * inner_error,
        evaluations,
    })
}
