//! Small numerical kernel shared by the solvers: bracketed bisection,
//! an adaptive Dormand–Prince integrator for scalar ODEs with dense output,
//! adaptive Simpson quadrature, monotone cubic interpolation, and pairwise
//! summation for Monte Carlo reductions.
//!
//! All root finds in this crate are plain bracketed bisection: every map we
//! solve over is provably monotone, so bisection inherits correctness from
//! those monotonicity results and cannot be thrown off by flat derivatives.

use crate::{Error, Result};

/// Bracketed bisection for the root of `f` on `[lo, hi]`.
///
/// Requires a sign change over the bracket (an exact zero at either end is
/// accepted).  Iterates until the bracket is shorter than `tol_x`.
pub fn bisect(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol_x: f64, what: &str) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
        return Err(Error::Bracket {
            what: what.to_string(),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let falling = f_lo > 0.0;
    for _ in 0..200 {
        if (hi - lo).abs() <= tol_x {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == falling {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dense solution of a scalar ODE `y' = f(x, y)` produced by
/// [`integrate_adaptive`].  Abscissae are stored in increasing order even
/// when the integration ran right-to-left.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Derivative values `f(x, y)` at the stored nodes.
    pub dys: Vec<f64>,
}

impl OdeSolution {
    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Cubic-Hermite evaluation at `x` (must lie within the stored range up
    /// to a small tolerance).  With the step cap used by the solvers the
    /// interpolation error is far below the integration tolerance.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = ((x - x0) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.dys[i] * h, self.dys[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        }
    }
}

/// Adaptive Dormand–Prince 5(4) integration of `y' = f(x, y)` from `x0` to
/// `x1` (either direction).  `max_step` caps the step size so that the dense
/// cubic-Hermite output stays accurate between nodes.
pub fn integrate_adaptive(
    f: impl Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
) -> Result<OdeSolution> {
    // Dormand–Prince tableau.
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    // 4th-order embedded weights.
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let dir = (x1 - x0).signum();
    if dir == 0.0 {
        let d = f(x0, y0);
        return Ok(OdeSolution {
            xs: vec![x0, x0],
            ys: vec![y0, y0],
            dys: vec![d, d],
        });
    }
    let span = (x1 - x0).abs();
    let mut h = (span / 100.0).min(max_step);
    let mut x = x0;
    let mut y = y0;
    let mut k0 = f(x, y); // FSAL slot
    let mut xs = vec![x];
    let mut ys = vec![y];
    let mut dys = vec![k0];
    let min_step = span * 1e-14 + 1e-300;

    let mut steps = 0usize;
    while (x - x1).abs() > 0.0 && dir * (x1 - x) > 0.0 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::Integration {
                reached: x,
                reason: "step budget exhausted".into(),
            });
        }
        h = h.min(max_step).min((x1 - x).abs());
        if h < min_step {
            return Err(Error::Integration {
                reached: x,
                reason: "step size underflow".into(),
            });
        }
        let hs = dir * h;
        let mut k = [k0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for s in 0..6 {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                acc += A[s][j] * kj;
            }
            k[s + 1] = f(x + C[s] * hs, y + hs * acc);
        }
        // 5th-order solution: the last row of A doubles as the 5th-order weights.
        let y5 = y + hs * (A[5][0] * k[0] + A[5][2] * k[2] + A[5][3] * k[3] + A[5][4] * k[4] + A[5][5] * k[5]);
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            y4 += hs * B4[j] * kj;
        }
        let scale = atol + rtol * y.abs().max(y5.abs());
        let err = ((y5 - y4) / scale).abs();
        if err <= 1.0 || h <= min_step * 2.0 {
            x += hs;
            y = y5;
            k0 = k[6]; // FSAL: k7 = f(x+h, y5)
            xs.push(x);
            ys.push(y);
            dys.push(k0);
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
    }

    if dir < 0.0 {
        xs.reverse();
        ys.reverse();
        dys.reverse();
    }
    Ok(OdeSolution { xs, ys, dys })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance
/// `tol`.  The integrands in this crate are smooth on the closed interval,
/// so plain recursive bisection with Richardson correction suffices.
pub fn integrate_quad(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant.  Preserves the
/// monotonicity of the data, which is what CDF storage needs.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() == ys.len() && xs.len() >= 2, "need at least two nodes");
        let n = xs.len();
        let mut slopes = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            slopes.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        let mut ds = vec![0.0; n];
        ds[0] = slopes[0];
        ds[n - 1] = slopes[n - 2];
        for i in 1..n - 1 {
            if slopes[i - 1] * slopes[i] <= 0.0 {
                ds[i] = 0.0;
            } else {
                // Harmonic mean keeps the interpolant monotone.
                let w1 = 2.0 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
                let w2 = (xs[i + 1] - xs[i]) + 2.0 * (xs[i] - xs[i - 1]);
                ds[i] = (w1 + w2) / (w1 / slopes[i - 1] + w2 / slopes[i]);
            }
        }
        // Clamp endpoint derivatives (Fritsch–Carlson condition).
        for (i, s) in slopes.iter().enumerate() {
            if *s == 0.0 {
                ds[i] = 0.0;
                ds[i + 1] = 0.0;
            } else {
                ds[i] = ds[i].clamp(0.0f64.min(3.0 * s), 0.0f64.max(3.0 * s));
                ds[i + 1] = ds[i + 1].clamp(0.0f64.min(3.0 * s), 0.0f64.max(3.0 * s));
            }
        }
        MonotoneCubic { xs, ys, ds }
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Evaluate at `x`; clamps to the boundary values outside the range.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.ys.last().unwrap();
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.ds[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.ds[i + 1]
    }
}

/// Pairwise (cascade) summation: error grows like O(log n) rather than O(n),
/// and the result does not depend on any parallel scheduling order because
/// the reduction tree is fixed by the slice layout.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean via pairwise summation.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}
