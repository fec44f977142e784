//! Model primitives, closed-form derived quantities, and belief dynamics.
//!
//! The hidden neighborhood state is a two-state Markov chain: `H` ("hot",
//! crime opportunities arrive at rate `lambda`) and `L` ("cold", none).
//! Criminals act on an opportunity with probability `x`; enforcement `y` in
//! `[0,1]` costs `c·y` per unit time and intercepts a crime with probability
//! `y`, revealing the hot state.  The agency discounts at rate `r`.
//!
//! Between detections the posterior `p = P(state = H)` drifts at
//!
//! ```text
//! f(p, y) = rho_l·(1-p) - rho_h·p - p(1-p)·lambda·x·y
//! ```
//!
//! With a passive detection channel (`w > 0`: a crime is reported without
//! enforcement with probability `w`), only the learning term changes: `y` is
//! replaced by the total detection probability `y + w - y·w`.  Flow losses
//! and the myopic cutoff are unchanged.

use serde::{Deserialize, Serialize};

use crate::num::bisect;
use crate::{Error, Result};

/// Model primitives.  Validated on construction; see [`ModelParams::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Poisson arrival rate of crime opportunities in the hot state (> 0).
    pub lambda: f64,
    /// Probability a criminal acts on an opportunity, in (0, 1].
    pub x: f64,
    /// Enforcement cost per unit of resources per unit time (> 0).
    pub c: f64,
    /// Discount rate (> 0).
    pub r: f64,
    /// Transition rate cold -> hot (> 0).
    pub rho_l: f64,
    /// Transition rate hot -> cold (> 0).
    pub rho_h: f64,
    /// Passive detection probability in [0, 1); 0 recovers the baseline model.
    #[serde(default)]
    pub w: f64,
    /// Deterrence threshold in (0, 1): criminals offend iff the enforcement
    /// they anticipate is below `y_bar`.  Used by the equilibrium module only.
    #[serde(default = "default_y_bar")]
    pub y_bar: f64,
}

fn default_y_bar() -> f64 {
    0.5
}

/// The high-crime threshold on the `lambda·x` axis.  Infinite when
/// `rho_l <= c`; case logic branches on the variant, never on a sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaBar {
    Finite(f64),
    Infinite,
}

impl LambdaBar {
    /// True when `lambda_x` lies at or above the threshold.
    pub fn reached_by(&self, lambda_x: f64) -> bool {
        match self {
            LambdaBar::Finite(v) => lambda_x >= *v,
            LambdaBar::Infinite => false,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            LambdaBar::Finite(v) => *v,
            LambdaBar::Infinite => f64::INFINITY,
        }
    }
}

/// Closed-form constants derived from [`ModelParams`]; computed eagerly by
/// [`ModelParams::derived`] and immutable thereafter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// Stationary probability of the hot state: rest point of the belief
    /// under no enforcement.
    pub pi0: f64,
    /// Rest point of the belief under full enforcement (smaller root of
    /// `g(p) = f(p, 1) = 0` in (0, 1)); the lowest long-run belief.
    pub pi1: f64,
    /// The second root of `g`, which lies above 1.  Not a belief; used by
    /// the stationary-distribution closed forms.
    pub pi1_outer: f64,
    /// Myopic cutoff `c / (lambda·x)`: enforce iff the instantaneous benefit
    /// exceeds the cost.
    pub p_hat_m: f64,
    /// Boundary value `K` for which the value function is exactly linear.
    pub k_lin: f64,
    /// Upper bound `(lambda·x - c) / r` on admissible boundary values.
    pub k_max: f64,
    /// High-crime threshold on the `lambda·x` axis (possibly infinite).
    pub lambda_bar: LambdaBar,
    /// Zero of the no-enforcement passive drift `f_w(·, 0)` in (pi1, pi0);
    /// `None` when `w = 0`.
    pub pi_w: Option<f64>,
}

impl ModelParams {
    /// Validates every invariant: positive rates, `x` in (0,1], `w` in
    /// [0,1), `y_bar` in (0,1), and the maintained assumption
    /// `lambda·x > c` (enforcement at certainty must be worthwhile).
    pub fn new(
        lambda: f64,
        x: f64,
        c: f64,
        r: f64,
        rho_l: f64,
        rho_h: f64,
        w: f64,
        y_bar: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            lambda,
            x,
            c,
            r,
            rho_l,
            rho_h,
            w,
            y_bar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("c", self.c),
            ("r", self.r),
            ("rho_l", self.rho_l),
            ("rho_h", self.rho_h),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if !(self.x > 0.0 && self.x <= 1.0) {
            return Err(Error::InvalidParams(format!("x must lie in (0, 1], got {}", self.x)));
        }
        if !(0.0..1.0).contains(&self.w) {
            return Err(Error::InvalidParams(format!("w must lie in [0, 1), got {}", self.w)));
        }
        if !(self.y_bar > 0.0 && self.y_bar < 1.0) {
            return Err(Error::InvalidParams(format!("y_bar must lie in (0, 1), got {}", self.y_bar)));
        }
        if self.lambda * self.x <= self.c {
            return Err(Error::InvalidParams(format!(
                "maintained assumption lambda*x > c violated: {} <= {}",
                self.lambda * self.x,
                self.c
            )));
        }
        Ok(())
    }

    /// The effective crime rate `lambda·x` faced by the agency.
    pub fn lambda_x(&self) -> f64 {
        self.lambda * self.x
    }

    /// Combined switching rate `rho_l + rho_h`.
    pub fn rho_sum(&self) -> f64 {
        self.rho_l + self.rho_h
    }

    /// Natural (no-enforcement) belief drift `h(p) = rho_l(1-p) - rho_h p`.
    pub fn h(&self, p: f64) -> f64 {
        self.rho_l * (1.0 - p) - self.rho_h * p
    }

    /// Full-enforcement drift `g(p) = h(p) - p(1-p)·lambda·x`.
    pub fn g(&self, p: f64) -> f64 {
        self.h(p) - p * (1.0 - p) * self.lambda_x()
    }

    /// Derivative of `g` in `p` (used by the stationary density exponent).
    pub fn g_prime(&self, p: f64) -> f64 {
        -self.rho_sum() - (1.0 - 2.0 * p) * self.lambda_x()
    }

    /// Belief drift under enforcement `y`, including the passive channel:
    /// the learning term uses the total detection probability
    /// `y + w - y·w`, while nothing else depends on `w`.
    pub fn drift(&self, p: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("belief p must lie in [0, 1], got {p}")));
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("enforcement y must lie in [0, 1], got {y}")));
        }
        Ok(self.drift_unchecked(p, y))
    }

    /// Same as [`drift`](Self::drift) without domain checks; the simulator's
    /// inner loop maintains the domain invariants itself.
    #[inline]
    pub fn drift_unchecked(&self, p: f64, y: f64) -> f64 {
        let detect = y + self.w - y * self.w;
        self.h(p) - p * (1.0 - p) * self.lambda_x() * detect
    }

    /// Computes every derived quantity from closed forms.
    pub fn derived(&self) -> DerivedQuantities {
        let lx = self.lambda_x();
        let rho = self.rho_sum();
        let pi0 = self.rho_l / rho;
        // g(p) = lx·p² - (rho + lx)·p + rho_l; the stabilized smaller root
        // avoids the cancellation of the textbook quadratic formula.
        let (pi1, pi1_outer) = small_quadratic_root(lx, rho, self.rho_l);
        let p_hat_m = self.c / lx;
        let k_lin = ((lx - self.c) * (self.r + self.rho_l) - self.c * self.rho_h)
            / (self.r * (self.r + rho));
        let k_max = (lx - self.c) / self.r;
        let lambda_bar = if self.rho_l > self.c {
            LambdaBar::Finite(self.c * (rho - self.c) / (self.rho_l - self.c))
        } else {
            LambdaBar::Infinite
        };
        let pi_w = if self.w > 0.0 {
            // f_w(p, 0) = h(p) - p(1-p)·lx·w: same quadratic with lx·w in
            // place of lx.
            Some(small_quadratic_root(lx * self.w, rho, self.rho_l).0)
        } else {
            None
        };
        DerivedQuantities {
            pi0,
            pi1,
            pi1_outer,
            p_hat_m,
            k_lin,
            k_max,
            lambda_bar,
            pi_w,
        }
    }

    /// Holding action `z(p)`: the enforcement level that makes the belief
    /// stationary at `p`, defined for `p` strictly inside `(pi1, pi0)`.
    pub fn holding_action(&self, p: f64) -> Result<f64> {
        let d = self.derived();
        if !(p > d.pi1 && p < d.pi0) {
            return Err(Error::Domain(format!(
                "holding action defined on (pi1, pi0) = ({}, {}), got {p}",
                d.pi1, d.pi0
            )));
        }
        Ok(self.h(p) / (self.lambda_x() * p * (1.0 - p)))
    }

    /// The slope bound `sigma(p) = h(p)·c / (p²(1-p)·lambda·x·(r+rho_l+rho_h))`,
    /// strictly decreasing from +inf to 0 on `(0, pi0]`.
    pub fn sigma(&self, p: f64) -> Result<f64> {
        let d = self.derived();
        if !(p > 0.0 && p <= d.pi0) {
            return Err(Error::Domain(format!("sigma defined on (0, pi0], got {p}")));
        }
        Ok(self.h(p) * self.c / (p * p * (1.0 - p) * self.lambda_x() * (self.r + self.rho_sum())))
    }

    /// Slope of the crime stock: `beta = lambda·x / (r + rho_l + rho_h)`.
    pub fn beta(&self) -> f64 {
        self.lambda_x() / (self.r + self.rho_sum())
    }

    /// Discounted stock of crime (deterred or not) from belief `p`, which is
    /// policy independent: the affine solution `C(p) = beta·(p + rho_l/r)` of
    /// `r·C = p·lambda·x + h(p)·C'`.
    pub fn crime_stock(&self, p: f64) -> f64 {
        self.beta() * (p + self.rho_l / self.r)
    }

    /// The belief at which `sigma(p)` equals the linear-value slope
    /// `lambda·x/(r+rho_l+rho_h)`; unique in `(0, pi0)` because `sigma`
    /// strictly decreases from +inf to 0.
    pub fn p_lower(&self) -> Result<f64> {
        let d = self.derived();
        let target = self.beta();
        bisect(
            |p| self.sigma(p).unwrap() - target,
            1e-12,
            d.pi0,
            1e-14,
            "p_lower (sigma = beta)",
        )
    }
}

/// Smaller and larger roots of `a·p² - (rho + a)·p + rho_l = 0`, written in
/// the cancellation-free form `2·rho_l / (b + sqrt(b² - 4·a·rho_l))`.
fn small_quadratic_root(a: f64, rho: f64, rho_l: f64) -> (f64, f64) {
    let b = rho + a;
    let disc = (b * b - 4.0 * a * rho_l).sqrt();
    (2.0 * rho_l / (b + disc), (b + disc) / (2.0 * a))
}

/// The reference configuration used throughout the test and validation
/// suites: `lambda=4, x=1, c=1.5, r=2, rho_l=rho_h=1`.
pub fn reference_params() -> ModelParams {
    ModelParams::new(4.0, 1.0, 1.5, 2.0, 1.0, 1.0, 0.0, 0.5).unwrap()
}
