//! Dynamic-programming solver for the optimal enforcement cutoff.
//!
//! On the enforcement region the value of the predictive system solves the
//! one-parameter ODE family `D[K]`
//!
//! ```text
//! r·V = p·lambda·x - c + p·lambda·x·(K - V) + g(p)·V'      V(1) = K,
//! ```
//!
//! where `K = V(1)` is the unknown boundary value and `g = f(·,1)` the
//! full-enforcement drift.  The right endpoint is regular (`g(1) = -rho_h`),
//! so each member is integrated backward from `p = 1`; the family is singular
//! at `pi1` where `g` vanishes.
//!
//! The optimal cutoff is found by shooting on `K`: the candidate cutoff
//! `p(K)` comes from a slope condition (`V' = sigma` below `pi0`, `V' = 0`
//! above), and the correct `K` zeroes the marginal value of enforcement
//! `Delta` at the candidate.  Both maps are provably monotone, so bracketed
//! bisection is exact.  Three regimes emerge:
//!
//! * **HighCrime** (`lambda·x` at or above the threshold `lambda_bar`): the
//!   myopic cutoff is optimal and the value is affine in closed form.
//! * **Intermediate**: the cutoff lies strictly inside `(pi1, pi0)`, strictly
//!   below the myopic cutoff, and the policy holds the belief at the cutoff.
//! * **LowCrime** (`lambda·x` at or below `lambda_low`): the cutoff is at or
//!   above `pi0`, the belief settles at `pi0`, and enforcement never starts
//!   on the equilibrium path.

use serde::{Deserialize, Serialize};

use crate::model::{DerivedQuantities, LambdaBar, ModelParams};
use crate::num::{bisect, integrate_adaptive, OdeSolution};
use crate::{Error, Result};

/// Relative / absolute tolerance for the backward ODE integration.
const ODE_RTOL: f64 = 1e-10;
const ODE_ATOL: f64 = 1e-12;
/// Step cap keeping the dense cubic-Hermite output accurate between nodes.
const ODE_MAX_STEP: f64 = 0.005;
/// Guard above the singular point `pi1` for the integration domain.
const PI1_GUARD: f64 = 1e-6;
/// Bisection tolerance in the unknown (`K` or `p`).
const ROOT_TOL: f64 = 1e-12;
/// Classification tolerance at the case boundaries `lambda_low`/`lambda_bar`.
const CASE_TOL: f64 = 1e-9;

/// One member of the family `D[K]`: the value `V(·;K)` and its derivative on
/// `[p_lo, 1]`, with dense evaluation at arbitrary beliefs.
#[derive(Debug, Clone)]
pub struct ValueCurve {
    /// Boundary value `V(1)`.
    pub k: f64,
    /// Left endpoint of the integration domain (at least `pi1 + guard`).
    pub p_lo: f64,
    params: ModelParams,
    sol: OdeSolution,
}

impl ValueCurve {
    /// `V(p; K)` by dense interpolation.
    pub fn v(&self, p: f64) -> f64 {
        self.check_domain(p);
        if p >= 1.0 {
            return self.k;
        }
        self.sol.eval(p)
    }

    /// `V'(p; K)`, evaluated algebraically from the ODE (exact given `V`):
    /// `V' = ((r + p·lx)·V - p·lx·(1 + K) + c) / g(p)`.
    pub fn vp(&self, p: f64) -> f64 {
        self.check_domain(p);
        vp_from_v(&self.params, self.k, p, self.v(p))
    }

    /// Analytic second derivative, from differentiating the ODE once:
    /// `g·V'' = (r + p·lx - g')·V' + lx·V - lx·(1 + K)`.
    pub fn vpp(&self, p: f64) -> f64 {
        let lx = self.params.lambda_x();
        let v = self.v(p);
        let vp = self.vp(p);
        ((self.params.r + p * lx - self.params.g_prime(p)) * vp + lx * v - lx * (1.0 + self.k))
            / self.params.g(p)
    }

    /// ODE residual with an *independent* derivative estimate (fourth-order
    /// central difference of the dense solution), so it actually measures
    /// integration accuracy instead of restating the algebraic identity.
    pub fn residual(&self, p: f64) -> f64 {
        let h = 1e-3_f64.min(0.25 * (1.0 - self.p_lo));
        let (a, b) = (self.p_lo, 1.0);
        let pc = p.clamp(a + 2.0 * h, b - 2.0 * h);
        let d = (self.v(pc - 2.0 * h) - 8.0 * self.v(pc - h) + 8.0 * self.v(pc + h)
            - self.v(pc + 2.0 * h))
            / (12.0 * h);
        let m = &self.params;
        let lx = m.lambda_x();
        m.r * self.v(pc) - (pc * lx - m.c) - pc * lx * (self.k - self.v(pc)) - m.g(pc) * d
    }

    /// Grid nodes of the underlying integration (increasing in `p`).
    pub fn grid(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.sol.xs, &self.sol.ys, &self.sol.dys)
    }

    fn check_domain(&self, p: f64) {
        assert!(
            p >= self.p_lo - 1e-12 && p <= 1.0 + 1e-12,
            "evaluation at p={p} outside curve domain [{}, 1]",
            self.p_lo
        );
    }
}

#[inline]
fn vp_from_v(m: &ModelParams, k: f64, p: f64, v: f64) -> f64 {
    let lx = m.lambda_x();
    ((m.r + p * lx) * v - p * lx * (1.0 + k) + m.c) / m.g(p)
}

/// Integrates `D[K]` backward from `p = 1` (terminal data `V(1) = K`,
/// `V'(1) = (lambda·x - c - r·K)/rho_h`) down to `p_lo`.
///
/// `p_lo` must stay at least a small guard above the singular point `pi1`.
pub fn integrate_d(params: &ModelParams, k: f64, p_lo: f64) -> Result<ValueCurve> {
    let d = params.derived();
    if p_lo < d.pi1 + PI1_GUARD * 0.5 {
        return Err(Error::Domain(format!(
            "integration endpoint p_lo={p_lo} too close to the singular point pi1={}",
            d.pi1
        )));
    }
    if !k.is_finite() {
        return Err(Error::Domain(format!("boundary value K must be finite, got {k}")));
    }
    let m = *params;
    let sol = integrate_adaptive(
        move |p, v| vp_from_v(&m, k, p, v),
        1.0,
        p_lo,
        k,
        ODE_RTOL,
        ODE_ATOL,
        ODE_MAX_STEP,
    )?;
    Ok(ValueCurve {
        k,
        p_lo,
        params: *params,
        sol,
    })
}

/// Marginal value of a unit of enforcement (normalized by `x`):
/// `Delta(p) = p·lambda - c/x + p·lambda·(K - V(p) - (1-p)·V'(p))`.
/// Its zero, together with a slope condition, pins down the optimal cutoff.
pub fn delta(params: &ModelParams, curve: &ValueCurve, p: f64) -> f64 {
    let pl = p * params.lambda;
    pl - params.c / params.x + pl * (curve.k - curve.v(p) - (1.0 - p) * curve.vp(p))
}

/// The boundary value `K0` at which the integrated slope vanishes exactly at
/// `pi0`: `V'(pi0; K0) = 0`.  Unique in `(K_lin, K_max)` because `V'` is
/// strictly decreasing in `K`; requires `lambda·x` below `lambda_bar`.
pub fn find_k0(params: &ModelParams) -> Result<f64> {
    let d = params.derived();
    if d.lambda_bar.reached_by(params.lambda_x()) {
        return Err(Error::Domain(format!(
            "find_k0 requires lambda*x below lambda_bar = {:?}",
            d.lambda_bar
        )));
    }
    let slope_at_pi0 = |k: f64| -> Result<f64> { Ok(integrate_d(params, k, d.pi0)?.vp(d.pi0)) };
    // Bracket validity per the monotonicity of V' in K.
    let lo = slope_at_pi0(d.k_lin)?;
    let hi = slope_at_pi0(d.k_max)?;
    if !(lo > 0.0 && hi < 0.0) {
        return Err(Error::Bracket {
            what: "find_k0: V'(pi0; K) over [K_lin, K_max]".into(),
            lo: d.k_lin,
            hi: d.k_max,
            f_lo: lo,
            f_hi: hi,
        });
    }
    bisect(
        |k| slope_at_pi0(k).unwrap(),
        d.k_lin,
        d.k_max,
        ROOT_TOL,
        "K0 (V'(pi0;K)=0)",
    )
}

/// Which slope condition defines the candidate cutoff `p(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PofKMode {
    /// Root of `V'(p;K) = sigma(p)` on `[p_lower, pi0]` (cutoffs below `pi0`).
    MatchSigma,
    /// Root of `V'(p;K) = 0` on `[pi0, 1)` (cutoffs at or above `pi0`).
    MatchZero,
}

/// Candidate cutoff `p(K)` for a given boundary value.  Increasing in `K`
/// in both modes.
pub fn p_of_k(params: &ModelParams, k: f64, mode: PofKMode) -> Result<f64> {
    let d = params.derived();
    match mode {
        PofKMode::MatchSigma => {
            let p_lower = params.p_lower()?;
            let curve = integrate_d(params, k, p_lower.max(d.pi1 + PI1_GUARD))?;
            bisect(
                |p| curve.vp(p) - params.sigma(p).unwrap(),
                curve.p_lo,
                d.pi0,
                ROOT_TOL,
                "p(K) (V' = sigma)",
            )
        }
        PofKMode::MatchZero => {
            let curve = integrate_d(params, k, d.pi0)?;
            bisect(|p| curve.vp(p), d.pi0, 1.0 - 1e-12, ROOT_TOL, "p(K) (V' = 0)")
        }
    }
}

/// The low-crime threshold `lambda_low` on the `lambda·x` axis for the given
/// `(c, r, rho_l, rho_h)` template: the root of
/// `F(lambda·x) = Delta(pi0; K0(lambda·x))` over `(c, c/pi0)`.
///
/// Below the threshold enforcement never starts from the long-run prior;
/// above it the optimal cutoff dips below `pi0`.
pub fn lambda_low(params: &ModelParams) -> Result<f64> {
    let d = params.derived();
    let f = |lx: f64| -> Result<f64> {
        let m = with_lambda_x(params, lx);
        let dd = m.derived();
        let k0 = find_k0(&m)?;
        let curve = integrate_d(&m, k0, dd.pi0)?;
        Ok(delta(&m, &curve, dd.pi0))
    };
    let lo = params.c * (1.0 + 1e-9);
    let hi = params.c / d.pi0 * (1.0 - 1e-12);
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Bracket {
            what: "lambda_low: Delta(pi0; K0) over (c, c/pi0)".into(),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    bisect(|lx| f(lx).unwrap(), lo, hi, 1e-12, "lambda_low")
}

/// Replace the effective crime rate, keeping `x` fixed and scaling `lambda`
/// so that `lambda·x` equals `lx`.  Every solver quantity depends on the
/// rate only through the product (and on `x` through a positive factor in
/// `Delta` that never changes a sign), so this is the canonical way to move
/// along the `lambda·x` axis.
pub fn with_lambda_x(params: &ModelParams, lx: f64) -> ModelParams {
    let mut m = *params;
    m.lambda = lx / m.x;
    m
}

/// Regime classification per the three cases of the cutoff theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    /// `c < lambda·x <= lambda_low`: cutoff at or above `pi0`; enforcement
    /// never starts from the long-run prior.
    LowCrime,
    /// `lambda_low < lambda·x < lambda_bar`: interior cutoff in `(pi1, pi0)`
    /// with a holding action at the cutoff.
    Intermediate,
    /// `lambda·x >= lambda_bar`: the myopic cutoff is optimal, value affine.
    HighCrime,
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseId::LowCrime => "LowCrime",
            CaseId::Intermediate => "Intermediate",
            CaseId::HighCrime => "HighCrime",
        };
        f.write_str(s)
    }
}

/// The solved optimal policy: regime, cutoff, boundary value, thresholds,
/// and the assembled value / loss functions on all of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct OptimalPolicy {
    pub case_id: CaseId,
    /// Optimal cutoff belief.
    pub p_hat: f64,
    /// Boundary value `V(1)` at the optimum.
    pub k_hat: f64,
    /// Low-crime threshold for this `(c, r, rho)` template (on the
    /// `lambda·x` axis).
    pub lambda_low: f64,
    /// High-crime threshold (possibly infinite).
    pub lambda_bar: LambdaBar,
    /// Set when `lambda·x` was within the classification tolerance of a case
    /// boundary and the adjacent closed form was used.
    pub boundary_flag: bool,
    pub params: ModelParams,
    pub derived: DerivedQuantities,
    /// Value at the cutoff (left boundary of the enforcement region).
    pub v_at_cutoff: f64,
    /// ODE solution on the enforcement region; `None` in the HighCrime case
    /// where the value is affine in closed form.
    curve: Option<ValueCurve>,
}

impl OptimalPolicy {
    /// Assembled value `V(p)` on `[0, 1]`.
    pub fn value(&self, p: f64) -> f64 {
        if p >= self.p_hat {
            match &self.curve {
                Some(c) => c.v(p.min(1.0)),
                // Affine closed form of the HighCrime case.
                None => self.k_hat + self.params.beta() * (p - 1.0),
            }
        } else if self.p_hat >= self.derived.pi0 {
            // Below a cutoff at or above pi0 the belief never reaches the
            // cutoff again: the system has no value there.
            0.0
        } else {
            // Power extension along the no-enforcement region:
            // V(p) = V(p_hat)·(h(p)/h(p_hat))^(-r/(rho_l+rho_h)).
            let expo = -self.params.r / self.params.rho_sum();
            self.v_at_cutoff * (self.params.h(p) / self.params.h(self.p_hat)).powf(expo)
        }
    }

    /// Assembled derivative `V'(p)`.
    pub fn value_prime(&self, p: f64) -> f64 {
        if p >= self.p_hat {
            match &self.curve {
                Some(c) => c.vp(p.min(1.0)),
                None => self.params.beta(),
            }
        } else if self.p_hat >= self.derived.pi0 {
            0.0
        } else {
            // Differentiating the power extension collapses to the
            // no-enforcement identity r·V = h·V'.
            self.params.r * self.value(p) / self.params.h(p)
        }
    }

    /// Discounted loss `L(p) = C(p) - V(p)`.
    pub fn loss(&self, p: f64) -> f64 {
        self.params.crime_stock(p) - self.value(p)
    }

    /// The optimal action at belief `p`.  Full enforcement above the cutoff;
    /// at the cutoff, the holding action in the Intermediate case and full
    /// enforcement otherwise (the value is indifferent at exactly `p_hat` in
    /// the HighCrime case; this implementation fixes `y(p_hat) = 1` there).
    pub fn action(&self, p: f64) -> f64 {
        if p > self.p_hat {
            1.0
        } else if p == self.p_hat {
            match self.case_id {
                CaseId::Intermediate => self.params.holding_action(self.p_hat).unwrap(),
                CaseId::HighCrime | CaseId::LowCrime => 1.0,
            }
        } else {
            0.0
        }
    }

    /// `Delta(p)` along the solved curve, defined on the enforcement region.
    pub fn delta_at(&self, p: f64) -> f64 {
        match &self.curve {
            Some(c) => delta(&self.params, c, p),
            None => {
                // Affine case: K - V - (1-p)V' telescopes to zero, so
                // Delta(p) = p·lambda - c/x.
                p * self.params.lambda - self.params.c / self.params.x
            }
        }
    }

    /// Analytic `V''(p)` on the enforcement region (`p > p_hat`), used by
    /// high-precision convexity checks.
    pub fn value_second(&self, p: f64) -> f64 {
        match &self.curve {
            Some(c) => c.vpp(p),
            None => 0.0,
        }
    }
}

/// Solves for the optimal cutoff policy: classifies the regime against the
/// thresholds, shoots on the boundary value `K`, and assembles value and
/// loss on `[0, 1]`.
pub fn solve_cutoff(params: &ModelParams) -> Result<OptimalPolicy> {
    params.validate()?;
    let d = params.derived();
    let lx = params.lambda_x();
    let lam_low = lambda_low(params)?;

    // High-crime regime (including the boundary band around lambda_bar,
    // resolved to the closed form with a flag).
    let (high, high_boundary) = match d.lambda_bar {
        LambdaBar::Finite(lb) => (lx >= lb - CASE_TOL, (lx - lb).abs() < CASE_TOL),
        LambdaBar::Infinite => (false, false),
    };
    if high {
        let p_hat = d.p_hat_m;
        let k_hat = d.k_lin;
        let v_at_cutoff = k_hat + params.beta() * (p_hat - 1.0);
        return Ok(OptimalPolicy {
            case_id: CaseId::HighCrime,
            p_hat,
            k_hat,
            lambda_low: lam_low,
            lambda_bar: d.lambda_bar,
            boundary_flag: high_boundary,
            params: *params,
            derived: d,
            v_at_cutoff,
            curve: None,
        });
    }

    if (lx - lam_low).abs() < CASE_TOL {
        // Exactly at the low-crime boundary: (p_hat, K_hat) = (pi0, K0).
        let k0 = find_k0(params)?;
        let curve = integrate_d(params, k0, d.pi0)?;
        let v_at_cutoff = curve.v(d.pi0);
        return Ok(OptimalPolicy {
            case_id: CaseId::LowCrime,
            p_hat: d.pi0,
            k_hat: k0,
            lambda_low: lam_low,
            lambda_bar: d.lambda_bar,
            boundary_flag: true,
            params: *params,
            derived: d,
            v_at_cutoff,
            curve: Some(curve),
        });
    }

    if lx < lam_low {
        solve_low_crime(params, &d, lam_low)
    } else {
        solve_intermediate(params, &d, lam_low)
    }
}

/// LowCrime shooting: bisect `K` in `[K0, K_max)` on the strictly increasing
/// map `K -> Delta(p(K); K)` with the `V' = 0` slope condition.
fn solve_low_crime(
    params: &ModelParams,
    d: &DerivedQuantities,
    lam_low: f64,
) -> Result<OptimalPolicy> {
    let k0 = find_k0(params)?;
    let obj = |k: f64| -> Result<f64> {
        let p = p_of_k(params, k, PofKMode::MatchZero)?;
        let curve = integrate_d(params, k, d.pi0)?;
        Ok(delta(params, &curve, p))
    };
    let k_hi = d.k_max - 1e-10 * d.k_max.abs().max(1.0);
    let f_lo = obj(k0)?;
    let f_hi = obj(k_hi)?;
    if !(f_lo <= 0.0 && f_hi > 0.0) {
        return Err(Error::Bracket {
            what: "LowCrime shoot: Delta(p(K);K) over [K0, K_max)".into(),
            lo: k0,
            hi: k_hi,
            f_lo,
            f_hi,
        });
    }
    let k_hat = bisect(|k| obj(k).unwrap(), k0, k_hi, ROOT_TOL, "K_hat (LowCrime)")?;
    let p_hat = p_of_k(params, k_hat, PofKMode::MatchZero)?;
    let curve = integrate_d(params, k_hat, d.pi0)?;
    let v_at_cutoff = curve.v(p_hat);
    Ok(OptimalPolicy {
        case_id: CaseId::LowCrime,
        p_hat,
        k_hat,
        lambda_low: lam_low,
        lambda_bar: d.lambda_bar,
        boundary_flag: false,
        params: *params,
        derived: *d,
        v_at_cutoff,
        curve: Some(curve),
    })
}

/// Intermediate shooting: bisect `K` in `[K_lin, K0]` on the strictly
/// increasing map `K -> Delta(p(K); K)` with the `V' = sigma` condition.
fn solve_intermediate(
    params: &ModelParams,
    d: &DerivedQuantities,
    lam_low: f64,
) -> Result<OptimalPolicy> {
    let k0 = find_k0(params)?;
    let obj = |k: f64| -> Result<f64> {
        let p = p_of_k(params, k, PofKMode::MatchSigma)?;
        let p_lower = params.p_lower()?;
        let curve = integrate_d(params, k, p_lower.max(d.pi1 + PI1_GUARD))?;
        Ok(delta(params, &curve, p))
    };
    let f_lo = obj(d.k_lin)?;
    let f_hi = obj(k0)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Bracket {
            what: "Intermediate shoot: Delta(p(K);K) over [K_lin, K0]".into(),
            lo: d.k_lin,
            hi: k0,
            f_lo,
            f_hi,
        });
    }
    let k_hat = bisect(|k| obj(k).unwrap(), d.k_lin, k0, ROOT_TOL, "K_hat (Intermediate)")?;
    let p_hat = p_of_k(params, k_hat, PofKMode::MatchSigma)?;
    let p_lower = params.p_lower()?;
    let curve = integrate_d(params, k_hat, p_lower.max(d.pi1 + PI1_GUARD))?;
    let v_at_cutoff = curve.v(p_hat);
    Ok(OptimalPolicy {
        case_id: CaseId::Intermediate,
        p_hat,
        k_hat,
        lambda_low: lam_low,
        lambda_bar: d.lambda_bar,
        boundary_flag: false,
        params: *params,
        derived: *d,
        v_at_cutoff,
        curve: Some(curve),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_params;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_solution_at_k_lin() {
        // At K = K_lin the solution is exactly affine with slope beta.
        let m = reference_params();
        let d = m.derived();
        let curve = integrate_d(&m, d.k_lin, d.pi1 + 0.01).unwrap();
        let beta = m.beta();
        let mut worst: f64 = 0.0;
        for i in 0..=500 {
            let p = curve.p_lo + (1.0 - curve.p_lo) * i as f64 / 500.0;
            worst = worst.max((curve.vp(p) - beta).abs());
        }
        assert!(worst < 1e-8, "sup |V' - beta| = {worst}");
        // Terminal data: V(1) = K, V'(1) = (lx - c - rK)/rho_h.
        assert_abs_diff_eq!(curve.v(1.0), d.k_lin);
        assert_abs_diff_eq!(curve.vp(1.0), (m.lambda_x() - m.c - m.r * d.k_lin) / m.rho_h, epsilon = 1e-12);
    }

    #[test]
    fn curves_monotone_in_k() {
        // V increasing and V' decreasing in K, pointwise.
        let m = reference_params();
        let d = m.derived();
        let lo = integrate_d(&m, 0.8, d.pi1 + 0.02).unwrap();
        let hi = integrate_d(&m, 0.9, d.pi1 + 0.02).unwrap();
        for i in 0..=100 {
            let p = lo.p_lo + (1.0 - lo.p_lo) * i as f64 / 100.0;
            assert!(hi.v(p) > lo.v(p), "V not increasing in K at p={p}");
            if p < 1.0 {
                assert!(hi.vp(p) < lo.vp(p), "V' not decreasing in K at p={p}");
            }
        }
    }

    #[test]
    fn convex_above_k_lin() {
        let m = reference_params();
        let d = m.derived();
        let curve = integrate_d(&m, d.k_lin + 0.1, d.pi1 + 0.02).unwrap();
        for i in 0..=100 {
            let p = curve.p_lo + (1.0 - curve.p_lo) * i as f64 / 100.0;
            assert!(curve.vpp(p) > 0.0, "V'' <= 0 at p={p}");
        }
        // Second differences agree in sign with the analytic second
        // derivative (independent route).
        let h = 1e-4;
        for p in [0.3, 0.5, 0.8] {
            let dd = (curve.v(p + h) - 2.0 * curve.v(p) + curve.v(p - h)) / (h * h);
            assert!(dd > 0.0);
            assert_abs_diff_eq!(dd, curve.vpp(p), epsilon = 1e-3 * curve.vpp(p).abs().max(1.0));
        }
    }

    #[test]
    fn residual_small_on_grid() {
        let m = reference_params();
        let d = m.derived();
        let curve = integrate_d(&m, 1.0, d.pi1 + 0.05).unwrap();
        for i in 0..=200 {
            let p = curve.p_lo + (1.0 - curve.p_lo) * i as f64 / 200.0;
            assert!(curve.residual(p).abs() < 1e-8, "residual {} at p={p}", curve.residual(p));
        }
    }

    #[test]
    fn k0_bracket_and_residual() {
        let m = reference_params();
        let d = m.derived();
        // Bracket validity: slope positive at K_lin, negative at K_max.
        assert!(integrate_d(&m, d.k_lin, d.pi0).unwrap().vp(d.pi0) > 0.0);
        assert!(integrate_d(&m, d.k_max, d.pi0).unwrap().vp(d.pi0) < 0.0);
        let k0 = find_k0(&m).unwrap();
        assert!(d.k_lin < k0 && k0 < d.k_max);
        let resid = integrate_d(&m, k0, d.pi0).unwrap().vp(d.pi0);
        assert!(resid.abs() < 1e-10, "V'(pi0;K0) = {resid}");
        // Re-bisection at doubled resolution lands on the same K0.
        let k0_again = bisect(
            |k| integrate_d(&m, k, d.pi0).unwrap().vp(d.pi0),
            d.k_lin,
            d.k_max,
            ROOT_TOL / 2.0,
            "K0 again",
        )
        .unwrap();
        assert_abs_diff_eq!(k0, k0_again, epsilon = 1e-10);
    }

    #[test]
    fn p_of_k_endpoints_and_monotonicity() {
        let m = reference_params();
        let d = m.derived();
        let k0 = find_k0(&m).unwrap();
        // p(K_lin) = p_lower in sigma mode; p(K0) = pi0 in both modes.
        let p_lower = m.p_lower().unwrap();
        assert_abs_diff_eq!(
            p_of_k(&m, d.k_lin, PofKMode::MatchSigma).unwrap(),
            p_lower,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(p_of_k(&m, k0, PofKMode::MatchSigma).unwrap(), d.pi0, epsilon = 1e-6);
        assert_abs_diff_eq!(p_of_k(&m, k0, PofKMode::MatchZero).unwrap(), d.pi0, epsilon = 1e-6);
        // Monotone in K on sampled pairs, in both modes.
        let mut last = 0.0;
        for i in 0..5 {
            let k = d.k_lin + (k0 - d.k_lin) * (i as f64 + 0.5) / 5.0;
            let p = p_of_k(&m, k, PofKMode::MatchSigma).unwrap();
            assert!(p > last, "p(K) not increasing (sigma mode)");
            last = p;
        }
        let mut last = 0.0;
        for i in 0..5 {
            let k = k0 + (d.k_max - k0) * (i as f64 + 0.5) / 5.0;
            let p = p_of_k(&m, k, PofKMode::MatchZero).unwrap();
            assert!(p > last, "p(K) not increasing (zero mode)");
            last = p;
        }
    }

    #[test]
    fn lambda_low_bracket_and_continuity() {
        let m = reference_params();
        let ll = lambda_low(&m).unwrap();
        // Threshold chain: c < lambda_low < c/pi0 (< lambda_bar when finite).
        assert!(m.c < ll && ll < m.c / m.derived().pi0, "lambda_low = {ll}");
        // Residual of the defining root.
        let mm = with_lambda_x(&m, ll);
        let k0 = find_k0(&mm).unwrap();
        let curve = integrate_d(&mm, k0, mm.derived().pi0).unwrap();
        assert!(delta(&mm, &curve, mm.derived().pi0).abs() < 1e-8);
        // Just above the threshold the Intermediate cutoff sits near pi0.
        let eps = 1e-4;
        let near = solve_cutoff(&with_lambda_x(&m, ll + eps)).unwrap();
        assert_eq!(near.case_id, CaseId::Intermediate);
        assert!((near.p_hat - near.derived.pi0).abs() < 0.05, "p_hat = {}", near.p_hat);
    }

    #[test]
    fn high_crime_closed_form() {
        // rho_l = rho_h = 1, c = 0.3: lambda_bar = 0.3·1.7/0.7 ≈ 0.7286, so
        // lambda·x = 1 is in the high-crime regime with the myopic cutoff.
        let m = ModelParams::new(1.0, 1.0, 0.3, 2.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        let pol = solve_cutoff(&m).unwrap();
        assert_eq!(pol.case_id, CaseId::HighCrime);
        assert_abs_diff_eq!(pol.p_hat, 0.3, epsilon = 1e-12);
        assert!(pol.p_hat <= pol.derived.pi1);
        assert_abs_diff_eq!(pol.k_hat, pol.derived.k_lin);
        // Value affine with slope beta on the enforcement region.
        let beta = m.beta();
        assert_abs_diff_eq!(pol.value_prime(0.6), beta, epsilon = 1e-12);
        assert_abs_diff_eq!(pol.value(1.0), pol.k_hat);
        // Delta is linear and vanishes exactly at the myopic cutoff.
        assert_abs_diff_eq!(pol.delta_at(pol.p_hat), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pol.action(pol.p_hat), 1.0);
    }

    #[test]
    fn intermediate_reference_solution() {
        let m = reference_params();
        let pol = solve_cutoff(&m).unwrap();
        assert_eq!(pol.case_id, CaseId::Intermediate);
        let d = pol.derived;
        assert!(d.pi1 < pol.p_hat && pol.p_hat < d.pi0);
        assert!(pol.p_hat < d.p_hat_m);
        assert!(!pol.boundary_flag);
        // Optimality residuals.
        assert!(pol.delta_at(pol.p_hat).abs() < 1e-8, "Delta(p_hat) = {}", pol.delta_at(pol.p_hat));
        let smooth = pol.value_prime(pol.p_hat) - m.sigma(pol.p_hat).unwrap();
        assert!(smooth.abs() < 1e-8, "V'(p_hat) - sigma(p_hat) = {smooth}");
        // Value matching across the cutoff and smooth pasting from below
        // (the extension satisfies r·V = h·V', so its slope at p_hat- is
        // r·V(p_hat)/h(p_hat)).
        let below = pol.value(pol.p_hat - 1e-9);
        assert!((below - pol.v_at_cutoff).abs() < 1e-8);
        let slope_below = pol.value_prime(pol.p_hat - 1e-9);
        let slope_above = pol.value_prime(pol.p_hat + 1e-12);
        assert!((slope_below - slope_above).abs() < 1e-6);
        // Loss at the long-run prior beats constant full enforcement.
        assert!(pol.loss(0.5) < m.c / m.r);
        // The holding action keeps the belief stationary at the cutoff.
        let z = pol.action(pol.p_hat);
        assert!(z > 0.0 && z < 1.0);
        assert_abs_diff_eq!(m.drift(pol.p_hat, z).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn delta_single_crossing_reference() {
        let m = reference_params();
        let pol = solve_cutoff(&m).unwrap();
        // Delta <= tol below the cutoff (down to the curve domain) and
        // >= -tol above it, on a 500-point grid.
        let lo = pol.derived.pi1 + 2e-6;
        for i in 0..=500 {
            let p = lo + (1.0 - lo) * i as f64 / 500.0;
            let dv = pol.delta_at(p);
            if p < pol.p_hat {
                assert!(dv <= 1e-8, "Delta = {dv} > 0 below cutoff at p={p}");
            } else {
                assert!(dv >= -1e-8, "Delta = {dv} < 0 above cutoff at p={p}");
            }
        }
    }

    #[test]
    fn low_crime_case() {
        // Push lambda·x just above c so it falls below lambda_low.
        let m0 = reference_params();
        let ll = lambda_low(&m0).unwrap();
        let lx = 0.5 * (m0.c + ll); // strictly inside (c, lambda_low)
        let m = with_lambda_x(&m0, lx);
        let pol = solve_cutoff(&m).unwrap();
        assert_eq!(pol.case_id, CaseId::LowCrime);
        assert!(pol.p_hat >= pol.derived.pi0 && pol.p_hat < 1.0);
        // Value matching to zero at the cutoff; loss equals the crime stock
        // below it.
        assert!(pol.v_at_cutoff.abs() < 1e-8, "V(p_hat) = {}", pol.v_at_cutoff);
        assert!(pol.value_prime(pol.p_hat + 1e-9).abs() < 1e-6);
        for p in [0.0, 0.3, pol.p_hat - 0.01] {
            assert_abs_diff_eq!(pol.loss(p), m.crime_stock(p), epsilon = 1e-12);
        }
        assert!(pol.delta_at(pol.p_hat).abs() < 1e-8);
        // Value still positive above the cutoff and loss below the stock.
        assert!(pol.value(0.9) > 0.0);
        assert!(pol.loss(0.9) < m.crime_stock(0.9));
    }

    #[test]
    fn p_hat_below_myopic_cutoff_everywhere() {
        // p_hat <= p_hat_M across regimes, strict in the Intermediate case.
        for lx in [2.0, 3.0, 4.0, 6.0] {
            let m = with_lambda_x(&reference_params(), lx);
            let pol = solve_cutoff(&m).unwrap();
            assert!(pol.p_hat <= pol.derived.p_hat_m + 1e-10);
            if pol.case_id == CaseId::Intermediate {
                assert!(pol.p_hat < pol.derived.p_hat_m);
            }
        }
    }
}
