//! Closed-form achievable region for the 2-user additive Gaussian MAC
//! with a facilitator that knows both messages and has output links of
//! capacity `c_out` each.
//!
//! The jointly Gaussian construction is parametrized by a common-part
//! correlation `ρ0` and per-encoder loadings `ρ1, ρ2`; the dependence
//! budget splits as `c1d = c2d = s·c_out` with the remainder forwarded.
//! Everything is evaluated in bits; no tensors are ever built for the
//! Gaussian family.

use crate::Bits;
use rayon::prelude::*;
use thiserror::Error;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Gaussian2Error {
    #[error("{name} = {value} outside its valid range")]
    ParamRange { name: &'static str, value: f64 },
    #[error("rho0 = {rho0} exceeds the dependence cap {cap}")]
    Rho0AboveCap { rho0: f64, cap: f64 },
    #[error("dependence surplus is negative: {0}")]
    NegativeZeta(f64),
    #[error("region is empty at this parameter point")]
    EmptyRegion,
}

/// One parameter point of the jointly Gaussian construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian2Point {
    pub gamma1: f64,
    pub gamma2: f64,
    pub c_out: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub c1d: f64,
    pub c2d: f64,
}

/// The four right-hand sides of the region at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerRates {
    pub r1_max: Bits,
    pub r2_max: Bits,
    pub sum1: Bits,
    pub sum2: Bits,
}

fn half_log2(x: f64) -> f64 {
    0.5 * x.log2()
}

impl Gaussian2Point {
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        c_out: f64,
        rho0: f64,
        rho1: f64,
        rho2: f64,
        c1d: f64,
        c2d: f64,
    ) -> Result<Self, Gaussian2Error> {
        for (name, value, lo, hi) in [
            ("gamma1", gamma1, 0.0, f64::INFINITY),
            ("gamma2", gamma2, 0.0, f64::INFINITY),
            ("c_out", c_out, 0.0, f64::INFINITY),
            ("rho0", rho0, 0.0, 1.0),
            ("rho1", rho1, 0.0, 1.0),
            ("rho2", rho2, 0.0, 1.0),
            ("c1d", c1d, 0.0, c_out),
            ("c2d", c2d, 0.0, c_out),
        ] {
            if !(value >= lo && value <= hi + 1e-12) {
                return Err(Gaussian2Error::ParamRange { name, value });
            }
        }
        let cap = rho0_cap(c1d + c2d);
        if rho0 > cap + 1e-12 {
            return Err(Gaussian2Error::Rho0AboveCap { rho0, cap });
        }
        let pt = Self { gamma1, gamma2, c_out, rho0, rho1, rho2, c1d, c2d };
        let z = pt.zeta();
        if z < -1e-12 {
            return Err(Gaussian2Error::NegativeZeta(z));
        }
        Ok(pt)
    }

    pub fn c10(&self) -> f64 {
        self.c_out - self.c2d
    }

    pub fn c20(&self) -> f64 {
        self.c_out - self.c1d
    }

    /// Conditional input dependence of the construction: given the common
    /// part, the residuals have correlation `ρ0` (zero when a loading
    /// vanishes), so `I(X1; X2 | U0) = −½ log2(1 − ρ0²)`.
    pub fn conditional_input_mi(&self) -> Bits {
        if self.rho1 == 0.0 || self.rho2 == 0.0 {
            0.0
        } else {
            -half_log2(1.0 - self.rho0 * self.rho0)
        }
    }

    pub fn zeta(&self) -> Bits {
        self.c1d + self.c2d - self.conditional_input_mi()
    }

    /// Evaluate the four region bounds at this point.
    pub fn corner_rates(&self) -> CornerRates {
        corner_rates_raw(
            self.gamma1, self.gamma2, self.rho0, self.rho1, self.rho2, self.c1d, self.c2d,
            self.c10(), self.c20(), self.zeta(),
        )
    }
}

/// Largest admissible common-part correlation for a dependence budget.
pub fn rho0_cap(cd_total: f64) -> f64 {
    (1.0 - (2.0f64).powf(-2.0 * cd_total)).max(0.0).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn corner_rates_raw(
    gamma1: f64,
    gamma2: f64,
    rho0: f64,
    rho1: f64,
    rho2: f64,
    c1d: f64,
    c2d: f64,
    c10: f64,
    c20: f64,
    zeta: f64,
) -> CornerRates {
    let g1 = rho1 * rho1 * gamma1;
    let g2 = rho2 * rho2 * gamma2;
    let gbar = (gamma1 * gamma2).sqrt();
    let cross = 2.0 * rho0 * rho1 * rho2 * gbar;
    let t1 = 1.0 + g1 + g2 + cross;
    let res0 = 1.0 - rho0 * rho0;

    let r1_a = half_log2(t1 / (1.0 + res0 * g2)) - c1d;
    let r1_b = half_log2(1.0 + res0 * g1) - zeta;
    let r2_a = half_log2(t1 / (1.0 + res0 * g1)) - c2d;
    let r2_b = half_log2(1.0 + res0 * g2) - zeta;

    let coherent = rho0 * rho1 * rho2 + ((1.0 - rho1 * rho1) * (1.0 - rho2 * rho2)).sqrt();
    CornerRates {
        r1_max: r1_a.max(r1_b) + c10,
        r2_max: r2_a.max(r2_b) + c20,
        sum1: half_log2(t1) - zeta + c10 + c20,
        sum2: half_log2(1.0 + gamma1 + gamma2 + 2.0 * coherent * gbar) - zeta,
    }
}

/// Maximize `w1·R1 + w2·R2` over `R1 ≤ r1, R2 ≤ r2, R1+R2 ≤ s, R ≥ 0`.
/// Returns `None` when the pentagon is empty.
pub fn pentagon_max(r1: f64, r2: f64, s: f64, w1: f64, w2: f64) -> Option<(f64, (f64, f64))> {
    if r1 < 0.0 || r2 < 0.0 || s < 0.0 {
        return None;
    }
    let v1 = {
        let a = r1.min(s);
        (a, r2.min(s - a))
    };
    let v2 = {
        let b = r2.min(s);
        (r1.min(s - b), b)
    };
    let score = |(a, b): (f64, f64)| w1 * a + w2 * b;
    Some(if score(v1) >= score(v2) { (score(v1), v1) } else { (score(v2), v2) })
}

/// Weighted optimum of the classical (no-cooperation) Gaussian pentagon.
pub fn classical_weighted(gamma1: f64, gamma2: f64, alpha: f64) -> Bits {
    let r1 = half_log2(1.0 + gamma1);
    let r2 = half_log2(1.0 + gamma2);
    let s = half_log2(1.0 + gamma1 + gamma2);
    pentagon_max(r1, r2, s, alpha, 1.0 - alpha).map(|(v, _)| v).unwrap_or(0.0)
}

/// Best weighted rate over the parametrized region by deterministic grid
/// search (split fraction, ρ0, ρ1, ρ2) plus one local refinement pass.
/// Production callers should use a resolution of at least 50 per
/// parameter (the CLI enforces this); smaller grids are for smoke tests.
pub fn optimize_weighted(
    gamma1: f64,
    gamma2: f64,
    c_out: f64,
    alpha: f64,
    grid: usize,
) -> (Gaussian2Point, Bits) {
    assert!(grid >= 2, "grid resolution must be at least 2 per parameter");
    let w1 = alpha;
    let w2 = 1.0 - alpha;
    let eval = |s: f64, rho0: f64, rho1: f64, rho2: f64| -> Option<f64> {
        let c1d = s * c_out;
        let c2d = s * c_out;
        let zeta = c1d + c2d
            - if rho1 == 0.0 || rho2 == 0.0 { 0.0 } else { -half_log2(1.0 - rho0 * rho0) };
        if zeta < 0.0 {
            return None;
        }
        let cr = corner_rates_raw(
            gamma1, gamma2, rho0, rho1, rho2, c1d, c2d, c_out - c2d, c_out - c1d, zeta,
        );
        pentagon_max(cr.r1_max, cr.r2_max, cr.sum1.min(cr.sum2), w1, w2).map(|(v, _)| v)
    };

    let lin = |lo: f64, hi: f64, n: usize, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let sweep = |s_lo: f64, s_hi: f64, r0f: f64, r1_lo: f64, r1_hi: f64, r2_lo: f64, r2_hi: f64, n: usize| {
        (0..n)
            .into_par_iter()
            .map(|si| {
                let s = lin(s_lo, s_hi, n, si);
                let cap = rho0_cap(2.0 * s * c_out);
                let mut best: Option<([f64; 4], f64)> = None;
                for r0i in 0..n {
                    // the ρ0 grid always contains the cap endpoint
                    let rho0 = lin((cap * r0f).min(cap), cap, n, r0i);
                    for r1i in 0..n {
                        let rho1 = lin(r1_lo, r1_hi, n, r1i);
                        for r2i in 0..n {
                            let rho2 = lin(r2_lo, r2_hi, n, r2i);
                            if let Some(v) = eval(s, rho0, rho1, rho2) {
                                if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                                    best = Some(([s, rho0, rho1, rho2], v));
                                }
                            }
                        }
                    }
                }
                best
            })
            .reduce(|| None, |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if x.1 >= y.1 { x } else { y }),
                (x, None) => x,
                (None, y) => y,
            })
    };

    let coarse = sweep(0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, grid).expect("nonempty grid");
    // refine in a one-cell window around the coarse optimum
    let ([s, _rho0, rho1, rho2], _) = coarse;
    let step = 1.0 / (grid - 1) as f64;
    let refined = sweep(
        (s - step).max(0.0),
        (s + step).min(1.0),
        // within the window, scan the top of the rho0 range densely
        0.8,
        (rho1 - step).max(0.0),
        (rho1 + step).min(1.0),
        (rho2 - step).max(0.0),
        (rho2 + step).min(1.0),
        grid,
    );
    let mut best = coarse;
    if let Some(r) = refined {
        if r.1 > best.1 {
            best = r;
        }
    }
    let ([s, rho0, rho1, rho2], _) = best;
    let pt = Gaussian2Point::new(
        gamma1,
        gamma2,
        c_out,
        rho0.min(rho0_cap(2.0 * s * c_out)),
        rho1,
        rho2,
        s * c_out,
        s * c_out,
    )
    .expect("grid points are valid");
    (pt, best.1)
}

/// Asymptotic square-root lower bound for the weighted rate gain.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBound {
    pub alpha: f64,
    pub c_out: f64,
    /// Exact finite-budget gain of the explicit construction.
    pub lower_bound: Bits,
    /// Coefficient of `sqrt(c_out)` in the asymptotic expansion.
    pub sqrt_coefficient: f64,
}

/// Exact lower bound from the explicit full-dependence construction
/// (`ρ1 = ρ2 = 1`, `ρ0` at its cap, no forwarding), evaluated in both
/// user orientations, minus the no-cooperation optimum.
pub fn prop5_lower_bound(alpha: f64, c_out: f64, gamma1: f64, gamma2: f64) -> AlphaBound {
    let rho0 = (1.0 - (2.0f64).powf(-4.0 * c_out)).max(0.0).sqrt();
    let gbar = (gamma1 * gamma2).sqrt();
    let res0 = 1.0 - rho0 * rho0;
    let top = 1.0 + gamma1 + gamma2 + 2.0 * rho0 * gbar;

    // orientation favoring user 2's single-user rate
    let r1_a = half_log2(top / (1.0 + res0 * gamma2)) - c_out;
    let r2_a = half_log2(1.0 + res0 * gamma2);
    let value_a = alpha * r1_a + (1.0 - alpha) * r2_a;
    // mirrored orientation
    let r2_b = half_log2(top / (1.0 + res0 * gamma1)) - c_out;
    let r1_b = half_log2(1.0 + res0 * gamma1);
    let value_b = alpha * r1_b + (1.0 - alpha) * r2_b;

    let lower_bound = value_a.max(value_b) - classical_weighted(gamma1, gamma2, alpha);
    let sqrt_coefficient =
        2.0 * (gamma1 * gamma2 * LOG2_E).sqrt() / (1.0 + gamma1 + gamma2) * alpha.min(1.0 - alpha);
    AlphaBound { alpha, c_out, lower_bound, sqrt_coefficient }
}

/// Best forwarding-only sum rate: jointly Gaussian inputs correlated only
/// through the forwarded common message.
pub fn forwarding_sum_rate(gamma1: f64, gamma2: f64, c_out: f64) -> Bits {
    let gbar = (gamma1 * gamma2).sqrt();
    let eval = |rho1: f64, rho2: f64| -> f64 {
        let private = half_log2(1.0 + rho1 * rho1 * gamma1 + rho2 * rho2 * gamma2) + 2.0 * c_out;
        let coherent = half_log2(
            1.0 + gamma1 + gamma2 + 2.0 * gbar * ((1.0 - rho1 * rho1) * (1.0 - rho2 * rho2)).sqrt(),
        );
        private.min(coherent)
    };
    let n = 129usize;
    let mut best = (1.0f64, 1.0f64, eval(1.0, 1.0));
    for i in 0..n {
        for j in 0..n {
            let r1 = i as f64 / (n - 1) as f64;
            let r2 = j as f64 / (n - 1) as f64;
            let v = eval(r1, r2);
            if v > best.2 {
                best = (r1, r2, v);
            }
        }
    }
    // symmetric equalization point in closed form
    let pow = (2.0f64).powf(4.0 * c_out);
    let num = 1.0 + gamma1 + gamma2 + 2.0 * gbar - pow;
    let den = (gamma1 + gamma2) * pow + 2.0 * gbar;
    if den > 0.0 {
        let rho_sq = (num / den).clamp(0.0, 1.0);
        let r = rho_sq.sqrt();
        let v = eval(r, r);
        if v > best.2 {
            best = (r, r, v);
        }
    }
    // one refinement pass around the best grid cell
    let step = 1.0 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            let r1 = (best.0 - step + 2.0 * step * i as f64 / (n - 1) as f64).clamp(0.0, 1.0);
            let r2 = (best.1 - step + 2.0 * step * j as f64 / (n - 1) as f64).clamp(0.0, 1.0);
            let v = eval(r1, r2);
            if v > best.2 {
                best = (r1, r2, v);
            }
        }
    }
    best.2
}

/// One row of the gain-versus-budget table.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure2Row {
    pub c_out: f64,
    pub full_gain: Bits,
    pub forwarding_gain: Bits,
    pub sqrt_term: Bits,
}

/// Sum-rate gain data across a budget grid: the full coordination region
/// (weighted optimum at α = ½, doubled), the forwarding-only region, and
/// the square-root reference term.
pub fn figure2_data(gamma1: f64, gamma2: f64, c_out_grid: &[f64], param_grid: usize) -> Vec<Figure2Row> {
    let baseline_half = classical_weighted(gamma1, gamma2, 0.5);
    let baseline_sum = half_log2(1.0 + gamma1 + gamma2);
    let coeff = 2.0 * (gamma1 * gamma2 * LOG2_E).sqrt() / (1.0 + gamma1 + gamma2);
    c_out_grid
        .iter()
        .map(|&c_out| {
            let (_, half_value) = optimize_weighted(gamma1, gamma2, c_out, 0.5, param_grid);
            Figure2Row {
                c_out,
                full_gain: 2.0 * (half_value - baseline_half),
                forwarding_gain: forwarding_sum_rate(gamma1, gamma2, c_out) - baseline_sum,
                sqrt_term: coeff * c_out.sqrt(),
            }
        })
        .collect()
}
