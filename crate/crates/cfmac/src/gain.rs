//! Sum-rate gain machinery: dependence-benefit witnesses, analytic
//! mixture derivatives, the root-solved mixing parameter λ*, gain curves
//! over the facilitator output scale, and the two-round conferencing
//! comparison.
//!
//! The gain curve evaluates the achievable sum rate of a one-parameter
//! family of coordination distributions. The family mixes the best
//! product input `p_a` with a dependent distribution `p_b` whose expected
//! channel-divergence beats the product optimum; the mixing amount λ*(h)
//! is matched to the facilitator output scale `h` by a scalar root solve.

use crate::channel::DiscreteMac;
use crate::info::{self, InfoError};
use crate::lp;
use crate::region::CfConfig;
use crate::subsets::{full_mask, mask_to_indices, nonempty_subsets};
use crate::{Bits, Pmf, TOL_ARITH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GainError {
    #[error("alphabet too large for the witness search: {0} symbols on one axis (cap 4)")]
    AlphabetTooLarge(usize),
    #[error("product-input ascent did not converge; best value {best}")]
    AscentNotConverged { best: f64 },
    #[error("per-encoder mutual information I(X_{j};Y|rest) is not positive (encoder {j})")]
    PositivityFailed { j: usize },
    #[error("no mixing weight satisfies the input-link margin")]
    NoMixWeight,
    #[error("direction vector must be strictly positive and nonempty")]
    BadDirection,
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("mixture support mismatch at the lambda boundary")]
    BoundarySupport,
    #[error("p_a must be a product distribution (deviation {0})")]
    NotProductForm(f64),
    #[error("support of p_b is not contained in the support of p_a at {index:?}")]
    SupportNotContained { index: Vec<usize> },
    #[error("no root for h = {h}; largest solvable scale is about {h_max}")]
    NoRoot { h: f64, h_max: f64 },
    #[error("dependence surplus for subset {mask:#b} is {value} <= 0 at h = {h}")]
    ZetaNonPositive { mask: u32, value: f64, h: f64 },
    #[error("cross-rate precondition fails for S={s:#b}, T={t:#b} at h = {h}")]
    CrossRatePrecondition { s: u32, t: u32, h: f64 },
    #[error("induced two-user channel admits no dependence witness")]
    ConferencingInapplicable,
    #[error("lambda must lie in [0, 1)")]
    BadLambda,
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Region(#[from] crate::region::RegionError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// Witness that a channel rewards input dependence: a product maximizer
/// `p_ind` and a dependent `p_dep` on its support with
/// `I_dep + D(p_dep(y)‖p_ind(y)) > I_ind`.
#[derive(Debug, Clone)]
pub struct CStarWitness {
    pub p_ind: Pmf,
    pub p_dep: Pmf,
    pub i_ind: Bits,
    pub i_dep: Bits,
    pub output_kl: Bits,
    pub margin: Bits,
}

const ASCENT_SWEEP_CAP: usize = 600;
const ASCENT_TOL: f64 = 1e-11;

/// Maximize `I(X_[k];Y)` over product input distributions by multi-start
/// coordinate ascent with pairwise golden-section transfers, honoring the
/// channel's cost tables. Returns the product pmf and its mutual
/// information.
pub fn max_product_mi(mac: &DiscreteMac, restarts: usize, seed: u64) -> Result<(Pmf, Bits), GainError> {
    for &s in mac.input_sizes() {
        if s > 4 {
            return Err(GainError::AlphabetTooLarge(s));
        }
    }
    let k = mac.k();
    let objective = |factors: &[Vec<f64>]| -> f64 {
        let pmfs: Vec<Pmf> = factors.iter().map(|f| Pmf::from_weights(vec![f.len()], f.clone()).unwrap()).collect();
        let input = Pmf::product_of(&pmfs);
        if cost_violated(mac, &input) {
            return f64::NEG_INFINITY;
        }
        let joint = info::joint_input_output(mac, &input).unwrap();
        let x_axes: Vec<usize> = (0..k).collect();
        info::mutual_information(&joint, &x_axes, &[k], &[]).unwrap()
    };

    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    for r in 0..=restarts {
        let mut factors: Vec<Vec<f64>> = if r == 0 {
            mac.input_sizes().iter().map(|&n| vec![1.0 / n as f64; n]).collect()
        } else {
            let mut rng = crate::rng::stream_rng(seed, &[r as u64]);
            mac.input_sizes()
                .iter()
                .map(|&n| {
                    use rand::Rng;
                    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / s).collect()
                })
                .collect()
        };
        let mut value = objective(&factors);
        if value == f64::NEG_INFINITY {
            // cost-infeasible start; shrink toward the cheapest symbol
            continue;
        }
        let mut converged = false;
        for _sweep in 0..ASCENT_SWEEP_CAP {
            let before = value;
            for j in 0..k {
                let n = factors[j].len();
                for a in 0..n {
                    for b in (a + 1)..n {
                        value = golden_transfer(&mut factors, j, a, b, value, &objective);
                    }
                }
            }
            if value - before < ASCENT_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(GainError::AscentNotConverged { best: value });
        }
        if best.as_ref().map_or(true, |(_, v)| value > *v) {
            best = Some((factors, value));
        }
    }
    let (factors, value) = best.ok_or(GainError::NoMixWeight)?;
    let pmfs: Vec<Pmf> = factors.into_iter().map(|f| Pmf::from_weights(vec![f.len()], f).unwrap()).collect();
    Ok((Pmf::product_of(&pmfs), value))
}

fn cost_violated(mac: &DiscreteMac, input: &Pmf) -> bool {
    let Some(costs) = mac.costs() else { return false };
    for (j, spec) in costs.iter().enumerate() {
        let marg = input.marginal(&[j]).unwrap();
        let mean: f64 = marg.mass().iter().zip(&spec.table).map(|(p, c)| p * c).sum();
        if mean > spec.budget + TOL_ARITH {
            return true;
        }
    }
    false
}

/// Move mass between two symbols of one factor along the best point of a
/// golden-section search; returns the improved objective value.
fn golden_transfer(
    factors: &mut [Vec<f64>],
    j: usize,
    a: usize,
    b: usize,
    current: f64,
    objective: &dyn Fn(&[Vec<f64>]) -> f64,
) -> f64 {
    let total = factors[j][a] + factors[j][b];
    if total <= 0.0 {
        return current;
    }
    let t_orig = (factors[j][a] / total).clamp(0.0, 1.0);
    let eval = |t: f64, factors: &mut [Vec<f64>]| -> f64 {
        factors[j][a] = t * total;
        factors[j][b] = (1.0 - t) * total;
        objective(factors)
    };
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut t1 = hi - phi * (hi - lo);
    let mut t2 = lo + phi * (hi - lo);
    let mut f1 = eval(t1, factors);
    let mut f2 = eval(t2, factors);
    for _ in 0..48 {
        if f1 < f2 {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = eval(t2, factors);
        } else {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = eval(t1, factors);
        }
    }
    let (t_best, f_best) = if f1 > f2 { (t1, f1) } else { (t2, f2) };
    if f_best >= current {
        eval(t_best, factors);
        f_best
    } else {
        eval(t_orig, factors);
        current
    }
}

/// Expected channel divergence `Σ_x p(x) D(p(y|x) ‖ q_y)` in bits; linear
/// in the input distribution.
fn expected_divergence(mac: &DiscreteMac, input: &Pmf, q_y: &Pmf) -> Result<Bits, GainError> {
    let mut total = 0.0;
    for (row, &px) in input.mass().iter().enumerate() {
        if px > 0.0 {
            total += px * row_divergence(mac, row, q_y)?;
        }
    }
    Ok(total)
}

fn row_divergence(mac: &DiscreteMac, row: usize, q_y: &Pmf) -> Result<Bits, GainError> {
    let mut d = 0.0;
    for (y, &t) in mac.row_by_flat(row).iter().enumerate() {
        if t > 0.0 {
            let q = q_y.mass()[y];
            if q <= 0.0 {
                return Err(GainError::Info(InfoError::SupportViolation { index: vec![row, y], p: t }));
            }
            d += t * (t / q).log2();
        }
    }
    Ok(d)
}

/// Search for a dependence witness. `p_ind` comes from the product
/// ascent; `p_dep` maximizes the divergence margin over distributions on
/// the support of `p_ind` (an LP when cost tables are present, otherwise
/// the best single input tuple). Returns `None` when the margin cannot
/// exceed `1e-6`.
pub fn cstar_test(mac: &DiscreteMac) -> Result<Option<CStarWitness>, GainError> {
    let (p_ind, i_ind) = max_product_mi(mac, 8, 0x5eed)?;
    let q_y = info::output_pmf(mac, &p_ind)?;
    let support: Vec<usize> =
        (0..p_ind.len()).filter(|&i| p_ind.mass()[i] > 1e-12).collect();

    let p_dep = if mac.costs().is_some() {
        maximize_divergence_lp(mac, &p_ind, &q_y, &support)?
    } else {
        // margin is linear in p_dep, so a vertex (single tuple) is optimal
        let mut best: Option<(usize, f64)> = None;
        for &cell in &support {
            let d = row_divergence(mac, cell, &q_y)?;
            if best.map_or(true, |(_, bd)| d > bd + 1e-15) {
                best = Some((cell, d));
            }
        }
        let (cell, _) = best.ok_or(GainError::NoMixWeight)?;
        Pmf::point_mass(p_ind.axis_sizes().to_vec(), &p_ind.flat_to_index(cell))
    };

    let e_dep = expected_divergence(mac, &p_dep, &q_y)?;
    let margin = e_dep - i_ind;
    if margin <= 1e-6 {
        return Ok(None);
    }
    let x_axes: Vec<usize> = (0..mac.k()).collect();
    let joint_dep = info::joint_input_output(mac, &p_dep)?;
    let i_dep = info::mutual_information(&joint_dep, &x_axes, &[mac.k()], &[])?;
    let out_dep = info::output_pmf(mac, &p_dep)?;
    let output_kl = info::kl_divergence(&out_dep, &q_y)?;
    debug_assert!((i_dep + output_kl - e_dep).abs() < 1e-9);
    Ok(Some(CStarWitness { p_ind, p_dep, i_ind, i_dep, output_kl, margin }))
}

/// LP for the cost-constrained witness: maximize the linear divergence
/// objective over the simplex on `support` subject to the cost rows.
fn maximize_divergence_lp(
    mac: &DiscreteMac,
    p_ind: &Pmf,
    q_y: &Pmf,
    support: &[usize],
) -> Result<Pmf, GainError> {
    let n = support.len();
    let mut c = Vec::with_capacity(n);
    for &cell in support {
        c.push(row_divergence(mac, cell, q_y)?);
    }
    let mut a = vec![vec![1.0; n], vec![-1.0; n]];
    let mut b = vec![1.0, -1.0];
    let costs = mac.costs().unwrap();
    let k = mac.k();
    let sizes = p_ind.axis_sizes();
    for (j, spec) in costs.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for &cell in support {
            let coord = p_ind.flat_to_index(cell);
            debug_assert_eq!(coord.len(), k);
            row.push(spec.table[coord[j]]);
        }
        a.push(row);
        b.push(spec.budget);
    }
    let sol = lp::maximize(&c, &a, &b).map_err(|_| GainError::NoMixWeight)?;
    let mut mass = vec![0.0; p_ind.len()];
    for (ix, &cell) in support.iter().enumerate() {
        mass[cell] = sol.x[ix].max(0.0);
    }
    let _ = sizes;
    Ok(Pmf::from_weights(p_ind.axis_sizes().to_vec(), mass)?)
}

/// Gaussian membership: the additive-noise channel rewards dependence
/// exactly when at least two power constraints are strictly positive.
pub fn gaussian_cstar(powers: &[f64]) -> bool {
    powers.iter().filter(|&&p| p > 0.0).count() >= 2
}

fn check_same_shape(p_a: &Pmf, p_b: &Pmf) -> Result<(), GainError> {
    if p_a.axis_sizes() != p_b.axis_sizes() {
        return Err(GainError::Info(InfoError::IncompatibleShapes(
            p_a.axis_sizes().to_vec(),
            p_b.axis_sizes().to_vec(),
        )));
    }
    Ok(())
}

fn mix_masses(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
}

/// Analytic derivative of the marginal entropy `H_λ(X_axes)` of the
/// mixture `(1−λ)p_a + λp_b`, in bits per unit λ:
/// `−Σ (p_b − p_a)(x) · log2 p_λ(x)`.
pub fn mixture_entropy_derivative(p_a: &Pmf, p_b: &Pmf, lambda: f64, axes: &[usize]) -> Result<f64, GainError> {
    check_same_shape(p_a, p_b)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GainError::BadLambda);
    }
    let ma = p_a.marginal(axes)?;
    let mb = p_b.marginal(axes)?;
    let mixed = mix_masses(ma.mass(), mb.mass(), lambda);
    let mut d = 0.0;
    for ((&a, &b), m) in ma.mass().iter().zip(mb.mass()).zip(&mixed) {
        let delta = b - a;
        if delta != 0.0 {
            if *m <= 0.0 {
                return Err(GainError::BoundarySupport);
            }
            d -= delta * m.log2();
        }
    }
    Ok(d)
}

/// Analytic derivative of `I_λ(X_[k]; Y)` along the mixture:
/// `Σ (p_b − p_a)(x) · D(p(y|x) ‖ p_λ(y))`.
pub fn mixture_mi_derivative(mac: &DiscreteMac, p_a: &Pmf, p_b: &Pmf, lambda: f64) -> Result<f64, GainError> {
    check_same_shape(p_a, p_b)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GainError::BadLambda);
    }
    let mixed = Pmf::from_weights(p_a.axis_sizes().to_vec(), mix_masses(p_a.mass(), p_b.mass(), lambda))?;
    let q_y = info::output_pmf(mac, &mixed)?;
    let mut d = 0.0;
    for (row, (&a, &b)) in p_a.mass().iter().zip(p_b.mass()).enumerate() {
        let delta = b - a;
        if delta != 0.0 {
            d += delta * row_divergence(mac, row, &q_y)?;
        }
    }
    Ok(d)
}

fn product_form_deviation(p: &Pmf) -> f64 {
    let factors: Vec<Pmf> = (0..p.dims()).map(|a| p.marginal(&[a]).unwrap()).collect();
    let prod = Pmf::product_of(&factors);
    prod.linf_distance(p).unwrap()
}

/// Derivative of the total correlation of the mixture at `λ = 0⁺` when
/// `p_a` is a product distribution covering the support of `p_b`. The
/// value is analytically zero; the computed number is returned so tests
/// can confirm it vanishes.
pub fn mixture_tc_derivative_at_zero(p_a: &Pmf, p_b: &Pmf, axes: &[usize]) -> Result<f64, GainError> {
    check_same_shape(p_a, p_b)?;
    let dev = product_form_deviation(p_a);
    if dev > TOL_ARITH {
        return Err(GainError::NotProductForm(dev));
    }
    for (i, (&a, &b)) in p_a.mass().iter().zip(p_b.mass()).enumerate() {
        if b > 0.0 && a <= 0.0 {
            return Err(GainError::SupportNotContained { index: p_a.flat_to_index(i) });
        }
    }
    // d/dλ TC = Σ Δ(x_S)·log2[ p_λ(x_S) / ∏_j p_λ(x_j) ]; at λ=0 the log
    // vanishes on supp(p_a) because p_a factors.
    let ma = p_a.marginal(axes)?;
    let mb = p_b.marginal(axes)?;
    let singles: Vec<Pmf> = axes.iter().map(|&ax| p_a.marginal(&[ax]).unwrap()).collect();
    let sizes = ma.axis_sizes().to_vec();
    let strides = ma.strides();
    let mut d = 0.0;
    for (flat, (&a, &b)) in ma.mass().iter().zip(mb.mass()).enumerate() {
        let delta = b - a;
        if delta == 0.0 {
            continue;
        }
        if a <= 0.0 {
            return Err(GainError::SupportNotContained { index: ma.flat_to_index(flat) });
        }
        let mut log_prod = 0.0;
        for (dim, single) in singles.iter().enumerate() {
            let coord = flat / strides[dim] % sizes[dim];
            log_prod += single.mass()[coord].log2();
        }
        d += delta * (a.log2() - log_prod);
    }
    Ok(d)
}

/// Total correlation of the mixture restricted to `axes_mask` of the
/// input tuple, in bits.
fn mixture_tc(p_a: &Pmf, p_b: &Pmf, lambda: f64, mask: u32) -> Result<f64, GainError> {
    let axes = mask_to_indices(mask);
    let mixed = Pmf::from_weights(p_a.axis_sizes().to_vec(), mix_masses(p_a.mass(), p_b.mass(), lambda))?;
    if axes.len() == 1 {
        return Ok(0.0);
    }
    Ok(info::total_correlation(&mixed, &axes, &[])?)
}

/// One-parameter achievable family: product base `p_a`, dependent tilt
/// `p_b`, mixing weight for the common time-sharing bit, slack `ε`, and a
/// strictly positive direction for the output budget.
#[derive(Debug, Clone)]
pub struct MixtureFamily {
    pub p_a: Pmf,
    pub p_b: Pmf,
    pub mix_weight: f64,
    pub epsilon: f64,
    pub direction: Vec<f64>,
    pub i_a: Bits,
}

impl MixtureFamily {
    /// Assemble the family from a witness. Picks the largest mixing
    /// weight on a 0.01 grid whose scaled cross MI stays below every
    /// input-link subset budget by at least 1e-6.
    pub fn new(
        mac: &DiscreteMac,
        witness: &CStarWitness,
        c_in: &[f64],
        direction: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, GainError> {
        if epsilon <= 0.0 {
            return Err(GainError::BadEpsilon);
        }
        if direction.is_empty() || direction.iter().any(|v| *v <= 0.0) {
            return Err(GainError::BadDirection);
        }
        let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        let direction: Vec<f64> = direction.iter().map(|v| v / norm).collect();
        let k = mac.k();
        let joint = info::joint_input_output(mac, &witness.p_ind)?;
        // positivity of every single-encoder conditional MI
        for j in 0..k {
            let rest: Vec<usize> = (0..k).filter(|&i| i != j).collect();
            let mi = info::mutual_information(&joint, &[j], &[k], &rest)?;
            if mi <= TOL_ARITH {
                return Err(GainError::PositivityFailed { j });
            }
        }
        let mut cross = Vec::new();
        for s in nonempty_subsets(k) {
            let x_s = mask_to_indices(s);
            let x_sc = mask_to_indices(!s & full_mask(k));
            let mi = info::mutual_information(&joint, &x_s, &[k], &x_sc)?;
            let budget: f64 = mask_to_indices(s).iter().map(|&j| c_in[j]).sum();
            cross.push((mi, budget));
        }
        let mut mix_weight = None;
        for step in (1..100).rev() {
            let mu = step as f64 / 100.0;
            if cross.iter().all(|(mi, budget)| mu * mi < budget - 1e-6) {
                mix_weight = Some(mu);
                break;
            }
        }
        let mix_weight = mix_weight.ok_or(GainError::NoMixWeight)?;
        Ok(Self {
            p_a: witness.p_ind.clone(),
            p_b: witness.p_dep.clone(),
            mix_weight,
            epsilon,
            direction,
            i_a: witness.i_ind,
        })
    }

    pub fn direction_sum(&self) -> f64 {
        self.direction.iter().sum()
    }

    /// Residual of the scale-matching equation at `(λ, h)`:
    /// `TC(λ) + ε λ Σv − h Σv`.
    fn residual(&self, lambda: f64, h: f64) -> Result<f64, GainError> {
        let k = self.p_a.dims();
        let tc = mixture_tc(&self.p_a, &self.p_b, lambda, full_mask(k))?;
        let vs = self.direction_sum();
        Ok(tc + self.epsilon * lambda * vs - h * vs)
    }

    /// Coordination distribution realized by the family at mixing level
    /// λ: `U_0` a biased bit, `U_[k] ~ p_λ` independent of `U_0`, and
    /// `X_j = U_j` when `U_0 = 1`, a fresh draw from `p_a(x_j)` otherwise.
    pub fn joint_with_output(&self, mac: &DiscreteMac, lambda: f64) -> Result<Pmf, GainError> {
        let k = mac.k();
        let sizes_x = self.p_a.axis_sizes().to_vec();
        let mixture = mix_masses(self.p_a.mass(), self.p_b.mass(), lambda);
        let mix_pmf = Pmf::from_weights(sizes_x.clone(), mixture)?;
        let a_singles: Vec<Pmf> = (0..k).map(|j| self.p_a.marginal(&[j]).unwrap()).collect();
        let ny = mac.output_size();
        let mut sizes = vec![2usize];
        sizes.extend(&sizes_x);
        sizes.extend(&sizes_x);
        sizes.push(ny);
        let total: usize = sizes.iter().product();
        let strides = crate::info::strides_of(&sizes);
        let mut mass = vec![0.0f64; total];
        for (flat, m) in mass.iter_mut().enumerate() {
            let coord: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
            let u0 = coord[0];
            let us = &coord[1..=k];
            let xs = &coord[k + 1..=2 * k];
            let y = coord[2 * k + 1];
            let pu0 = if u0 == 1 { self.mix_weight } else { 1.0 - self.mix_weight };
            let mut p = pu0 * mix_pmf.get(us);
            if p == 0.0 {
                continue;
            }
            for j in 0..k {
                p *= if u0 == 1 {
                    if xs[j] == us[j] {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    a_singles[j].mass()[xs[j]]
                };
                if p == 0.0 {
                    break;
                }
            }
            if p == 0.0 {
                continue;
            }
            let row = mac.flat_input(xs)?;
            *m = p * mac.row_by_flat(row)[y];
        }
        Ok(Pmf::from_weights(sizes, mass)?)
    }
}

/// Solve the scale-matching equation for λ*(h) by bisection on `[0, 1)`
/// to absolute tolerance 1e-12 in λ.
pub fn solve_lambda_star(fam: &MixtureFamily, h: f64) -> Result<f64, GainError> {
    if h == 0.0 {
        return Ok(0.0);
    }
    let hi_cap = 1.0 - 1e-9;
    // residual is negative at 0; scan for a sign change, then bisect
    let mut lo = 0.0f64;
    let mut hi = None;
    let mut h_max: f64 = 0.0;
    let steps = 512;
    for i in 1..=steps {
        let lam = hi_cap * i as f64 / steps as f64;
        let r = fam.residual(lam, h)?;
        let solvable = (fam.residual(lam, 0.0)?) / fam.direction_sum();
        h_max = h_max.max(solvable);
        if r >= 0.0 {
            hi = Some(lam);
            break;
        }
        lo = lam;
    }
    let Some(mut hi) = hi else {
        return Err(GainError::NoRoot { h, h_max });
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if fam.residual(mid, h)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One evaluated point of the gain curve.
#[derive(Debug, Clone)]
pub struct GainCurvePoint {
    pub h: f64,
    pub lambda_star: f64,
    pub r_sum: Bits,
    pub gain: Bits,
    pub slope_ratio: f64,
}

/// Achievable sum rate of the mixture family at output scale `h`:
/// `r_sum = μ·I_λ*(X;Y) + (1−μ)·I_a(X;Y) − k·h·Σv`, with the dependence
/// surpluses and the cross-rate inequalities checked as preconditions.
pub fn achievable_sum_rate(
    fam: &MixtureFamily,
    mac: &DiscreteMac,
    cfg: &CfConfig,
    h: f64,
) -> Result<GainCurvePoint, GainError> {
    let k = mac.k();
    let vs = fam.direction_sum();
    if h == 0.0 {
        return Ok(GainCurvePoint { h, lambda_star: 0.0, r_sum: fam.i_a, gain: 0.0, slope_ratio: f64::NAN });
    }
    let lambda = solve_lambda_star(fam, h)?;

    // every dependence surplus must stay positive at this scale
    for s in nonempty_subsets(k) {
        let budget: f64 = mask_to_indices(s).iter().map(|&j| h * fam.direction[j]).sum();
        let tc = mixture_tc(&fam.p_a, &fam.p_b, lambda, s)?;
        let z = budget - tc;
        if z <= 0.0 {
            return Err(GainError::ZetaNonPositive { mask: s, value: z, h });
        }
    }

    // cross-rate inequalities over all (S, T); all computed on the
    // realized coordination joint
    let joint = fam.joint_with_output(mac, lambda)?;
    let y_axis = 2 * k + 1;
    let zeta_full = {
        let budget = h * vs;
        budget - mixture_tc(&fam.p_a, &fam.p_b, lambda, full_mask(k))?
    };
    let f_cap = |s: u32, t: u32| -> Result<f64, GainError> {
        let su_t = s | t;
        let x_lead: Vec<usize> = mask_to_indices(su_t).iter().map(|&j| k + 1 + j).collect();
        let mut cond = vec![0usize];
        cond.extend(mask_to_indices(!s & full_mask(k)).iter().map(|&j| 1 + j));
        cond.extend(mask_to_indices(!s & !t & full_mask(k)).iter().map(|&j| k + 1 + j));
        let mi = info::mutual_information(&joint, &x_lead, &[y_axis], &cond)?;
        let c_in_extra: f64 = mask_to_indices(t & !s).iter().map(|&j| cfg.c_in[j]).sum();
        Ok(mi + c_in_extra - zeta_full)
    };
    let big_f = |s: u32| -> Result<f64, GainError> {
        if s == 0 {
            return Ok(-zeta_full);
        }
        let x_lead: Vec<usize> = mask_to_indices(s).iter().map(|&j| k + 1 + j).collect();
        let mut cond = vec![0usize];
        cond.extend(mask_to_indices(!s & full_mask(k)).iter().map(|&j| 1 + j));
        cond.extend(mask_to_indices(!s & full_mask(k)).iter().map(|&j| k + 1 + j));
        let mi = info::mutual_information(&joint, &x_lead, &[y_axis], &cond)?;
        Ok(mi - zeta_full)
    };
    for s in 0..=full_mask(k) {
        for t in 0..=full_mask(k) {
            if s | t == 0 {
                continue;
            }
            if f_cap(s, t)? < big_f(s | t)? - 1e-9 {
                return Err(GainError::CrossRatePrecondition { s, t, h });
            }
        }
    }

    // sum rate of the family: mixture MI through the channel
    let x_axes: Vec<usize> = (0..k).collect();
    let mixed = Pmf::from_weights(
        fam.p_a.axis_sizes().to_vec(),
        mix_masses(fam.p_a.mass(), fam.p_b.mass(), lambda),
    )?;
    let mix_joint = info::joint_input_output(mac, &mixed)?;
    let i_lambda = info::mutual_information(&mix_joint, &x_axes, &[k], &[])?;
    let r_sum = fam.mix_weight * i_lambda + (1.0 - fam.mix_weight) * fam.i_a - k as f64 * h * vs;
    let gain = r_sum - fam.i_a;
    Ok(GainCurvePoint { h, lambda_star: lambda, r_sum, gain, slope_ratio: gain / h })
}

/// Evaluate the gain curve across a grid of output scales.
pub fn gain_curve(
    fam: &MixtureFamily,
    mac: &DiscreteMac,
    cfg: &CfConfig,
    h_grid: &[f64],
) -> Vec<(f64, Result<GainCurvePoint, GainError>)> {
    use rayon::prelude::*;
    h_grid
        .par_iter()
        .map(|&h| (h, achievable_sum_rate(fam, mac, cfg, h)))
        .collect()
}

/// Row of the two-round conferencing comparison table.
#[derive(Debug, Clone)]
pub struct ConferencingRow {
    pub c_out: f64,
    pub g1: Bits,
    pub g2_lower: Bits,
    pub curve_gain: Bits,
    pub lambda_star: f64,
}

#[derive(Debug, Clone)]
pub struct ConferencingDemo {
    pub best_x3: usize,
    pub rows: Vec<ConferencingRow>,
    /// Largest grid scale below which the two-round lower bound strictly
    /// exceeds the single-round value.
    pub positive_below: Option<f64>,
}

/// Compare one- and two-round conferencing on a 3-user channel whose
/// third encoder is silent: the single-round value is a constant while
/// the two-round value follows the gain curve of the channel induced by
/// pinning the third input at its optimizing symbol.
pub fn two_round_conferencing_demo(
    mac3: &DiscreteMac,
    c_in1: f64,
    c_in2: f64,
    c_out_grid: &[f64],
) -> Result<ConferencingDemo, GainError> {
    if mac3.k() != 3 {
        return Err(GainError::Region(crate::region::RegionError::Shape(
            "conferencing demo needs a 3-user channel".into(),
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for x3 in 0..mac3.input_sizes()[2] {
        let induced = mac3.restrict_last_input(x3)?;
        let (_, v) = max_product_mi(&induced, 6, 0x7a11)?;
        if best.map_or(true, |(_, bv)| v > bv + 1e-12) {
            best = Some((x3, v));
        }
    }
    let (best_x3, g1) = best.expect("nonempty third alphabet");
    let induced = mac3.restrict_last_input(best_x3)?;
    let witness = cstar_test(&induced)?.ok_or(GainError::ConferencingInapplicable)?;

    // slack chosen so the limiting slope μ·margin/ε − k·Σv stays positive
    let k = 2.0;
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let direction = vec![sqrt_half, sqrt_half];
    let dir_sum = 2.0 * sqrt_half;
    let provisional =
        MixtureFamily::new(&induced, &witness, &[c_in1, c_in2], direction.clone(), 0.1)?;
    let epsilon = (provisional.mix_weight * witness.margin / (4.0 * k * dir_sum)).min(0.1);
    let fam = MixtureFamily::new(&induced, &witness, &[c_in1, c_in2], direction, epsilon)?;
    let cfg = CfConfig::new(vec![c_in1, c_in2], vec![f64::INFINITY, f64::INFINITY])?;

    let mut rows = Vec::new();
    let mut positive_below = None;
    for &c_out in c_out_grid {
        if c_out == 0.0 {
            rows.push(ConferencingRow { c_out, g1, g2_lower: g1, curve_gain: 0.0, lambda_star: 0.0 });
            continue;
        }
        // each of the two receiving links carries c_out, so the scale h
        // satisfies h·v_j = c_out
        let h = c_out / sqrt_half;
        match achievable_sum_rate(&fam, &induced, &cfg, h) {
            Ok(pt) => {
                let curve_gain = pt.gain;
                // capacity is monotone in the output budget, so the lower
                // bound never dips below the zero-budget value
                let g2_lower = g1 + curve_gain.max(0.0);
                if curve_gain > 0.0 {
                    positive_below = Some(positive_below.map_or(c_out, |p: f64| p.max(c_out)));
                }
                rows.push(ConferencingRow { c_out, g1, g2_lower, curve_gain, lambda_star: pt.lambda_star });
            }
            Err(GainError::NoRoot { .. })
            | Err(GainError::ZetaNonPositive { .. })
            | Err(GainError::CrossRatePrecondition { .. }) => {
                rows.push(ConferencingRow { c_out, g1, g2_lower: g1, curve_gain: 0.0, lambda_star: f64::NAN });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ConferencingDemo { best_x3, rows, positive_below })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DiscreteMac;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random_pmf(sizes: Vec<usize>, rng: &mut impl Rng, floor: f64) -> Pmf {
        let n: usize = sizes.iter().product();
        let w: Vec<f64> = (0..n).map(|_| floor + rng.gen::<f64>()).collect();
        Pmf::from_weights(sizes, w).unwrap()
    }

    fn random_product_pmf(sizes: &[usize], rng: &mut impl Rng, floor: f64) -> Pmf {
        let factors: Vec<Pmf> = sizes.iter().map(|&n| random_pmf(vec![n], rng, floor)).collect();
        Pmf::product_of(&factors)
    }

    fn random_mac(rng: &mut impl Rng, ny: usize) -> DiscreteMac {
        let mut t = Vec::new();
        for _ in 0..4 {
            let w: Vec<f64> = (0..ny).map(|_| 0.1 + rng.gen::<f64>()).collect();
            let s: f64 = w.iter().sum();
            t.extend(w.into_iter().map(|v| v / s));
        }
        DiscreteMac::new(vec![2, 2], ny, t).unwrap()
    }

    #[test]
    fn product_ascent_finds_the_adder_optimum() {
        let mac = DiscreteMac::binary_erasure();
        let (p, v) = max_product_mi(&mac, 8, 1).unwrap();
        assert!((v - 1.5).abs() < 1e-6, "got {v}");
        for m in p.mass() {
            assert!((m - 0.25).abs() < 1e-4);
        }
        // brute-force grid oracle over product inputs
        let mut best = 0.0f64;
        for i in 0..=64 {
            for j in 0..=64 {
                let q1 = i as f64 / 64.0;
                let q2 = j as f64 / 64.0;
                let input = Pmf::product_of(&[
                    Pmf::new(vec![2], vec![q1, 1.0 - q1]).unwrap(),
                    Pmf::new(vec![2], vec![q2, 1.0 - q2]).unwrap(),
                ]);
                let joint = info::joint_input_output(&mac, &input).unwrap();
                let mi = info::mutual_information(&joint, &[0, 1], &[2], &[]).unwrap();
                best = best.max(mi);
            }
        }
        assert!((v - best).abs() < 1e-4);
    }

    #[test]
    fn bemac_witness_beats_the_product_optimum() {
        let mac = DiscreteMac::binary_erasure();
        let w = cstar_test(&mac).unwrap().expect("adder channel rewards dependence");
        assert!((w.i_ind - 1.5).abs() < 1e-6);
        assert!(w.margin > 0.16);
        assert!((w.i_dep + w.output_kl - w.i_ind - w.margin).abs() < 1e-9);

        // the uniform-output construction is also a (smaller) witness:
        // I_dep = log2(3), D = 5/3 − log2(3), margin exactly 1/6
        let p_dep = Pmf::new(vec![2, 2], vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]).unwrap();
        let q_y = info::output_pmf(&mac, &w.p_ind).unwrap();
        let e_dep = expected_divergence(&mac, &p_dep, &q_y).unwrap();
        assert!((e_dep - w.i_ind - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn single_user_and_ignoring_channels_have_no_witness() {
        // k = 1: the product optimum cannot be beaten
        let single = DiscreteMac::new(vec![2], 2, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        assert!(cstar_test(&single).unwrap().is_none());

        // channel that ignores encoder 2
        let ignoring = DiscreteMac::from_fn(vec![2, 2], 2, |x, y| {
            let flip = 0.1;
            if y == x[0] {
                1.0 - flip
            } else {
                flip
            }
        })
        .unwrap();
        assert!(cstar_test(&ignoring).unwrap().is_none());
    }

    #[test]
    fn gaussian_membership_needs_two_positive_powers() {
        assert!(gaussian_cstar(&[1.0, 1.0]));
        assert!(!gaussian_cstar(&[1.0, 0.0]));
        assert!(!gaussian_cstar(&[0.0, 0.0, 0.0]));
        assert!(gaussian_cstar(&[0.0, 2.0, 3.0]));
    }

    /// Central finite difference with step 1e-5.
    fn fd(mut f: impl FnMut(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn entropy_derivative_matches_finite_differences() {
        let mut rng = stream_rng(41, &[1]);
        let mut checked = 0;
        while checked < 50 {
            let p_a = random_pmf(vec![2, 3], &mut rng, 0.05);
            let p_b = random_pmf(vec![2, 3], &mut rng, 0.05);
            let lambda = 0.2 + 0.6 * rng.gen::<f64>();
            let axes = [0usize, 1];
            let analytic = mixture_entropy_derivative(&p_a, &p_b, lambda, &axes).unwrap();
            if analytic.abs() < 0.05 {
                continue; // keep the relative comparison well-posed
            }
            let numeric = fd(
                |l| {
                    let m = Pmf::from_weights(vec![2, 3], mix_masses(p_a.mass(), p_b.mass(), l)).unwrap();
                    info::entropy(&m, &axes).unwrap()
                },
                lambda,
            );
            assert!(((analytic - numeric) / analytic).abs() < 1e-6, "{analytic} vs {numeric}");
            checked += 1;
        }
        // equal endpoints: derivative is identically zero
        let p = random_pmf(vec![2, 2], &mut rng, 0.1);
        assert_eq!(mixture_entropy_derivative(&p, &p, 0.4, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_derivative_sign_flips_under_swap_at_midpoint() {
        let mut rng = stream_rng(47, &[2]);
        let p_a = random_pmf(vec![2, 2], &mut rng, 0.1);
        let p_b = random_pmf(vec![2, 2], &mut rng, 0.1);
        let fwd = mixture_entropy_derivative(&p_a, &p_b, 0.5, &[0, 1]).unwrap();
        let rev = mixture_entropy_derivative(&p_b, &p_a, 0.5, &[0, 1]).unwrap();
        assert!((fwd + rev).abs() < 1e-12);
    }

    #[test]
    fn mi_derivative_matches_finite_differences_and_margin() {
        let mut rng = stream_rng(43, &[3]);
        let mut checked = 0;
        while checked < 50 {
            let mac = random_mac(&mut rng, 3);
            let p_a = random_pmf(vec![2, 2], &mut rng, 0.05);
            let p_b = random_pmf(vec![2, 2], &mut rng, 0.05);
            let lambda = 0.2 + 0.6 * rng.gen::<f64>();
            let analytic = mixture_mi_derivative(&mac, &p_a, &p_b, lambda).unwrap();
            if analytic.abs() < 0.05 {
                continue;
            }
            let numeric = fd(
                |l| {
                    let m = Pmf::from_weights(vec![2, 2], mix_masses(p_a.mass(), p_b.mass(), l)).unwrap();
                    let j = info::joint_input_output(&mac, &m).unwrap();
                    info::mutual_information(&j, &[0, 1], &[2], &[]).unwrap()
                },
                lambda,
            );
            assert!(((analytic - numeric) / analytic).abs() < 1e-6, "{analytic} vs {numeric}");
            checked += 1;
        }

        // at λ = 0 with the adder-channel witness the derivative is the
        // dependence margin itself
        let mac = DiscreteMac::binary_erasure();
        let w = cstar_test(&mac).unwrap().unwrap();
        let d = mixture_mi_derivative(&mac, &w.p_ind, &w.p_dep, 0.0).unwrap();
        assert!(d > 0.0);
        assert!((d - w.margin).abs() < 1e-9);
    }

    #[test]
    fn tc_derivative_vanishes_at_zero_for_product_base() {
        let mut rng = stream_rng(53, &[4]);
        for _ in 0..50 {
            let p_a = random_product_pmf(&[2, 3], &mut rng, 0.05);
            let p_b = random_pmf(vec![2, 3], &mut rng, 0.05);
            let d = mixture_tc_derivative_at_zero(&p_a, &p_b, &[0, 1]).unwrap();
            assert!(d.abs() < 1e-9, "{d}");

            // forward difference of TC at small λ is O(λ)
            let lam = 1e-4;
            let tc = mixture_tc(&p_a, &p_b, lam, 0b11).unwrap();
            assert!(tc.abs() < 10.0 * lam);
        }
        let non_product = random_pmf(vec![2, 2], &mut rng, 0.05);
        let p_b = random_pmf(vec![2, 2], &mut rng, 0.05);
        assert!(matches!(
            mixture_tc_derivative_at_zero(&non_product, &p_b, &[0, 1]),
            Err(GainError::NotProductForm(_))
        ));
    }

    fn bemac_family(epsilon: f64) -> (DiscreteMac, MixtureFamily, CfConfig) {
        let mac = DiscreteMac::binary_erasure();
        let w = cstar_test(&mac).unwrap().unwrap();
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        let fam = MixtureFamily::new(&mac, &w, &[1.0, 1.0], vec![sqrt_half, sqrt_half], epsilon).unwrap();
        let cfg = CfConfig::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        (mac, fam, cfg)
    }

    #[test]
    fn mix_weight_hits_the_grid_maximum() {
        let (_, fam, _) = bemac_family(0.1);
        // I_a(X1;Y|X2) = 1 against budget 1 forces μ = 0.99
        assert!((fam.mix_weight - 0.99).abs() < 1e-12);
    }

    #[test]
    fn lambda_star_contract() {
        let (_, fam, _) = bemac_family(0.1);
        assert_eq!(solve_lambda_star(&fam, 0.0).unwrap(), 0.0);
        for h in [1e-3, 1e-2] {
            let lam = solve_lambda_star(&fam, h).unwrap();
            let res = fam.residual(lam, h).unwrap();
            assert!(res.abs() <= 1e-10, "residual {res}");
        }
        // near zero the slope of λ* in h is 1/ε
        let h = 1e-6;
        let lam = solve_lambda_star(&fam, h).unwrap();
        let slope = lam / h;
        assert!((slope - 1.0 / fam.epsilon).abs() / (1.0 / fam.epsilon) < 0.01, "slope {slope}");
        // λ* is nondecreasing in h
        let mut prev = 0.0;
        for i in 1..=20 {
            let lam = solve_lambda_star(&fam, 1e-3 * i as f64).unwrap();
            assert!(lam >= prev - 1e-12);
            prev = lam;
        }
        // far beyond the solvable range the bracket fails loudly
        assert!(matches!(solve_lambda_star(&fam, 100.0), Err(GainError::NoRoot { .. })));
    }

    #[test]
    fn gain_curve_slope_grows_as_h_shrinks() {
        for eps in [0.5, 0.1] {
            let (mac, fam, cfg) = bemac_family(eps);
            let hs = [1e-2, 1e-3, 1e-4, 1e-5];
            let mut ratios = Vec::new();
            for &h in &hs {
                let pt = achievable_sum_rate(&fam, &mac, &cfg, h).unwrap();
                // floor: r_sum ≥ (1−μ)·I_a − k·h·Σv
                assert!(
                    pt.r_sum >= (1.0 - fam.mix_weight) * fam.i_a - 2.0 * h * fam.direction_sum() - 1e-12
                );
                ratios.push(pt.slope_ratio);
            }
            for w in ratios.windows(2) {
                assert!(w[1] > w[0], "slope ratios not increasing as h shrinks: {ratios:?}");
            }
        }
        // h = 0 anchors the curve at the product optimum
        let (mac, fam, cfg) = bemac_family(0.1);
        let p0 = achievable_sum_rate(&fam, &mac, &cfg, 0.0).unwrap();
        assert_eq!(p0.gain, 0.0);
        assert_eq!(p0.lambda_star, 0.0);
        assert!((p0.r_sum - fam.i_a).abs() < 1e-12);
    }

    #[test]
    fn zeta_scale_ratio_approaches_direction_sums() {
        let (_, fam, _) = bemac_family(0.1);
        // ζ_S(h)/h → Σ_{j∈S} v_j as h → 0 (checked by finite difference)
        let h = 1e-6;
        let lam = solve_lambda_star(&fam, h).unwrap();
        for s in [0b01u32, 0b10, 0b11] {
            let budget: f64 = mask_to_indices(s).iter().map(|&j| h * fam.direction[j]).sum();
            let zeta_s = budget - mixture_tc(&fam.p_a, &fam.p_b, lam, s).unwrap();
            let expect: f64 = mask_to_indices(s).iter().map(|&j| fam.direction[j]).sum();
            assert!(((zeta_s / h) - expect).abs() / expect < 0.05, "mask {s}");
        }
    }

    #[test]
    fn conferencing_two_rounds_beat_one_for_small_budgets() {
        // 3-user adder with a strong interferer on encoder 3: pinning
        // x3 induces the 2-user adder channel.
        let mac3 = DiscreteMac::from_fn(vec![2, 2, 2], 6, |x, y| {
            if x[0] + x[1] + 3 * x[2] == y {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let grid = [0.0, 1e-5, 1e-4, 1e-3];
        let demo = two_round_conferencing_demo(&mac3, 1.0, 1.0, &grid).unwrap();
        assert!((demo.rows[0].g2_lower - demo.rows[0].g1).abs() < 1e-12);
        // g1 is the induced adder optimum and is constant across the grid
        for row in &demo.rows {
            assert!((row.g1 - 1.5).abs() < 1e-6);
        }
        let small = &demo.rows[1];
        assert!(small.g2_lower > small.g1, "expected a strict two-round gain at tiny budgets");
        assert!(demo.positive_below.is_some());

        // a channel whose output ignores both cooperating encoders fails
        let flat = DiscreteMac::from_fn(vec![2, 2, 2], 2, |x, y| if y == x[2] { 1.0 } else { 0.0 }).unwrap();
        assert!(matches!(
            two_round_conferencing_demo(&flat, 1.0, 1.0, &grid),
            Err(GainError::ConferencingInapplicable) | Err(GainError::PositivityFailed { .. })
        ));
    }
}
