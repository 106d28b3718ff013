//! Rate-region polytopes for the MAC with facilitator-aided encoders:
//! the coordination inner bound, the forwarding inner bound, the cut-set
//! style outer bound, the conferencing reduction, and the submodular
//! machinery behind greedy corner points.
//!
//! Bounds are stored as closed (`≤`) linear constraints even where the
//! achievability statements are strict; regions here are closures, which
//! is what the LP queries need.

use crate::channel::DiscreteMac;
use crate::info::{self, InfoError};
use crate::lp::{self, LpError};
use crate::subsets::{full_mask, mask_label, mask_to_indices, nonempty_subsets, subsets_between};
use crate::{Bits, Pmf, TOL_ARITH};
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("facilitator capacities must be nonnegative (entry {0})")]
    NegativeCapacity(usize),
    #[error("split violates the input-link cap for encoder {encoder}: {got} > {cap}")]
    InputLinkExceeded { encoder: usize, got: f64, cap: f64 },
    #[error("split violates the output-link cap for encoder {encoder}: {got} > {cap}")]
    OutputLinkExceeded { encoder: usize, got: f64, cap: f64 },
    #[error("split declares dependence set {split:#b} but distribution declares {dist:#b}")]
    SdMismatch { split: u32, dist: u32 },
    #[error("distribution does not factor as required (max deviation {max_dev})")]
    FactorizationViolation { max_dev: f64 },
    #[error("expected {expected} axes, got {got}")]
    AxisCount { expected: usize, got: usize },
    #[error("subset {0:#b} is not contained in the dependence set")]
    NotInDependenceSet(u32),
    #[error("zeta for subset {mask:#b} is {value}, not positive")]
    ZetaNotPositive { mask: u32, value: f64 },
    #[error("expected cost within budget for encoder {encoder}: {got} > {budget}")]
    CostViolation { encoder: usize, got: f64, budget: f64 },
    #[error("rate region is empty")]
    EmptyRegion,
    #[error("rate region is unbounded in the weighted direction")]
    Unbounded,
    #[error("weights must be nonnegative")]
    NegativeWeight,
    #[error("conferencing matrix must have a zero diagonal (entry {0})")]
    NonzeroDiagonal(usize),
    #[error("conferencing matrix must be square {k}x{k}")]
    BadMatrixShape { k: usize },
    #[error("disjunctive enumeration exceeded {cap} nodes")]
    CandidateExplosion { cap: usize },
    #[error("channel/distribution shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Facilitator link capacities per encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct CfConfig {
    pub c_in: Vec<f64>,
    pub c_out: Vec<f64>,
}

impl CfConfig {
    pub fn new(c_in: Vec<f64>, c_out: Vec<f64>) -> Result<Self, RegionError> {
        for (i, v) in c_in.iter().chain(c_out.iter()).enumerate() {
            if *v < 0.0 {
                return Err(RegionError::NegativeCapacity(i));
            }
        }
        assert_eq!(c_in.len(), c_out.len());
        Ok(Self { c_in, c_out })
    }

    pub fn k(&self) -> usize {
        self.c_in.len()
    }
}

/// Split of the facilitator output budget into common-message forwarding
/// rates `c0` and coordination rates `cd`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfSplit {
    pub c0: Vec<f64>,
    pub cd: Vec<f64>,
}

impl CfSplit {
    pub fn new(c0: Vec<f64>, cd: Vec<f64>) -> Self {
        assert_eq!(c0.len(), cd.len());
        Self { c0, cd }
    }

    pub fn no_cooperation(k: usize) -> Self {
        Self { c0: vec![0.0; k], cd: vec![0.0; k] }
    }

    /// Pure forwarding: all output budget spent on the common message.
    pub fn forwarding(c0: Vec<f64>) -> Self {
        let cd = vec![0.0; c0.len()];
        Self { c0, cd }
    }

    pub fn k(&self) -> usize {
        self.c0.len()
    }

    /// Encoders with a nonzero coordination rate.
    pub fn sd_mask(&self) -> u32 {
        self.cd.iter().enumerate().fold(0u32, |m, (j, &c)| if c != 0.0 { m | (1 << j) } else { m })
    }

    /// Check the per-link budget inequalities against `cfg`.
    pub fn validate(&self, cfg: &CfConfig) -> Result<(), RegionError> {
        let k = self.k();
        for j in 0..k {
            if self.c0[j] > cfg.c_in[j] + TOL_ARITH {
                return Err(RegionError::InputLinkExceeded { encoder: j, got: self.c0[j], cap: cfg.c_in[j] });
            }
            let others: f64 = (0..k).filter(|&i| i != j).map(|i| self.c0[i]).sum();
            if self.cd[j] + others > cfg.c_out[j] + TOL_ARITH {
                return Err(RegionError::OutputLinkExceeded {
                    encoder: j,
                    got: self.cd[j] + others,
                    cap: cfg.c_out[j],
                });
            }
        }
        Ok(())
    }
}

/// Coordination distribution over `(U_0, U_1.., U_k, X_1.., X_k)` with a
/// declared dependence set. Axis 0 is U_0, axes `1..=k` the U's, axes
/// `k+1..=2k` the X's.
#[derive(Debug, Clone)]
pub struct CoordinationDist {
    pmf: Pmf,
    k: usize,
    sd_mask: u32,
}

impl CoordinationDist {
    pub fn new(pmf: Pmf, k: usize, sd_mask: u32) -> Result<Self, RegionError> {
        if pmf.dims() != 2 * k + 1 {
            return Err(RegionError::AxisCount { expected: 2 * k + 1, got: pmf.dims() });
        }
        let dist = Self { pmf, k, sd_mask };
        let dev = dist.factorization_deviation()?;
        if dev > TOL_ARITH {
            return Err(RegionError::FactorizationViolation { max_dev: dev });
        }
        Ok(dist)
    }

    /// Degenerate facilitator: `|U_0| = |U_j| = 1`, independent inputs.
    pub fn no_cooperation(inputs: &[Pmf]) -> Result<Self, RegionError> {
        let k = inputs.len();
        let mut sizes = vec![1usize; k + 1];
        for p in inputs {
            if p.dims() != 1 {
                return Err(RegionError::Shape("each input pmf must be one-dimensional".into()));
            }
            sizes.push(p.axis_sizes()[0]);
        }
        let prod = Pmf::product_of(inputs);
        let pmf = Pmf::new(sizes, prod.mass().to_vec()).map_err(RegionError::Info)?;
        Self::new(pmf, k, 0)
    }

    /// Build from conditional factors: `u0_pmf`, per-`u0` joint of the
    /// U's, and per-`(j, u0, u_j)` rows for the X's.
    pub fn from_factors(
        u0_pmf: &[f64],
        u_sizes: &[usize],
        x_sizes: &[usize],
        sd_mask: u32,
        u_joint_given_u0: &dyn Fn(usize) -> Pmf,
        x_row: &dyn Fn(usize, usize, usize) -> Vec<f64>,
    ) -> Result<Self, RegionError> {
        let k = u_sizes.len();
        assert_eq!(x_sizes.len(), k);
        let mut sizes = vec![u0_pmf.len()];
        sizes.extend_from_slice(u_sizes);
        sizes.extend_from_slice(x_sizes);
        let total: usize = sizes.iter().product();
        let strides = crate::info::strides_of(&sizes);
        let mut mass = vec![0.0f64; total];
        let u_tables: Vec<Pmf> = (0..u0_pmf.len()).map(u_joint_given_u0).collect();
        for (flat, m) in mass.iter_mut().enumerate() {
            let coord: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
            let u0 = coord[0];
            let us = &coord[1..=k];
            let mut p = u0_pmf[u0] * u_tables[u0].get(us);
            for j in 0..k {
                if p == 0.0 {
                    break;
                }
                p *= x_row(j, u0, us[j])[coord[k + 1 + j]];
            }
            *m = p;
        }
        let pmf = Pmf::from_weights(sizes, mass).map_err(RegionError::Info)?;
        Self::new(pmf, k, sd_mask)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sd_mask(&self) -> u32 {
        self.sd_mask
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn u0_size(&self) -> usize {
        self.pmf.axis_sizes()[0]
    }

    pub fn u_axis(&self, j: usize) -> usize {
        1 + j
    }

    pub fn x_axis(&self, j: usize) -> usize {
        1 + self.k + j
    }

    pub fn u_axes(&self, mask: u32) -> Vec<usize> {
        mask_to_indices(mask).iter().map(|&j| self.u_axis(j)).collect()
    }

    pub fn x_axes(&self, mask: u32) -> Vec<usize> {
        mask_to_indices(mask).iter().map(|&j| self.x_axis(j)).collect()
    }

    /// Max deviation from the declared factorization
    /// `p(u0)·∏_{i∉Sd} p(u_i|u0)·p(u_Sd|u0,u_{Sd^c})·∏_j p(x_j|u0,u_j)`.
    fn factorization_deviation(&self) -> Result<f64, RegionError> {
        let k = self.k;
        let sizes = self.pmf.axis_sizes().to_vec();
        let strides = self.pmf.strides();
        let sdc_mask = full_mask(k) & !self.sd_mask;

        let m_u0 = self.pmf.marginal(&[0])?;
        let sdc_u_axes: Vec<usize> = self.u_axes(sdc_mask);
        let mut u0_sdc_axes = vec![0usize];
        u0_sdc_axes.extend(&sdc_u_axes);
        let m_u0_sdc = self.pmf.marginal(&u0_sdc_axes)?;
        let mut all_u_axes = vec![0usize];
        all_u_axes.extend(1..=k);
        let m_u0_all = self.pmf.marginal(&all_u_axes)?;
        let pair_margs: Vec<Pmf> =
            (0..k).map(|i| self.pmf.marginal(&[0, self.u_axis(i)])).collect::<Result<_, _>>()?;
        let triple_margs: Vec<Pmf> = (0..k)
            .map(|j| self.pmf.marginal(&[0, self.u_axis(j), self.x_axis(j)]))
            .collect::<Result<_, _>>()?;

        let ratio = |num: f64, den: f64| if den <= 0.0 { 0.0 } else { num / den };
        let mut max_dev: f64 = 0.0;
        for (flat, &actual) in self.pmf.mass().iter().enumerate() {
            let coord: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
            let u0 = coord[0];
            let mut expected = m_u0.mass()[u0];
            // conditionally independent coordinates outside the dependence set
            for i in mask_to_indices(sdc_mask) {
                let pair = &pair_margs[i];
                expected *= ratio(pair.get(&[u0, coord[1 + i]]), m_u0.mass()[u0]);
            }
            // dependent block given (u0, u_{Sd^c})
            if self.sd_mask != 0 {
                let mut num_ix = vec![u0];
                num_ix.extend((1..=k).map(|a| coord[a]));
                let mut den_ix = vec![u0];
                den_ix.extend(sdc_u_axes.iter().map(|&a| coord[a]));
                let num = m_u0_all.get(&num_ix);
                let den = if sdc_mask == 0 { m_u0.mass()[u0] } else { m_u0_sdc.get(&den_ix) };
                expected *= ratio(num, den);
            }
            for j in 0..k {
                let t = &triple_margs[j];
                let pair = &pair_margs[j];
                expected *= ratio(t.get(&[u0, coord[1 + j], coord[1 + k + j]]), pair.get(&[u0, coord[1 + j]]));
            }
            max_dev = max_dev.max((expected - actual).abs());
        }
        Ok(max_dev)
    }

    /// Verify expected symbol costs against the channel's cost tables.
    pub fn check_costs(&self, mac: &DiscreteMac) -> Result<(), RegionError> {
        let Some(costs) = mac.costs() else { return Ok(()) };
        for (j, spec) in costs.iter().enumerate() {
            let marg = self.pmf.marginal(&[self.x_axis(j)])?;
            let mean: f64 = marg.mass().iter().zip(&spec.table).map(|(p, c)| p * c).sum();
            if mean > spec.budget + TOL_ARITH {
                return Err(RegionError::CostViolation { encoder: j, got: mean, budget: spec.budget });
            }
        }
        Ok(())
    }

    /// Extend with the channel output: joint over `(U_0, U.., X.., Y)`.
    pub fn joint_with_output(&self, mac: &DiscreteMac) -> Result<Pmf, RegionError> {
        let k = self.k;
        let x_sizes: Vec<usize> = (0..k).map(|j| self.pmf.axis_sizes()[self.x_axis(j)]).collect();
        if x_sizes != mac.input_sizes() {
            return Err(RegionError::Shape(format!(
                "distribution X-alphabets {:?} vs channel {:?}",
                x_sizes,
                mac.input_sizes()
            )));
        }
        let ny = mac.output_size();
        let mut sizes = self.pmf.axis_sizes().to_vec();
        sizes.push(ny);
        let strides = self.pmf.strides();
        let x_strides: Vec<usize> = (0..k).map(|j| strides[self.x_axis(j)]).collect();
        let mut mass = vec![0.0f64; self.pmf.len() * ny];
        for (flat, &m) in self.pmf.mass().iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let mut row = 0usize;
            for j in 0..k {
                row = row * x_sizes[j] + (flat / x_strides[j] % x_sizes[j]);
            }
            let row_probs = mac.row_by_flat(row);
            for (y, &t) in row_probs.iter().enumerate() {
                mass[flat * ny + y] = m * t;
            }
        }
        Pmf::from_weights(sizes, mass).map_err(RegionError::Info)
    }
}

/// Dependence-budget surplus for a subset of coordinating encoders:
/// `ζ_S = Σ_{j∈S} cd_j − Σ_{j∈S} H(U_j|U_0) + H(U_S | U_0, U_{Sd^c})`.
pub fn zeta(s_mask: u32, split: &CfSplit, p: &CoordinationDist) -> Result<Bits, RegionError> {
    if s_mask == 0 || s_mask & !p.sd_mask() != 0 {
        return Err(RegionError::NotInDependenceSet(s_mask));
    }
    zeta_unchecked(s_mask, split, p)
}

fn zeta_unchecked(s_mask: u32, split: &CfSplit, p: &CoordinationDist) -> Result<Bits, RegionError> {
    if s_mask == 0 {
        return Ok(0.0);
    }
    let pmf = p.pmf();
    let sdc_mask = full_mask(p.k()) & !p.sd_mask();
    let mut sum = 0.0;
    for j in mask_to_indices(s_mask) {
        sum += split.cd[j] - info::conditional_entropy(pmf, &[p.u_axis(j)], &[0])?;
    }
    let mut cond = vec![0usize];
    cond.extend(p.u_axes(sdc_mask));
    let h = info::conditional_entropy(pmf, &p.u_axes(s_mask), &cond)?;
    Ok(sum + h)
}

/// One linear constraint `coeffs · R ≤ bound` with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
    pub tag: String,
}

/// Finite list of linear inequalities over the rate vector.
#[derive(Debug, Clone, Serialize)]
pub struct RateRegion {
    pub k: usize,
    pub constraints: Vec<Constraint>,
}

impl RateRegion {
    pub fn new(k: usize) -> Self {
        Self { k, constraints: Vec::new() }
    }

    pub fn push_subset(&mut self, mask: u32, bound: f64, tag: impl Into<String>) {
        let coeffs = (0..self.k).map(|j| if mask & (1 << j) != 0 { 1.0 } else { 0.0 }).collect();
        self.constraints.push(Constraint { coeffs, bound, tag: tag.into() });
    }

    /// LP maximum of `weights · R` over the region intersected with
    /// `R ≥ 0`, plus an argmax vector.
    pub fn max_weighted_sum(&self, weights: &[f64]) -> Result<(Bits, Vec<f64>), RegionError> {
        if weights.iter().any(|w| *w < 0.0) {
            return Err(RegionError::NegativeWeight);
        }
        let a: Vec<Vec<f64>> = self.constraints.iter().map(|c| c.coeffs.clone()).collect();
        let b: Vec<f64> = self.constraints.iter().map(|c| c.bound).collect();
        match lp::maximize(weights, &a, &b) {
            Ok(sol) => Ok((sol.value, sol.x)),
            Err(LpError::Infeasible) => Err(RegionError::EmptyRegion),
            Err(LpError::Unbounded) => Err(RegionError::Unbounded),
            Err(LpError::Dimensions) => Err(RegionError::Shape("weights length".into())),
        }
    }

    pub fn contains(&self, r: &[f64], tol: f64) -> bool {
        r.iter().all(|&v| v >= -tol)
            && self
                .constraints
                .iter()
                .all(|c| c.coeffs.iter().zip(r).map(|(a, x)| a * x).sum::<f64>() <= c.bound + tol)
    }

    /// CSV export: subset bitmask (when the row is a 0/1 subset
    /// constraint), coefficients, bound, provenance tag.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mask");
        for j in 0..self.k {
            out.push_str(&format!(",coeff_{}", j + 1));
        }
        out.push_str(",bound,tag\n");
        for c in &self.constraints {
            let mask = c
                .coeffs
                .iter()
                .enumerate()
                .try_fold(0u32, |m, (j, &v)| {
                    if v == 1.0 {
                        Some(m | (1 << j))
                    } else if v == 0.0 {
                        Some(m)
                    } else {
                        None
                    }
                })
                .map(|m| m.to_string())
                .unwrap_or_default();
            out.push_str(&mask);
            for v in &c.coeffs {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{}\n", c.bound, c.tag));
        }
        out
    }
}

/// Forwarding inner bound: the facilitator relays `c0_j` bits of each
/// message to everyone, no coordination. Requires `p(u0)·∏_j p(x_j|u0)`.
pub fn forwarding_bound(p: &Pmf, c0: &[f64], mac: &DiscreteMac) -> Result<RateRegion, RegionError> {
    let k = mac.k();
    check_conditional_product(p, k)?;
    let joint = extend_u0_inputs_with_output(p, mac)?;
    let mut region = RateRegion::new(k);
    let y_axis = 1 + k;
    for s in nonempty_subsets(k) {
        let x_in: Vec<usize> = mask_to_indices(s).iter().map(|&j| 1 + j).collect();
        let mut cond = vec![0usize];
        cond.extend(mask_to_indices(!s & full_mask(k)).iter().map(|&j| 1 + j));
        let mi = info::mutual_information(&joint, &x_in, &[y_axis], &cond)?;
        let extra: f64 = mask_to_indices(s).iter().map(|&j| c0[j]).sum();
        region.push_subset(s, mi + extra, format!("S={}", mask_label(s)));
    }
    let all: Vec<usize> = (1..=k).collect();
    let sum_mi = info::mutual_information(&joint, &all, &[y_axis], &[])?;
    region.push_subset(full_mask(k), sum_mi, "sum");
    Ok(region)
}

/// Outer bound: same mutual-information terms with the full input-link
/// capacities added, over `p(u0)·∏_j p(x_j|u0)`.
pub fn outer_bound(mac: &DiscreteMac, cfg: &CfConfig, p: &Pmf) -> Result<RateRegion, RegionError> {
    let k = mac.k();
    check_conditional_product(p, k)?;
    let joint = extend_u0_inputs_with_output(p, mac)?;
    let mut region = RateRegion::new(k);
    let y_axis = 1 + k;
    for s in nonempty_subsets(k) {
        let x_in: Vec<usize> = mask_to_indices(s).iter().map(|&j| 1 + j).collect();
        let mut cond = vec![0usize];
        cond.extend(mask_to_indices(!s & full_mask(k)).iter().map(|&j| 1 + j));
        let mi = info::mutual_information(&joint, &x_in, &[y_axis], &cond)?;
        let extra: f64 = mask_to_indices(s).iter().map(|&j| cfg.c_in[j]).sum();
        region.push_subset(s, mi + extra, format!("S={}", mask_label(s)));
    }
    let all: Vec<usize> = (1..=k).collect();
    let sum_mi = info::mutual_information(&joint, &all, &[y_axis], &[])?;
    region.push_subset(full_mask(k), sum_mi, "sum");
    Ok(region)
}

/// Conferencing outer bound: encoder-to-encoder links reduce to an
/// effective facilitator input capacity `C_in^j = Σ_{i≠j} c[j][i]`.
pub fn conferencing_outer(mac: &DiscreteMac, c_matrix: &[Vec<f64>], p: &Pmf) -> Result<RateRegion, RegionError> {
    let k = mac.k();
    if c_matrix.len() != k || c_matrix.iter().any(|r| r.len() != k) {
        return Err(RegionError::BadMatrixShape { k });
    }
    for (j, row) in c_matrix.iter().enumerate() {
        if row[j] != 0.0 {
            return Err(RegionError::NonzeroDiagonal(j));
        }
    }
    let c_in: Vec<f64> = c_matrix.iter().map(|row| row.iter().sum()).collect();
    let cfg = CfConfig::new(c_in, vec![0.0; k])?;
    outer_bound(mac, &cfg, p)
}

/// Check `p(u0, x_1.., x_k) = p(u0)·∏ p(x_j|u0)` within tolerance.
fn check_conditional_product(p: &Pmf, k: usize) -> Result<(), RegionError> {
    if p.dims() != k + 1 {
        return Err(RegionError::AxisCount { expected: k + 1, got: p.dims() });
    }
    let m_u0 = p.marginal(&[0])?;
    let pairs: Vec<Pmf> = (1..=k).map(|a| p.marginal(&[0, a])).collect::<Result<_, _>>()?;
    let sizes = p.axis_sizes().to_vec();
    let strides = p.strides();
    let mut max_dev: f64 = 0.0;
    for (flat, &actual) in p.mass().iter().enumerate() {
        let coord: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
        let u0 = coord[0];
        let pu0 = m_u0.mass()[u0];
        let mut expected = pu0;
        for j in 0..k {
            expected *= if pu0 <= 0.0 { 0.0 } else { pairs[j].get(&[u0, coord[1 + j]]) / pu0 };
        }
        max_dev = max_dev.max((expected - actual).abs());
    }
    if max_dev > TOL_ARITH {
        return Err(RegionError::FactorizationViolation { max_dev });
    }
    Ok(())
}

/// Joint over `(U_0, X_1.., X_k, Y)` from a `(U_0, X..)` pmf and channel.
fn extend_u0_inputs_with_output(p: &Pmf, mac: &DiscreteMac) -> Result<Pmf, RegionError> {
    let k = mac.k();
    let x_sizes = &p.axis_sizes()[1..=k];
    if x_sizes != mac.input_sizes() {
        return Err(RegionError::Shape(format!("X-alphabets {:?} vs channel {:?}", x_sizes, mac.input_sizes())));
    }
    let ny = mac.output_size();
    let mut sizes = p.axis_sizes().to_vec();
    sizes.push(ny);
    let strides = p.strides();
    let mut mass = vec![0.0f64; p.len() * ny];
    for (flat, &m) in p.mass().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let mut row = 0usize;
        for j in 0..k {
            row = row * x_sizes[j] + (flat / strides[1 + j] % x_sizes[j]);
        }
        for (y, &t) in mac.row_by_flat(row).iter().enumerate() {
            mass[flat * ny + y] = m * t;
        }
    }
    Pmf::from_weights(sizes, mass).map_err(RegionError::Info)
}

/// One admissible `(A, B)` constraint family for a given `(S, T)` pair,
/// canonicalized as closure bounds per nonempty encoder subset.
#[derive(Debug, Clone, Serialize)]
pub struct Family {
    pub a_mask: u32,
    pub b_mask: u32,
    /// Effective bound on `Σ_{j∈W} R_j` for each nonempty `W` (index
    /// `W−1`); `+inf` where unconstrained.
    pub closure: Vec<f64>,
}

/// Disjunctive constraint group for one `(S, T)` pair: at least one family
/// must hold.
#[derive(Debug, Clone, Serialize)]
pub struct DisjunctiveGroup {
    pub s_mask: u32,
    pub t_mask: u32,
    pub families: Vec<Family>,
}

/// Coordination inner bound: a sum constraint plus, for every `(S, T)`,
/// a disjunction of subset-sum constraint families.
#[derive(Debug, Clone, Serialize)]
pub struct InnerBound {
    pub k: usize,
    pub sum_bound: f64,
    pub groups: Vec<DisjunctiveGroup>,
}

const ENUM_NODE_CAP: usize = 2_000_000;

/// Build the coordination inner bound for one split and distribution.
pub fn inner_bound(
    p: &CoordinationDist,
    split: &CfSplit,
    cfg: &CfConfig,
    mac: &DiscreteMac,
) -> Result<InnerBound, RegionError> {
    let k = mac.k();
    split.validate(cfg)?;
    if split.sd_mask() != p.sd_mask() {
        return Err(RegionError::SdMismatch { split: split.sd_mask(), dist: p.sd_mask() });
    }
    p.check_costs(mac)?;
    let sd = p.sd_mask();
    // the distribution class requires every dependence surplus positive
    for s in nonempty_subsets(k) {
        if s & !sd == 0 {
            let z = zeta(s, split, p)?;
            if z <= 0.0 {
                return Err(RegionError::ZetaNotPositive { mask: s, value: z });
            }
        }
    }

    let joint = p.joint_with_output(mac)?;
    let y_axis = 2 * k + 1;
    let full = full_mask(k);
    let all_x: Vec<usize> = (0..k).map(|j| p.x_axis(j)).collect();
    let sum_bound = info::mutual_information(&joint, &all_x, &[y_axis], &[])? - zeta_unchecked(sd, split, p)?;

    let mut groups = Vec::new();
    for s in 0..=full {
        for t in 0..=full {
            if s | t == 0 {
                continue; // the empty error pattern is the sum constraint
            }
            let mut families = Vec::new();
            for a in subsets_between(s & !sd, s) {
                for b in subsets_between(!s & full & !sd, !s & full) {
                    let bt = b & t;
                    let rate_mask = a | bt;
                    if rate_mask == 0 {
                        continue; // base feasibility 0 < γ can never hold
                    }
                    let mut lead = p.u_axes(a);
                    lead.extend(p.x_axes(rate_mask));
                    let mut cond = vec![0usize];
                    cond.extend(p.u_axes(b));
                    cond.extend(p.x_axes(b & !t));
                    let mi = info::mutual_information(&joint, &lead, &[y_axis], &cond)?;
                    let gamma = mi - zeta_unchecked((a | b) & sd, split, p)?;
                    if gamma <= 0.0 {
                        continue; // family infeasible for every rate vector
                    }
                    let mut raw = vec![f64::INFINITY; full as usize];
                    for w in subsets_between(0, rate_mask) {
                        if w == 0 {
                            continue;
                        }
                        let offset: f64 = mask_to_indices(w & a).iter().map(|&j| split.c0[j]).sum::<f64>()
                            + mask_to_indices(w & bt).iter().map(|&j| cfg.c_in[j]).sum::<f64>();
                        let ix = (w - 1) as usize;
                        raw[ix] = raw[ix].min(gamma + offset);
                    }
                    families.push(Family { a_mask: a, b_mask: b, closure: close_bounds(k, raw) });
                }
            }
            prune_dominated(&mut families);
            groups.push(DisjunctiveGroup { s_mask: s, t_mask: t, families });
        }
    }
    Ok(InnerBound { k, sum_bound, groups })
}

/// Tighten subset bounds downward over supersets: with `R ≥ 0`,
/// `Σ_W R ≤ Σ_{W'} R ≤ c_{W'}` for any `W' ⊇ W`.
fn close_bounds(k: usize, mut bounds: Vec<f64>) -> Vec<f64> {
    let full = full_mask(k);
    let mut masks: Vec<u32> = (1..=full).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for w in masks {
        for j in 0..k {
            let bit = 1u32 << j;
            if w & bit == 0 {
                let sup = w | bit;
                let v = bounds[(sup - 1) as usize];
                let ix = (w - 1) as usize;
                if v < bounds[ix] {
                    bounds[ix] = v;
                }
            }
        }
    }
    bounds
}

/// Drop families whose polytope is contained in another family's (their
/// closure is componentwise no larger); unions are unchanged.
fn prune_dominated(families: &mut Vec<Family>) {
    let n = families.len();
    let mut keep = vec![true; n];
    for i in 0..n {
        if !keep[i] {
            continue;
        }
        for j in 0..n {
            if i == j || !keep[j] {
                continue;
            }
            let contained =
                families[i].closure.iter().zip(&families[j].closure).all(|(a, b)| *a <= b + 1e-12);
            let strictly =
                families[i].closure.iter().zip(&families[j].closure).any(|(a, b)| a + 1e-12 < *b);
            if contained && (strictly || i > j) {
                keep[i] = false;
                break;
            }
        }
    }
    let mut it = keep.iter();
    families.retain(|_| *it.next().unwrap());
}

impl InnerBound {
    /// Membership test against the disjunctive description.
    pub fn contains(&self, r: &[f64], tol: f64) -> bool {
        if r.iter().any(|&v| v < -tol) || r.iter().sum::<f64>() > self.sum_bound + tol {
            return false;
        }
        self.groups.iter().all(|g| {
            g.families.iter().any(|f| {
                (1..=full_mask(self.k)).all(|w| {
                    let bound = f.closure[(w - 1) as usize];
                    if bound.is_infinite() {
                        return true;
                    }
                    mask_to_indices(w).iter().map(|&j| r[j]).sum::<f64>() <= bound + tol
                })
            })
        })
    }

    /// Maximum of `weights · R` over the union of candidate polytopes
    /// (one family chosen per group), with branch-and-bound pruning.
    pub fn max_weighted_sum(&self, weights: &[f64]) -> Result<(Bits, Vec<f64>), RegionError> {
        if weights.iter().any(|w| *w < 0.0) {
            return Err(RegionError::NegativeWeight);
        }
        if self.groups.iter().any(|g| g.families.is_empty()) {
            return Err(RegionError::EmptyRegion);
        }
        if self.sum_bound < 0.0 {
            return Err(RegionError::EmptyRegion);
        }
        let full = full_mask(self.k) as usize;
        let mut base = vec![f64::INFINITY; full];
        base[full - 1] = base[full - 1].min(self.sum_bound);

        let mut order: Vec<&DisjunctiveGroup> = self.groups.iter().filter(|g| g.families.len() > 1).collect();
        order.sort_by_key(|g| g.families.len());
        // single-family groups always apply
        for g in self.groups.iter().filter(|g| g.families.len() == 1) {
            for (ix, v) in g.families[0].closure.iter().enumerate() {
                if *v < base[ix] {
                    base[ix] = *v;
                }
            }
        }

        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut nodes = 0usize;
        self.search(&order, 0, base, weights, &mut best, &mut nodes)?;
        best.ok_or(RegionError::EmptyRegion)
    }

    fn search(
        &self,
        order: &[&DisjunctiveGroup],
        depth: usize,
        bounds: Vec<f64>,
        weights: &[f64],
        best: &mut Option<(f64, Vec<f64>)>,
        nodes: &mut usize,
    ) -> Result<(), RegionError> {
        *nodes += 1;
        if *nodes > ENUM_NODE_CAP {
            return Err(RegionError::CandidateExplosion { cap: ENUM_NODE_CAP });
        }
        let Some((ub, x)) = self.lp_over(&bounds, weights) else {
            return Ok(()); // infeasible branch
        };
        if let Some((b, _)) = best {
            if ub <= *b + 1e-12 {
                return Ok(());
            }
        }
        if depth == order.len() {
            if best.as_ref().map_or(true, |(b, _)| ub > *b) {
                *best = Some((ub, x));
            }
            return Ok(());
        }
        let mut seen = HashSet::new();
        for fam in &order[depth].families {
            let child: Vec<f64> = bounds.iter().zip(&fam.closure).map(|(a, b)| a.min(*b)).collect();
            let key: Vec<u64> = child.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                self.search(order, depth + 1, child, weights, best, nodes)?;
            }
        }
        Ok(())
    }

    fn lp_over(&self, bounds: &[f64], weights: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (ix, &bound) in bounds.iter().enumerate() {
            if bound.is_finite() {
                let mask = ix as u32 + 1;
                a.push((0..self.k).map(|j| if mask & (1 << j) != 0 { 1.0 } else { 0.0 }).collect::<Vec<f64>>());
                b.push(bound);
            }
        }
        match lp::maximize(weights, &a, &b) {
            Ok(sol) => Some((sol.value, sol.x)),
            Err(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Rank-style set function behind the proof-side outer polytope:
/// `Φ(S) = I(X_S; Y | U_{S^c}, X_{S^c}) + Σ_{j∈S} H(U_j) − H(U_S | U_{S^c})`.
///
/// `p` is a joint over `(U_1.., U_k, X_1.., X_k, Y)` that must factor as
/// `p(u_[k]) · ∏_j p(x_j|u_j) · p(y|x_[k])`.
pub fn submodular_phi(p: &Pmf, k: usize, s_mask: u32) -> Result<Bits, RegionError> {
    check_phi_factorization(p, k)?;
    phi_unchecked(p, k, s_mask)
}

fn phi_unchecked(p: &Pmf, k: usize, s_mask: u32) -> Result<Bits, RegionError> {
    if s_mask == 0 {
        return Ok(0.0);
    }
    let y_axis = 2 * k;
    let sc = !s_mask & full_mask(k);
    let x_s: Vec<usize> = mask_to_indices(s_mask).iter().map(|&j| k + j).collect();
    let mut cond: Vec<usize> = mask_to_indices(sc);
    cond.extend(mask_to_indices(sc).iter().map(|&j| k + j));
    let mi = info::mutual_information(p, &x_s, &[y_axis], &cond)?;
    let mut h_sum = 0.0;
    for j in mask_to_indices(s_mask) {
        h_sum += info::entropy(p, &[j])?;
    }
    let u_s: Vec<usize> = mask_to_indices(s_mask);
    let u_sc: Vec<usize> = mask_to_indices(sc);
    let h_cond = info::conditional_entropy(p, &u_s, &u_sc)?;
    Ok(mi + h_sum - h_cond)
}

/// Φ for every subset, indexed by mask; entry 0 is Φ(∅) = 0.
pub fn phi_table(p: &Pmf, k: usize) -> Result<Vec<Bits>, RegionError> {
    check_phi_factorization(p, k)?;
    (0..=full_mask(k)).map(|s| phi_unchecked(p, k, s)).collect()
}

fn check_phi_factorization(p: &Pmf, k: usize) -> Result<(), RegionError> {
    if p.dims() != 2 * k + 1 {
        return Err(RegionError::AxisCount { expected: 2 * k + 1, got: p.dims() });
    }
    let u_axes: Vec<usize> = (0..k).collect();
    let ux_axes: Vec<usize> = (0..2 * k).collect();
    let m_u = p.marginal(&u_axes)?;
    let m_ux = p.marginal(&ux_axes)?;
    let pairs: Vec<Pmf> = (0..k).map(|j| p.marginal(&[j, k + j])).collect::<Result<_, _>>()?;
    let singles: Vec<Pmf> = (0..k).map(|j| p.marginal(&[j])).collect::<Result<_, _>>()?;

    // p(u, x) = p(u) ∏ p(x_j|u_j)
    let sizes_ux = m_ux.axis_sizes().to_vec();
    let strides_ux = m_ux.strides();
    let mut max_dev: f64 = 0.0;
    for (flat, &actual) in m_ux.mass().iter().enumerate() {
        let coord: Vec<usize> = sizes_ux.iter().zip(&strides_ux).map(|(&sz, &st)| flat / st % sz).collect();
        let mut expected = m_u.get(&coord[0..k]);
        for j in 0..k {
            let den = singles[j].mass()[coord[j]];
            expected *= if den <= 0.0 { 0.0 } else { pairs[j].get(&[coord[j], coord[k + j]]) / den };
        }
        max_dev = max_dev.max((expected - actual).abs());
    }

    // Y depends on U only through X: p(u,x,y)·p(x) = p(u,x)·p(x,y)
    let x_axes: Vec<usize> = (k..2 * k).collect();
    let m_x = p.marginal(&x_axes)?;
    let mut xy_axes = x_axes.clone();
    xy_axes.push(2 * k);
    let m_xy = p.marginal(&xy_axes)?;
    let sizes = p.axis_sizes().to_vec();
    let strides = p.strides();
    for (flat, &actual) in p.mass().iter().enumerate() {
        let coord: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
        let x_coord = &coord[k..2 * k];
        let mut xy_coord = x_coord.to_vec();
        xy_coord.push(coord[2 * k]);
        let lhs = actual * m_x.get(x_coord);
        let rhs = m_ux.get(&coord[0..2 * k]) * m_xy.get(&xy_coord);
        max_dev = max_dev.max((lhs - rhs).abs());
    }
    if max_dev > TOL_ARITH {
        return Err(RegionError::FactorizationViolation { max_dev });
    }
    Ok(())
}

/// Greedy corner of the subset-sum polytope of a set function given as a
/// table over masks (`phi[0]` must be 0): the first encoder in `perm`
/// gets `Φ({π_1})`, each later one its marginal increment.
pub fn corner_point(phi: &[f64], perm: &[usize]) -> Vec<f64> {
    let k = perm.len();
    debug_assert_eq!(phi.len(), 1 << k);
    debug_assert!(phi[0].abs() <= 1e-12);
    let mut rates = vec![0.0; k];
    let mut mask = 0u32;
    for &j in perm {
        let prev = phi[mask as usize];
        mask |= 1 << j;
        rates[j] = phi[mask as usize] - prev;
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn uniform_inputs(k: usize) -> Vec<Pmf> {
        (0..k).map(|_| Pmf::uniform(vec![2])).collect()
    }

    fn random_row(rng: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| floor + rng.gen::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    #[test]
    fn split_validation_tracks_link_budgets() {
        let cfg = CfConfig::new(vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let ok = CfSplit::new(vec![0.2, 0.3], vec![0.2, 0.2]);
        assert!(ok.validate(&cfg).is_ok());
        assert_eq!(ok.sd_mask(), 0b11);
        let too_much_in = CfSplit::new(vec![1.2, 0.0], vec![0.0, 0.0]);
        assert!(matches!(too_much_in.validate(&cfg), Err(RegionError::InputLinkExceeded { encoder: 0, .. })));
        let too_much_out = CfSplit::new(vec![0.4, 0.4], vec![0.3, 0.0]);
        assert!(matches!(too_much_out.validate(&cfg), Err(RegionError::OutputLinkExceeded { .. })));
    }

    #[test]
    fn zeta_degenerate_and_conditionally_independent_cases() {
        // all cd = 0 with |U_j| = 1: subsets of the empty dependence set
        // are rejected, and the internal value for the empty mask is 0.
        let p = CoordinationDist::no_cooperation(&uniform_inputs(2)).unwrap();
        let split = CfSplit::no_cooperation(2);
        assert!(matches!(zeta(0b01, &split, &p), Err(RegionError::NotInDependenceSet(_))));
        assert_eq!(zeta_unchecked(0, &split, &p).unwrap(), 0.0);

        // conditionally independent U's given U_0: entropy terms cancel
        let mut rng = stream_rng(3, &[1]);
        let rows: Vec<Vec<f64>> = (0..2).map(|_| random_row(&mut rng, 2, 0.2)).collect();
        let rows2: Vec<Vec<f64>> = (0..2).map(|_| random_row(&mut rng, 2, 0.2)).collect();
        let p = CoordinationDist::from_factors(
            &[0.5, 0.5],
            &[2, 2],
            &[2, 2],
            0b11,
            &|u0| {
                Pmf::product_of(&[
                    Pmf::new(vec![2], rows[u0].clone()).unwrap(),
                    Pmf::new(vec![2], rows2[1 - u0].clone()).unwrap(),
                ])
            },
            &|_, _, uj| {
                let mut row = vec![0.0; 2];
                row[uj] = 1.0;
                row
            },
        )
        .unwrap();
        let split = CfSplit::new(vec![0.0, 0.0], vec![0.4, 0.7]);
        for s in [0b01u32, 0b10, 0b11] {
            let expect: f64 = mask_to_indices(s).iter().map(|&j| split.cd[j]).sum();
            assert!((zeta(s, &split, &p).unwrap() - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn zeta_fully_correlated_pair() {
        // U1 = U2 fair bit independent of U0, cd = (0.6, 0.6):
        // ζ_{12} = 1.2 − 2·1 + 1 = 0.2
        let p = CoordinationDist::from_factors(
            &[1.0],
            &[2, 2],
            &[2, 2],
            0b11,
            &|_| Pmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap(),
            &|_, _, uj| {
                let mut row = vec![0.0; 2];
                row[uj] = 1.0;
                row
            },
        )
        .unwrap();
        let split = CfSplit::new(vec![0.0, 0.0], vec![0.6, 0.6]);
        let z = zeta(0b11, &split, &p).unwrap();
        assert!((z - 0.2).abs() < 1e-9);
        // independent recomputation from raw entropies
        let pmf = p.pmf();
        let manual = 1.2 - info::conditional_entropy(pmf, &[1], &[0]).unwrap()
            - info::conditional_entropy(pmf, &[2], &[0]).unwrap()
            + info::conditional_entropy(pmf, &[1, 2], &[0]).unwrap();
        assert!((z - manual).abs() < 1e-12);
    }

    #[test]
    fn forwarding_bound_classical_and_common_message() {
        let mac = DiscreteMac::binary_erasure();
        // |U0| = 1, c0 = 0: classical polytope for uniform product inputs
        let p = Pmf::new(vec![1, 2, 2], vec![0.25; 4]).unwrap();
        let region = forwarding_bound(&p, &[0.0, 0.0], &mac).unwrap();
        let (sum, _) = region.max_weighted_sum(&[1.0, 1.0]).unwrap();
        assert!((sum - 1.5).abs() < 1e-9);
        let (r1, _) = region.max_weighted_sum(&[1.0, 0.0]).unwrap();
        assert!((r1 - 1.0).abs() < 1e-9);

        // fully correlated inputs through the common message: the sum
        // constraint I(X1,X2;Y) = 1 bit binds below the subset bounds.
        let mut w = vec![0.0; 8];
        w[0] = 0.5; // (u0, x1, x2) = (0,0,0)
        w[7] = 0.5; // (1,1,1)
        let p = Pmf::new(vec![2, 2, 2], w).unwrap();
        let region = forwarding_bound(&p, &[1.0, 1.0], &mac).unwrap();
        let (sum, _) = region.max_weighted_sum(&[1.0, 1.0]).unwrap();
        assert!((sum - 1.0).abs() < 1e-9);

        // growing c0 leaves the sum constraint unchanged and the subset
        // constraints nondecreasing
        let p = Pmf::new(vec![1, 2, 2], vec![0.25; 4]).unwrap();
        let r_small = forwarding_bound(&p, &[0.1, 0.1], &mac).unwrap();
        let r_big = forwarding_bound(&p, &[0.9, 0.9], &mac).unwrap();
        for (a, b) in r_small.constraints.iter().zip(&r_big.constraints) {
            if a.tag == "sum" {
                assert_eq!(a.bound, b.bound);
            } else {
                assert!(b.bound >= a.bound - 1e-12);
            }
        }

        let non_product = Pmf::new(vec![1, 2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(
            forwarding_bound(&non_product, &[0.0, 0.0], &mac),
            Err(RegionError::FactorizationViolation { .. })
        ));
    }

    #[test]
    fn outer_matches_forwarding_at_zero_and_contains_it() {
        let mac = DiscreteMac::binary_erasure();
        let mut rng = stream_rng(17, &[2]);
        for _ in 0..10 {
            let u0_size = 1 + rng.gen_range(0..3usize);
            let u0 = random_row(&mut rng, u0_size, 0.1);
            let mut w = Vec::new();
            let rows1: Vec<Vec<f64>> = (0..u0_size).map(|_| random_row(&mut rng, 2, 0.05)).collect();
            let rows2: Vec<Vec<f64>> = (0..u0_size).map(|_| random_row(&mut rng, 2, 0.05)).collect();
            for u in 0..u0_size {
                for x1 in 0..2 {
                    for x2 in 0..2 {
                        w.push(u0[u] * rows1[u][x1] * rows2[u][x2]);
                    }
                }
            }
            let p = Pmf::from_weights(vec![u0_size, 2, 2], w).unwrap();

            // C_in = 0 outer equals forwarding with c0 = 0
            let cfg0 = CfConfig::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
            let outer = outer_bound(&mac, &cfg0, &p).unwrap();
            let fwd = forwarding_bound(&p, &[0.0, 0.0], &mac).unwrap();
            for wts in [[1.0, 1.0], [1.0, 0.0], [0.3, 0.7]] {
                let (a, _) = outer.max_weighted_sum(&wts).unwrap();
                let (b, _) = fwd.max_weighted_sum(&wts).unwrap();
                assert!((a - b).abs() < 1e-12);
            }

            // forwarding with c0 ≤ C_in sits inside the outer bound
            let cfg = CfConfig::new(vec![0.4, 0.6], vec![1.0, 1.0]).unwrap();
            let fwd = forwarding_bound(&p, &[0.4, 0.6], &mac).unwrap();
            let outer = outer_bound(&mac, &cfg, &p).unwrap();
            for wts in [[1.0, 1.0], [0.2, 0.8]] {
                let (a, _) = fwd.max_weighted_sum(&wts).unwrap();
                let (b, _) = outer.max_weighted_sum(&wts).unwrap();
                assert!(a <= b + 1e-9);
            }
        }
    }

    #[test]
    fn conferencing_row_sums() {
        let mac = DiscreteMac::binary_erasure();
        let p = Pmf::new(vec![1, 2, 2], vec![0.25; 4]).unwrap();
        let zero = vec![vec![0.0; 2]; 2];
        let a = conferencing_outer(&mac, &zero, &p).unwrap();
        let b = outer_bound(&mac, &CfConfig::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap(), &p).unwrap();
        for (ca, cb) in a.constraints.iter().zip(&b.constraints) {
            assert_eq!(ca.bound, cb.bound);
        }
        let sym = vec![vec![0.0, 0.25], vec![0.25, 0.0]];
        let c = conferencing_outer(&mac, &sym, &p).unwrap();
        let d = outer_bound(&mac, &CfConfig::new(vec![0.25, 0.25], vec![0.0, 0.0]).unwrap(), &p).unwrap();
        for (cc, cd) in c.constraints.iter().zip(&d.constraints) {
            assert!((cc.bound - cd.bound).abs() < 1e-12);
        }
        let diag = vec![vec![0.1, 0.0], vec![0.0, 0.0]];
        assert!(matches!(conferencing_outer(&mac, &diag, &p), Err(RegionError::NonzeroDiagonal(0))));
    }

    #[test]
    fn conferencing_star_structure_on_three_users() {
        // two leaf encoders feed a hub which talks back: row sums give
        // effective input capacities (a, b, 2c)
        let mac = DiscreteMac::from_fn(vec![2, 2, 2], 4, |x, y| {
            if (x[0] + x[1] + x[2]) % 4 == y {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let p = Pmf::new(vec![1, 2, 2, 2], vec![0.125; 8]).unwrap();
        let (a, b, c) = (0.4, 0.7, 0.25);
        let matrix = vec![vec![0.0, 0.0, a], vec![0.0, 0.0, b], vec![c, c, 0.0]];
        let conf = conferencing_outer(&mac, &matrix, &p).unwrap();
        let cfg = CfConfig::new(vec![a, b, 2.0 * c], vec![0.0; 3]).unwrap();
        let direct = outer_bound(&mac, &cfg, &p).unwrap();
        for (x, y) in conf.constraints.iter().zip(&direct.constraints) {
            assert!((x.bound - y.bound).abs() < 1e-12);
        }
    }

    #[test]
    fn max_weighted_sum_examples() {
        let mut region = RateRegion::new(2);
        region.push_subset(0b11, 1.5, "sum");
        let (v, _) = region.max_weighted_sum(&[1.0, 1.0]).unwrap();
        assert!((v - 1.5).abs() < 1e-9);

        let mut pentagon = RateRegion::new(2);
        pentagon.push_subset(0b01, 1.0, "r1");
        pentagon.push_subset(0b10, 1.0, "r2");
        pentagon.push_subset(0b11, 1.5, "sum");
        let (v, x) = pentagon.max_weighted_sum(&[1.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!(x[0] <= 1.0 + 1e-9);

        // unbounded direction is reported
        let mut open = RateRegion::new(2);
        open.push_subset(0b01, 1.0, "r1");
        assert!(matches!(open.max_weighted_sum(&[0.0, 1.0]), Err(RegionError::Unbounded)));
    }

    #[test]
    fn random_subset_regions_agree_with_grid_oracle() {
        let mut rng = stream_rng(23, &[4]);
        for _ in 0..10 {
            let k = 3usize;
            let mut region = RateRegion::new(k);
            for mask in nonempty_subsets(k) {
                region.push_subset(mask, 0.4 + 1.6 * rng.gen::<f64>(), format!("m{mask}"));
            }
            let w: Vec<f64> = (0..k).map(|_| 0.1 + rng.gen::<f64>()).collect();
            let (v, _) = region.max_weighted_sum(&w).unwrap();
            let steps = 60usize;
            let hi = 2.2f64;
            let mut best = f64::NEG_INFINITY;
            for i in 0..=steps {
                for j in 0..=steps {
                    for l in 0..=steps {
                        let r = [
                            hi * i as f64 / steps as f64,
                            hi * j as f64 / steps as f64,
                            hi * l as f64 / steps as f64,
                        ];
                        if region.contains(&r, 1e-12) {
                            best = best.max(w.iter().zip(&r).map(|(a, b)| a * b).sum());
                        }
                    }
                }
            }
            assert!(v + 1e-9 >= best);
            assert!(v - best <= 3.0 * hi / steps as f64 * w.iter().sum::<f64>() + 1e-6);
        }
    }

    #[test]
    fn inner_bound_no_cooperation_is_classical() {
        let mac = DiscreteMac::binary_erasure();
        let p = CoordinationDist::no_cooperation(&uniform_inputs(2)).unwrap();
        let split = CfSplit::no_cooperation(2);
        let cfg = CfConfig::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let inner = inner_bound(&p, &split, &cfg, &mac).unwrap();
        // every group collapses to a single family
        assert!(inner.groups.iter().all(|g| g.families.len() == 1));
        let (sum, _) = inner.max_weighted_sum(&[1.0, 1.0]).unwrap();
        assert!((sum - 1.5).abs() < 1e-9);
        let (r1, _) = inner.max_weighted_sum(&[1.0, 0.0]).unwrap();
        assert!((r1 - 1.0).abs() < 1e-9);
        assert!(inner.contains(&[0.9, 0.55], 1e-9));
        assert!(!inner.contains(&[0.9, 0.7], 1e-9));
    }

    #[test]
    fn inner_bound_matches_forwarding_when_dependence_is_off() {
        // k = 2, c0 = C_in, cd = 0, nontrivial U0
        let mac = DiscreteMac::binary_erasure();
        let mut rng = stream_rng(29, &[6]);
        for _ in 0..5 {
            let u0 = random_row(&mut rng, 2, 0.2);
            let rows1: Vec<Vec<f64>> = (0..2).map(|_| random_row(&mut rng, 2, 0.1)).collect();
            let rows2: Vec<Vec<f64>> = (0..2).map(|_| random_row(&mut rng, 2, 0.1)).collect();
            let r1 = rows1.clone();
            let r2 = rows2.clone();
            let coord = CoordinationDist::from_factors(
                &u0,
                &[1, 1],
                &[2, 2],
                0,
                &|_| Pmf::uniform(vec![1, 1]),
                &|j, u0v, _| if j == 0 { r1[u0v].clone() } else { r2[u0v].clone() },
            )
            .unwrap();
            let c_in = [0.2, 0.3];
            let cfg = CfConfig::new(c_in.to_vec(), vec![0.5, 0.5]).unwrap();
            let split = CfSplit::forwarding(c_in.to_vec());
            let inner = inner_bound(&coord, &split, &cfg, &mac).unwrap();

            let mut w = Vec::new();
            for u in 0..2 {
                for x1 in 0..2 {
                    for x2 in 0..2 {
                        w.push(u0[u] * rows1[u][x1] * rows2[u][x2]);
                    }
                }
            }
            let p = Pmf::from_weights(vec![2, 2, 2], w).unwrap();
            let fwd = forwarding_bound(&p, &c_in, &mac).unwrap();
            for wts in [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.6, 0.4]] {
                let (a, _) = inner.max_weighted_sum(&wts).unwrap();
                let (b, _) = fwd.max_weighted_sum(&wts).unwrap();
                assert!((a - b).abs() < 1e-9, "inner {a} vs forwarding {b}");
            }
        }
    }

    #[test]
    fn inner_bound_rejects_nonpositive_zeta() {
        // fully correlated U's with tiny cd: ζ_{12} = cd_1 + cd_2 − 1 < 0
        let p = CoordinationDist::from_factors(
            &[1.0],
            &[2, 2],
            &[2, 2],
            0b11,
            &|_| Pmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap(),
            &|_, _, uj| {
                let mut row = vec![0.0; 2];
                row[uj] = 1.0;
                row
            },
        )
        .unwrap();
        let split = CfSplit::new(vec![0.0, 0.0], vec![0.2, 0.2]);
        let cfg = CfConfig::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let mac = DiscreteMac::binary_erasure();
        assert!(matches!(
            inner_bound(&p, &split, &cfg, &mac),
            Err(RegionError::ZetaNotPositive { .. })
        ));
    }

    /// Random valid Φ inputs: p(u)·∏p(x_j|u_j)·p(y|x).
    fn random_phi_joint(k: usize, rng: &mut impl Rng) -> Pmf {
        let u_total = 1usize << k;
        let u_joint = random_row(rng, u_total, 0.1);
        let x_rows: Vec<Vec<Vec<f64>>> =
            (0..k).map(|_| (0..2).map(|_| random_row(rng, 2, 0.1)).collect()).collect();
        let ny = 3usize;
        let y_rows: Vec<Vec<f64>> = (0..(1usize << k)).map(|_| random_row(rng, ny, 0.1)).collect();
        let mut sizes = vec![2usize; 2 * k];
        sizes.push(ny);
        let total: usize = sizes.iter().product();
        let strides = crate::info::strides_of(&sizes);
        let mut mass = vec![0.0; total];
        for (flat, m) in mass.iter_mut().enumerate() {
            let coord: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
            let u_ix = coord[..k].iter().fold(0usize, |acc, &c| acc * 2 + c);
            let x_ix = coord[k..2 * k].iter().fold(0usize, |acc, &c| acc * 2 + c);
            let mut p = u_joint[u_ix];
            for j in 0..k {
                p *= x_rows[j][coord[j]][coord[k + j]];
            }
            *m = p * y_rows[x_ix][coord[2 * k]];
        }
        Pmf::from_weights(sizes, mass).unwrap()
    }

    #[test]
    fn phi_is_monotone_submodular_and_has_greedy_corners() {
        let mut rng = stream_rng(31, &[8]);
        let k = 3usize;
        for _ in 0..25 {
            let p = random_phi_joint(k, &mut rng);
            let table = phi_table(&p, k).unwrap();
            // independent algebraic route: with V_j = (U_j, X_j),
            // Φ(S) = H(V_{S^c}|Y) + Σ_{j∈S} H(V_j) − H(V_[k]|Y).
            let v_axes = |mask: u32| -> Vec<usize> {
                let mut v = Vec::new();
                for j in mask_to_indices(mask) {
                    v.push(j);
                    v.push(k + j);
                }
                v
            };
            for s in 0..=full_mask(k) {
                let all: Vec<usize> = v_axes(full_mask(k));
                let mut alt = -info::conditional_entropy(&p, &all, &[2 * k]).unwrap();
                let sc = !s & full_mask(k);
                if sc != 0 {
                    alt += info::conditional_entropy(&p, &v_axes(sc), &[2 * k]).unwrap();
                }
                for j in mask_to_indices(s) {
                    alt += info::entropy(&p, &[j, k + j]).unwrap();
                }
                assert!((table[s as usize] - alt).abs() < 1e-9, "mask {s}: {} vs {alt}", table[s as usize]);
            }
            for s in 0..=full_mask(k) {
                for t in 0..=full_mask(k) {
                    let lhs = table[s as usize] + table[t as usize];
                    let rhs = table[(s | t) as usize] + table[(s & t) as usize];
                    assert!(lhs >= rhs - 1e-9);
                    if s & !t == 0 {
                        assert!(table[s as usize] <= table[t as usize] + 1e-9);
                    }
                }
            }
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rng);
            let corner = corner_point(&table, &perm);
            let total: f64 = corner.iter().sum();
            assert!((total - table[full_mask(k) as usize]).abs() < 1e-9);
            for s in nonempty_subsets(k) {
                let sum: f64 = mask_to_indices(s).iter().map(|&j| corner[j]).sum();
                assert!(sum <= table[s as usize] + 1e-9);
            }
        }
    }

    #[test]
    fn phi_is_additive_for_independent_pairs() {
        // independent (U_j, X_j) blocks: Φ is modular, so submodularity
        // holds with equality and singletons add up
        let mut rng = stream_rng(37, &[9]);
        let k = 2usize;
        let u1 = random_row(&mut rng, 2, 0.2);
        let u2 = random_row(&mut rng, 2, 0.2);
        let x_rows: Vec<Vec<Vec<f64>>> =
            (0..k).map(|_| (0..2).map(|_| random_row(&mut rng, 2, 0.2)).collect()).collect();
        // independent parallel channels: y = (y1, y2) with y_j | x_j
        let y_rows: Vec<Vec<Vec<f64>>> =
            (0..k).map(|_| (0..2).map(|_| random_row(&mut rng, 2, 0.2)).collect()).collect();
        let sizes = vec![2usize, 2, 2, 2, 4];
        let total: usize = sizes.iter().product();
        let strides = crate::info::strides_of(&sizes);
        let mut mass = vec![0.0; total];
        for (flat, m) in mass.iter_mut().enumerate() {
            let c: Vec<usize> = sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect();
            let (y1, y2) = (c[4] / 2, c[4] % 2);
            *m = u1[c[0]]
                * u2[c[1]]
                * x_rows[0][c[0]][c[2]]
                * x_rows[1][c[1]][c[3]]
                * y_rows[0][c[2]][y1]
                * y_rows[1][c[3]][y2];
        }
        let p = Pmf::from_weights(sizes, mass).unwrap();
        let table = phi_table(&p, k).unwrap();
        assert!((table[0b11] - table[0b01] - table[0b10]).abs() < 1e-9);
        // equality case of submodularity
        assert!((table[0b01] + table[0b10] - table[0b11] - table[0]).abs() < 1e-9);
    }

    #[test]
    fn corner_point_small_cases() {
        // Φ({1}) = a, Φ({1,2}) = b → (a, b−a)
        let phi = [0.0, 0.7, 0.9, 1.2];
        assert_eq!(corner_point(&phi, &[0, 1]), vec![0.7, 0.5]);
        // modular Φ: same point under both orders
        let modular = [0.0, 0.25, 0.5, 0.75];
        assert_eq!(corner_point(&modular, &[0, 1]), corner_point(&modular, &[1, 0]));
    }
}
