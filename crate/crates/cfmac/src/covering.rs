//! Monte Carlo laboratory for the multivariate covering step: weak joint
//! typicality over every axis subset, covering success probability
//! against the direct/converse rate thresholds, and the large-deviations
//! exponent that controls atypicality.
//!
//! The base distribution lives on axes `(U_0, U_1, .., U_k, U_{k+1})`:
//! axis 0 is the shared context, axes `1..=k` carry the codebooks, the
//! last axis rides along jointly with `U_0`. Codeword `m` of axis `j` is
//! seeded by `(master, trial, j, m)`, so enlarging a codebook keeps its
//! prefix intact and success is pathwise monotone in each size.

use crate::info::{self, InfoError};
use crate::rng::stream_rng;
use crate::subsets::{full_mask, mask_to_indices, nonempty_subsets};
use crate::{Bits, Pmf};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Exhaustive-search budget: the product of codebook sizes may not
/// exceed `2^20` candidates.
pub const SEARCH_BUDGET_LOG2: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoveringError {
    #[error("candidate search needs 2^{log2_required:.1} tuples, budget is 2^{budget:.0}")]
    BudgetExceeded { log2_required: f64, budget: f64 },
    #[error("base distribution needs at least 3 axes (context, codebooks, side axis)")]
    TooFewAxes,
    #[error("sequence for axis {axis} has length {got}, expected {expected}")]
    LengthMismatch { axis: usize, expected: usize, got: usize },
    #[error("expected {expected} sequences, got {got}")]
    SequenceCount { expected: usize, got: usize },
    #[error("symbol {symbol} out of range for axis {axis} (size {size})")]
    SymbolOutOfRange { axis: usize, symbol: usize, size: usize },
    #[error("delta must be positive")]
    BadDelta,
    #[error("rate vector has {got} entries, expected {expected}")]
    RateCount { expected: usize, got: usize },
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Alphabet symbol usable in typicality scoring; lets hot paths keep
/// sequences as bytes.
pub trait Symbol: Copy {
    fn index(self) -> usize;
}

impl Symbol for usize {
    fn index(self) -> usize {
        self
    }
}

impl Symbol for u8 {
    fn index(self) -> usize {
        self as usize
    }
}

struct SubsetStats {
    mask: u32,
    entropy: f64,
    /// log2 of the subset marginal, −inf on zero cells.
    log_probs: Vec<f64>,
    /// Per original axis: stride into `log_probs`, 0 for absent axes.
    strides: Vec<usize>,
}

/// Weak-typicality checker for a fixed base distribution, slack `delta`
/// and blocklength `n`. All nonempty axis subsets are enforced; subsets
/// that only differ by degenerate (size-1) axes share one statistic.
pub struct TypicalityCheck {
    base: Pmf,
    pub delta: f64,
    pub n: usize,
    cores: Vec<SubsetStats>,
    /// For each nonempty subset mask (index mask−1): index into `cores`,
    /// or `usize::MAX` when every axis in the subset is degenerate.
    core_of: Vec<usize>,
}

impl TypicalityCheck {
    pub fn new(base: Pmf, delta: f64, n: usize) -> Result<Self, CoveringError> {
        if delta <= 0.0 {
            return Err(CoveringError::BadDelta);
        }
        assert!(n >= 1);
        let dims = base.dims();
        let degenerate: u32 = base
            .axis_sizes()
            .iter()
            .enumerate()
            .fold(0, |m, (i, &sz)| if sz == 1 { m | (1 << i) } else { m });
        let mut cores = Vec::new();
        let mut core_index = std::collections::HashMap::new();
        let mut core_of = vec![usize::MAX; full_mask(dims) as usize];
        for mask in nonempty_subsets(dims) {
            let core = mask & !degenerate;
            if core == 0 {
                continue; // statistic is identically 0 = entropy
            }
            let ix = *core_index.entry(core).or_insert_with(|| {
                let axes = mask_to_indices(core);
                let marg = base.marginal(&axes).expect("axes in range");
                let entropy = info::entropy(&base, &axes).expect("nonempty");
                let marg_strides = marg.strides();
                let mut strides = vec![0usize; dims];
                for (pos, &axis) in axes.iter().enumerate() {
                    strides[axis] = marg_strides[pos];
                }
                let log_probs =
                    marg.mass().iter().map(|&m| if m > 0.0 { m.log2() } else { f64::NEG_INFINITY }).collect();
                cores.push(SubsetStats { mask: core, entropy, log_probs, strides });
                cores.len() - 1
            });
            core_of[(mask - 1) as usize] = ix;
        }
        Ok(Self { base, delta, n, cores, core_of })
    }

    pub fn base(&self) -> &Pmf {
        &self.base
    }

    fn validate_seqs(&self, seqs: &[&[usize]]) -> Result<(), CoveringError> {
        if seqs.len() != self.base.dims() {
            return Err(CoveringError::SequenceCount { expected: self.base.dims(), got: seqs.len() });
        }
        for (axis, seq) in seqs.iter().enumerate() {
            if seq.len() != self.n {
                return Err(CoveringError::LengthMismatch { axis, expected: self.n, got: seq.len() });
            }
            let size = self.base.axis_sizes()[axis];
            if let Some(&symbol) = seq.iter().find(|&&s| s >= size) {
                return Err(CoveringError::SymbolOutOfRange { axis, symbol, size });
            }
        }
        Ok(())
    }

    /// Empirical log-probability sum of one subset; early-exits once the
    /// lower typicality bound is unreachable (log masses are ≤ 0).
    fn core_score<S: Symbol>(&self, core: &SubsetStats, seqs: &[&[S]], lo: f64) -> f64 {
        let mut sum = 0.0;
        for t in 0..self.n {
            let mut ix = 0usize;
            for (axis, stride) in core.strides.iter().enumerate() {
                if *stride != 0 {
                    ix += seqs[axis][t].index() * stride;
                }
            }
            sum += core.log_probs[ix];
            if sum < lo {
                return f64::NEG_INFINITY;
            }
        }
        sum
    }

    fn core_typical<S: Symbol>(&self, core: &SubsetStats, seqs: &[&[S]]) -> bool {
        let n = self.n as f64;
        let lo = -n * (core.entropy + self.delta);
        let hi = -n * (core.entropy - self.delta);
        let sum = self.core_score(core, seqs, lo);
        sum >= lo && sum <= hi
    }

    /// Fast membership test over all subsets.
    pub fn is_typical<S: Symbol>(&self, seqs: &[&[S]]) -> bool {
        self.cores.iter().all(|c| self.core_typical(c, seqs))
    }

    /// Membership restricted to subsets whose non-degenerate axes fall in
    /// `axes_mask`; used by staged searches that fix axes one at a time.
    pub fn is_typical_within<S: Symbol>(&self, seqs: &[&[S]], axes_mask: u32) -> bool {
        self.cores.iter().filter(|c| c.mask & !axes_mask == 0).all(|c| self.core_typical(c, seqs))
    }

    /// Core subset masks (degenerate axes stripped), for staged planning.
    pub fn core_masks(&self) -> Vec<u32> {
        self.cores.iter().map(|c| c.mask).collect()
    }

    pub(crate) fn core_typical_by_index<S: Symbol>(&self, ix: usize, seqs: &[&[S]]) -> bool {
        self.core_typical(&self.cores[ix], seqs)
    }
}

/// Per-subset deviations `|−(1/n)·log2 p(u_S^n) − H(U_S)|` and the
/// overall verdict.
#[derive(Debug, Clone)]
pub struct TypicalityReport {
    pub typical: bool,
    /// One row per nonempty subset mask of the tracked axes.
    pub deviations: Vec<(u32, f64)>,
}

/// Full typicality check with per-subset diagnostics.
pub fn is_weakly_typical(seqs: &[&[usize]], check: &TypicalityCheck) -> Result<TypicalityReport, CoveringError> {
    check.validate_seqs(seqs)?;
    let dims = check.base.dims();
    let n = check.n as f64;
    let mut deviations = Vec::with_capacity(full_mask(dims) as usize);
    let mut typical = true;
    for mask in nonempty_subsets(dims) {
        let ix = check.core_of[(mask - 1) as usize];
        let dev = if ix == usize::MAX {
            0.0 // degenerate subset: statistic and entropy both vanish
        } else {
            let core = &check.cores[ix];
            let sum = check.core_score(core, seqs, f64::NEG_INFINITY);
            (-sum / n - core.entropy).abs()
        };
        if dev > check.delta {
            typical = false;
        }
        deviations.push((mask, dev));
    }
    Ok(TypicalityReport { typical, deviations })
}

/// Codebook rates, trial count and master seed for covering experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringConfig {
    pub rates: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl CoveringConfig {
    /// `M_j = ceil(2^{n·R_j})`, always at least one codeword.
    pub fn codebook_sizes(&self, n: usize) -> Vec<u64> {
        self.rates.iter().map(|r| (2.0f64).powf(n as f64 * r).ceil().max(1.0) as u64).collect()
    }

    fn check_budget(&self, n: usize) -> Result<Vec<u64>, CoveringError> {
        let log2_required: f64 = self.rates.iter().map(|r| (n as f64 * r).max(0.0)).sum();
        if log2_required > SEARCH_BUDGET_LOG2 {
            return Err(CoveringError::BudgetExceeded { log2_required, budget: SEARCH_BUDGET_LOG2 });
        }
        Ok(self.codebook_sizes(n))
    }
}

/// Conditional samplers derived from the base distribution.
struct Sampler {
    k: usize,
    /// cdf over the joint (u0, u_{k+1}) pair.
    pair_cdf: Vec<f64>,
    side_size: usize,
    /// Per codebook axis j (0-based user), per u0 symbol: cdf over U_j.
    cond_cdfs: Vec<Vec<Vec<f64>>>,
}

impl Sampler {
    fn new(p: &Pmf) -> Result<Self, CoveringError> {
        let dims = p.dims();
        if dims < 3 {
            return Err(CoveringError::TooFewAxes);
        }
        let k = dims - 2;
        let side = dims - 1;
        let pair = p.marginal(&[0, side])?;
        let pair_cdf = cumsum(pair.mass());
        let u0_marg = p.marginal(&[0])?;
        let mut cond_cdfs = Vec::with_capacity(k);
        for j in 1..=k {
            let joint = p.marginal(&[0, j])?;
            let nj = p.axis_sizes()[j];
            let mut per_u0 = Vec::new();
            for u0 in 0..p.axis_sizes()[0] {
                let pu0 = u0_marg.mass()[u0];
                let row: Vec<f64> = (0..nj)
                    .map(|u| if pu0 > 0.0 { joint.get(&[u0, u]) / pu0 } else { 1.0 / nj as f64 })
                    .collect();
                per_u0.push(cumsum(&row));
            }
            cond_cdfs.push(per_u0);
        }
        Ok(Self { k, pair_cdf, side_size: p.axis_sizes()[side], cond_cdfs })
    }

    fn draw_context(&self, n: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<usize>) {
        let mut u0 = Vec::with_capacity(n);
        let mut side = Vec::with_capacity(n);
        for _ in 0..n {
            let flat = draw_cdf(&self.pair_cdf, rng);
            u0.push(flat / self.side_size);
            side.push(flat % self.side_size);
        }
        (u0, side)
    }

    fn draw_codeword(&self, j: usize, u0: &[usize], rng: &mut impl Rng) -> Vec<usize> {
        u0.iter().map(|&u| draw_cdf(&self.cond_cdfs[j][u], rng)).collect()
    }
}

fn cumsum(x: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    x.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

fn draw_cdf(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Run one covering trial: draw the context pair and the conditionally
/// independent codebooks, then search the candidate tuples in
/// lexicographic order for a jointly typical hit.
pub fn covering_trial(
    p: &Pmf,
    cfg: &CoveringConfig,
    check: &TypicalityCheck,
    trial: u64,
) -> Result<bool, CoveringError> {
    let sizes = cfg.check_budget(check.n)?;
    let sampler = Sampler::new(p)?;
    let k = sampler.k;
    if cfg.rates.len() != k {
        return Err(CoveringError::RateCount { expected: k, got: cfg.rates.len() });
    }
    let n = check.n;
    let mut ctx_rng = stream_rng(cfg.seed, &[trial, 0]);
    let (u0, side) = sampler.draw_context(n, &mut ctx_rng);

    // prefix-nested books: codeword (j, m) only depends on (seed, trial, j, m)
    let books: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|j| {
            (0..sizes[j])
                .map(|m| {
                    let mut rng = stream_rng(cfg.seed, &[trial, 1 + j as u64, m]);
                    sampler.draw_codeword(j, &u0, &mut rng)
                })
                .collect()
        })
        .collect();

    // cores become checkable once their deepest codebook axis is assigned
    let dims = p.dims();
    let side_axis = dims - 1;
    let mut depth_of_core = vec![0usize; check.cores.len()];
    for (ix, core) in check.cores.iter().enumerate() {
        let deepest = mask_to_indices(core.mask)
            .into_iter()
            .filter(|&a| a != 0 && a != side_axis)
            .max()
            .unwrap_or(0);
        depth_of_core[ix] = deepest; // 0 = context-only
    }

    let mut seqs: Vec<&[usize]> = vec![&[]; dims];
    seqs[0] = &u0;
    seqs[side_axis] = &side;
    // context-only subsets can already disqualify the whole trial
    for (ix, core) in check.cores.iter().enumerate() {
        if depth_of_core[ix] == 0 && !check.core_typical(core, &seqs) {
            return Ok(false);
        }
    }

    fn dfs<'a>(
        depth: usize,
        k: usize,
        books: &'a [Vec<Vec<usize>>],
        seqs: &mut Vec<&'a [usize]>,
        check: &TypicalityCheck,
        depth_of_core: &[usize],
    ) -> bool {
        if depth > k {
            return true;
        }
        for m in 0..books[depth - 1].len() {
            seqs[depth] = &books[depth - 1][m];
            let ok = check
                .cores
                .iter()
                .enumerate()
                .filter(|(ix, _)| depth_of_core[*ix] == depth)
                .all(|(_, core)| check.core_typical(core, seqs));
            if ok && dfs(depth + 1, k, books, seqs, check, depth_of_core) {
                return true;
            }
        }
        false
    }

    Ok(dfs(1, k, &books, &mut seqs, check, &depth_of_core))
}

/// Estimate the covering success probability for one rate point.
pub fn covering_success(
    p: &Pmf,
    cfg: &CoveringConfig,
    check: &TypicalityCheck,
) -> Result<f64, CoveringError> {
    cfg.check_budget(check.n)?;
    let hits: usize = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| covering_trial(p, cfg, check, t).map(usize::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(hits as f64 / cfg.trials as f64)
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p_hat + z * z / (2.0 * n)) / denom;
    let half = z * ((p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)).sqrt()) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Covering-rate thresholds per nonempty codebook subset:
/// `base_S = Σ_{j∈S} H(U_j|U_0) − H(U_S | U_0, U_{k+1})`, with the direct
/// slack `(8k − 2|S| + 10)δ` and converse slack `2(|S| + 1)δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub mask: u32,
    pub base: Bits,
    pub direct: Bits,
    pub converse: Bits,
}

pub fn thresholds(p: &Pmf, delta: f64) -> Result<Vec<ThresholdRow>, CoveringError> {
    let dims = p.dims();
    if dims < 3 {
        return Err(CoveringError::TooFewAxes);
    }
    let k = dims - 2;
    let side = dims - 1;
    let mut rows = Vec::new();
    for mask in nonempty_subsets(k) {
        let users = mask_to_indices(mask);
        let mut base = 0.0;
        for &j in &users {
            base += info::conditional_entropy(p, &[1 + j], &[0])?;
        }
        let axes: Vec<usize> = users.iter().map(|&j| 1 + j).collect();
        base -= info::conditional_entropy(p, &axes, &[0, side])?;
        let s = users.len() as f64;
        rows.push(ThresholdRow {
            mask,
            base,
            direct: base + (8.0 * k as f64 - 2.0 * s + 10.0) * delta,
            converse: base - 2.0 * (s + 1.0) * delta,
        });
    }
    Ok(rows)
}

/// One evaluated point of the covering phase curve.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub success: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub direct_threshold: Bits,
    pub converse_threshold: Bits,
}

/// Sweep rate points and report success fractions against the full-set
/// thresholds.
pub fn covering_phase_curve(
    p: &Pmf,
    n: usize,
    delta: f64,
    rate_grid: &[Vec<f64>],
    trials: usize,
    seed: u64,
) -> Result<Vec<PhasePoint>, CoveringError> {
    let check = TypicalityCheck::new(p.clone(), delta, n)?;
    let rows = thresholds(p, delta)?;
    let full = rows.last().expect("nonempty");
    let mut out = Vec::new();
    for rates in rate_grid {
        let cfg = CoveringConfig { rates: rates.clone(), trials, seed };
        let success = covering_success(p, &cfg, &check)?;
        let (lo, hi) = wilson_interval((success * trials as f64).round() as usize, trials);
        out.push(PhasePoint {
            rates: rates.clone(),
            sum_rate: rates.iter().sum(),
            success,
            wilson_lo: lo,
            wilson_hi: hi,
            direct_threshold: full.direct,
            converse_threshold: full.converse,
        });
    }
    Ok(out)
}

/// Chernoff exponent of the upper typicality tail for one axis subset:
/// the supremum over `t ∈ (0, t_max]` of
/// `t·(H(U_S) + ε) − log2 E[p(U_S)^{−t}]` (a concave function of `t`,
/// located by golden-section search).
pub fn ldp_exponent(p: &Pmf, axes: &[usize], epsilon: f64, t_max: f64) -> Result<f64, CoveringError> {
    let marg = p.marginal(axes)?;
    let h = info::entropy(p, axes)?;
    let phi = |t: f64| -> f64 {
        let moment: f64 = marg.mass().iter().filter(|&&m| m > 0.0).map(|&m| m.powf(1.0 - t)).sum();
        t * (h + epsilon) - moment.log2()
    };
    let gold = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1e-6, t_max);
    let mut t1 = hi - gold * (hi - lo);
    let mut t2 = lo + gold * (hi - lo);
    let mut f1 = phi(t1);
    let mut f2 = phi(t2);
    for _ in 0..200 {
        if f1 < f2 {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + gold * (hi - lo);
            f2 = phi(t2);
        } else {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - gold * (hi - lo);
            f1 = phi(t1);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(f1.max(f2).max(phi(t_max)))
}

/// Combined exponent over every nonempty subset, halved: atypicality is
/// bounded by `2^{−n·I(ε)}` for large `n`.
pub fn ldp_combined(p: &Pmf, epsilon: f64, t_max: f64) -> Result<f64, CoveringError> {
    let dims = p.dims();
    let mut min_exp = f64::INFINITY;
    for mask in nonempty_subsets(dims) {
        let axes = mask_to_indices(mask);
        min_exp = min_exp.min(ldp_exponent(p, &axes, epsilon, t_max)?);
    }
    Ok(0.5 * min_exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsbs_exact() -> Pmf {
        // degenerate context and side axes; U1 = U2 a fair bit
        Pmf::new(vec![1, 2, 2, 1], vec![0.5, 0.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn fair_bit_sequences_are_always_typical() {
        let base = Pmf::new(vec![1, 2, 1], vec![0.5, 0.5]).unwrap();
        let check = TypicalityCheck::new(base, 1e-9, 16).unwrap();
        let u0 = vec![0usize; 16];
        let bits: Vec<usize> = (0..16).map(|t| t % 2).collect();
        let report = is_weakly_typical(&[&u0, &bits, &u0], &check).unwrap();
        assert!(report.typical);
        for (_, dev) in report.deviations {
            assert!(dev <= 1e-12);
        }
    }

    #[test]
    fn zero_probability_symbols_are_atypical_not_errors() {
        let base = Pmf::new(vec![1, 2, 1], vec![1.0, 0.0]).unwrap();
        let check = TypicalityCheck::new(base, 0.5, 4).unwrap();
        let u0 = vec![0usize; 4];
        let seq = vec![0, 1, 0, 0];
        let report = is_weakly_typical(&[&u0, &seq, &u0], &check).unwrap();
        assert!(!report.typical);

        let bad = vec![0, 2, 0, 0];
        assert!(matches!(
            is_weakly_typical(&[&u0, &bad, &u0], &check),
            Err(CoveringError::SymbolOutOfRange { axis: 1, symbol: 2, .. })
        ));
    }

    #[test]
    fn aep_monte_carlo() {
        // 1e4 draws from a fixed 3-atom pmf are typical with frequency
        // ≥ 0.99 at delta = 0.1 (200 seeded trials).
        let base = Pmf::new(vec![1, 3, 1], vec![0.21, 0.33, 0.46]).unwrap();
        let n = 10_000usize;
        let check = TypicalityCheck::new(base.clone(), 0.1, n).unwrap();
        let marg = base.marginal(&[1]).unwrap();
        let cdf = cumsum(marg.mass());
        let u0 = vec![0usize; n];
        let mut hits = 0;
        for trial in 0..200u64 {
            let mut rng = stream_rng(99, &[trial]);
            let seq: Vec<usize> = (0..n).map(|_| draw_cdf(&cdf, &mut rng)).collect();
            if check.is_typical(&[&u0, &seq, &u0]) {
                hits += 1;
            }
        }
        assert!(hits >= 198, "typical in {hits}/200 trials");
    }

    #[test]
    fn single_candidate_product_succeeds() {
        // fully product base, one codeword per axis, generous delta
        let base = Pmf::new(vec![1, 2, 2, 1], vec![0.25; 4]).unwrap();
        let check = TypicalityCheck::new(base.clone(), 0.25, 200).unwrap();
        let cfg = CoveringConfig { rates: vec![0.0, 0.0], trials: 100, seed: 7 };
        let success = covering_success(&base, &cfg, &check).unwrap();
        assert!(success >= 0.95, "success {success}");
    }

    #[test]
    fn dependent_target_fails_at_zero_rate() {
        // one independent candidate pair against the exact-match target
        let base = dsbs_exact();
        let check = TypicalityCheck::new(base.clone(), 0.1, 200).unwrap();
        let cfg = CoveringConfig { rates: vec![0.0, 0.0], trials: 200, seed: 11 };
        let success = covering_success(&base, &cfg, &check).unwrap();
        assert!(success <= 0.01, "success {success}");
    }

    #[test]
    fn phase_transition_at_desk_scale() {
        // Exact-match pair: threshold R1+R2 = 1 bit. At n = 15 both sides
        // of the transition fit inside the search budget: the birthday
        // oracle gives success ≈ 1−exp(−M1·M2/2^n).
        let base = dsbs_exact();
        let n = 15usize;
        let trials = 400usize;
        let curve = covering_phase_curve(
            &base,
            n,
            0.05,
            &[vec![0.35, 0.35], vec![0.65, 0.65]],
            trials,
            20240,
        )
        .unwrap();
        let below = &curve[0];
        let above = &curve[1];
        assert!((below.direct_threshold - (1.0 + 22.0 * 0.05)).abs() < 1e-9);
        assert!((below.converse_threshold - (1.0 - 6.0 * 0.05)).abs() < 1e-9);

        let m_small = (2.0f64).powf(n as f64 * 0.35).ceil();
        let expect_below = 1.0 - (-m_small * m_small / (2.0f64).powf(n as f64)).exp();
        assert!(above.success >= 0.95, "above-threshold success {}", above.success);
        assert!(below.success <= 0.05, "below-threshold success {}", below.success);
        assert!((below.success - expect_below).abs() < 0.04, "{} vs oracle {}", below.success, expect_below);
    }

    #[test]
    fn stated_scale_exceeds_the_search_budget() {
        // the same experiment at n = 400 requires 2^{n·ΣR} candidates and
        // is rejected by the budget check
        let base = dsbs_exact();
        let check = TypicalityCheck::new(base.clone(), 0.05, 400).unwrap();
        let cfg = CoveringConfig { rates: vec![0.65, 0.65], trials: 1, seed: 0 };
        match covering_trial(&base, &cfg, &check, 0) {
            Err(CoveringError::BudgetExceeded { log2_required, .. }) => {
                assert!((log2_required - 520.0).abs() < 1e-9);
            }
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    #[test]
    fn success_is_deterministic_and_monotone_in_codebook_size() {
        let base = dsbs_exact();
        let n = 12usize;
        let check = TypicalityCheck::new(base.clone(), 0.05, n).unwrap();
        let trials = 300usize;
        let mut prev = 0.0;
        for r in [0.25, 0.35, 0.45, 0.55] {
            let cfg = CoveringConfig { rates: vec![r, r], trials, seed: 5 };
            let s1 = covering_success(&base, &cfg, &check).unwrap();
            let s2 = covering_success(&base, &cfg, &check).unwrap();
            assert_eq!(s1, s2);
            assert!(s1 >= prev, "success not monotone: {s1} < {prev}");
            prev = s1;
        }
    }

    #[test]
    fn ldp_exponent_positive_and_nondecreasing() {
        let fair = Pmf::new(vec![2], vec![0.5, 0.5]).unwrap();
        assert!(ldp_exponent(&fair, &[0], 0.1, 5.0).unwrap() > 0.0);

        let p = Pmf::new(vec![2, 2], vec![0.3, 0.2, 0.1, 0.4]).unwrap();
        let mut prev = 0.0;
        for eps in [0.05, 0.1, 0.2, 0.4] {
            let i = ldp_combined(&p, eps, 5.0).unwrap();
            assert!(i > 0.0);
            assert!(i >= prev);
            prev = i;
        }
    }

    #[test]
    fn ldp_bound_holds_in_monte_carlo() {
        let p = Pmf::new(vec![2, 2], vec![0.3, 0.2, 0.1, 0.4]).unwrap();
        let n = 500usize;
        let eps = 0.1;
        let exponent = ldp_combined(&p, eps, 5.0).unwrap();
        let bound = 4.0 * (2.0f64).powf(-(n as f64) * exponent);
        let check = TypicalityCheck::new(p.clone(), eps, n).unwrap();
        let cdf = cumsum(p.mass());
        let trials = 2000usize;
        let mut atypical = 0usize;
        for trial in 0..trials as u64 {
            let mut rng = stream_rng(123, &[trial]);
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for _ in 0..n {
                let flat = draw_cdf(&cdf, &mut rng);
                a.push(flat / 2);
                b.push(flat % 2);
            }
            if !check.is_typical(&[&a, &b]) {
                atypical += 1;
            }
        }
        let rate = atypical as f64 / trials as f64;
        assert!(rate <= bound, "atypicality {rate} vs bound {bound}");
    }
}
