//! Desk-scale end-to-end simulation of the facilitator coding scheme:
//! message splitting, coordination-index selection by lexicographic
//! typicality search, channel transmission, joint-typicality decoding,
//! and seeded error-probability estimation with an error-class
//! histogram.
//!
//! Every codeword is regenerated from `(seed, role, indices)`, so the
//! encoder, the facilitator and the decoder share one codebook ensemble
//! and runs are bit-reproducible.

use crate::channel::DiscreteMac;
use crate::covering::{wilson_interval, CoveringError, TypicalityCheck};
use crate::info::InfoError;
use crate::region::{CfSplit, CoordinationDist, RegionError};
use crate::rng::stream_rng;
use crate::subsets::mask_to_indices;
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

/// Cap on the total number of stored codebook symbols.
pub const MEMORY_BUDGET_SYMBOLS: u64 = 1 << 26;
/// Cap on the coordination-index search per facilitator call.
pub const COORDINATION_BUDGET: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("codebooks need {required} stored symbols, budget is {budget}")]
    MemoryBudget { required: u64, budget: u64 },
    #[error("coordination search needs {required} candidates, budget is {budget}")]
    CoordinationBudget { required: u64, budget: u64 },
    #[error("alphabet of axis {axis} has {size} symbols, cap is 4")]
    AlphabetTooLarge { axis: usize, size: usize },
    #[error("blocklength {0} exceeds the cap of 64")]
    BlockTooLong(usize),
    #[error("need at least 100 trials, got {0}")]
    TooFewTrials(usize),
    #[error("rates must be nonnegative")]
    NegativeRate,
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// Everything needed to draw and run one simulated code.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub mac: DiscreteMac,
    pub dist: CoordinationDist,
    pub split: CfSplit,
    pub c_in: Vec<f64>,
    pub rates: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    /// Encoder typicality slack; the decoder uses twice this value.
    pub delta: f64,
}

/// Message split of one encoder: the forwarded part, the coordination
/// part, and the private part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserMessage {
    pub w0: usize,
    pub wd: usize,
    pub wjj: usize,
}

/// Per-encoder sub-rates and codebook cardinalities.
#[derive(Debug, Clone)]
pub struct RateSplit {
    pub r0: Vec<f64>,
    pub rd: Vec<f64>,
    pub rjj: Vec<f64>,
    pub w0_sizes: Vec<usize>,
    pub wd_sizes: Vec<usize>,
    pub wjj_sizes: Vec<usize>,
    pub z_sizes: Vec<usize>,
}

fn pow2_ceil(bits: f64) -> usize {
    (2.0f64).powf(bits).ceil().max(1.0) as usize
}

impl CodeSpec {
    /// Derive the message split `R_j = R_{j0} + R_{jd} + R_{jj}` with
    /// `R_{j0} = min(R_j, c0_j)`, `R_{jd} = min(R_j, C_in^j) − R_{j0}`
    /// and `R_{jj} = (R_j − C_in^j)^+`.
    pub fn rate_split(&self) -> Result<RateSplit, CodecError> {
        if self.rates.iter().any(|r| *r < 0.0) {
            return Err(CodecError::NegativeRate);
        }
        let k = self.mac.k();
        let n = self.n as f64;
        let mut out = RateSplit {
            r0: Vec::new(),
            rd: Vec::new(),
            rjj: Vec::new(),
            w0_sizes: Vec::new(),
            wd_sizes: Vec::new(),
            wjj_sizes: Vec::new(),
            z_sizes: Vec::new(),
        };
        for j in 0..k {
            let r = self.rates[j];
            let r0 = r.min(self.split.c0[j]);
            let rd = r.min(self.c_in[j]) - r0;
            let rjj = (r - self.c_in[j]).max(0.0);
            debug_assert!((r0 + rd + rjj - r).abs() < 1e-12);
            out.r0.push(r0);
            out.rd.push(rd);
            out.rjj.push(rjj);
            out.w0_sizes.push(pow2_ceil(n * r0));
            out.wd_sizes.push(pow2_ceil(n * rd));
            out.wjj_sizes.push(pow2_ceil(n * rjj));
            out.z_sizes.push(pow2_ceil(n * self.split.cd[j]));
        }
        Ok(out)
    }

    fn validate(&self) -> Result<RateSplit, CodecError> {
        for (axis, &size) in
            self.dist.pmf().axis_sizes().iter().chain(std::iter::once(&self.mac.output_size())).enumerate()
        {
            if size > 4 {
                return Err(CodecError::AlphabetTooLarge { axis, size });
            }
        }
        if self.n > 64 {
            return Err(CodecError::BlockTooLong(self.n));
        }
        let sizes = self.rate_split()?;
        let k = self.mac.k();
        let n = self.n as u64;
        let w0_total: u64 = sizes.w0_sizes.iter().map(|&s| s as u64).product();
        let mut required = w0_total * n;
        for j in 0..k {
            let u_book = w0_total * sizes.wd_sizes[j] as u64 * sizes.z_sizes[j] as u64;
            let x_book = u_book * sizes.wjj_sizes[j] as u64;
            required = required.saturating_add(u_book.saturating_mul(n));
            required = required.saturating_add(x_book.saturating_mul(n));
        }
        if required > MEMORY_BUDGET_SYMBOLS {
            return Err(CodecError::MemoryBudget { required, budget: MEMORY_BUDGET_SYMBOLS });
        }
        let z_product: u64 = sizes.z_sizes.iter().map(|&z| z as u64).product();
        if z_product > COORDINATION_BUDGET {
            return Err(CodecError::CoordinationBudget { required: z_product, budget: COORDINATION_BUDGET });
        }
        Ok(sizes)
    }
}

/// Conditional tables derived from the coordination distribution.
struct CondTables {
    u0_cdf: Vec<f64>,
    /// [j][u0] → cdf over U_j.
    u_cdf: Vec<Vec<Vec<f64>>>,
    /// [j][u0][u_j] → cdf over X_j.
    x_cdf: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CondTables {
    fn new(dist: &CoordinationDist) -> Result<Self, CodecError> {
        let k = dist.k();
        let pmf = dist.pmf();
        let u0_marg = pmf.marginal(&[0])?;
        let u0_cdf = cumsum(u0_marg.mass());
        let mut u_cdf = Vec::new();
        let mut x_cdf = Vec::new();
        for j in 0..k {
            let pair = pmf.marginal(&[0, dist.u_axis(j)])?;
            let triple = pmf.marginal(&[0, dist.u_axis(j), dist.x_axis(j)])?;
            let nu = pmf.axis_sizes()[dist.u_axis(j)];
            let nx = pmf.axis_sizes()[dist.x_axis(j)];
            let mut per_u0 = Vec::new();
            let mut per_u0_x = Vec::new();
            for u0 in 0..dist.u0_size() {
                let pu0 = u0_marg.mass()[u0];
                let row: Vec<f64> =
                    (0..nu).map(|u| if pu0 > 0.0 { pair.get(&[u0, u]) / pu0 } else { 1.0 / nu as f64 }).collect();
                per_u0.push(cumsum(&row));
                let mut per_u = Vec::new();
                for u in 0..nu {
                    let puu = pair.get(&[u0, u]);
                    let row: Vec<f64> = (0..nx)
                        .map(|x| if puu > 0.0 { triple.get(&[u0, u, x]) / puu } else { 1.0 / nx as f64 })
                        .collect();
                    per_u.push(cumsum(&row));
                }
                per_u0_x.push(per_u);
            }
            u_cdf.push(per_u0);
            x_cdf.push(per_u0_x);
        }
        Ok(Self { u0_cdf, u_cdf, x_cdf })
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

fn draw_cdf(cdf: &[f64], rng: &mut impl Rng) -> u8 {
    let u: f64 = rng.gen();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as u8
}

/// All drawn codebooks plus the facilitator's precomputed index choices.
pub struct Codebooks {
    spec: CodeSpec,
    sizes: RateSplit,
    /// [w0] → U_0 sequence.
    u0_book: Vec<Vec<u8>>,
    /// [j][w0][wd][z] → U_j sequence.
    u_books: Vec<Vec<Vec<Vec<Vec<u8>>>>>,
    /// [j][w0][wd][z][wjj] → X_j sequence.
    x_books: Vec<Vec<Vec<Vec<Vec<Vec<u8>>>>>>,
    /// [w0][flat wd tuple] → chosen coordination indices (None when no
    /// typical tuple existed and the all-zeros fallback applies).
    z_table: Vec<Vec<(Vec<usize>, bool)>>,
    enc_check: TypicalityCheck,
    dec_check: TypicalityCheck,
    w0_total: usize,
    wd_total: usize,
}

/// Draw every codebook of the code; deterministic in the seed.
pub fn build_code(spec: &CodeSpec) -> Result<Codebooks, CodecError> {
    let sizes = spec.validate()?;
    let k = spec.mac.k();
    let n = spec.n;
    let tables = CondTables::new(&spec.dist)?;
    let w0_total: usize = sizes.w0_sizes.iter().product();
    let wd_total: usize = sizes.wd_sizes.iter().product();

    let u0_book: Vec<Vec<u8>> = (0..w0_total)
        .map(|w0| {
            let mut rng = stream_rng(spec.seed, &[1, w0 as u64]);
            (0..n).map(|_| draw_cdf(&tables.u0_cdf, &mut rng)).collect()
        })
        .collect();

    let mut u_books = Vec::with_capacity(k);
    let mut x_books = Vec::with_capacity(k);
    for j in 0..k {
        let mut per_w0 = Vec::with_capacity(w0_total);
        let mut per_w0_x = Vec::with_capacity(w0_total);
        for (w0, u0_seq) in u0_book.iter().enumerate() {
            let mut per_wd = Vec::with_capacity(sizes.wd_sizes[j]);
            let mut per_wd_x = Vec::with_capacity(sizes.wd_sizes[j]);
            for wd in 0..sizes.wd_sizes[j] {
                let mut per_z = Vec::with_capacity(sizes.z_sizes[j]);
                let mut per_z_x = Vec::with_capacity(sizes.z_sizes[j]);
                for z in 0..sizes.z_sizes[j] {
                    let mut rng = stream_rng(spec.seed, &[2, j as u64, w0 as u64, wd as u64, z as u64]);
                    let u_seq: Vec<u8> =
                        u0_seq.iter().map(|&u0| draw_cdf(&tables.u_cdf[j][u0 as usize], &mut rng)).collect();
                    let mut per_wjj = Vec::with_capacity(sizes.wjj_sizes[j]);
                    for wjj in 0..sizes.wjj_sizes[j] {
                        let mut rng = stream_rng(
                            spec.seed,
                            &[3, j as u64, w0 as u64, wd as u64, z as u64, wjj as u64],
                        );
                        let x_seq: Vec<u8> = u0_seq
                            .iter()
                            .zip(&u_seq)
                            .map(|(&u0, &u)| draw_cdf(&tables.x_cdf[j][u0 as usize][u as usize], &mut rng))
                            .collect();
                        per_wjj.push(x_seq);
                    }
                    per_z.push(u_seq);
                    per_z_x.push(per_wjj);
                }
                per_wd.push(per_z);
                per_wd_x.push(per_z_x);
            }
            per_w0.push(per_wd);
            per_w0_x.push(per_wd_x);
        }
        u_books.push(per_w0);
        x_books.push(per_w0_x);
    }

    // typicality checkers: encoder over (U_0, U_[k]), decoder over the
    // full tuple with doubled slack
    let u_axes: Vec<usize> = (0..=k).collect();
    let enc_base = spec.dist.pmf().marginal(&u_axes)?;
    let enc_check = TypicalityCheck::new(enc_base, spec.delta, n)?;
    let dec_base = spec.dist.joint_with_output(&spec.mac)?;
    let dec_check = TypicalityCheck::new(dec_base, 2.0 * spec.delta, n)?;

    // facilitator choices depend only on the codebooks
    let mut z_table = Vec::with_capacity(w0_total);
    for w0 in 0..w0_total {
        let mut per_wd = Vec::with_capacity(wd_total);
        for wd_flat in 0..wd_total {
            let wd = unflatten(wd_flat, &sizes.wd_sizes);
            let maps: Vec<&Vec<Vec<u8>>> = (0..k).map(|j| &u_books[j][w0][wd[j]]).collect();
            per_wd.push(cf_coordinate(&u0_book[w0], &maps, &enc_check));
        }
        z_table.push(per_wd);
    }

    Ok(Codebooks {
        spec: spec.clone(),
        sizes,
        u0_book,
        u_books,
        x_books,
        z_table,
        enc_check,
        dec_check,
        w0_total,
        wd_total,
    })
}

fn unflatten(mut flat: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; sizes.len()];
    for j in (0..sizes.len()).rev() {
        out[j] = flat % sizes[j];
        flat /= sizes[j];
    }
    out
}

fn flatten(parts: &[usize], sizes: &[usize]) -> usize {
    parts.iter().zip(sizes).fold(0usize, |acc, (&p, &s)| acc * s + p)
}

/// Lexicographically smallest coordination index tuple whose selected
/// codewords are jointly typical with the shared sequence; all-zeros with
/// `false` when no tuple qualifies.
pub fn cf_coordinate(
    u0_seq: &[u8],
    mu_maps: &[&Vec<Vec<u8>>],
    check: &TypicalityCheck,
) -> (Vec<usize>, bool) {
    let k = mu_maps.len();
    let mut seqs: Vec<&[u8]> = vec![&[]; k + 1];
    seqs[0] = u0_seq;
    // cores become checkable once their deepest codebook axis is chosen
    let core_masks = check.core_masks();
    let depth_of = |mask: u32| -> usize { mask_to_indices(mask).into_iter().filter(|&a| a > 0).max().unwrap_or(0) };
    if core_masks
        .iter()
        .enumerate()
        .any(|(ix, &m)| depth_of(m) == 0 && !check.core_typical_by_index(ix, &seqs))
    {
        return (vec![0; k], false);
    }

    fn dfs<'a>(
        depth: usize,
        k: usize,
        mu_maps: &[&'a Vec<Vec<u8>>],
        seqs: &mut Vec<&'a [u8]>,
        check: &TypicalityCheck,
        core_masks: &[u32],
        choice: &mut Vec<usize>,
    ) -> bool {
        if depth > k {
            return true;
        }
        for z in 0..mu_maps[depth - 1].len() {
            seqs[depth] = &mu_maps[depth - 1][z];
            let ok = core_masks.iter().enumerate().all(|(ix, &m)| {
                let deepest = mask_to_indices(m).into_iter().filter(|&a| a > 0).max().unwrap_or(0);
                deepest != depth || check.core_typical_by_index(ix, seqs)
            });
            if ok && dfs(depth + 1, k, mu_maps, seqs, check, core_masks, choice) {
                choice[depth - 1] = z;
                return true;
            }
        }
        false
    }

    let mut choice = vec![0usize; k];
    let found = dfs(1, k, mu_maps, &mut seqs, check, &core_masks, &mut choice);
    (choice, found)
}

/// Decoded messages for every encoder, or the all-zeros fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub messages: Vec<UserMessage>,
    /// False when zero or several tuples passed the typicality test.
    pub unique: bool,
}

impl Codebooks {
    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn sizes(&self) -> &RateSplit {
        &self.sizes
    }

    /// Typicality checker the facilitator uses over `(U_0, U_[k])`.
    pub fn enc_check(&self) -> &TypicalityCheck {
        &self.enc_check
    }

    /// Typicality checker the decoder uses over the full tuple.
    pub fn dec_check(&self) -> &TypicalityCheck {
        &self.dec_check
    }

    pub fn u0_sequence(&self, w0_flat: usize) -> &[u8] {
        &self.u0_book[w0_flat]
    }

    pub fn coordination_choice(&self, w0_flat: usize, wd: &[usize]) -> &(Vec<usize>, bool) {
        &self.z_table[w0_flat][flatten(wd, &self.sizes.wd_sizes)]
    }

    fn realized<'a>(&'a self, w0_flat: usize, msgs: &[UserMessage]) -> (Vec<&'a [u8]>, bool) {
        let k = self.spec.mac.k();
        let wd: Vec<usize> = msgs.iter().map(|m| m.wd).collect();
        let (z, found) = self.coordination_choice(w0_flat, &wd).clone();
        let mut seqs: Vec<&[u8]> = Vec::with_capacity(2 * k + 1);
        seqs.push(&self.u0_book[w0_flat]);
        for j in 0..k {
            seqs.push(&self.u_books[j][w0_flat][msgs[j].wd][z[j]]);
        }
        for j in 0..k {
            seqs.push(&self.x_books[j][w0_flat][msgs[j].wd][z[j]][msgs[j].wjj]);
        }
        (seqs, found)
    }

    /// Joint-typicality decoding with the shared codebooks: returns the
    /// unique consistent message tuple or the all-zeros fallback.
    pub fn decode(&self, y: &[u8]) -> Decoded {
        let k = self.spec.mac.k();
        let y_axis = 2 * k + 1;
        let fallback = Decoded {
            messages: vec![UserMessage { w0: 0, wd: 0, wjj: 0 }; k],
            unique: false,
        };
        let mut found: Option<Vec<UserMessage>> = None;

        // single-user cores (plus context/output cores) drive a per-user
        // prefilter; cross-user cores are checked on the survivor product
        let core_masks = self.dec_check.core_masks();
        let user_of_axis = |axis: usize| -> Option<usize> {
            if axis == 0 || axis == y_axis {
                None
            } else if axis <= k {
                Some(axis - 1)
            } else {
                Some(axis - 1 - k)
            }
        };
        let core_users: Vec<Vec<usize>> = core_masks
            .iter()
            .map(|&m| {
                let mut users: Vec<usize> =
                    mask_to_indices(m).into_iter().filter_map(user_of_axis).collect();
                users.sort_unstable();
                users.dedup();
                users
            })
            .collect();

        for w0_flat in 0..self.w0_total {
            for wd_flat in 0..self.wd_total {
                let wd = unflatten(wd_flat, &self.sizes.wd_sizes);
                let (z, _) = &self.z_table[w0_flat][wd_flat];
                let mut seqs: Vec<&[u8]> = vec![&[]; 2 * k + 2];
                seqs[0] = &self.u0_book[w0_flat];
                seqs[y_axis] = y;
                for j in 0..k {
                    seqs[1 + j] = &self.u_books[j][w0_flat][wd[j]][z[j]];
                }
                // context-level cores (no user axes) gate this hypothesis
                let ctx_ok = core_masks
                    .iter()
                    .enumerate()
                    .filter(|(ix, _)| core_users[*ix].is_empty())
                    .all(|(ix, _)| self.dec_check.core_typical_by_index(ix, &seqs));
                if !ctx_ok {
                    continue;
                }

                let mut survivors: Vec<Vec<usize>> = Vec::with_capacity(k);
                let mut empty = false;
                for j in 0..k {
                    let mut list = Vec::new();
                    for wjj in 0..self.sizes.wjj_sizes[j] {
                        seqs[1 + k + j] = &self.x_books[j][w0_flat][wd[j]][z[j]][wjj];
                        let ok = core_masks
                            .iter()
                            .enumerate()
                            .filter(|(ix, _)| core_users[*ix].as_slice() == [j])
                            .all(|(ix, _)| self.dec_check.core_typical_by_index(ix, &seqs));
                        if ok {
                            list.push(wjj);
                        }
                    }
                    seqs[1 + k + j] = &[];
                    if list.is_empty() {
                        empty = true;
                        break;
                    }
                    survivors.push(list);
                }
                if empty {
                    continue;
                }

                // exhaustive product over per-user survivors
                let mut cursor = vec![0usize; k];
                'product: loop {
                    for j in 0..k {
                        let wjj = survivors[j][cursor[j]];
                        seqs[1 + k + j] = &self.x_books[j][w0_flat][wd[j]][z[j]][wjj];
                    }
                    let ok = core_masks
                        .iter()
                        .enumerate()
                        .filter(|(ix, _)| core_users[*ix].len() > 1)
                        .all(|(ix, _)| self.dec_check.core_typical_by_index(ix, &seqs));
                    if ok {
                        let w0_parts = unflatten(w0_flat, &self.sizes.w0_sizes);
                        let candidate: Vec<UserMessage> = (0..k)
                            .map(|j| UserMessage {
                                w0: w0_parts[j],
                                wd: wd[j],
                                wjj: survivors[j][cursor[j]],
                            })
                            .collect();
                        match &found {
                            None => found = Some(candidate),
                            Some(existing) if *existing != candidate => return fallback,
                            _ => {}
                        }
                    }
                    // advance the mixed-radix cursor
                    let mut d = k;
                    loop {
                        if d == 0 {
                            break 'product;
                        }
                        d -= 1;
                        cursor[d] += 1;
                        if cursor[d] < survivors[d].len() {
                            break;
                        }
                        cursor[d] = 0;
                    }
                }
            }
        }
        match found {
            Some(messages) => Decoded { messages, unique: true },
            None => fallback,
        }
    }
}

/// Why a trial failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureClass {
    /// A transmitted codeword violated its cost budget.
    Cost,
    /// The facilitator found no jointly typical coordination index.
    EncoderTypicality,
    /// The transmitted tuple failed the decoder's typicality test.
    DecodeTypicality,
    /// Another tuple decoded; masks of encoders with wrong coordination
    /// and private parts (the all-zero pair means a wrong common part).
    WrongMessage { s_mask: u32, t_mask: u32 },
}

impl std::fmt::Display for FailureClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureClass::Cost => write!(f, "cost"),
            FailureClass::EncoderTypicality => write!(f, "enc_typ"),
            FailureClass::DecodeTypicality => write!(f, "dec_typ"),
            FailureClass::WrongMessage { s_mask, t_mask } => write!(f, "wrong(S={s_mask:#x},T={t_mask:#x})"),
        }
    }
}

/// Outcome of one simulated transmission.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub sent: Vec<UserMessage>,
    pub decoded: Vec<UserMessage>,
    pub error: bool,
    pub class: Option<FailureClass>,
}

/// Run one trial with fresh uniform messages.
pub fn run_trial(books: &Codebooks, trial: u64) -> Result<TrialResult, CodecError> {
    let spec = books.spec();
    let k = spec.mac.k();
    let sizes = books.sizes();
    let mut msg_rng = stream_rng(spec.seed, &[10, trial]);
    let sent: Vec<UserMessage> = (0..k)
        .map(|j| UserMessage {
            w0: msg_rng.gen_range(0..sizes.w0_sizes[j]),
            wd: msg_rng.gen_range(0..sizes.wd_sizes[j]),
            wjj: msg_rng.gen_range(0..sizes.wjj_sizes[j]),
        })
        .collect();
    let w0_flat = flatten(&sent.iter().map(|m| m.w0).collect::<Vec<_>>(), &sizes.w0_sizes);
    let (seqs, coordination_found) = books.realized(w0_flat, &sent);

    // per-block cost check on the realized codewords
    let mut cost_violated = false;
    if let Some(costs) = spec.mac.costs() {
        for (j, spec_j) in costs.iter().enumerate() {
            let x_seq = seqs[1 + k + j];
            let total: f64 = x_seq.iter().map(|&x| spec_j.table[x as usize]).sum();
            if total > spec.n as f64 * spec_j.budget + 1e-9 {
                cost_violated = true;
            }
        }
    }

    // transmit
    let mut noise_rng = stream_rng(spec.seed, &[11, trial]);
    let mut y = Vec::with_capacity(spec.n);
    let mut x_t = vec![0usize; k];
    for t in 0..spec.n {
        for j in 0..k {
            x_t[j] = seqs[1 + k + j][t] as usize;
        }
        y.push(spec.mac.sample_output(&x_t, &mut noise_rng)? as u8);
    }

    let decoded = books.decode(&y);
    let error = cost_violated || decoded.messages != sent;
    let class = if !error {
        None
    } else if cost_violated {
        Some(FailureClass::Cost)
    } else if !coordination_found {
        Some(FailureClass::EncoderTypicality)
    } else {
        // does the transmitted tuple pass the decoder's check?
        let mut full: Vec<&[u8]> = seqs.clone();
        full.push(&y);
        if !books.dec_check.is_typical(&full) {
            Some(FailureClass::DecodeTypicality)
        } else {
            let mut s_mask = 0u32;
            let mut t_mask = 0u32;
            for j in 0..k {
                if decoded.messages[j].wd != sent[j].wd {
                    s_mask |= 1 << j;
                }
                if decoded.messages[j].wjj != sent[j].wjj {
                    t_mask |= 1 << j;
                }
            }
            Some(FailureClass::WrongMessage { s_mask, t_mask })
        }
    };
    Ok(TrialResult { sent, decoded: decoded.messages, error, class })
}

/// Estimated error probability with a Wilson interval and the failure
/// class histogram (fractions sum to the estimate exactly).
#[derive(Debug, Clone)]
pub struct ErrorEstimate {
    pub trials: usize,
    pub errors: usize,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub histogram: BTreeMap<FailureClass, usize>,
}

/// Monte Carlo error estimation over fresh uniform messages.
pub fn estimate_error(spec: &CodeSpec, trials: usize) -> Result<ErrorEstimate, CodecError> {
    if trials < 100 {
        return Err(CodecError::TooFewTrials(trials));
    }
    let books = build_code(spec)?;
    let results: Vec<Option<FailureClass>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(&books, t).map(|r| r.class))
        .collect::<Result<_, _>>()?;
    let mut histogram = BTreeMap::new();
    let mut errors = 0usize;
    for class in results.into_iter().flatten() {
        errors += 1;
        *histogram.entry(class).or_insert(0) += 1;
    }
    let p_hat = errors as f64 / trials as f64;
    let (wilson_lo, wilson_hi) = wilson_interval(errors, trials);
    Ok(ErrorEstimate { trials, errors, p_hat, wilson_lo, wilson_hi, histogram })
}
