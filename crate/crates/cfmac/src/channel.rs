//! Memoryless multiple-access channels: discrete transition tensors with
//! optional per-encoder cost tables, and the additive Gaussian family.
//!
//! Discrete channels store the transition tensor flat, row-major, indexed
//! `(x_1, .., x_k, y)`. Gaussian channels are never tabulated; all
//! Gaussian quantities go through closed forms elsewhere.

use crate::TOL_CONSTRUCT;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("row {row} sums to {sum}, not 1")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("transition entry {value} at flat index {index} is negative")]
    NegativeEntry { index: usize, value: f64 },
    #[error("transition entry {value} at flat index {index} exceeds 1")]
    EntryAboveOne { index: usize, value: f64 },
    #[error("transition tensor has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("need at least one encoder and nonempty alphabets")]
    EmptyAlphabet,
    #[error("declared k={declared} but input_sizes has {got} entries")]
    KMismatch { declared: usize, got: usize },
    #[error("input symbol {symbol} out of range for encoder {encoder} (size {size})")]
    InputOutOfRange { encoder: usize, symbol: usize, size: usize },
    #[error("cost table for encoder {encoder} has length {got}, expected {expected}")]
    CostTableShape { encoder: usize, expected: usize, got: usize },
    #[error("cost table for encoder {encoder} has negative entry {value}")]
    NegativeCost { encoder: usize, value: f64 },
    #[error("expected {expected} cost tables, got {got}")]
    CostCount { expected: usize, got: usize },
    #[error("gaussian noise variance must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("gaussian power constraint {value} for encoder {encoder} is negative")]
    NegativePower { encoder: usize, value: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("channel file does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
}

/// Per-encoder cost function as a symbol table plus a budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub table: Vec<f64>,
    pub budget: f64,
}

/// Finite-alphabet memoryless MAC as a transition tensor p(y | x_1..x_k).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMac {
    input_sizes: Vec<usize>,
    output_size: usize,
    transition: Vec<f64>,
    costs: Option<Vec<CostSpec>>,
}

impl DiscreteMac {
    pub fn new(input_sizes: Vec<usize>, output_size: usize, transition: Vec<f64>) -> Result<Self, ChannelError> {
        let mac = Self { input_sizes, output_size, transition, costs: None };
        mac.validate()?;
        Ok(mac)
    }

    pub fn with_costs(mut self, costs: Vec<CostSpec>) -> Result<Self, ChannelError> {
        self.costs = Some(costs);
        self.validate()?;
        Ok(self)
    }

    /// Deterministic adder channel Y = X1 + X2 over binary inputs.
    pub fn binary_erasure() -> Self {
        let mut transition = vec![0.0; 4 * 3];
        for x1 in 0..2usize {
            for x2 in 0..2usize {
                transition[(x1 * 2 + x2) * 3 + x1 + x2] = 1.0;
            }
        }
        Self { input_sizes: vec![2, 2], output_size: 3, transition, costs: None }
    }

    /// Build p(y | x) from a closure over multi-indexed inputs.
    pub fn from_fn(
        input_sizes: Vec<usize>,
        output_size: usize,
        f: impl Fn(&[usize], usize) -> f64,
    ) -> Result<Self, ChannelError> {
        let rows: usize = input_sizes.iter().product();
        let mut transition = vec![0.0; rows * output_size];
        let strides = crate::info::strides_of(&input_sizes);
        for row in 0..rows {
            let x: Vec<usize> = input_sizes.iter().zip(&strides).map(|(&sz, &st)| row / st % sz).collect();
            for y in 0..output_size {
                transition[row * output_size + y] = f(&x, y);
            }
        }
        Self::new(input_sizes, output_size, transition)
    }

    pub fn k(&self) -> usize {
        self.input_sizes.len()
    }

    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn costs(&self) -> Option<&[CostSpec]> {
        self.costs.as_deref()
    }

    /// Checks shape, entry range, row stochasticity (±1e-12) and cost
    /// tables; reports the first violation found.
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.input_sizes.is_empty() || self.output_size == 0 || self.input_sizes.contains(&0) {
            return Err(ChannelError::EmptyAlphabet);
        }
        let rows: usize = self.input_sizes.iter().product();
        let expected = rows * self.output_size;
        if self.transition.len() != expected {
            return Err(ChannelError::ShapeMismatch { expected, got: self.transition.len() });
        }
        for (index, &value) in self.transition.iter().enumerate() {
            if value < 0.0 {
                return Err(ChannelError::NegativeEntry { index, value });
            }
            if value > 1.0 + TOL_CONSTRUCT {
                return Err(ChannelError::EntryAboveOne { index, value });
            }
        }
        for row in 0..rows {
            let sum: f64 = self.row_by_flat(row).iter().sum();
            if (sum - 1.0).abs() > TOL_CONSTRUCT {
                return Err(ChannelError::NonStochasticRow { row, sum });
            }
        }
        if let Some(costs) = &self.costs {
            if costs.len() != self.k() {
                return Err(ChannelError::CostCount { expected: self.k(), got: costs.len() });
            }
            for (encoder, spec) in costs.iter().enumerate() {
                if spec.table.len() != self.input_sizes[encoder] {
                    return Err(ChannelError::CostTableShape {
                        encoder,
                        expected: self.input_sizes[encoder],
                        got: spec.table.len(),
                    });
                }
                if let Some(&value) = spec.table.iter().find(|&&v| v < 0.0) {
                    return Err(ChannelError::NegativeCost { encoder, value });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn row_by_flat(&self, row: usize) -> &[f64] {
        &self.transition[row * self.output_size..(row + 1) * self.output_size]
    }

    pub fn flat_input(&self, x: &[usize]) -> Result<usize, ChannelError> {
        if x.len() != self.k() {
            return Err(ChannelError::KMismatch { declared: self.k(), got: x.len() });
        }
        let mut row = 0usize;
        for (j, (&sym, &size)) in x.iter().zip(&self.input_sizes).enumerate() {
            if sym >= size {
                return Err(ChannelError::InputOutOfRange { encoder: j, symbol: sym, size });
            }
            row = row * size + sym;
        }
        Ok(row)
    }

    /// Transition row p(· | x) for the given input tuple.
    pub fn row(&self, x: &[usize]) -> Result<&[f64], ChannelError> {
        Ok(self.row_by_flat(self.flat_input(x)?))
    }

    /// Draw one output symbol; deterministic given the rng state.
    pub fn sample_output(&self, x: &[usize], rng: &mut impl Rng) -> Result<usize, ChannelError> {
        let row = self.row(x)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (y, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(y);
            }
        }
        // Guard against roundoff in the cumulative sum.
        Ok(row.len() - 1)
    }

    /// Restrict a (k+1)-user channel by pinning the last encoder's symbol.
    pub fn restrict_last_input(&self, symbol: usize) -> Result<DiscreteMac, ChannelError> {
        let k = self.k();
        if k < 2 {
            return Err(ChannelError::EmptyAlphabet);
        }
        let last = self.input_sizes[k - 1];
        if symbol >= last {
            return Err(ChannelError::InputOutOfRange { encoder: k - 1, symbol, size: last });
        }
        let head_sizes = self.input_sizes[..k - 1].to_vec();
        let rows: usize = head_sizes.iter().product();
        let mut transition = Vec::with_capacity(rows * self.output_size);
        for row in 0..rows {
            let full_row = row * last + symbol;
            transition.extend_from_slice(self.row_by_flat(full_row));
        }
        DiscreteMac::new(head_sizes, self.output_size, transition)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ChannelError> {
        let file = ChannelFile {
            k: self.k(),
            input_sizes: self.input_sizes.clone(),
            output_size: self.output_size,
            transition: self.transition.clone(),
            costs: self.costs.clone(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        let file: ChannelFile = serde_json::from_str(text)?;
        if file.input_sizes.len() != file.k {
            return Err(ChannelError::KMismatch { declared: file.k, got: file.input_sizes.len() });
        }
        let mac = Self {
            input_sizes: file.input_sizes,
            output_size: file.output_size,
            transition: file.transition,
            costs: file.costs,
        };
        mac.validate()?;
        Ok(mac)
    }
}

/// On-disk JSON schema for discrete channels.
#[derive(Serialize, Deserialize)]
struct ChannelFile {
    k: usize,
    input_sizes: Vec<usize>,
    output_size: usize,
    transition: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    costs: Option<Vec<CostSpec>>,
}

/// Additive Gaussian MAC with noise variance N and per-encoder power
/// constraints (cost b_j(x) = x²). Used only through closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMac {
    noise_variance: f64,
    powers: Vec<f64>,
}

impl GaussianMac {
    pub fn new(noise_variance: f64, powers: Vec<f64>) -> Result<Self, ChannelError> {
        if noise_variance <= 0.0 {
            return Err(ChannelError::NonPositiveNoise(noise_variance));
        }
        for (encoder, &value) in powers.iter().enumerate() {
            if value < 0.0 {
                return Err(ChannelError::NegativePower { encoder, value });
            }
        }
        Ok(Self { noise_variance, powers })
    }

    pub fn k(&self) -> usize {
        self.powers.len()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Per-encoder SNRs γ_j = P_j / N.
    pub fn snrs(&self) -> Vec<f64> {
        self.powers.iter().map(|p| p / self.noise_variance).collect()
    }
}
