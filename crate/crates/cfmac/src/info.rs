//! Exact information measures over finite joint pmfs.
//!
//! Everything is computed in bits. Conditional quantities are evaluated as
//! entropy differences rather than per-condition loops, so permutation
//! symmetry holds to roundoff. `0·log 0 = 0`; a positive mass against a
//! zero reference mass is a support violation and is reported loudly
//! rather than mapped to `+inf`.

use crate::channel::DiscreteMac;
use crate::scalar::Scalar;
use crate::subsets::indices_to_mask;
use crate::{Pmf, TOL_CONSTRUCT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("mass vector has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("mass sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("negative mass {value} at flat index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("axis set is empty")]
    EmptyAxes,
    #[error("axis {axis} out of range for {dims} dimensions")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("axis sets overlap on axis {axis}")]
    OverlappingAxes { axis: usize },
    #[error("support violation at index {index:?}: p={p}, q=0")]
    SupportViolation { index: Vec<usize>, p: f64 },
    #[error("pmf shapes differ: {0:?} vs {1:?}")]
    IncompatibleShapes(Vec<usize>, Vec<usize>),
}

/// Probability mass function over a product of finite alphabets, stored as
/// a flat row-major tensor (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<F> {
    axis_sizes: Vec<usize>,
    mass: Vec<F>,
    axis_labels: Option<Vec<String>>,
}

impl<F: Scalar> JointPmf<F> {
    pub fn new(axis_sizes: Vec<usize>, mass: Vec<F>) -> Result<Self, InfoError> {
        let expected: usize = axis_sizes.iter().product();
        if mass.len() != expected {
            return Err(InfoError::ShapeMismatch { expected, got: mass.len() });
        }
        for (i, &m) in mass.iter().enumerate() {
            if m < F::zero() {
                return Err(InfoError::NegativeMass { index: i, value: m.to_f64().unwrap_or(f64::NAN) });
            }
        }
        let sum: F = mass.iter().copied().sum();
        let dev = (sum - F::one()).abs().to_f64().unwrap_or(f64::NAN);
        if !(dev <= TOL_CONSTRUCT) {
            return Err(InfoError::NotNormalized { sum: sum.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { axis_sizes, mass, axis_labels: None })
    }

    /// Construct without the normalization check, renormalizing instead.
    /// Used by samplers that build a pmf from nonnegative weights.
    pub fn from_weights(axis_sizes: Vec<usize>, weights: Vec<F>) -> Result<Self, InfoError> {
        let expected: usize = axis_sizes.iter().product();
        if weights.len() != expected {
            return Err(InfoError::ShapeMismatch { expected, got: weights.len() });
        }
        let sum: F = weights.iter().copied().sum();
        if sum <= F::zero() {
            return Err(InfoError::NotNormalized { sum: sum.to_f64().unwrap_or(0.0) });
        }
        let mass: Vec<F> = weights.into_iter().map(|w| w / sum).collect();
        for (i, &m) in mass.iter().enumerate() {
            if m < F::zero() {
                return Err(InfoError::NegativeMass { index: i, value: m.to_f64().unwrap_or(f64::NAN) });
            }
        }
        Ok(Self { axis_sizes, mass, axis_labels: None })
    }

    pub fn uniform(axis_sizes: Vec<usize>) -> Self {
        let n: usize = axis_sizes.iter().product();
        let w = F::one() / F::from_usize(n).unwrap();
        Self { axis_sizes, mass: vec![w; n], axis_labels: None }
    }

    /// Point mass at the given multi-index.
    pub fn point_mass(axis_sizes: Vec<usize>, at: &[usize]) -> Self {
        let n: usize = axis_sizes.iter().product();
        let mut mass = vec![F::zero(); n];
        let strides = strides_of(&axis_sizes);
        let flat: usize = at.iter().zip(&strides).map(|(&c, &s)| c * s).sum();
        mass[flat] = F::one();
        Self { axis_sizes, mass, axis_labels: None }
    }

    /// Independent product of one-axis marginals.
    pub fn product_of(factors: &[JointPmf<F>]) -> Self {
        let axis_sizes: Vec<usize> = factors.iter().flat_map(|f| f.axis_sizes.iter().copied()).collect();
        let n: usize = axis_sizes.iter().product();
        let strides = strides_of(&axis_sizes);
        let mut mass = vec![F::one(); n];
        let mut offset = 0usize;
        for f in factors {
            for (flat, m) in mass.iter_mut().enumerate() {
                let mut local = 0usize;
                for (d, &sz) in f.axis_sizes.iter().enumerate() {
                    let coord = flat / strides[offset + d] % sz;
                    local = local * sz + coord;
                }
                *m = *m * f.mass[local];
            }
            offset += f.axis_sizes.len();
        }
        Self { axis_sizes, mass, axis_labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.axis_sizes.len());
        self.axis_labels = Some(labels);
        self
    }

    pub fn axis_sizes(&self) -> &[usize] {
        &self.axis_sizes
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.axis_labels.as_deref()
    }

    pub fn dims(&self) -> usize {
        self.axis_sizes.len()
    }

    pub fn mass(&self) -> &[F] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.axis_sizes)
    }

    pub fn get(&self, index: &[usize]) -> F {
        let strides = strides_of(&self.axis_sizes);
        let flat: usize = index.iter().zip(&strides).map(|(&c, &s)| c * s).sum();
        self.mass[flat]
    }

    pub fn flat_to_index(&self, flat: usize) -> Vec<usize> {
        let strides = strides_of(&self.axis_sizes);
        self.axis_sizes.iter().zip(&strides).map(|(&sz, &st)| flat / st % sz).collect()
    }

    fn check_axes(&self, axes: &[usize]) -> Result<(), InfoError> {
        for &a in axes {
            if a >= self.dims() {
                return Err(InfoError::AxisOutOfRange { axis: a, dims: self.dims() });
            }
        }
        Ok(())
    }

    /// Marginal over the given axis set (deduplicated, ascending order).
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf<F>, InfoError> {
        self.check_axes(axes)?;
        let mask = indices_to_mask(axes);
        let keep: Vec<usize> = (0..self.dims()).filter(|i| mask & (1 << i) != 0).collect();
        let out_sizes: Vec<usize> = keep.iter().map(|&i| self.axis_sizes[i]).collect();
        let out_strides = strides_of(&out_sizes);
        let in_strides = strides_of(&self.axis_sizes);
        // flat index of the marginal as a linear function of source coords
        let mut proj = vec![0usize; self.dims()];
        for (o, &i) in keep.iter().enumerate() {
            proj[i] = out_strides[o];
        }
        let mut mass = vec![F::zero(); out_sizes.iter().product()];
        for (flat, &m) in self.mass.iter().enumerate() {
            let mut target = 0usize;
            for (d, &st) in in_strides.iter().enumerate() {
                let coord = flat / st % self.axis_sizes[d];
                target += coord * proj[d];
            }
            mass[target] = mass[target] + m;
        }
        Ok(JointPmf { axis_sizes: out_sizes, mass, axis_labels: None })
    }

    /// Reorder axes; measures on correspondingly permuted arguments agree.
    pub fn permute_axes(&self, perm: &[usize]) -> JointPmf<F> {
        assert_eq!(perm.len(), self.dims());
        let out_sizes: Vec<usize> = perm.iter().map(|&p| self.axis_sizes[p]).collect();
        let out_strides = strides_of(&out_sizes);
        let in_strides = strides_of(&self.axis_sizes);
        let mut mass = vec![F::zero(); self.mass.len()];
        for (flat, &m) in self.mass.iter().enumerate() {
            let mut target = 0usize;
            for (o, &p) in perm.iter().enumerate() {
                let coord = flat / in_strides[p] % self.axis_sizes[p];
                target += coord * out_strides[o];
            }
            mass[target] = m;
        }
        JointPmf { axis_sizes: out_sizes, mass, axis_labels: None }
    }

    /// Max-norm distance to another pmf of the same shape.
    pub fn linf_distance(&self, other: &JointPmf<F>) -> Result<F, InfoError> {
        if self.axis_sizes != other.axis_sizes {
            return Err(InfoError::IncompatibleShapes(self.axis_sizes.clone(), other.axis_sizes.clone()));
        }
        Ok(self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(&a, &b)| (a - b).abs())
            .fold(F::zero(), |acc, d| if d > acc { d } else { acc }))
    }
}

pub(crate) fn strides_of(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    strides
}

fn dedup_sorted(axes: &[usize]) -> Vec<usize> {
    let mut v = axes.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Shannon entropy of the marginal on `axes`, in bits.
pub fn entropy<F: Scalar>(p: &JointPmf<F>, axes: &[usize]) -> Result<F, InfoError> {
    if axes.is_empty() {
        return Err(InfoError::EmptyAxes);
    }
    let marg = p.marginal(&dedup_sorted(axes))?;
    let mut h = F::zero();
    for &m in marg.mass() {
        if m > F::zero() {
            h = h - m * m.log2();
        }
    }
    Ok(h)
}

/// H(axes | cond) as an entropy difference; `cond` may be empty.
pub fn conditional_entropy<F: Scalar>(p: &JointPmf<F>, axes: &[usize], cond: &[usize]) -> Result<F, InfoError> {
    if axes.is_empty() {
        return Err(InfoError::EmptyAxes);
    }
    for &a in axes {
        if cond.contains(&a) {
            return Err(InfoError::OverlappingAxes { axis: a });
        }
    }
    let joint: Vec<usize> = axes.iter().chain(cond.iter()).copied().collect();
    if cond.is_empty() {
        entropy(p, &joint)
    } else {
        Ok(entropy(p, &joint)? - entropy(p, cond)?)
    }
}

/// I(A; B | C) in bits, clamped at zero.
pub fn mutual_information<F: Scalar>(
    p: &JointPmf<F>,
    axes_a: &[usize],
    axes_b: &[usize],
    axes_cond: &[usize],
) -> Result<F, InfoError> {
    if axes_a.is_empty() || axes_b.is_empty() {
        return Err(InfoError::EmptyAxes);
    }
    for &a in axes_a {
        if axes_b.contains(&a) || axes_cond.contains(&a) {
            return Err(InfoError::OverlappingAxes { axis: a });
        }
    }
    for &b in axes_b {
        if axes_cond.contains(&b) {
            return Err(InfoError::OverlappingAxes { axis: b });
        }
    }
    let ab: Vec<usize> = axes_a.iter().chain(axes_b.iter()).copied().collect();
    let mi = conditional_entropy(p, axes_a, axes_cond)? + conditional_entropy(p, axes_b, axes_cond)?
        - conditional_entropy(p, &ab, axes_cond)?;
    Ok(if mi < F::zero() { F::zero() } else { mi })
}

/// Kullback-Leibler divergence D(p || q) in bits.
///
/// Requires support(p) ⊆ support(q); the first offending cell is reported.
pub fn kl_divergence<F: Scalar>(p: &JointPmf<F>, q: &JointPmf<F>) -> Result<F, InfoError> {
    if p.axis_sizes() != q.axis_sizes() {
        return Err(InfoError::IncompatibleShapes(p.axis_sizes().to_vec(), q.axis_sizes().to_vec()));
    }
    let mut d = F::zero();
    for (flat, (&pm, &qm)) in p.mass().iter().zip(q.mass()).enumerate() {
        if pm > F::zero() {
            if qm <= F::zero() {
                return Err(InfoError::SupportViolation {
                    index: p.flat_to_index(flat),
                    p: pm.to_f64().unwrap_or(f64::NAN),
                });
            }
            d = d + pm * (pm / qm).log2();
        }
    }
    Ok(d)
}

/// Total correlation of `axes` given `cond`:
/// `Σ_j H(axis_j | cond) − H(axes | cond)`.
pub fn total_correlation<F: Scalar>(p: &JointPmf<F>, axes: &[usize], cond: &[usize]) -> Result<F, InfoError> {
    if axes.is_empty() {
        return Err(InfoError::EmptyAxes);
    }
    for &a in axes {
        if cond.contains(&a) {
            return Err(InfoError::OverlappingAxes { axis: a });
        }
    }
    let mut tc = F::zero();
    for &a in axes {
        tc = tc + conditional_entropy(p, &[a], cond)?;
    }
    Ok(tc - conditional_entropy(p, axes, cond)?)
}

/// Output distribution p(y) = Σ_x p(x) p(y|x).
pub fn output_pmf(mac: &DiscreteMac, input: &Pmf) -> Result<Pmf, InfoError> {
    if input.axis_sizes() != mac.input_sizes() {
        return Err(InfoError::IncompatibleShapes(input.axis_sizes().to_vec(), mac.input_sizes().to_vec()));
    }
    let ny = mac.output_size();
    let mut mass = vec![0.0f64; ny];
    for (row, &px) in input.mass().iter().enumerate() {
        if px > 0.0 {
            let row_probs = mac.row_by_flat(row);
            for (y, &t) in row_probs.iter().enumerate() {
                mass[y] += px * t;
            }
        }
    }
    // Row sums are 1 up to construction tolerance, so this renormalization
    // only scrubs accumulated roundoff.
    Pmf::from_weights(vec![ny], mass)
}

/// Joint input-output pmf over (X_1, .., X_k, Y); the X-marginal equals
/// the input exactly.
pub fn joint_input_output(mac: &DiscreteMac, input: &Pmf) -> Result<Pmf, InfoError> {
    if input.axis_sizes() != mac.input_sizes() {
        return Err(InfoError::IncompatibleShapes(input.axis_sizes().to_vec(), mac.input_sizes().to_vec()));
    }
    let ny = mac.output_size();
    let mut sizes = input.axis_sizes().to_vec();
    sizes.push(ny);
    let mut mass = vec![0.0f64; input.len() * ny];
    for (row, &px) in input.mass().iter().enumerate() {
        let row_probs = mac.row_by_flat(row);
        for (y, &t) in row_probs.iter().enumerate() {
            mass[row * ny + y] = px * t;
        }
    }
    Pmf::from_weights(sizes, mass)
}
