//! Bitmask helpers for subsets of `[k] = {0, .., k-1}`.
//!
//! Rate-region constraints, typicality checks and error-event bookkeeping
//! all range over subsets of encoder (or axis) index sets; masks keep that
//! cheap and hashable.

/// Mask with the lowest `k` bits set.
pub fn full_mask(k: usize) -> u32 {
    debug_assert!(k < 32);
    (1u32 << k) - 1
}

/// Indices contained in `mask`, ascending.
pub fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Mask for a slice of indices.
pub fn indices_to_mask(indices: &[usize]) -> u32 {
    indices.iter().fold(0u32, |m, &i| m | (1 << i))
}

/// All nonempty subsets of `[k]`.
pub fn nonempty_subsets(k: usize) -> impl Iterator<Item = u32> {
    1..=full_mask(k)
}

/// All subsets `s` with `lo ⊆ s ⊆ hi`, ascending in the free bits.
pub fn subsets_between(lo: u32, hi: u32) -> Vec<u32> {
    debug_assert_eq!(lo & !hi, 0);
    let free = hi & !lo;
    let mut out = Vec::new();
    // Standard submask walk over the free bits.
    let mut sub = free;
    loop {
        out.push(lo | sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
    out.sort_unstable();
    out
}

/// Human-readable `{i,j,..}` form using 1-based encoder labels.
pub fn mask_label(mask: u32) -> String {
    let inner: Vec<String> = mask_to_indices(mask).iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn between_walk_covers_lattice() {
        let subs = subsets_between(0b001, 0b111);
        assert_eq!(subs, vec![0b001, 0b011, 0b101, 0b111]);
        assert_eq!(subsets_between(0, 0), vec![0]);
    }

    #[test]
    fn mask_round_trip() {
        for mask in 0..32u32 {
            assert_eq!(indices_to_mask(&mask_to_indices(mask)), mask);
        }
        assert_eq!(mask_label(0b101), "{1,3}");
    }
}
