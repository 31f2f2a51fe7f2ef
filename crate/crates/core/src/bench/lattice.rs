/// All `(superset, subset)` pairs of non-empty masks over `base_count`
/// elements with `subset ⊊ superset`. Bit `i` of a mask selects element `i`.
pub fn enumerate_strict_subset_pairs(base_count: u32) -> Vec<(u32, u32)> {
    assert!(base_count <= 16, "lattice too large");
    let full = 1u32 << base_count;
    let mut out = Vec::new();
    for sup in 1..full {
        // walk the proper non-empty submasks of `sup`
        let mut sub = (sup - 1) & sup;
        while sub != 0 {
            out.push((sup, sub));
            sub = (sub - 1) & sup;
        }
    }
    out.sort_unstable();
    out
}

/// Element indices selected by `mask`, ascending.
pub fn mask_members(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Letters for a mask: bit 0 is `A`, bit 1 is `B`, ...
pub fn mask_label(mask: u32) -> String {
    mask_members(mask).into_iter().map(|i| (b'A' + i as u8) as char).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_element_lattice() {
        assert_eq!(enumerate_strict_subset_pairs(2), vec![(0b11, 0b01), (0b11, 0b10)]);
    }

    #[test]
    fn four_element_lattice_has_fifty_pairs() {
        let pairs = enumerate_strict_subset_pairs(4);
        assert_eq!(pairs.len(), 50);
        let by_superset_size = |n: u32| pairs.iter().filter(|(s, _)| s.count_ones() == n).count();
        assert_eq!((by_superset_size(2), by_superset_size(3), by_superset_size(4)), (12, 24, 14));
    }

    #[test]
    fn labels() {
        assert_eq!(mask_label(0b1011), "ABD");
        assert_eq!(mask_members(0b100), vec![2]);
    }
}
