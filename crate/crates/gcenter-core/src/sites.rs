//! The six interstitial-silicon sites around the C-C axis, indexed 0..=5.
//! Sites `n` and `n + 3` form an inversion pair sharing one emission dipole.

use alloc::vec::Vec;

/// Bitmask subset of the 6 sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteSet(u8);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);
    pub const ALL: SiteSet = SiteSet(0b0011_1111);

    pub fn new(mask: u8) -> SiteSet {
        SiteSet(mask & 0b0011_1111)
    }

    pub fn single(site: usize) -> SiteSet {
        debug_assert!(site < 6);
        SiteSet(1 << site)
    }

    pub fn from_sites(sites: &[usize]) -> SiteSet {
        let mut mask = 0u8;
        for &s in sites {
            debug_assert!(s < 6);
            mask |= 1 << s;
        }
        SiteSet(mask)
    }

    /// Inversion pair `{p, p + 3}` for pair index `p` in 0..=2.
    pub fn pair(pair: usize) -> SiteSet {
        debug_assert!(pair < 3);
        SiteSet((1 << pair) | (1 << (pair + 3)))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn contains(self, site: usize) -> bool {
        site < 6 && self.0 & (1 << site) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..6).filter(move |&s| self.contains(s))
    }

    pub fn sites(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Image of the set under the site relabeling `n -> n + 3 (mod 6)`.
    pub fn shifted_by_3(self) -> SiteSet {
        let lo = self.0 & 0b111;
        let hi = (self.0 >> 3) & 0b111;
        SiteSet((lo << 3) | hi)
    }
}

impl core::fmt::Display for SiteSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for s in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

/// Pair index (0..=2) of a site: sites `n` and `n + 3` share pair `n mod 3`.
pub fn pair_of(site: usize) -> usize {
    debug_assert!(site < 6);
    site % 3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_by_3_swaps_halves() {
        let s = SiteSet::from_sites(&[1, 2]);
        assert_eq!(s.shifted_by_3(), SiteSet::from_sites(&[4, 5]));
        assert_eq!(SiteSet::ALL.shifted_by_3(), SiteSet::ALL);
        assert_eq!(SiteSet::pair(0).shifted_by_3(), SiteSet::pair(0));
    }

    #[test]
    fn display_lists_members() {
        assert_eq!(alloc::format!("{}", SiteSet::from_sites(&[0, 3])), "{0,3}");
    }
}
