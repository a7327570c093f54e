//! Finite configurations: sets of occupied lattice sites.

use crate::error::Error;

/// Guard on subset enumeration: `2^|gamma|` subsets are walked explicitly.
pub const MAX_SUBSET_ORDER: usize = 30;

/// A finite configuration, stored as a strictly increasing list of site
/// indices. Strict monotonicity makes the set property structural: two
/// particles never share a site.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FiniteConfig {
    sites: Vec<u32>,
}

impl FiniteConfig {
    pub fn empty() -> Self {
        Self { sites: Vec::new() }
    }

    /// Builds a configuration from an arbitrary list of sites. The list is
    /// sorted; a repeated site is an error.
    pub fn new(mut sites: Vec<u32>) -> Result<Self, Error> {
        sites.sort_unstable();
        for pair in sites.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::RepeatedSite { site: pair[0] });
            }
        }
        Ok(Self { sites })
    }

    pub fn singleton(site: u32) -> Self {
        Self { sites: vec![site] }
    }

    /// Wraps a list already known to be strictly increasing.
    pub(crate) fn from_sorted(sites: Vec<u32>) -> Self {
        debug_assert!(sites.windows(2).all(|w| w[0] < w[1]));
        Self { sites }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[u32] {
        &self.sites
    }

    pub fn contains(&self, site: u32) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// The configuration with `site` added. The site must not be present.
    pub fn with_site(&self, site: u32) -> Self {
        let pos = match self.sites.binary_search(&site) {
            Ok(_) => panic!("site {site} already occupied"),
            Err(pos) => pos,
        };
        let mut sites = Vec::with_capacity(self.sites.len() + 1);
        sites.extend_from_slice(&self.sites[..pos]);
        sites.push(site);
        sites.extend_from_slice(&self.sites[pos..]);
        Self { sites }
    }

    /// The configuration with the point at position `index` removed.
    pub fn without_index(&self, index: usize) -> Self {
        let mut sites = self.sites.clone();
        sites.remove(index);
        Self { sites }
    }

    /// Merge of two disjoint configurations.
    pub fn union_disjoint(&self, other: &Self) -> Self {
        let mut sites = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.sites.len() && j < other.sites.len() {
            let (a, b) = (self.sites[i], other.sites[j]);
            debug_assert_ne!(a, b, "configurations are not disjoint");
            if a < b {
                sites.push(a);
                i += 1;
            } else {
                sites.push(b);
                j += 1;
            }
        }
        sites.extend_from_slice(&self.sites[i..]);
        sites.extend_from_slice(&other.sites[j..]);
        Self { sites }
    }

    /// True when no site occurs in both configurations.
    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.sites.len() && j < other.sites.len() {
            match self.sites[i].cmp(&other.sites[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Splits into (selected, rest) according to a bitmask over positions:
    /// bit `i` selects `sites[i]`.
    pub fn split(&self, mask: u32) -> (Self, Self) {
        let mut selected = Vec::new();
        let mut rest = Vec::new();
        for (i, &s) in self.sites.iter().enumerate() {
            if mask >> i & 1 == 1 {
                selected.push(s);
            } else {
                rest.push(s);
            }
        }
        (Self { sites: selected }, Self { sites: rest })
    }

    /// Range of position bitmasks enumerating all subsets, `∅` and the full
    /// configuration included.
    pub fn subset_masks(&self) -> Result<std::ops::Range<u32>, Error> {
        if self.len() > MAX_SUBSET_ORDER {
            return Err(Error::OrderExceedsCap {
                order: self.len(),
                cap: MAX_SUBSET_ORDER,
            });
        }
        Ok(0..1u32 << self.len())
    }
}

impl std::fmt::Display for FiniteConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}
