//! Truncated symmetric functions on finite configurations.
//!
//! A `SymFn` stores one real value per ordered tuple `x_1 < … < x_n` of
//! site indices, for every order `n <= max_order`, plus a scalar at the
//! empty configuration. Symmetry is structural (only ordered tuples are
//! stored) and reads above the truncation order return 0, which closes the
//! hierarchy at `max_order`.
//!
//! Tuples of a given order are indexed by their colexicographic rank
//! `sum_i binom(x_i, i+1)`, so each order lives in one dense vector.

use std::io::{BufRead, Write};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::FiniteConfig;

/// Hard cap on the truncation order; desk-scale studies use 3 or 4.
pub const MAX_ORDER: usize = 8;
/// Hard cap on the number of sites a `SymFn` is stored over.
pub const MAX_SITES: usize = 64;

const BINOM: [[u64; MAX_ORDER + 1]; MAX_SITES + 1] = {
    let mut t = [[0u64; MAX_ORDER + 1]; MAX_SITES + 1];
    let mut n = 0;
    while n <= MAX_SITES {
        t[n][0] = 1;
        let mut k = 1;
        while k <= MAX_ORDER {
            if k <= n {
                t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
            }
            k += 1;
        }
        n += 1;
    }
    t
};

/// `binom(n, k)` for `n <= 64`, `k <= 8`; zero outside that range.
pub fn binomial(n: usize, k: usize) -> u64 {
    if n > MAX_SITES || k > MAX_ORDER {
        return 0;
    }
    BINOM[n][k]
}

/// Colexicographic rank of a strictly increasing tuple.
#[inline]
pub(crate) fn rank(sites: &[u32]) -> usize {
    let mut r = 0u64;
    for (i, &s) in sites.iter().enumerate() {
        r += BINOM[s as usize][i + 1];
    }
    r as usize
}

/// Inverse of [`rank`]: writes the tuple of the given order into `out`.
pub(crate) fn unrank(mut r: u64, order: usize, out: &mut Vec<u32>) {
    out.clear();
    out.resize(order, 0);
    for i in (1..=order).rev() {
        // Largest c with binom(c, i) <= r.
        let mut c = i - 1;
        while c + 1 <= MAX_SITES && BINOM[c + 1][i] <= r {
            c += 1;
        }
        r -= BINOM[c][i];
        out[i - 1] = c as u32;
    }
}

/// Iterator over all strictly increasing `order`-tuples from `0..num_sites`,
/// in colexicographic (= rank) order.
pub struct Combinations {
    num_sites: u32,
    current: Vec<u32>,
    done: bool,
}

impl Combinations {
    pub fn new(num_sites: u32, order: usize) -> Self {
        let done = order > num_sites as usize;
        Self {
            num_sites,
            current: (0..order as u32).collect(),
            done,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.current.clone();
        let n = self.current.len();
        // Colex successor: bump the first position that has headroom.
        let mut i = 0;
        loop {
            if i == n {
                self.done = true;
                break;
            }
            let limit = if i + 1 < n {
                self.current[i + 1]
            } else {
                self.num_sites
            };
            if self.current[i] + 1 < limit {
                self.current[i] += 1;
                for (j, slot) in self.current.iter_mut().enumerate().take(i) {
                    *slot = j as u32;
                }
                break;
            }
            i += 1;
        }
        Some(item)
    }
}

/// A truncated symmetric function: order-indexed dense tables of tuple
/// values. Plays both roles in the duality — quasi-observable and
/// correlation function.
#[derive(Clone, Debug, PartialEq)]
pub struct SymFn {
    num_sites: u32,
    max_order: usize,
    orders: Vec<Vec<f64>>,
}

impl SymFn {
    pub fn zeros(num_sites: u32, max_order: usize) -> Self {
        assert!(num_sites as usize <= MAX_SITES, "too many sites");
        assert!(max_order <= MAX_ORDER, "truncation order too large");
        let orders = (0..=max_order)
            .map(|n| vec![0.0; binomial(num_sites as usize, n) as usize])
            .collect();
        Self {
            num_sites,
            max_order,
            orders,
        }
    }

    /// The indicator of the empty configuration.
    pub fn indicator_empty(num_sites: u32, max_order: usize) -> Self {
        let mut f = Self::zeros(num_sites, max_order);
        f.orders[0][0] = 1.0;
        f
    }

    /// The product function `z^{|η|}` (the correlation function of the
    /// ideal gas at activity `z`).
    pub fn poisson(num_sites: u32, max_order: usize, z: f64) -> Self {
        let mut f = Self::zeros(num_sites, max_order);
        for n in 0..=max_order {
            let v = z.powi(n as i32);
            f.orders[n].fill(v);
        }
        f
    }

    /// Fills every stored tuple from a function of the configuration.
    /// Entries are independent, so orders are filled in parallel.
    pub fn from_fn<F>(num_sites: u32, max_order: usize, f: F) -> Self
    where
        F: Fn(&FiniteConfig) -> f64 + Sync,
    {
        let mut out = Self::zeros(num_sites, max_order);
        for n in 0..=max_order {
            let values: Vec<f64> = (0..out.orders[n].len() as u64)
                .into_par_iter()
                .map(|r| {
                    let mut sites = Vec::with_capacity(n);
                    unrank(r, n, &mut sites);
                    f(&FiniteConfig::from_sorted(sites))
                })
                .collect();
            out.orders[n] = values;
        }
        out
    }

    /// Seeded uniform sample: each stored entry is `u · order_scale(n)` with
    /// `u ~ U[-1, 1]`. With `order_scale(n) = (aC)^n` the result lies in the
    /// unit ball of the `aC`-weighted sup space.
    pub fn sample<F>(
        num_sites: u32,
        max_order: usize,
        seed: u64,
        order_scale: F,
        zero_at_empty: bool,
    ) -> Self
    where
        F: Fn(usize) -> f64,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let uniform = Uniform::new_inclusive(-1.0f64, 1.0);
        let mut f = Self::zeros(num_sites, max_order);
        for n in 0..=max_order {
            let scale = order_scale(n);
            for v in f.orders[n].iter_mut() {
                *v = uniform.sample(&mut rng) * scale;
            }
        }
        if zero_at_empty {
            f.orders[0][0] = 0.0;
        }
        f
    }

    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Value at a configuration; 0 above the truncation order.
    #[inline]
    pub fn get(&self, eta: &FiniteConfig) -> f64 {
        self.get_sites(eta.sites())
    }

    /// Same as [`get`](Self::get) on a raw sorted site slice.
    #[inline]
    pub fn get_sites(&self, sites: &[u32]) -> f64 {
        if sites.len() > self.max_order {
            return 0.0;
        }
        self.orders[sites.len()][rank(sites)]
    }

    pub fn value_at_empty(&self) -> f64 {
        self.orders[0][0]
    }

    /// Sets the value at a configuration. The order must not exceed the
    /// truncation order.
    pub fn set(&mut self, eta: &FiniteConfig, value: f64) {
        assert!(
            eta.len() <= self.max_order,
            "order {} above truncation {}",
            eta.len(),
            self.max_order
        );
        let r = rank(eta.sites());
        self.orders[eta.len()][r] = value;
    }

    pub fn order_values(&self, order: usize) -> &[f64] {
        &self.orders[order]
    }

    pub(crate) fn order_values_mut(&mut self, order: usize) -> &mut [f64] {
        &mut self.orders[order]
    }

    /// The tuple stored at `(order, index)`.
    pub fn tuple_at(&self, order: usize, index: usize) -> FiniteConfig {
        let mut sites = Vec::with_capacity(order);
        unrank(index as u64, order, &mut sites);
        FiniteConfig::from_sorted(sites)
    }

    /// Iterates `(order, index, value)` over every stored entry.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.orders
            .iter()
            .enumerate()
            .flat_map(|(n, vals)| vals.iter().enumerate().map(move |(i, &v)| (n, i, v)))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.num_sites == other.num_sites && self.max_order == other.max_order
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert!(self.same_shape(other), "shape mismatch");
        for (mine, theirs) in self.orders.iter_mut().zip(&other.orders) {
            for (x, y) in mine.iter_mut().zip(theirs) {
                *x += a * y;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for vals in &mut self.orders {
            for v in vals.iter_mut() {
                *v *= a;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other), "shape mismatch");
        let mut m = 0.0f64;
        for (mine, theirs) in self.orders.iter().zip(&other.orders) {
            for (x, y) in mine.iter().zip(theirs) {
                m = m.max((x - y).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.orders.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Writes the flat order-tagged table `(order, sites, value)`.
    /// Values are printed with 17 significant digits so the text round-trips
    /// to the exact bits.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# symfn num_sites={} max_order={}", self.num_sites, self.max_order)?;
        writeln!(w, "order,sites,value")?;
        let mut sites = Vec::new();
        for (n, vals) in self.orders.iter().enumerate() {
            for (i, &v) in vals.iter().enumerate() {
                unrank(i as u64, n, &mut sites);
                let tuple = sites
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                writeln!(w, "{},{},{}", n, tuple, crate::symfn::fmt_f64(v))?;
            }
        }
        Ok(())
    }

    /// Reads a table produced by [`write_table`](Self::write_table).
    pub fn read_table<R: BufRead>(r: R) -> std::io::Result<Self> {
        let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))??;
        let header = header
            .strip_prefix("# symfn ")
            .ok_or_else(|| bad("missing symfn header"))?;
        let mut num_sites = None;
        let mut max_order = None;
        for part in header.split_whitespace() {
            if let Some(v) = part.strip_prefix("num_sites=") {
                num_sites = v.parse::<u32>().ok();
            } else if let Some(v) = part.strip_prefix("max_order=") {
                max_order = v.parse::<usize>().ok();
            }
        }
        let (num_sites, max_order) = match (num_sites, max_order) {
            (Some(m), Some(n)) => (m, n),
            _ => return Err(bad("malformed symfn header")),
        };
        let columns = lines.next().ok_or_else(|| bad("missing column line"))??;
        if columns != "order,sites,value" {
            return Err(bad("unexpected column line"));
        }
        let mut f = SymFn::zeros(num_sites, max_order);
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let order: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad order field"))?;
            let sites_field = parts.next().ok_or_else(|| bad("missing sites field"))?;
            let value: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad value field"))?;
            let sites: Vec<u32> = if sites_field.is_empty() {
                Vec::new()
            } else {
                sites_field
                    .split(';')
                    .map(|s| s.parse::<u32>().map_err(|_| bad("bad site index")))
                    .collect::<Result<_, _>>()?
            };
            if sites.len() != order || order > max_order {
                return Err(bad("row inconsistent with header"));
            }
            f.orders[order][rank(&sites)] = value;
        }
        Ok(f)
    }
}

/// Fixed float formatting used in every emitted file: 17 significant digits,
/// which round-trip `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Normalize -0.0 so byte-identity does not depend on its sign.
        return String::from("0.0000000000000000e0");
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_table() {
        assert_eq!(binomial(12, 3), 220);
        assert_eq!(binomial(24, 4), 10626);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(5, 7), 0);
    }

    #[test]
    fn rank_unrank_roundtrip() {
        for order in 0..=4usize {
            let mut seen = vec![false; binomial(10, order) as usize];
            for tuple in Combinations::new(10, order) {
                let r = rank(&tuple);
                assert!(!seen[r], "rank collision at {tuple:?}");
                seen[r] = true;
                let mut back = Vec::new();
                unrank(r as u64, order, &mut back);
                assert_eq!(back, tuple);
            }
            assert!(seen.iter().all(|&b| b), "ranks not surjective");
        }
    }

    #[test]
    fn combinations_are_colex_sorted() {
        let ranks: Vec<usize> = Combinations::new(8, 3).map(|t| rank(&t)).collect();
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        assert_eq!(ranks, sorted);
        assert_eq!(ranks.len(), 56);
    }

    #[test]
    fn get_above_truncation_is_zero() {
        let f = SymFn::poisson(6, 2, 0.5);
        let eta = FiniteConfig::new(vec![0, 1, 2]).unwrap();
        assert_eq!(f.get(&eta), 0.0);
        assert_eq!(f.get(&FiniteConfig::new(vec![1, 4]).unwrap()), 0.25);
        assert_eq!(f.value_at_empty(), 1.0);
    }

    #[test]
    fn set_get_consistent() {
        let mut f = SymFn::zeros(9, 3);
        let eta = FiniteConfig::new(vec![2, 5, 8]).unwrap();
        f.set(&eta, -1.5);
        assert_eq!(f.get(&eta), -1.5);
        assert_eq!(f.get(&FiniteConfig::new(vec![2, 5, 7]).unwrap()), 0.0);
    }

    #[test]
    fn from_fn_matches_pointwise() {
        let f = SymFn::from_fn(7, 3, |eta| eta.sites().iter().map(|&s| s as f64).sum());
        let eta = FiniteConfig::new(vec![1, 2, 6]).unwrap();
        assert_eq!(f.get(&eta), 9.0);
        assert_eq!(f.value_at_empty(), 0.0);
    }

    #[test]
    fn table_roundtrip_is_bit_exact() {
        let f = SymFn::sample(8, 3, 42, |n| (1.7f64).powi(n as i32), false);
        let mut buf = Vec::new();
        f.write_table(&mut buf).unwrap();
        let g = SymFn::read_table(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn sample_is_deterministic() {
        let a = SymFn::sample(6, 2, 7, |_| 1.0, true);
        let b = SymFn::sample(6, 2, 7, |_| 1.0, true);
        assert_eq!(a, b);
        assert_eq!(a.value_at_empty(), 0.0);
    }
}
