use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use smallvec::SmallVec;

/// Largest input dimension a [`Layout`] can be built for.
pub const MAX_VARS: usize = 8;
/// Largest truncation order a [`Layout`] can be built for.
pub const MAX_ORDER: usize = 6;

/// Exponent vector of a monomial. Ordered graded-lexicographically: lower
/// total degree first, then larger leading exponents first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u8; MAX_VARS]>);

impl MultiIndex {
    pub fn new(exponents: &[usize]) -> Self {
        MultiIndex(exponents.iter().map(|&e| e as u8).collect())
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(smallvec::smallvec![0; n])
    }

    /// The index of the first-order monomial `x_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zero(n);
        m.0[i] = 1;
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn exponents(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&e| e as usize)
    }

    pub fn order(&self) -> usize {
        self.exponents().sum()
    }

    /// α! = Π α_i!
    pub fn factorial(&self) -> f64 {
        self.exponents()
            .map(|e| (1..=e).map(|k| k as f64).product::<f64>())
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn with_incremented(&self, i: usize) -> MultiIndex {
        let mut m = self.clone();
        m.0[i] += 1;
        m
    }

    /// `None` when the exponent at `i` is already zero.
    pub fn with_decremented(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut m = self.clone();
        m.0[i] -= 1;
        Some(m)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Dense coefficient layout for series in `n` variables truncated at order `r`.
///
/// Shared by every series of the same shape; obtained through [`Layout::get`].
pub struct Layout {
    n: usize,
    r: usize,
    indices: Vec<MultiIndex>,
    factorials: Vec<f64>,
    degree_start: Vec<usize>,
    lookup: HashMap<MultiIndex, usize>,
    // (i, j, k): monomial i times monomial j is monomial k
    products: Vec<(u16, u16, u16)>,
}

static LAYOUTS: [[OnceLock<Layout>; MAX_ORDER + 1]; MAX_VARS + 1] =
    [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_VARS + 1];

impl Layout {
    /// Panics when `n > MAX_VARS` or `r > MAX_ORDER`.
    pub fn get(n: usize, r: usize) -> &'static Layout {
        assert!(
            n <= MAX_VARS && r <= MAX_ORDER,
            "series shape n={n}, r={r} exceeds the supported range"
        );
        LAYOUTS[n][r].get_or_init(|| Layout::build(n, r))
    }

    fn build(n: usize, r: usize) -> Layout {
        let mut indices = Vec::new();
        let mut degree_start = Vec::with_capacity(r + 2);
        for d in 0..=r {
            degree_start.push(indices.len());
            let mut block = Vec::new();
            let mut cur = vec![0usize; n];
            compositions(d, 0, &mut cur, &mut block);
            block.sort();
            indices.extend(block);
        }
        degree_start.push(indices.len());
        let factorials = indices.iter().map(|m| m.factorial()).collect();
        let lookup: HashMap<MultiIndex, usize> = indices.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.order() + b.order() <= r {
                    let k = lookup[&a.add(b)];
                    products.push((i as u16, j as u16, k as u16));
                }
            }
        }
        Layout {
            n,
            r,
            indices,
            factorials,
            degree_start,
            lookup,
            products,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of stored coefficients, C(n + r, r).
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn multi_index(&self, rank: usize) -> &MultiIndex {
        &self.indices[rank]
    }

    pub fn factorial(&self, rank: usize) -> f64 {
        self.factorials[rank]
    }

    pub fn rank(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Rank of the first-order monomial `x_i`.
    pub fn unit_rank(&self, i: usize) -> usize {
        debug_assert!(self.r >= 1 && i < self.n);
        1 + i
    }

    /// Ranks of all indices of total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    pub(crate) fn products(&self) -> &[(u16, u16, u16)] {
        &self.products
    }

    pub(crate) fn same(&self, other: &Layout) -> bool {
        std::ptr::eq(self, other)
    }
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Layout(n={}, r={})", self.n, self.r)
    }
}

fn compositions(remaining: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if pos == cur.len() {
        if remaining == 0 {
            out.push(MultiIndex::new(cur));
        }
        return;
    }
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex::new(cur));
        cur[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        compositions(remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes_are_binomial() {
        assert_eq!(Layout::get(1, 3).len(), 4);
        assert_eq!(Layout::get(2, 2).len(), 6);
        assert_eq!(Layout::get(3, 3).len(), 20);
        assert_eq!(Layout::get(4, 3).len(), 35);
        assert_eq!(Layout::get(0, 2).len(), 1);
    }

    #[test]
    fn graded_lex_order() {
        let l = Layout::get(2, 2);
        let got: Vec<Vec<usize>> = l.indices().iter().map(|m| m.exponents().collect()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        for w in l.indices().windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(l.unit_rank(1), 2);
        assert_eq!(l.degree_range(2), 3..6);
    }

    #[test]
    fn factorials() {
        assert_eq!(MultiIndex::new(&[2, 3]).factorial(), 12.0);
        assert_eq!(MultiIndex::zero(3).factorial(), 1.0);
    }
}
