//! Sparse distributed representations.
//!
//! [`Sdr`] is a one-dimensional binary pattern stored as its sorted set of
//! active indices. [`LatentSdr`] is the two-dimensional minicolumn layout
//! (`columns x rows`) used for latent states; its active cells are stored as
//! flattened indices `column * rows + row`, which is also the row/column
//! ordering of the transition matrix.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sdr {
    size: usize,
    active: Vec<u32>,
}

impl Sdr {
    pub fn empty(size: usize) -> Self {
        Self {
            size,
            active: Vec::new(),
        }
    }

    /// Builds an SDR from arbitrary-order indices. Duplicates and
    /// out-of-range indices are rejected.
    pub fn from_indices(size: usize, indices: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut active: Vec<u32> = indices.into_iter().collect();
        active.sort_unstable();
        if let Some(pair) = active.windows(2).find(|p| p[0] == p[1]) {
            return Err(Error::param(format!("duplicate active index {}", pair[0])));
        }
        if let Some(&last) = active.last() {
            if last as usize >= size {
                return Err(Error::param(format!(
                    "active index {last} out of range for size {size}"
                )));
            }
        }
        Ok(Self { size, active })
    }

    /// Caller guarantees `active` is strictly increasing and in range.
    pub(crate) fn from_sorted_unchecked(size: usize, active: Vec<u32>) -> Self {
        debug_assert!(active.windows(2).all(|p| p[0] < p[1]));
        debug_assert!(active.last().is_none_or(|&i| (i as usize) < size));
        Self { size, active }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn sparsity(&self) -> f64 {
        self.active.len() as f64 / self.size as f64
    }

    pub fn contains(&self, index: u32) -> bool {
        self.active.binary_search(&index).is_ok()
    }

    pub fn overlap(&self, other: &Sdr) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.active.len() && j < other.active.len() {
            match self.active[i].cmp(&other.active[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn is_subset(&self, other: &Sdr) -> bool {
        self.overlap(other) == self.len()
    }

    pub fn intersection(&self, other: &Sdr) -> Sdr {
        let active = self
            .active
            .iter()
            .copied()
            .filter(|&i| other.contains(i))
            .collect();
        Sdr::from_sorted_unchecked(self.size, active)
    }

    pub fn union(&self, other: &Sdr) -> Sdr {
        let mut active = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.active, &other.active);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i] < b[j]) {
                active.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j] < a[i] {
                active.push(b[j]);
                j += 1;
            } else {
                active.push(a[i]);
                i += 1;
                j += 1;
            }
        }
        Sdr::from_sorted_unchecked(self.size.max(other.size), active)
    }

    pub fn difference(&self, other: &Sdr) -> Sdr {
        let active = self
            .active
            .iter()
            .copied()
            .filter(|&i| !other.contains(i))
            .collect();
        Sdr::from_sorted_unchecked(self.size, active)
    }

    /// Dense `{-1, +1}` encoding.
    pub fn to_bipolar(&self) -> Vec<i8> {
        let mut dense = vec![-1i8; self.size];
        for &i in &self.active {
            dense[i as usize] = 1;
        }
        dense
    }

    /// Inverse of [`Sdr::to_bipolar`]; any positive entry is active.
    pub fn from_bipolar(dense: &[i8]) -> Sdr {
        let active = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, _)| i as u32)
            .collect();
        Sdr::from_sorted_unchecked(dense.len(), active)
    }

    /// Dense `{0, 1}` encoding.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut dense = vec![0u8; self.size];
        for &i in &self.active {
            dense[i as usize] = 1;
        }
        dense
    }
}

/// `N:W:{i1,i2,...}`
impl fmt::Display for Sdr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{{", self.size, self.active.len())?;
        for (k, i) in self.active.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl FromStr for Sdr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidInput(format!("bad SDR literal {s:?}: {why}"));
        let mut parts = s.trim().splitn(3, ':');
        let size: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| bad("size"))?;
        let count: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| bad("count"))?;
        let body = parts
            .next()
            .and_then(|p| p.strip_prefix('{'))
            .and_then(|p| p.strip_suffix('}'))
            .ok_or_else(|| bad("braces"))?;
        let indices = if body.trim().is_empty() {
            Vec::new()
        } else {
            body.split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("index"))?
        };
        if indices.windows(2).any(|p| p[0] >= p[1]) {
            return Err(bad("indices must be strictly increasing"));
        }
        if indices.len() != count {
            return Err(bad("count does not match indices"));
        }
        Sdr::from_indices(size, indices)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatentKind {
    /// Union of predicted possibilities; any number of rows per column.
    Prior,
    /// At most one active row per column.
    Posterior,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatentSdr {
    columns: usize,
    rows: usize,
    kind: LatentKind,
    active: Vec<u32>,
}

impl LatentSdr {
    pub fn empty(columns: usize, rows: usize, kind: LatentKind) -> Self {
        Self {
            columns,
            rows,
            kind,
            active: Vec::new(),
        }
    }

    pub fn from_pairs(
        columns: usize,
        rows: usize,
        kind: LatentKind,
        pairs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let mut flat = Vec::new();
        for (c, r) in pairs {
            if c as usize >= columns || r as usize >= rows {
                return Err(Error::param(format!(
                    "cell ({c},{r}) outside {columns}x{rows}"
                )));
            }
            flat.push(c * rows as u32 + r);
        }
        Self::from_flat(columns, rows, kind, flat)
    }

    pub fn from_flat(
        columns: usize,
        rows: usize,
        kind: LatentKind,
        flat: impl IntoIterator<Item = u32>,
    ) -> Result<Self> {
        let mut active: Vec<u32> = flat.into_iter().collect();
        active.sort_unstable();
        if active.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::param("duplicate latent cell"));
        }
        if active.last().is_some_and(|&i| i as usize >= columns * rows) {
            return Err(Error::param("latent cell out of range"));
        }
        if kind == LatentKind::Posterior {
            let r = rows as u32;
            if active.windows(2).any(|p| p[0] / r == p[1] / r) {
                return Err(Error::param(
                    "posterior state has more than one active row in a column",
                ));
            }
        }
        Ok(Self {
            columns,
            rows,
            kind,
            active,
        })
    }

    pub(crate) fn from_sorted_unchecked(
        columns: usize,
        rows: usize,
        kind: LatentKind,
        active: Vec<u32>,
    ) -> Self {
        debug_assert!(active.windows(2).all(|p| p[0] < p[1]));
        Self {
            columns,
            rows,
            kind,
            active,
        }
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn kind(&self) -> LatentKind {
        self.kind
    }

    /// Flattened cell indices, `column * rows + row`, ascending.
    pub fn flat(&self) -> &[u32] {
        &self.active
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let r = self.rows as u32;
        self.active.iter().map(move |&i| (i / r, i % r))
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, column: u32, row: u32) -> bool {
        self.active
            .binary_search(&(column * self.rows as u32 + row))
            .is_ok()
    }

    pub fn is_subset(&self, other: &LatentSdr) -> bool {
        self.active
            .iter()
            .all(|i| other.active.binary_search(i).is_ok())
    }
}

pub fn random_sdr(n: usize, w: usize, rng: &mut Rng) -> Result<Sdr> {
    if n == 0 {
        return Err(Error::param("SDR size must be positive"));
    }
    if w > n {
        return Err(Error::param(format!("w={w} exceeds n={n}")));
    }
    let mut active: Vec<u32> = index::sample(rng, n, w)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    active.sort_unstable();
    Ok(Sdr::from_sorted_unchecked(n, active))
}

/// Activates every row of each active column.
pub fn project_up(x: &Sdr, rows: usize) -> Result<LatentSdr> {
    if rows == 0 {
        return Err(Error::param("rows must be at least 1"));
    }
    let r = rows as u32;
    let active = x
        .active()
        .iter()
        .flat_map(|&c| (0..r).map(move |j| c * r + j))
        .collect();
    Ok(LatentSdr::from_sorted_unchecked(
        x.size(),
        rows,
        LatentKind::Prior,
        active,
    ))
}

/// Columns with at least one active row.
pub fn project_down(z: &LatentSdr) -> Sdr {
    let r = z.rows as u32;
    let mut active: Vec<u32> = z.active.iter().map(|&i| i / r).collect();
    active.dedup();
    Sdr::from_sorted_unchecked(z.columns, active)
}

/// First `width` indices of a uniformly random permutation of `union`.
pub fn sample_from_union(union: &Sdr, width: usize, rng: &mut Rng) -> Result<Sdr> {
    if width == 0 {
        return Err(Error::param("sample width must be at least 1"));
    }
    if union.is_empty() {
        return Err(Error::EmptyPrediction);
    }
    let mut pool = union.active().to_vec();
    let take = width.min(pool.len());
    let (picked, _) = pool.partial_shuffle(rng, take);
    let mut active = picked.to_vec();
    active.sort_unstable();
    Ok(Sdr::from_sorted_unchecked(union.size(), active))
}

/// Number of bits [`corrupt`] relocates: `round(fraction * |x|)`, half-up.
pub fn corruption_count(fraction: f64, active: usize) -> usize {
    (fraction * active as f64 + 0.5).floor() as usize
}

/// Moves `round(fraction * W)` active bits to positions that were inactive
/// in `x`.
pub fn corrupt(x: &Sdr, fraction: f64, rng: &mut Rng) -> Result<Sdr> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param(format!("noise fraction {fraction} not in [0,1]")));
    }
    let w = x.len();
    let k = corruption_count(fraction, w);
    if w + k > x.size() {
        return Err(Error::param(format!(
            "cannot relocate {k} bits: only {} inactive positions",
            x.size() - w
        )));
    }
    if k == 0 {
        return Ok(x.clone());
    }
    let vacate: Vec<u32> = index::sample(rng, w, k)
        .into_iter()
        .map(|i| x.active()[i])
        .collect();
    let inactive: Vec<u32> = (0..x.size() as u32).filter(|&i| !x.contains(i)).collect();
    let landing = index::sample(rng, inactive.len(), k)
        .into_iter()
        .map(|i| inactive[i]);
    let kept = x.active().iter().copied().filter(|i| !vacate.contains(i));
    let mut active: Vec<u32> = kept.chain(landing).collect();
    active.sort_unstable();
    Ok(Sdr::from_sorted_unchecked(x.size(), active))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sdr(n: usize, idx: &[u32]) -> Sdr {
        Sdr::from_indices(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn random_sdr_cardinality_and_determinism() {
        let a = random_sdr(100, 5, &mut Rng::new(3)).unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.active().iter().all(|&i| i < 100));
        assert_eq!(a, random_sdr(100, 5, &mut Rng::new(3)).unwrap());
        assert!(random_sdr(100, 0, &mut Rng::new(3)).unwrap().is_empty());
        assert!(random_sdr(4, 5, &mut Rng::new(3)).is_err());
        assert!(random_sdr(0, 0, &mut Rng::new(3)).is_err());
    }

    #[test]
    fn projections() {
        let up = project_up(&sdr(10, &[2]), 3).unwrap();
        assert_eq!(up.pairs().collect::<Vec<_>>(), vec![(2, 0), (2, 1), (2, 2)]);
        assert!(project_up(&Sdr::empty(10), 4).unwrap().is_empty());
        let up = project_up(&sdr(10, &[0, 7]), 2).unwrap();
        assert_eq!(
            up.pairs().collect::<Vec<_>>(),
            vec![(0, 0), (0, 1), (7, 0), (7, 1)]
        );
        assert!(project_up(&sdr(10, &[1]), 0).is_err());

        let z = LatentSdr::from_pairs(10, 4, LatentKind::Prior, [(2, 0), (2, 1), (5, 3)]).unwrap();
        assert_eq!(project_down(&z), sdr(10, &[2, 5]));
        assert!(project_down(&LatentSdr::empty(10, 4, LatentKind::Prior)).is_empty());
    }

    #[test]
    fn posterior_rejects_two_rows_in_a_column() {
        assert!(LatentSdr::from_pairs(4, 2, LatentKind::Posterior, [(1, 0), (1, 1)]).is_err());
        assert!(LatentSdr::from_pairs(4, 2, LatentKind::Prior, [(1, 0), (1, 1)]).is_ok());
        assert!(LatentSdr::from_pairs(4, 2, LatentKind::Prior, [(4, 0)]).is_err());
    }

    #[test]
    fn sample_whole_set_and_subset() {
        let u = sdr(20, &[1, 2, 3, 4, 5]);
        assert_eq!(sample_from_union(&u, 5, &mut Rng::new(0)).unwrap(), u);
        let u = sdr(20, &(0..10).collect::<Vec<_>>());
        for s in 0..50 {
            let out = sample_from_union(&u, 1, &mut Rng::new(s)).unwrap();
            assert_eq!(out.len(), 1);
            assert!(out.is_subset(&u));
        }
        assert!(matches!(
            sample_from_union(&Sdr::empty(20), 1, &mut Rng::new(0)),
            Err(Error::EmptyPrediction)
        ));
    }

    #[test]
    fn sample_two_way_frequency() {
        let u = sdr(20, &[1, 9]);
        let ones = (0..1000u64)
            .filter(|&s| sample_from_union(&u, 1, &mut Rng::new(s)).unwrap().active() == [1])
            .count();
        let freq = ones as f64 / 1000.0;
        assert!((freq - 0.5).abs() <= 0.05, "freq {freq}");
    }

    #[test]
    fn corrupt_cases() {
        let x = random_sdr(100, 5, &mut Rng::new(11)).unwrap();
        assert_eq!(corrupt(&x, 0.0, &mut Rng::new(1)).unwrap(), x);

        let all = corrupt(&x, 1.0, &mut Rng::new(1)).unwrap();
        assert_eq!(all.len(), 5);
        assert_eq!(all.overlap(&x), 0);

        let part = corrupt(&x, 0.4, &mut Rng::new(1)).unwrap();
        assert_eq!(part.len(), 5);
        assert_eq!(part.overlap(&x), 3);
        assert_eq!(part.union(&x).len(), 7);

        let dense = sdr(6, &[0, 1, 2, 3]);
        assert!(corrupt(&dense, 1.0, &mut Rng::new(1)).is_err());
        assert!(corrupt(&x, 1.5, &mut Rng::new(1)).is_err());
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(corruption_count(0.5, 5), 3);
        assert_eq!(corruption_count(0.1, 5), 1);
        assert_eq!(corruption_count(0.09, 5), 0);
    }

    #[test]
    fn bipolar() {
        assert_eq!(sdr(4, &[1]).to_bipolar(), vec![-1, 1, -1, -1]);
        assert_eq!(Sdr::empty(3).to_bipolar(), vec![-1, -1, -1]);
        let x = sdr(9, &[0, 4, 8]);
        assert_eq!(Sdr::from_bipolar(&x.to_bipolar()), x);
    }

    #[test]
    fn literal_format() {
        let x = sdr(100, &[3, 17, 42, 77, 90]);
        assert_eq!(x.to_string(), "100:5:{3,17,42,77,90}");
        assert_eq!("100:5:{3,17,42,77,90}".parse::<Sdr>().unwrap(), x);
        assert_eq!("8:0:{}".parse::<Sdr>().unwrap(), Sdr::empty(8));
        assert!("100:4:{3,17,42,77,90}".parse::<Sdr>().is_err());
        assert!("100:2:{17,3}".parse::<Sdr>().is_err());
        assert!("10:1:{10}".parse::<Sdr>().is_err());
    }

    #[test]
    fn set_algebra() {
        let a = sdr(10, &[1, 2, 3]);
        let b = sdr(10, &[2, 3, 4]);
        assert_eq!(a.intersection(&b), sdr(10, &[2, 3]));
        assert_eq!(a.union(&b), sdr(10, &[1, 2, 3, 4]));
        assert_eq!(a.difference(&b), sdr(10, &[1]));
        assert_eq!(a.overlap(&b), 2);
    }
}
