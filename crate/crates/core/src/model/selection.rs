/// A set of fact-row ordinals, stored as a fixed-length bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSelection {
    words: Vec<u64>,
    len: usize,
}

impl RowSelection {
    pub fn none(len: usize) -> Self {
        RowSelection { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn all(len: usize) -> Self {
        let mut s = RowSelection { words: vec![u64::MAX; len.div_ceil(64)], len };
        s.clear_tail();
        s
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut s = RowSelection::none(len);
        for (w, word) in s.words.iter_mut().enumerate() {
            let base = w * 64;
            let end = (base + 64).min(len);
            let mut bits = 0u64;
            for row in base..end {
                if f(row) {
                    bits |= 1 << (row - base);
                }
            }
            *word = bits;
        }
        s
    }

    pub fn from_rows(len: usize, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut s = RowSelection::none(len);
        for r in rows {
            s.insert(r);
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Universe size (number of fact rows), not the selected count.
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, row: usize) {
        assert!(row < self.len, "row {row} out of range {}", self.len);
        self.words[row / 64] |= 1 << (row % 64);
    }

    #[inline]
    pub fn contains(&self, row: usize) -> bool {
        row < self.len && self.words[row / 64] & (1 << (row % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersect_with(&mut self, other: &RowSelection) {
        assert_eq!(self.len, other.len, "selection universes differ");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn intersection(&self, other: &RowSelection) -> RowSelection {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    /// Selected ordinals in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + tz)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}
