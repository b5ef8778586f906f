//! Fixed-width bitsets indexed by point number.

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointBits {
    words: Vec<u64>,
}

impl PointBits {
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64).max(1)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut b = Self::empty(len);
        for i in 0..len {
            b.insert(i);
        }
        b
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `self & other`, written into `out`. Returns the popcount of the result.
    #[inline]
    pub fn and_into(&self, other: &PointBits, out: &mut PointBits) -> usize {
        let mut c = 0;
        for ((o, a), b) in out.words.iter_mut().zip(&self.words).zip(&other.words) {
            *o = a & b;
            c += o.count_ones() as usize;
        }
        c
    }

    pub fn and(&self, other: &PointBits) -> PointBits {
        let mut out = PointBits::empty(self.words.len() * 64);
        out.words.truncate(self.words.len());
        self.and_into(other, &mut out);
        out
    }

    pub fn is_subset_of(&self, other: &PointBits) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &PointBits) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}
