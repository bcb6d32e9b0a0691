/// Fixed-size bitset over ball ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> BitSet {
        BitSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        let i = i as usize;
        i < self.len && self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    /// Returns true if the bit was newly set.
    #[inline]
    pub fn insert(&mut self, i: u32) -> bool {
        let i = i as usize;
        let w = &mut self.words[i >> 6];
        let mask = 1u64 << (i & 63);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros();
                w &= w - 1;
                Some((k as u32) * 64 + t)
            })
        })
    }

    /// Smallest index not set in `self | other`, skipping index 0.
    pub fn first_unset_in_union(&self, other: &BitSet) -> Option<u32> {
        for (k, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut free = !(a | b);
            if k == 0 {
                free &= !1;
            }
            if free != 0 {
                let i = k * 64 + free.trailing_zeros() as usize;
                return (i < self.len).then_some(i as u32);
            }
        }
        None
    }
}

impl BitSet {
    pub fn from_ids(len: usize, ids: impl IntoIterator<Item = u32>) -> BitSet {
        let mut b = BitSet::new(len);
        for i in ids {
            b.insert(i);
        }
        b
    }
}
