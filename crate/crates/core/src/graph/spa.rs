use super::{DenseBitmap, SparseVector};

/// Sparse accumulator: dense values, an occupancy mask and the list of
/// touched slots. Collisions keep the minimum value.
#[derive(Debug, Clone)]
pub struct Spa {
    values: Vec<u64>,
    occupied: DenseBitmap,
    touched: Vec<u64>,
}

impl Spa {
    pub fn new(len: u64) -> Self {
        Spa {
            values: vec![0; len as usize],
            occupied: DenseBitmap::new(len),
            touched: Vec::new(),
        }
    }

    pub fn len(&self) -> u64 {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.touched.is_empty()
    }

    #[inline]
    pub fn accumulate(&mut self, index: u64, value: u64) {
        let slot = &mut self.values[index as usize];
        if self.occupied.get(index) {
            if value < *slot {
                *slot = value;
            }
        } else {
            self.occupied.set(index);
            *slot = value;
            self.touched.push(index);
        }
    }

    /// Emits the occupied entries sorted by index and resets in
    /// O(|touched|).
    pub fn drain_sorted(&mut self) -> SparseVector {
        self.touched.sort_unstable();
        let entries: Vec<(u64, u64)> = self.touched.iter().map(|&i| (i, self.values[i as usize])).collect();
        self.reset();
        SparseVector::from_sorted(entries, self.len())
    }

    pub fn reset(&mut self) {
        for &i in &self.touched {
            // whole word; any other bits in it are touched slots as well
            self.occupied.clear_word_containing(i);
        }
        self.touched.clear();
    }

    /// Full scan used by tests: no occupied bit may survive a reset.
    pub fn is_clear(&self) -> bool {
        self.touched.is_empty() && self.occupied.count_ones() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_minimum_and_sorts() {
        let mut spa = Spa::new(10);
        spa.accumulate(7, 5);
        spa.accumulate(2, 9);
        spa.accumulate(7, 3);
        spa.accumulate(7, 4);
        let out = spa.drain_sorted();
        assert_eq!(out.entries(), &[(2, 9), (7, 3)]);
        assert_eq!(out.len(), 10);
        assert!(spa.is_clear());
    }

    #[test]
    fn reset_leaves_no_stale_bits() {
        let mut spa = Spa::new(300);
        for i in (0..300).step_by(7) {
            spa.accumulate(i, i);
        }
        spa.reset();
        assert!(spa.is_clear());
        spa.accumulate(150, 1);
        assert_eq!(spa.drain_sorted().entries(), &[(150, 1)]);
        assert!(spa.is_clear());
    }
}
