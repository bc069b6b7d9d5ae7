use super::config::MAX_CELLS;
use super::types::Move;

/// Bit for "entered this cell from side `dir`".
pub fn entering_bit(dir: Move) -> u8 {
    debug_assert!(dir != Move::Stay);
    1 << dir.index()
}

/// Bit for "left this cell through side `dir`".
pub fn leaving_bit(dir: Move) -> u8 {
    debug_assert!(dir != Move::Stay);
    1 << (4 + dir.index())
}

/// Per-cell footprint bits: low nibble entering[up, down, left, right], high
/// nibble leaving[up, down, left, right]. Bits are only ever set.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FootprintGrid {
    bits: [u8; MAX_CELLS],
}

impl Default for FootprintGrid {
    fn default() -> Self {
        FootprintGrid { bits: [0; MAX_CELLS] }
    }
}

impl std::fmt::Debug for FootprintGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let used: Vec<(usize, u8)> = self
            .bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0)
            .map(|(i, b)| (i, *b))
            .collect();
        f.debug_struct("FootprintGrid").field("nonzero", &used).finish()
    }
}

impl FootprintGrid {
    pub fn get(&self, cell: usize) -> u8 {
        self.bits[cell]
    }

    pub fn set(&mut self, cell: usize, bits: u8) {
        self.bits[cell] |= bits;
    }

    pub fn entering(&self, cell: usize, dir: Move) -> bool {
        self.bits[cell] & entering_bit(dir) != 0
    }

    pub fn leaving(&self, cell: usize, dir: Move) -> bool {
        self.bits[cell] & leaving_bit(dir) != 0
    }

    /// Record a move from `from` to `to` in direction `dir`.
    pub fn record_move(&mut self, from: usize, to: usize, dir: Move) {
        self.bits[from] |= leaving_bit(dir);
        self.bits[to] |= entering_bit(dir.opposite());
    }

    /// True when every bit set in `self` is also set in `later`.
    pub fn is_subset_of(&self, later: &FootprintGrid) -> bool {
        self.bits.iter().zip(later.bits.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn count(&self) -> u32 {
        self.bits.iter().map(|b| b.count_ones()).sum()
    }

    pub fn raw(&self) -> &[u8] {
        &self.bits
    }
}
