//! Unscrambled two-dimensional Sobol sequence.

const BITS: usize = 32;

/// Gray-code generator; the first coordinate is the van der Corput sequence
/// and the second uses the primitive polynomial `x + 1` with `m_1 = 1`.
#[derive(Debug, Clone)]
pub struct Sobol2d {
    directions: [[u32; BITS]; 2],
    state: [u32; 2],
    index: u64,
}

impl Default for Sobol2d {
    fn default() -> Self {
        Self::new()
    }
}

impl Sobol2d {
    pub fn new() -> Self {
        let mut directions = [[0u32; BITS]; 2];
        for k in 0..BITS {
            directions[0][k] = 1 << (BITS - 1 - k);
        }
        // m_k = 2 m_{k-1} xor m_{k-1}, stored left-aligned.
        let mut m = 1u64;
        for k in 0..BITS {
            directions[1][k] = (m << (BITS - 1 - k)) as u32;
            m = (m << 1) ^ m;
        }
        Sobol2d {
            directions,
            state: [0, 0],
            index: 0,
        }
    }
}

impl Iterator for Sobol2d {
    type Item = [f64; 2];

    /// Points after the origin, in Gray-code order.
    fn next(&mut self) -> Option<[f64; 2]> {
        let c = self.index.trailing_ones() as usize;
        if c >= BITS {
            return None;
        }
        for d in 0..2 {
            self.state[d] ^= self.directions[d][c];
        }
        self.index += 1;
        let scale = 1.0 / (1u64 << BITS) as f64;
        Some([self.state[0] as f64 * scale, self.state[1] as f64 * scale])
    }
}

/// The first `n` points of the sequence, skipping the origin.
pub fn sobol_2d(n: usize) -> Vec<[f64; 2]> {
    Sobol2d::new().take(n).collect()
}
