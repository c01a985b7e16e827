//! Base-2 Sobol sequence (Joe and Kuo direction numbers, Gray-code order) with
//! nested uniform scrambling.

use crate::error::{domain, Result};
use crate::samplers::splitmix64;

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2 onward; dimension 1 is van der Corput.
const DIRECTIONS: [(u32, u32, &[u32]); 20] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = DIRECTIONS.len() + 1;

fn direction_vector(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, x) in v.iter_mut().enumerate() {
            *x = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, init) = DIRECTIONS[dim - 1];
    let s = s as usize;
    let mut m = [0u32; BITS];
    m[..s].copy_from_slice(init);
    for k in s..BITS {
        let mut next = m[k - s] ^ (m[k - s] << s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                next ^= m[k - j] << j;
            }
        }
        m[k] = next;
    }
    for k in 0..BITS {
        v[k] = m[k] << (BITS - 1 - k);
    }
    v
}

/// Unscrambled Sobol points as 32-bit integers (divide by `2^32` for `[0,1)`).
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(domain(format!(
                "Sobol dimension must be in 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        Ok(Self {
            directions: (0..dimension).map(direction_vector).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    /// Integer coordinates of point `index` in Gray-code order.
    pub fn point_bits(&self, index: u32, out: &mut [u32]) {
        let gray = index ^ (index >> 1);
        for (x, v) in out.iter_mut().zip(&self.directions) {
            let mut acc = 0;
            let mut g = gray;
            let mut k = 0;
            while g != 0 {
                if g & 1 == 1 {
                    acc ^= v[k];
                }
                g >>= 1;
                k += 1;
            }
            *x = acc;
        }
    }
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Nested uniform (Owen) scramble of a 32-bit digit expansion, completed with
/// random trailing digits. `key` identifies the randomization and coordinate.
pub fn owen_scramble(x: u32, key: u64) -> f64 {
    let mut y = x;
    for level in 0..BITS {
        let prefix = if level == 0 { 0 } else { u64::from(x >> (BITS - level)) };
        let node = mix(key, (prefix << 6) | level as u64);
        if node & 1 == 1 {
            y ^= 1 << (BITS - 1 - level);
        }
    }
    let tail = mix(key ^ 0x5851_f42d_4c95_7f2d, u64::from(x)) >> 43;
    let u = (f64::from(y) + (tail as f64 + 0.5) / (1u64 << 21) as f64) / (1u64 << BITS) as f64;
    u.min(1.0 - f64::EPSILON / 2.0)
}

/// Sobol points with an independent nested scramble per `seed`.
#[derive(Debug, Clone)]
pub struct ScrambledSobol {
    sobol: Sobol,
    keys: Vec<u64>,
}

impl ScrambledSobol {
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        let sobol = Sobol::new(dimension)?;
        let keys = (0..dimension as u64).map(|d| mix(seed, d)).collect();
        Ok(Self { sobol, keys })
    }

    pub fn dimension(&self) -> usize {
        self.sobol.dimension()
    }

    /// Writes point `index` into `out`, using `bits` as scratch.
    pub fn point(&self, index: u32, bits: &mut [u32], out: &mut [f64]) {
        self.sobol.point_bits(index, bits);
        for ((u, &b), &key) in out.iter_mut().zip(bits.iter()).zip(&self.keys) {
            *u = owen_scramble(b, key);
        }
    }
}
