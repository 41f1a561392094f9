use std::fmt;

/// A `d`-dimensional bit vector packed into 64-bit words, dimension 0 first.
///
/// Within each word dimension `64k` sits in the most significant bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    d: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(d: usize) -> Self {
        BinaryVector {
            d,
            words: vec![0; d.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = BinaryVector::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            v.set(j, b);
        }
        v
    }

    /// Parses a string of `0`/`1` characters, or hex digits after a `0x`
    /// prefix (four dimensions per digit, most significant bit first).
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            if hex.is_empty() {
                return Err("empty hex vector".into());
            }
            let mut v = BinaryVector::zeros(hex.len() * 4);
            for (k, c) in hex.chars().enumerate() {
                let nibble = c
                    .to_digit(16)
                    .ok_or_else(|| format!("invalid hex digit {c:?}"))?;
                for b in 0..4 {
                    v.set(4 * k + b, nibble & (8 >> b) != 0);
                }
            }
            return Ok(v);
        }
        if s.is_empty() {
            return Err("empty vector".into());
        }
        let mut v = BinaryVector::zeros(s.len());
        for (j, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => v.set(j, true),
                _ => return Err(format!("invalid bit character {:?}", c as char)),
            }
        }
        Ok(v)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        self.words[j / 64] >> (63 - j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, bit: bool) {
        let mask = 1u64 << (63 - j % 64);
        if bit {
            self.words[j / 64] |= mask;
        } else {
            self.words[j / 64] &= !mask;
        }
    }

    /// Dimensions `start .. start + len` as an integer, dimension `start`
    /// in the most significant of the `len` low bits. `len <= 64`.
    #[inline]
    pub fn bits_range(&self, start: usize, len: usize) -> u64 {
        debug_assert!(len <= 64 && start + len <= self.d);
        if len == 0 {
            return 0;
        }
        let w = start / 64;
        let off = start % 64;
        let hi = self.words[w] << off;
        let joined = if off + len > 64 {
            hi | (self.words[w + 1] >> (64 - off))
        } else {
            hi
        };
        joined >> (64 - len)
    }

    /// Full Hamming distance. Both vectors must have the same dimension.
    #[inline]
    pub fn distance(&self, other: &BinaryVector) -> u32 {
        debug_assert_eq!(self.d, other.d);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Vector whose dimension `j` is this vector's dimension `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> BinaryVector {
        let mut v = BinaryVector::zeros(perm.len());
        for (j, &src) in perm.iter().enumerate() {
            v.set(j, self.get(src));
        }
        v
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.d {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
