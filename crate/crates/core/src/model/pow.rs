//! Compact difficulty targets.

use super::hash::Hash256;

/// A 256-bit proof-of-work target, big-endian.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Target(pub [u8; 32]);

impl Target {
    /// Expands Bitcoin's compact `nBits` form. Returns `None` for negative,
    /// zero or overflowing encodings.
    pub fn from_compact(bits: u32) -> Option<Target> {
        let exponent = (bits >> 24) as isize;
        let mantissa = bits & 0x007f_ffff;
        if bits & 0x0080_0000 != 0 || mantissa == 0 {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, byte) in mantissa.to_be_bytes()[1..].iter().enumerate() {
            let idx = 32 - exponent + i as isize;
            if idx < 0 {
                if *byte != 0 {
                    return None;
                }
            } else if idx < 32 {
                out[idx as usize] = *byte;
            }
        }
        if out == [0; 32] {
            return None;
        }
        Some(Target(out))
    }

    /// A hash meets the target when, read as a little-endian 256-bit number,
    /// it does not exceed it.
    pub fn is_met_by(&self, hash: &Hash256) -> bool {
        let mut be = hash.0;
        be.reverse();
        be <= self.0
    }

    /// Probability that a uniformly random hash meets the target.
    pub fn success_probability(&self) -> f64 {
        let mut p = 0.0;
        let mut scale = 1.0 / 256.0;
        for &b in &self.0 {
            p += b as f64 * scale;
            scale /= 256.0;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_known_encodings() {
        let regtest = Target::from_compact(0x207f_ffff).unwrap();
        assert_eq!(&regtest.0[..4], &[0x7f, 0xff, 0xff, 0x00]);
        assert!(regtest.0[3..].iter().all(|&b| b == 0));

        let mainnet = Target::from_compact(0x1d00_ffff).unwrap();
        let mut expected = [0u8; 32];
        expected[4] = 0xff;
        expected[5] = 0xff;
        assert_eq!(mainnet.0, expected);

        let small = Target::from_compact(0x0212_3456).unwrap();
        assert_eq!(small.0[30..], [0x12, 0x34]);
    }

    #[test]
    fn rejects_invalid_encodings() {
        assert_eq!(Target::from_compact(0x0480_0001), None);
        assert_eq!(Target::from_compact(0x2000_0000), None);
        assert_eq!(Target::from_compact(0x2301_0000), None);
        assert_eq!(Target::from_compact(0x0100_0001), None);
    }

    #[test]
    fn comparison_uses_reversed_hash() {
        let target = Target::from_compact(0x2000_ffff).unwrap();
        let mut low = [0u8; 32];
        low[0] = 0xff;
        low[29] = 0xff;
        assert!(target.is_met_by(&Hash256(low)));
        let mut high = [0u8; 32];
        high[31] = 1;
        assert!(!target.is_met_by(&Hash256(high)));
    }

    #[test]
    fn probability_of_easy_targets() {
        let p = Target::from_compact(0x207f_ffff).unwrap().success_probability();
        assert!((p - 0.5).abs() < 1e-6);
        let p = Target::from_compact(0x2000_ffff).unwrap().success_probability();
        assert!((p - 65535.0 / 16_777_216.0).abs() < 1e-9);
    }
}
