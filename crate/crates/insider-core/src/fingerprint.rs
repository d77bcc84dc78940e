//! Content fingerprints for models.
//!
//! A fingerprint is a 64-bit FNV-1a hash over a canonical traversal of a
//! model. It identifies model content (not memory layout), is stable across
//! runs and platforms, and is what change sets and reference files use to
//! detect that a model has moved on underneath them. It is an integrity
//! check, not a cryptographic one.

use core::fmt;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit content identity of a model, rendered as 16 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint(pub u64);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Fingerprint {
    /// Parses the 16-hex-digit rendering produced by `Display`.
    pub fn parse(s: &str) -> Option<Fingerprint> {
        if s.len() != 16 {
            return None;
        }
        u64::from_str_radix(s, 16).ok().map(Fingerprint)
    }

    /// Fingerprint of a raw byte stream.
    pub fn of_bytes(bytes: &[u8]) -> Fingerprint {
        let mut h = Hasher::new();
        h.write(bytes);
        h.finish()
    }
}

/// Incremental FNV-1a hasher used by the model fingerprint walks.
pub(crate) struct Hasher {
    state: u64,
}

impl Hasher {
    pub(crate) fn new() -> Self {
        Hasher { state: FNV_OFFSET }
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= u64::from(b);
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
    }

    /// Length-prefixed string write, so `("ab","c")` and `("a","bc")`
    /// hash differently.
    pub(crate) fn write_str(&mut self, s: &str) {
        self.write(&(s.len() as u64).to_le_bytes());
        self.write(s.as_bytes());
    }

    /// A one-byte structural tag separating record kinds and variants.
    pub(crate) fn tag(&mut self, t: u8) {
        self.write(&[t]);
    }

    pub(crate) fn finish(&self) -> Fingerprint {
        Fingerprint(self.state)
    }
}
