use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A 20-byte object id. Ordering matches the lexicographic order of the
/// lowercase hex form.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sha([u8; 20]);

impl Sha {
    pub const fn from_bytes(bytes: [u8; 20]) -> Self {
        Sha(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Abbreviated form for log messages.
    pub fn short(&self) -> String {
        let mut s = self.to_hex();
        s.truncate(7);
        s
    }

    /// Strict parse: exactly 40 lowercase hex digits.
    pub fn parse(s: &str) -> Result<Self, Error> {
        if s.len() != 40 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(Error::InvalidSha(s.to_string()));
        }
        let mut out = [0u8; 20];
        hex::decode_to_slice(s, &mut out).map_err(|_| Error::InvalidSha(s.to_string()))?;
        Ok(Sha(out))
    }
}

impl FromStr for Sha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sha::parse(s)
    }
}

impl fmt::Display for Sha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sha({})", self.short())
    }
}

impl Serialize for Sha {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Sha {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        Sha::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let hex = "0123456789abcdef0123456789abcdef01234567";
        let sha = Sha::parse(hex).unwrap();
        assert_eq!(sha.to_string(), hex);
        assert_eq!(sha.short(), "0123456");
    }

    #[test]
    fn rejects_malformed() {
        assert!(Sha::parse("xyz").is_err());
        assert!(Sha::parse("0123456789ABCDEF0123456789abcdef01234567").is_err());
        assert!(Sha::parse("0123456789abcdef0123456789abcdef0123456").is_err());
    }

    #[test]
    fn ordering_follows_hex() {
        let a = Sha::parse(&"0".repeat(40)).unwrap();
        let b = Sha::parse(&format!("{}1", "0".repeat(39))).unwrap();
        let c = Sha::parse(&format!("a{}", "0".repeat(39))).unwrap();
        assert!(a < b && b < c);
        assert!(a.to_hex() < b.to_hex() && b.to_hex() < c.to_hex());
    }
}
