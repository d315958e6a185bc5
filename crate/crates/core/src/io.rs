//! Shared helpers for the text file formats: number formatting, comment
//! headers carrying provenance, and config hashing.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SIG_DIGITS: usize = 12;

/// Format `v` with `SIG_DIGITS` significant digits, trailing zeros removed.
///
/// Plain decimal notation is used for moderate exponents, scientific
/// notation otherwise. Parsing the output and formatting again yields the
/// same string.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        t.trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Provenance written as `#`-prefixed comment lines at the top of text outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>) -> Self {
        Provenance {
            version: format!("infolattice {}", env!("CARGO_PKG_VERSION")),
            config_hash: config_hash.into(),
            seed,
        }
    }

    pub fn comment_line(&self) -> String {
        match self.seed {
            Some(seed) => format!("# {} config_hash={} seed={}", self.version, self.config_hash, seed),
            None => format!("# {} config_hash={}", self.version, self.config_hash),
        }
    }

    /// Inverse of [`Provenance::comment_line`].
    pub fn from_comment_line(line: &str) -> Option<Self> {
        let body = line.trim().strip_prefix('#')?.trim();
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let at = tokens.iter().position(|t| t.starts_with("config_hash="))?;
        let config_hash = tokens[at].strip_prefix("config_hash=")?.to_string();
        let seed = match tokens.get(at + 1) {
            Some(t) => Some(t.strip_prefix("seed=")?.parse().ok()?),
            None => None,
        };
        Some(Provenance {
            version: tokens[..at].join(" "),
            config_hash,
            seed,
        })
    }
}

/// First provenance comment in a text file, if any.
pub fn read_provenance(text: &str) -> Option<Provenance> {
    text.lines()
        .take_while(|l| l.trim().is_empty() || l.trim_start().starts_with('#'))
        .find_map(Provenance::from_comment_line)
}

/// First 16 hex digits of the SHA-256 of the value's JSON serialization.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Lines of a text file with comments and blank lines removed.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_common_values() {
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(-2.5), "-2.5");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_f64(1.5e-9), "1.5e-9");
        assert_eq!(fmt_f64(0.0), "0");
    }

    #[test]
    fn provenance_round_trip() {
        for seed in [None, Some(42)] {
            let p = Provenance::new("0123456789abcdef", seed);
            let text = format!("{}\nell,two_n,i_bits\n", p.comment_line());
            assert_eq!(read_provenance(&text), Some(p));
        }
        assert_eq!(read_provenance("ell,two_n,i_bits\n# late\n"), None);
    }

    proptest! {
        #[test]
        fn formatting_is_idempotent(v in -1e6f64..1e6) {
            let once = fmt_f64(v);
            let twice = fmt_f64(once.parse::<f64>().unwrap());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn keeps_twelve_significant_digits(v in 1e-8f64..1e8) {
            let parsed: f64 = fmt_f64(v).parse().unwrap();
            prop_assert!(((parsed - v) / v).abs() < 1e-11);
        }
    }
}
