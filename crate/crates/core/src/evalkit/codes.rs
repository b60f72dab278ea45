//! The qualitative error codes and their three classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodeClass {
    Type1,
    Type2,
    Type2Star,
}

/// One code from the framework. Codes 2c and 2f only exist in their
/// resolved sub-forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeLabel {
    C1a,
    C1b,
    C2x,
    C2a,
    C2b,
    C2cHat,
    C2cPrime,
    C2cStar,
    C2d,
    C2e,
    C2fHat,
    C2fPrime,
    C2fStar,
}

impl CodeLabel {
    pub const ALL: [CodeLabel; 13] = [
        CodeLabel::C1a,
        CodeLabel::C1b,
        CodeLabel::C2x,
        CodeLabel::C2a,
        CodeLabel::C2b,
        CodeLabel::C2cHat,
        CodeLabel::C2cPrime,
        CodeLabel::C2cStar,
        CodeLabel::C2d,
        CodeLabel::C2e,
        CodeLabel::C2fHat,
        CodeLabel::C2fPrime,
        CodeLabel::C2fStar,
    ];

    pub fn class(self) -> CodeClass {
        use CodeLabel::*;
        match self {
            C1a | C1b => CodeClass::Type1,
            C2cStar | C2fStar => CodeClass::Type2Star,
            C2x | C2a | C2b | C2cHat | C2cPrime | C2d | C2e | C2fHat | C2fPrime => CodeClass::Type2,
        }
    }

    /// Canonical storage form, e.g. `2c_hat`.
    pub fn as_str(self) -> &'static str {
        use CodeLabel::*;
        match self {
            C1a => "1a",
            C1b => "1b",
            C2x => "2x",
            C2a => "2a",
            C2b => "2b",
            C2cHat => "2c_hat",
            C2cPrime => "2c_prime",
            C2cStar => "2c_star",
            C2d => "2d",
            C2e => "2e",
            C2fHat => "2f_hat",
            C2fPrime => "2f_prime",
            C2fStar => "2f_star",
        }
    }

    /// Label as printed in the coding framework (`2c^`, `2c'`, `2c*`).
    pub fn display_label(self) -> &'static str {
        use CodeLabel::*;
        match self {
            C2cHat => "2c^",
            C2cPrime => "2c'",
            C2cStar => "2c*",
            C2fHat => "2f^",
            C2fPrime => "2f'",
            C2fStar => "2f*",
            other => other.as_str(),
        }
    }

    pub fn description(self) -> &'static str {
        use CodeLabel::*;
        match self {
            C1a => "Poor fluency",
            C1b => "Formatting error",
            C2x => "Does not answer the query",
            C2a => "Wrong number, time or location versus the ground truth",
            C2b => "Omits a number, time or location from the ground truth",
            C2cHat => "Extra number, time or location: correct but irrelevant",
            C2cPrime => "Extra number, time or location: incorrect",
            C2cStar => "Extra number, time or location: correct and relevant",
            C2d => "Wrong textual information versus the ground truth",
            C2e => "Omits textual information from the ground truth",
            C2fHat => "Extra textual information: correct but irrelevant",
            C2fPrime => "Extra textual information: incorrect",
            C2fStar => "Extra textual information: correct and relevant",
        }
    }
}

impl fmt::Display for CodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid code {0:?}")]
pub struct InvalidCode(pub String);

impl FromStr for CodeLabel {
    type Err = InvalidCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let canonical = match t {
            "2c^" => "2c_hat",
            "2c'" => "2c_prime",
            "2c*" => "2c_star",
            "2f^" => "2f_hat",
            "2f'" => "2f_prime",
            "2f*" => "2f_star",
            other => other,
        };
        CodeLabel::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(canonical))
            .ok_or_else(|| InvalidCode(s.to_string()))
    }
}

impl Serialize for CodeLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CodeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_code_has_one_class() {
        let count = |k| CodeLabel::ALL.iter().filter(|c| c.class() == k).count();
        assert_eq!(count(CodeClass::Type1), 2);
        assert_eq!(count(CodeClass::Type2), 9);
        assert_eq!(count(CodeClass::Type2Star), 2);
    }

    #[test]
    fn parse_round_trip_and_aliases() {
        for c in CodeLabel::ALL {
            assert_eq!(c.as_str().parse::<CodeLabel>().unwrap(), c);
            assert_eq!(c.display_label().parse::<CodeLabel>().unwrap(), c);
        }
        assert!("9z".parse::<CodeLabel>().is_err());
        assert!("2c".parse::<CodeLabel>().is_err());
        let json = serde_json::to_string(&[CodeLabel::C2d, CodeLabel::C2fStar]).unwrap();
        assert_eq!(json, r#"["2d","2f_star"]"#);
    }
}
