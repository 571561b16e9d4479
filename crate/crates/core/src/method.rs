//! Names of the analysis methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sobol,
    Fast,
    Morris,
    Shapley,
    Delta,
    Ale,
    Dgsm,
    Dsd,
}

impl Method {
    pub const ALL: [Method; 8] =
        [Method::Sobol, Method::Fast, Method::Morris, Method::Shapley, Method::Delta, Method::Ale, Method::Dgsm, Method::Dsd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sobol => "sobol",
            Method::Fast => "fast",
            Method::Morris => "morris",
            Method::Shapley => "shapley",
            Method::Delta => "delta",
            Method::Ale => "ale",
            Method::Dgsm => "dgsm",
            Method::Dsd => "dsd",
        }
    }

    /// Stable label for seed derivation.
    pub fn id(&self) -> u64 {
        *self as u64 + 1
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| Error::config(format!("unknown method `{s}` (sobol | fast | morris | shapley | delta | ale | dgsm | dsd)")))
    }
}
