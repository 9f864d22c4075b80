//! The five bias-mitigation algorithms: suppression, reweighing, and
//! disparate-impact repair act on training data; calibrated-odds mixing
//! and per-group threshold adjustment act on model outputs.

mod cpp;
mod dir;
mod psta;
mod reweigh;
mod suppress;

pub use cpp::{cpp_fit, CppPolicy};
pub use dir::{dir_repair, DirRepair};
pub use psta::{
    apply_thresholds, psta_fit, PstaConfig, ThresholdPolicy, UnprivilegedSelection,
};
pub use reweigh::reweigh;
pub use suppress::{suppress, Suppressed};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MitigationMethod {
    Sup,
    Rw,
    Dir,
    Cpp,
    Psta,
}

impl MitigationMethod {
    pub fn name(&self) -> &'static str {
        match self {
            MitigationMethod::Sup => "SUP",
            MitigationMethod::Rw => "RW",
            MitigationMethod::Dir => "DIR",
            MitigationMethod::Cpp => "CPP",
            MitigationMethod::Psta => "PSTA",
        }
    }

    pub fn is_preprocessing(&self) -> bool {
        matches!(
            self,
            MitigationMethod::Sup | MitigationMethod::Rw | MitigationMethod::Dir
        )
    }
}

impl std::str::FromStr for MitigationMethod {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SUP" => Ok(MitigationMethod::Sup),
            "RW" => Ok(MitigationMethod::Rw),
            "DIR" => Ok(MitigationMethod::Dir),
            "CPP" => Ok(MitigationMethod::Cpp),
            "PSTA" => Ok(MitigationMethod::Psta),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown mitigation method '{other}'"
            ))),
        }
    }
}
