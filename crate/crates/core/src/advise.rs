//! Decision tree for choosing an estimation strategy.

use serde::{Deserialize, Serialize};

/// What the analyst knows about the study design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignFacts {
    pub selection: bool,
    pub exogenous: bool,
    pub iv: bool,
    pub panel: bool,
    pub mts: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recommendation {
    SampleSelection,
    SampleAnalogs,
    Instruments,
    Panel,
    Bounds,
    NoMethod,
}

impl Recommendation {
    pub fn text(&self) -> &'static str {
        match self {
            Recommendation::SampleSelection => "sample-selection bounds (external method)",
            Recommendation::SampleAnalogs => "direct sample analogs (exogenous treatment)",
            Recommendation::Instruments => "IV persuasion methods (external)",
            Recommendation::Panel => "panel/DID persuasion methods (external)",
            Recommendation::Bounds => "sharp MTR/MTS bounds (this tool: bounds, estimate)",
            Recommendation::NoMethod => {
                "no covered method — consider collecting instruments or panel data"
            }
        }
    }
}

impl std::fmt::Display for Recommendation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.text())
    }
}

/// Walks the tree; earlier questions take precedence.
pub fn advise(facts: &DesignFacts) -> Recommendation {
    if facts.selection {
        Recommendation::SampleSelection
    } else if facts.exogenous {
        Recommendation::SampleAnalogs
    } else if facts.iv {
        Recommendation::Instruments
    } else if facts.panel {
        Recommendation::Panel
    } else if facts.mts {
        Recommendation::Bounds
    } else {
        Recommendation::NoMethod
    }
}
