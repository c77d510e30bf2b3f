use std::fmt;

use serde::{Deserialize, Serialize};

/// Change in self-reported pain between baseline and the 12-month visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PainCategory {
    Worsened,
    Improved,
    NoChange,
}

/// Minimum absolute score change that counts as worsened or improved.
pub const PAIN_CHANGE_THRESHOLD: i64 = 2;

impl PainCategory {
    pub const ALL: [PainCategory; 3] = [
        PainCategory::Worsened,
        PainCategory::Improved,
        PainCategory::NoChange,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PainCategory::Worsened => "worsened",
            PainCategory::Improved => "improved",
            PainCategory::NoChange => "no_change",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for PainCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn categorize_pain(baseline: i64, followup: i64) -> PainCategory {
    let delta = followup - baseline;
    if delta >= PAIN_CHANGE_THRESHOLD {
        PainCategory::Worsened
    } else if delta <= -PAIN_CHANGE_THRESHOLD {
        PainCategory::Improved
    } else {
        PainCategory::NoChange
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PainRecord {
    pub subject_id: String,
    pub baseline_pain: i64,
    pub followup_pain: i64,
}

impl PainRecord {
    pub fn new(subject_id: impl Into<String>, baseline_pain: i64, followup_pain: i64) -> Self {
        Self {
            subject_id: subject_id.into(),
            baseline_pain,
            followup_pain,
        }
    }

    pub fn category(&self) -> PainCategory {
        categorize_pain(self.baseline_pain, self.followup_pain)
    }
}
