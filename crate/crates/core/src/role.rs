use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Perspective that authored a piece of feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    UserExperience,
    ProductVision,
    Engineering,
    Unified,
    Coordinator,
}

impl Role {
    /// The three experts of the multi-perspective panel, in merge order.
    pub const PANEL: [Role; 3] = [Role::UserExperience, Role::ProductVision, Role::Engineering];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::UserExperience => "user_experience",
            Role::ProductVision => "product_vision",
            Role::Engineering => "engineering",
            Role::Unified => "unified",
            Role::Coordinator => "coordinator",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Role::UserExperience => "User Experience",
            Role::ProductVision => "Product Vision",
            Role::Engineering => "Engineering",
            Role::Unified => "Design Expert",
            Role::Coordinator => "Lead Coordinator",
        }
    }

    /// Short prefix used in deterministic issue ids.
    pub fn initials(&self) -> &'static str {
        match self {
            Role::UserExperience => "ux",
            Role::ProductVision => "pv",
            Role::Engineering => "eng",
            Role::Unified => "uni",
            Role::Coordinator => "lc",
        }
    }

    /// What the role argues for when it disagrees with another role.
    pub fn stake(&self) -> &'static str {
        match self {
            Role::UserExperience => "accessibility",
            Role::ProductVision => "brand consistency",
            Role::Engineering => "implementation cost",
            Role::Unified => "overall design quality",
            Role::Coordinator => "the shared agenda",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "user_experience" => Ok(Role::UserExperience),
            "product_vision" => Ok(Role::ProductVision),
            "engineering" => Ok(Role::Engineering),
            "unified" => Ok(Role::Unified),
            "coordinator" => Ok(Role::Coordinator),
            _ => Err(format!("unknown role {s:?}")),
        }
    }
}

/// Issue severity. The derived order is `Low < Medium < High < Critical`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 4] = [
        Severity::Low,
        Severity::Medium,
        Severity::High,
        Severity::Critical,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
            Severity::Critical => "critical",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Severity::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown severity {s:?}"))
    }
}
