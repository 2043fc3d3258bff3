//! Shared certificate vocabulary: verdicts, assumption ledger entries,
//! branch logs, and witnesses.

use serde::{Deserialize, Serialize};

use crate::linalg::Vector;
use crate::scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inapplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoVerdict {
    Holds,
    Fails,
    Undetermined,
    Inapplicable,
}

/// How a hypothesis of a theorem was discharged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssumptionStatus {
    /// Checked exactly from the instance data.
    Verified,
    /// Checked exactly and found false.
    Violated,
    /// Taken from the instance file's assertion block.
    Asserted,
    /// Asserted false in the instance file.
    AssertedFalse,
    /// Neither decidable nor asserted.
    Unknown,
}

impl AssumptionStatus {
    pub fn permits(self) -> bool {
        matches!(
            self,
            AssumptionStatus::Verified | AssumptionStatus::Asserted
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionRecord {
    pub name: String,
    pub status: AssumptionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AssumptionRecord {
    pub fn new(name: &str, status: AssumptionStatus) -> Self {
        AssumptionRecord {
            name: name.to_string(),
            status,
            note: None,
        }
    }

    pub fn with_note(name: &str, status: AssumptionStatus, note: &str) -> Self {
        AssumptionRecord {
            name: name.to_string(),
            status,
            note: Some(note.to_string()),
        }
    }
}

/// Rational vector rendered as canonical strings for the report.
pub fn render_vector(v: &[scalar::Scalar]) -> Vec<String> {
    v.iter().map(scalar::render).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    /// Direction in the ambient (δx, δy) space, canonical rational strings.
    pub direction: Vec<String>,
    /// Auxiliary variables of the certifier system (multiplier blocks),
    /// when the system carries them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<Vec<String>>,
    /// Re-substitution check of the witness into its branch system.
    pub verified: bool,
}

impl Witness {
    pub fn direction_scalars(&self) -> crate::Result<Vector> {
        self.direction.iter().map(|s| scalar::parse(s)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRecord {
    /// Canonical branch label, e.g. a complementarity sign pattern or a
    /// value-function generator index.
    pub label: String,
    pub trivial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Outcome of one first-order certifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub condition: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub assumptions: Vec<AssumptionRecord>,
    pub branches: Vec<BranchRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn inapplicable(condition: &str, reason: &str) -> Self {
        Certificate {
            condition: condition.to_string(),
            verdict: Verdict::Inapplicable,
            witness: None,
            assumptions: Vec::new(),
            branches: Vec::new(),
            notes: vec![reason.to_string()],
        }
    }
}
