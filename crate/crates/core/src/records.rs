//! Input records: builds, work items and the people attached to them.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque contributor identifier. Comparison is exact and case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContributorId(String);

impl ContributorId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::schema("contributor id must be non-empty"));
        }
        Ok(ContributorId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ContributorId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        ContributorId::new(value)
    }
}

impl From<ContributorId> for String {
    fn from(id: ContributorId) -> Self {
        id.0
    }
}

impl fmt::Display for ContributorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Build outcome, the class label of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Fail,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Fail => "fail",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "success" => Ok(Outcome::Success),
            "fail" => Ok(Outcome::Fail),
            other => Err(Error::schema(format!("unknown outcome {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildKind {
    Nightly,
    Integration,
    Continuous,
    Connector,
}

/// One comment on a work item's thread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub author: ContributorId,
    #[serde(rename = "seq")]
    pub sequence_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItemRecord {
    pub work_item_id: String,
    pub creator: ContributorId,
    #[serde(default)]
    pub comments: Vec<Comment>,
    #[serde(default)]
    pub subscribers: Vec<ContributorId>,
    #[serde(default)]
    pub committers: Vec<ContributorId>,
    #[serde(default)]
    pub change_set_count: u64,
}

impl WorkItemRecord {
    /// Checks comment ordering and set uniqueness.
    pub fn validate(&self) -> Result<()> {
        if self.work_item_id.is_empty() {
            return Err(Error::schema("work_item_id must be non-empty"));
        }
        for pair in self.comments.windows(2) {
            if pair[1].sequence_index <= pair[0].sequence_index {
                return Err(Error::schema(format!(
                    "work item {}: comment seq {} does not follow {}",
                    self.work_item_id, pair[1].sequence_index, pair[0].sequence_index
                )));
            }
        }
        check_unique(&self.work_item_id, "subscribers", &self.subscribers)?;
        check_unique(&self.work_item_id, "committers", &self.committers)?;
        Ok(())
    }

    /// Every contributor attached to this item in one of the four used roles.
    pub fn participants(&self) -> impl Iterator<Item = &ContributorId> {
        std::iter::once(&self.creator)
            .chain(self.comments.iter().map(|c| &c.author))
            .chain(self.subscribers.iter())
            .chain(self.committers.iter())
    }
}

fn check_unique(item: &str, field: &str, ids: &[ContributorId]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::schema(format!(
                "work item {item}: duplicate {id} in {field}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildRecord {
    pub build_id: String,
    pub started_at: DateTime<Utc>,
    pub kind: BuildKind,
    pub outcome: Outcome,
    #[serde(default)]
    pub work_item_ids: Vec<String>,
}
