//! Line format for digit-logit exports, shared by real model dumps and the
//! simulator.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expectation::{DigitLogitSeq, LogitRow};
use crate::score::{parse_score_native, render};

/// `{"id", "gt", "logits", "step"?}` with one ten-class row per digit of `gt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    pub id: String,
    /// Ground truth in render form; its digit count fixes `m`.
    pub gt: String,
    pub logits: Vec<LogitRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
}

impl LogitRecord {
    pub fn from_seq(id: impl Into<String>, seq: &DigitLogitSeq, step: Option<u64>) -> Self {
        Self {
            id: id.into(),
            gt: render(seq.gt()),
            logits: seq.logits().to_vec(),
            step,
        }
    }

    pub fn to_seq(&self) -> Result<DigitLogitSeq> {
        DigitLogitSeq::new(self.logits.clone(), parse_score_native(&self.gt)?)
    }
}
