//! Training-conversation forging and response extraction.
//!
//! Stage 1 teaches attribute extraction (one attribute, one level, or all
//! attributes per conversation). Stage 2 pairs a score with a direct answer
//! (Q1R1), a prose chain of thought (Q2R2) or a line-oriented chain of thought
//! meant for regex extraction (Q3R3).

mod builder;
mod merge;
mod parser;
mod templates;

use serde::{Deserialize, Serialize};

pub use builder::{Forge, Stage1Mode, Stage1Record, Stage2Record};
pub use merge::{merge_self_labels, MergeOutput, SkippedId};
pub use parser::{parse_response, ParsedResponse, ResponseParser};
pub use templates::{TemplateBank, DEFAULT_BANK};

use crate::attributes::{AttributeVector, LevelOrder};
use crate::score::ScoreValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Template {
    Attr,
    Level,
    Mix,
    Q1r1,
    Q2r2,
    Q3r3,
}

impl Template {
    pub fn is_stage2(self) -> bool {
        matches!(self, Template::Q1r1 | Template::Q2r2 | Template::Q3r3)
    }
}

/// Structured content a conversation was generated from.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Payload {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationSample {
    pub id: String,
    pub template: Template,
    /// Attribute key or level name a partial stage-1 sample covers.
    pub item: Option<String>,
    pub prompt: String,
    pub response: String,
    pub payload: Payload,
    pub level_order: LevelOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationMeta {
    pub template: Template,
    pub level_order: LevelOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<String>,
}

/// Line format for conversation output files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub messages: Vec<Message>,
    pub meta: ConversationMeta,
}

impl From<&ConversationSample> for ConversationRecord {
    fn from(s: &ConversationSample) -> Self {
        Self {
            id: s.id.clone(),
            messages: vec![
                Message {
                    role: "user".into(),
                    content: s.prompt.clone(),
                },
                Message {
                    role: "assistant".into(),
                    content: s.response.clone(),
                },
            ],
            meta: ConversationMeta {
                template: s.template,
                level_order: s.level_order,
                item: s.item.clone(),
            },
        }
    }
}

/// One extraction problem, reported instead of guessed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub issue: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, issue: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            issue: issue.into(),
        }
    }
}

/// Key used for the reason line in attribute blocks.
pub const REASON_LINE_KEY: &str = "Reason";
/// Key of the closing line of a Q3R3 block.
pub const FINAL_SCORE_KEY: &str = "Final score";
/// Lead-in of the direct-answer sentence.
pub const SCORE_SENTENCE: &str = "The score of this image is";
