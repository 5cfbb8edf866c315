use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    ConversationSample, Payload, Template, TemplateBank, FINAL_SCORE_KEY, REASON_LINE_KEY,
    SCORE_SENTENCE,
};
use crate::attributes::{
    attribute_encode, Attribute, AttributeVector, Level, LevelOrder, REASON_KEY,
};
use crate::error::{Error, Result};
use crate::score::{render, ScoreValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage1Mode {
    Attr,
    Level,
    Mix,
    /// Mix, then every level, then every single attribute.
    Union,
}

/// A fully annotated image: coded attributes plus the free-text reason that
/// accompanies the high-level scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Record {
    pub id: String,
    pub attributes: AttributeVector,
    pub reason: String,
}

impl Stage1Record {
    /// Reads `{id, attributes: {...}, reason?}`; the reason may also sit
    /// inside the attribute map.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Usage("record is not a JSON object".into()))?;
        let id = id_of(obj.get("id"))?;
        let attrs = obj
            .get("attributes")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::MissingField("attributes".into()))?;
        let reason = obj
            .get(REASON_KEY)
            .or_else(|| attrs.get(REASON_KEY))
            .and_then(Value::as_str)
            .ok_or_else(|| Error::MissingField(REASON_KEY.into()))?;
        Ok(Self {
            id,
            attributes: attribute_encode(attrs)?,
            reason: reason.to_string(),
        })
    }
}

pub(crate) fn id_of(value: Option<&Value>) -> Result<String> {
    match value {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(Error::MissingField("id".into())),
    }
}

/// Stage-2 input: a grid score and optionally the self-labeled attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Record {
    pub id: String,
    pub score: ScoreValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Attr(Attribute),
    Reason,
}

fn level_items(level: Level) -> Vec<Item> {
    let mut items: Vec<Item> = Attribute::ALL
        .into_iter()
        .filter(|a| a.level() == level)
        .map(Item::Attr)
        .collect();
    if level == Level::High {
        items.push(Item::Reason);
    }
    items
}

pub(crate) fn attribute_line(attr: Attribute, code: u8) -> String {
    let label = attr
        .label(code)
        .expect("AttributeVector codes are in range");
    format!("{}: {}", attr.display_name(), label)
}

/// Deterministic conversation builder over a template bank.
#[derive(Debug, Clone, Default)]
pub struct Forge {
    bank: TemplateBank,
}

impl Forge {
    pub fn new(bank: TemplateBank) -> Self {
        Self { bank }
    }

    pub fn bank(&self) -> &TemplateBank {
        &self.bank
    }

    fn item_line(&self, rec: &Stage1Record, item: Item) -> String {
        match item {
            Item::Attr(a) => attribute_line(a, rec.attributes.get(a)),
            Item::Reason => format!("{REASON_LINE_KEY}: {}", rec.reason),
        }
    }

    fn block(&self, rec: &Stage1Record, items: &[Item]) -> String {
        items
            .iter()
            .map(|&i| self.item_line(rec, i))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn stage1_sample(
        &self,
        rec: &Stage1Record,
        template: Template,
        item: Option<String>,
        prompt: &str,
        response: String,
        order: LevelOrder,
    ) -> ConversationSample {
        ConversationSample {
            id: rec.id.clone(),
            template,
            item,
            prompt: prompt.to_string(),
            response,
            payload: Payload {
                score: None,
                attributes: Some(rec.attributes),
                reason: Some(rec.reason.clone()),
            },
            level_order: order,
        }
    }

    /// Attribute-training conversations for one annotated image.
    pub fn build_stage1(
        &self,
        rec: &Stage1Record,
        mode: Stage1Mode,
        order: LevelOrder,
    ) -> Vec<ConversationSample> {
        let mut out = Vec::new();
        let levels = order.levels();
        if matches!(mode, Stage1Mode::Mix | Stage1Mode::Union) {
            let items: Vec<Item> = levels.iter().flat_map(|&l| level_items(l)).collect();
            out.push(self.stage1_sample(
                rec,
                Template::Mix,
                None,
                self.bank.mix_question(),
                self.block(rec, &items),
                order,
            ));
        }
        if matches!(mode, Stage1Mode::Level | Stage1Mode::Union) {
            for level in levels {
                out.push(self.stage1_sample(
                    rec,
                    Template::Level,
                    Some(level.name().to_string()),
                    self.bank.level_question(level),
                    self.block(rec, &level_items(level)),
                    order,
                ));
            }
        }
        if matches!(mode, Stage1Mode::Attr | Stage1Mode::Union) {
            for item in levels.iter().flat_map(|&l| level_items(l)) {
                let (key, prompt) = match item {
                    Item::Attr(a) => (a.key(), self.bank.attribute_question(a)),
                    Item::Reason => (REASON_KEY, self.bank.reason_question()),
                };
                out.push(self.stage1_sample(
                    rec,
                    Template::Attr,
                    Some(key.to_string()),
                    prompt,
                    self.item_line(rec, item),
                    order,
                ));
            }
        }
        out
    }

    /// Score conversation in one of the stage-2 forms.
    pub fn build_stage2(
        &self,
        id: &str,
        score: &ScoreValue,
        attrs: Option<&AttributeVector>,
        form: Template,
        order: LevelOrder,
    ) -> Result<ConversationSample> {
        let score_text = render(score);
        let (prompt, response) = match form {
            Template::Q1r1 => (
                self.bank.stage2_question("q1r1"),
                format!("{SCORE_SENTENCE} {score_text}."),
            ),
            Template::Q2r2 | Template::Q3r3 => {
                let attrs = attrs.ok_or_else(|| {
                    Error::Usage(format!("{form:?} conversation for {id} needs attributes"))
                })?;
                let ordered = order.attributes();
                if form == Template::Q2r2 {
                    let mut sentences: Vec<String> = ordered
                        .iter()
                        .map(|&a| {
                            let label = a.label(attrs.get(a)).expect("codes are in range");
                            self.bank.sentence(a).replace("{value}", &label)
                        })
                        .collect();
                    sentences.push(format!("{SCORE_SENTENCE} {score_text}."));
                    (self.bank.stage2_question("q2r2"), sentences.join(" "))
                } else {
                    let mut lines: Vec<String> = ordered
                        .iter()
                        .map(|&a| attribute_line(a, attrs.get(a)))
                        .collect();
                    lines.push(format!("{FINAL_SCORE_KEY}: {score_text}"));
                    (self.bank.stage2_question("q3r3"), lines.join("\n"))
                }
            }
            other => {
                return Err(Error::Usage(format!("{other:?} is not a stage-2 form")));
            }
        };
        Ok(ConversationSample {
            id: id.to_string(),
            template: form,
            item: None,
            prompt: prompt.to_string(),
            response,
            payload: Payload {
                score: Some(score.clone()),
                attributes: if form == Template::Q1r1 {
                    None
                } else {
                    attrs.copied()
                },
                reason: None,
            },
            level_order: order,
        })
    }
}
