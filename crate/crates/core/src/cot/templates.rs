//! Plain-text template bank: `[name]` headers followed by free text.

use std::collections::BTreeMap;

use crate::attributes::{Attribute, Level};
use crate::error::{Error, Result};

pub const DEFAULT_BANK: &str = include_str!("../../templates/default.bank");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateBank {
    entries: BTreeMap<String, String>,
}

impl Default for TemplateBank {
    fn default() -> Self {
        Self::parse(DEFAULT_BANK).expect("built-in template bank is valid")
    }
}

impl TemplateBank {
    /// Parses a bank and checks that every required section is present.
    /// Lines starting with `#` outside a body are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut current: Option<(String, Vec<&str>)> = None;
        let flush = |cur: Option<(String, Vec<&str>)>,
                     entries: &mut BTreeMap<String, String>|
         -> Result<()> {
            if let Some((name, lines)) = cur {
                let body = lines.join("\n").trim().to_string();
                if body.is_empty() {
                    return Err(Error::Template(format!("section [{name}] is empty")));
                }
                if entries.insert(name.clone(), body).is_some() {
                    return Err(Error::Template(format!("duplicate section [{name}]")));
                }
            }
            Ok(())
        };
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                flush(current.take(), &mut entries)?;
                if name.is_empty() {
                    return Err(Error::Template(format!(
                        "line {}: empty section name",
                        lineno + 1
                    )));
                }
                current = Some((name.to_string(), Vec::new()));
            } else if let Some((_, lines)) = current.as_mut() {
                if !trimmed.starts_with('#') {
                    lines.push(line);
                }
            } else if !trimmed.is_empty() && !trimmed.starts_with('#') {
                return Err(Error::Template(format!(
                    "line {}: text outside any section",
                    lineno + 1
                )));
            }
        }
        flush(current.take(), &mut entries)?;
        let bank = Self { entries };
        bank.validate()?;
        Ok(bank)
    }

    fn validate(&self) -> Result<()> {
        for key in required_keys() {
            self.entries
                .get(&key)
                .ok_or_else(|| Error::Template(format!("missing section [{key}]")))?;
        }
        for attr in Attribute::ALL {
            let sentence = self.sentence(attr);
            if sentence.matches("{value}").count() != 1 {
                return Err(Error::Template(format!(
                    "[{}] must contain exactly one {{value}}",
                    sentence_key(attr)
                )));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> &str {
        // presence is checked in validate()
        &self.entries[key]
    }

    pub fn attribute_question(&self, attr: Attribute) -> &str {
        self.get(&format!("stage1.attr.{}", attr.key()))
    }

    pub fn reason_question(&self) -> &str {
        self.get("stage1.reason")
    }

    pub fn level_question(&self, level: Level) -> &str {
        self.get(&format!("stage1.level.{}", level.name()))
    }

    pub fn mix_question(&self) -> &str {
        self.get("stage1.mix")
    }

    pub fn stage2_question(&self, form: &str) -> &str {
        self.get(&format!("stage2.{form}"))
    }

    /// Prose sentence with a single `{value}` placeholder.
    pub fn sentence(&self, attr: Attribute) -> &str {
        self.get(&sentence_key(attr))
    }
}

fn sentence_key(attr: Attribute) -> String {
    format!("stage2.q2r2.sentence.{}", attr.key())
}

fn required_keys() -> Vec<String> {
    let mut keys: Vec<String> = Attribute::ALL
        .iter()
        .flat_map(|a| [format!("stage1.attr.{}", a.key()), sentence_key(*a)])
        .collect();
    keys.extend(
        Level::ALL
            .iter()
            .map(|l| format!("stage1.level.{}", l.name())),
    );
    keys.extend(
        [
            "stage1.reason",
            "stage1.mix",
            "stage2.q1r1",
            "stage2.q2r2",
            "stage2.q3r3",
        ]
        .map(String::from),
    );
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank_loads() {
        let bank = TemplateBank::default();
        assert_eq!(
            bank.stage2_question("q1r1"),
            "Rate the aesthetics and quality of this image briefly."
        );
        assert!(bank.sentence(Attribute::Exposure).contains("{value}"));
    }

    #[test]
    fn missing_and_malformed_sections() {
        let cut = DEFAULT_BANK.replace("[stage1.mix]", "[stage1.mixx]");
        assert!(
            matches!(TemplateBank::parse(&cut), Err(Error::Template(m)) if m.contains("stage1.mix"))
        );

        let dup = format!("{DEFAULT_BANK}\n[stage1.mix]\nagain\n");
        assert!(TemplateBank::parse(&dup).is_err());

        let stray = format!("stray line\n{DEFAULT_BANK}");
        assert!(TemplateBank::parse(&stray).is_err());

        let no_value = DEFAULT_BANK.replace("Its exposure is {value}.", "Its exposure is fine.");
        assert!(TemplateBank::parse(&no_value).is_err());
    }

    #[test]
    fn swapped_text_is_picked_up() {
        let custom = DEFAULT_BANK.replace(
            "Rate the aesthetics and quality of this image briefly.",
            "Score this photo.",
        );
        let bank = TemplateBank::parse(&custom).unwrap();
        assert_eq!(bank.stage2_question("q1r1"), "Score this photo.");
    }
}
