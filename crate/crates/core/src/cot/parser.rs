use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use super::{Diagnostic, Template, TemplateBank, FINAL_SCORE_KEY, REASON_LINE_KEY, SCORE_SENTENCE};
use crate::attributes::{Attribute, PartialAttributes};
use crate::error::{Error, Result};
use crate::score::{parse_score_native, ScoreValue};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ParsedResponse {
    pub score: Option<ScoreValue>,
    pub attributes: Option<PartialAttributes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Extracts scores and attributes from model responses.
#[derive(Debug, Clone)]
pub struct ResponseParser {
    score_sentence: Regex,
    final_score: Regex,
    attribute_line: Regex,
    sentences: Vec<(Attribute, Regex)>,
}

impl Default for ResponseParser {
    fn default() -> Self {
        Self::new(&TemplateBank::default())
    }
}

const NUMBER: &str = r"([0-9]+(?:\.[0-9]+)?)";

impl ResponseParser {
    pub fn new(bank: &TemplateBank) -> Self {
        let sentences = Attribute::ALL
            .into_iter()
            .map(|a| {
                let (before, after) = bank
                    .sentence(a)
                    .split_once("{value}")
                    .expect("bank validation guarantees one {value}");
                let pattern = format!("{}(.+?){}", regex::escape(before), regex::escape(after));
                (
                    a,
                    Regex::new(&pattern).expect("escaped template is a valid regex"),
                )
            })
            .collect();
        Self {
            score_sentence: Regex::new(&format!(
                r"{}\s*<?\s*{NUMBER}",
                regex::escape(SCORE_SENTENCE)
            ))
            .unwrap(),
            final_score: Regex::new(&format!(
                r"(?im)^\s*{}\s*:\s*{NUMBER}",
                regex::escape(FINAL_SCORE_KEY)
            ))
            .unwrap(),
            attribute_line: Regex::new(r"(?m)^\s*([A-Za-z][A-Za-z _-]*?)\s*:\s*(.+?)\s*$").unwrap(),
            sentences,
        }
    }

    /// Parses `text` as a response in `form`. Extraction fails only when
    /// the form calls for a score and none can be read, or when nothing at all
    /// is recovered.
    pub fn parse(&self, text: &str, form: Template) -> Result<ParsedResponse> {
        let mut out = ParsedResponse::default();
        let score_re = match form {
            Template::Q3r3 => Some(&self.final_score),
            Template::Q1r1 | Template::Q2r2 => Some(&self.score_sentence),
            _ => None,
        };
        if let Some(re) = score_re {
            out.score = self.last_score(re, text, &mut out.diagnostics);
        }
        match form {
            Template::Q1r1 => {}
            Template::Q2r2 => {
                out.attributes = Some(self.prose_attributes(text, &mut out.diagnostics))
            }
            _ => {
                let (attrs, reason) = self.line_attributes(text, &mut out.diagnostics);
                out.attributes = Some(attrs);
                out.reason = reason;
            }
        }
        if matches!(form, Template::Q2r2 | Template::Q3r3 | Template::Mix) {
            if let Some(attrs) = &out.attributes {
                for attr in attrs.missing() {
                    out.diagnostics.push(Diagnostic::new(attr.key(), "missing"));
                }
            }
        }
        if out
            .attributes
            .as_ref()
            .is_some_and(PartialAttributes::is_empty)
        {
            out.attributes = None;
        }
        let needs_score = form.is_stage2();
        if (needs_score && out.score.is_none()) || (out.score.is_none() && out.attributes.is_none())
        {
            if needs_score && out.score.is_none() {
                out.diagnostics.push(Diagnostic::new("score", "not-found"));
            }
            return Err(Error::Extraction {
                diagnostics: out.diagnostics,
            });
        }
        Ok(out)
    }

    fn last_score(
        &self,
        re: &Regex,
        text: &str,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<ScoreValue> {
        let found: Vec<&str> = re
            .captures_iter(text)
            .filter_map(|c| c.get(1).map(|m| m.as_str()))
            .collect();
        if found.len() > 1 {
            diags.push(Diagnostic::new("score", "multiple-score"));
        }
        let last = found.last()?;
        match parse_score_native(last) {
            Ok(v) => Some(v),
            Err(e) => {
                diags.push(Diagnostic::new("score", format!("invalid: {e}")));
                None
            }
        }
    }

    fn line_attributes(
        &self,
        text: &str,
        diags: &mut Vec<Diagnostic>,
    ) -> (PartialAttributes, Option<String>) {
        let mut attrs = PartialAttributes::default();
        let mut reason = None;
        for cap in self.attribute_line.captures_iter(text) {
            let (key, value) = (&cap[1], &cap[2]);
            if key.eq_ignore_ascii_case(FINAL_SCORE_KEY) {
                continue;
            }
            if key.eq_ignore_ascii_case(REASON_LINE_KEY) {
                reason = Some(value.to_string());
                continue;
            }
            let Some(attr) = Attribute::from_name(key) else {
                diags.push(Diagnostic::new(key, "unknown-attribute"));
                continue;
            };
            self.record(&mut attrs, attr, value, diags);
        }
        (attrs, reason)
    }

    fn prose_attributes(&self, text: &str, diags: &mut Vec<Diagnostic>) -> PartialAttributes {
        let mut attrs = PartialAttributes::default();
        for (attr, re) in &self.sentences {
            if let Some(value) = re.captures_iter(text).last().map(|c| c[1].to_string()) {
                self.record(&mut attrs, *attr, &value, diags);
            }
        }
        attrs
    }

    fn record(
        &self,
        attrs: &mut PartialAttributes,
        attr: Attribute,
        value: &str,
        diags: &mut Vec<Diagnostic>,
    ) {
        match attr.encode_label(value) {
            Ok(code) => {
                if attrs.get(attr).is_some() {
                    diags.push(Diagnostic::new(attr.key(), "duplicate"));
                }
                attrs.set(attr, code);
            }
            Err(_) => diags.push(Diagnostic::new(
                attr.key(),
                format!("invalid-value: {value}"),
            )),
        }
    }
}

/// Parses with the built-in template bank.
pub fn parse_response(text: &str, expected_form: Template) -> Result<ParsedResponse> {
    static PARSER: OnceLock<ResponseParser> = OnceLock::new();
    PARSER
        .get_or_init(ResponseParser::default)
        .parse(text, expected_form)
}
