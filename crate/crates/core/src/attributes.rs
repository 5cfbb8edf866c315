//! The fine-grained attribute taxonomy and its ordinal coding.
//!
//! Each enumerated attribute is coded by its position in the option list,
//! starting at 1. Level shot is binary (`no = 0`, `yes = 1`) and the two
//! high-level scores keep their 1..=10 value.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Middle,
    Low,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::High, Level::Middle, Level::Low];

    pub fn name(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Middle => "middle",
            Level::Low => "low",
        }
    }
}

/// Order in which levels are visited when attributes are serialized into
/// conversations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LevelOrder {
    #[default]
    HighToLow,
    LowToHigh,
}

impl LevelOrder {
    pub fn levels(self) -> [Level; 3] {
        match self {
            LevelOrder::HighToLow => [Level::High, Level::Middle, Level::Low],
            LevelOrder::LowToHigh => [Level::Low, Level::Middle, Level::High],
        }
    }

    /// Coded attributes in level order, attribute order kept within a level.
    pub fn attributes(self) -> Vec<Attribute> {
        self.levels()
            .into_iter()
            .flat_map(|l| Attribute::ALL.into_iter().filter(move |a| a.level() == l))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    EyeCatching,
    Composition,
    SubjectIntegrity,
    SubjectClutter,
    BackgroundClutter,
    LevelShot,
    ImageClarity,
    Exposure,
    Saturation,
}

pub const ATTRIBUTE_COUNT: usize = 9;

const CLUTTER: &[&str] = &["cluttered", "moderately cluttered", "uncluttered"];
const INTEGRITY: &[&str] = &[
    "incomplete (mostly cut off or mostly obscured)",
    "partially complete (slightly cut off or slightly obscured)",
    "fully complete (no cuts or obstructions at all)",
];
const LEVEL_SHOT: &[&str] = &["no", "yes"];
const CLARITY: &[&str] = &[
    "very blurry",
    "moderately blurry",
    "moderately clear",
    "very clear",
];
const EXPOSURE: &[&str] = &[
    "overexposed",
    "slightly overexposed",
    "properly exposed",
    "slightly underexposed",
    "underexposed",
];
const SATURATION: &[&str] = &[
    "ultra-low saturation",
    "low saturation",
    "medium saturation",
    "high saturation",
    "ultra-high saturation",
];

/// How an attribute's values are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Integer score in `1..=max`.
    Score { max: u8 },
    /// Labels; code = `first_code + index`.
    Labels {
        options: &'static [&'static str],
        first_code: u8,
    },
}

impl Attribute {
    pub const ALL: [Attribute; ATTRIBUTE_COUNT] = [
        Attribute::EyeCatching,
        Attribute::Composition,
        Attribute::SubjectIntegrity,
        Attribute::SubjectClutter,
        Attribute::BackgroundClutter,
        Attribute::LevelShot,
        Attribute::ImageClarity,
        Attribute::Exposure,
        Attribute::Saturation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Attribute::EyeCatching => "eye_catching",
            Attribute::Composition => "composition",
            Attribute::SubjectIntegrity => "subject_integrity",
            Attribute::SubjectClutter => "subject_clutter",
            Attribute::BackgroundClutter => "background_clutter",
            Attribute::LevelShot => "level_shot",
            Attribute::ImageClarity => "image_clarity",
            Attribute::Exposure => "exposure",
            Attribute::Saturation => "saturation",
        }
    }

    /// Human-readable name used as the key in conversation text.
    pub fn display_name(self) -> &'static str {
        match self {
            Attribute::EyeCatching => "Eye-catching score",
            Attribute::Composition => "Composition score",
            Attribute::SubjectIntegrity => "Subject integrity",
            Attribute::SubjectClutter => "Subject clutter",
            Attribute::BackgroundClutter => "Background clutter",
            Attribute::LevelShot => "Level shot",
            Attribute::ImageClarity => "Image clarity",
            Attribute::Exposure => "Exposure",
            Attribute::Saturation => "Saturation",
        }
    }

    pub fn level(self) -> Level {
        match self {
            Attribute::EyeCatching | Attribute::Composition => Level::High,
            Attribute::SubjectIntegrity
            | Attribute::SubjectClutter
            | Attribute::BackgroundClutter
            | Attribute::LevelShot => Level::Middle,
            Attribute::ImageClarity | Attribute::Exposure | Attribute::Saturation => Level::Low,
        }
    }

    pub fn scale(self) -> Scale {
        let labels = |options, first_code| Scale::Labels {
            options,
            first_code,
        };
        match self {
            Attribute::EyeCatching | Attribute::Composition => Scale::Score { max: 10 },
            Attribute::SubjectIntegrity => labels(INTEGRITY, 1),
            Attribute::SubjectClutter | Attribute::BackgroundClutter => labels(CLUTTER, 1),
            Attribute::LevelShot => labels(LEVEL_SHOT, 0),
            Attribute::ImageClarity => labels(CLARITY, 1),
            Attribute::Exposure => labels(EXPOSURE, 1),
            Attribute::Saturation => labels(SATURATION, 1),
        }
    }

    pub fn code_range(self) -> std::ops::RangeInclusive<u8> {
        match self.scale() {
            Scale::Score { max } => 1..=max,
            Scale::Labels {
                options,
                first_code,
            } => first_code..=first_code + options.len() as u8 - 1,
        }
    }

    /// Matches the snake-case key or the display name, ignoring case,
    /// surrounding whitespace, and a trailing " score".
    pub fn from_name(name: &str) -> Option<Attribute> {
        let norm = normalize_name(name);
        Attribute::ALL
            .into_iter()
            .find(|a| normalize_name(a.key()) == norm || normalize_name(a.display_name()) == norm)
    }

    pub fn check_code(self, code: u8) -> Result<u8> {
        if self.code_range().contains(&code) {
            Ok(code)
        } else {
            Err(self.unknown(&code.to_string()))
        }
    }

    /// Code for a textual value: a label (full or the short form before a
    /// parenthetical), or the decimal code of a score attribute.
    pub fn encode_label(self, label: &str) -> Result<u8> {
        let trimmed = label.trim();
        match self.scale() {
            Scale::Score { .. } => trimmed
                .parse::<u8>()
                .ok()
                .filter(|c| self.code_range().contains(c))
                .ok_or_else(|| self.unknown(label)),
            Scale::Labels {
                options,
                first_code,
            } => {
                let wanted = trimmed.to_lowercase();
                options
                    .iter()
                    .position(|opt| *opt == wanted || short_label(opt) == wanted)
                    .map(|i| first_code + i as u8)
                    .ok_or_else(|| self.unknown(label))
            }
        }
    }

    /// Canonical text for a code: the full option label, or the score digits.
    pub fn label(self, code: u8) -> Result<String> {
        self.check_code(code)?;
        Ok(match self.scale() {
            Scale::Score { .. } => code.to_string(),
            Scale::Labels {
                options,
                first_code,
            } => options[(code - first_code) as usize].to_string(),
        })
    }

    /// Accepts a JSON number (a code) or a string (a label).
    pub fn encode_value(self, value: &Value) -> Result<u8> {
        match value {
            Value::String(s) => self.encode_label(s),
            Value::Number(n) => n
                .as_u64()
                .and_then(|c| u8::try_from(c).ok())
                .ok_or_else(|| self.unknown(&n.to_string()))
                .and_then(|c| self.check_code(c)),
            other => Err(self.unknown(&other.to_string())),
        }
    }

    fn unknown(self, label: &str) -> Error {
        Error::UnknownLabel {
            field: self.key().to_string(),
            label: label.to_string(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

fn normalize_name(name: &str) -> String {
    let lowered = name.trim().to_lowercase().replace(['_', '-'], " ");
    lowered
        .strip_suffix(" score")
        .unwrap_or(&lowered)
        .to_string()
}

fn short_label(option: &str) -> &str {
    option.split(" (").next().unwrap_or(option)
}

/// Key in attribute records that carries the free-text reasons for the
/// high-level judgments. It is stored and emitted but never coded.
pub const REASON_KEY: &str = "reason";

/// Ordinal codes of the nine coded attributes, in [`Attribute::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttributeVector {
    codes: [u8; ATTRIBUTE_COUNT],
}

impl AttributeVector {
    pub fn from_codes(codes: [u8; ATTRIBUTE_COUNT]) -> Result<Self> {
        for (attr, &code) in Attribute::ALL.iter().zip(&codes) {
            attr.check_code(code)?;
        }
        Ok(Self { codes })
    }

    pub fn get(&self, attr: Attribute) -> u8 {
        self.codes[attr.index()]
    }

    pub fn codes(&self) -> &[u8; ATTRIBUTE_COUNT] {
        &self.codes
    }

    pub fn as_features(&self) -> [f64; ATTRIBUTE_COUNT] {
        self.codes.map(f64::from)
    }

    pub fn with(mut self, attr: Attribute, code: u8) -> Result<Self> {
        self.codes[attr.index()] = attr.check_code(code)?;
        Ok(self)
    }
}

impl Serialize for AttributeVector {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(ATTRIBUTE_COUNT))?;
        for attr in Attribute::ALL {
            map.serialize_entry(attr.key(), &self.get(attr))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for AttributeVector {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let map = Map::<String, Value>::deserialize(deserializer)?;
        attribute_encode(&map).map_err(serde::de::Error::custom)
    }
}

/// Codes a labeled attribute record. Values may be labels or codes; the
/// reason key is ignored, any other unknown key is rejected.
pub fn attribute_encode(raw: &Map<String, Value>) -> Result<AttributeVector> {
    let partial = PartialAttributes::from_record(raw)?;
    partial.complete()
}

/// Attribute codes where some fields may be absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartialAttributes {
    codes: [Option<u8>; ATTRIBUTE_COUNT],
}

impl PartialAttributes {
    pub fn from_record(raw: &Map<String, Value>) -> Result<Self> {
        let mut out = Self::default();
        for (key, value) in raw {
            if key == REASON_KEY {
                continue;
            }
            let attr = Attribute::from_name(key).ok_or_else(|| Error::UnknownLabel {
                field: "attribute".into(),
                label: key.clone(),
            })?;
            out.set(attr, attr.encode_value(value)?);
        }
        Ok(out)
    }

    pub fn get(&self, attr: Attribute) -> Option<u8> {
        self.codes[attr.index()]
    }

    pub fn set(&mut self, attr: Attribute, code: u8) {
        self.codes[attr.index()] = Some(code);
    }

    pub fn is_empty(&self) -> bool {
        self.codes.iter().all(Option::is_none)
    }

    pub fn missing(&self) -> Vec<Attribute> {
        Attribute::ALL
            .into_iter()
            .filter(|a| self.get(*a).is_none())
            .collect()
    }

    pub fn complete(&self) -> Result<AttributeVector> {
        if let Some(attr) = self.missing().first() {
            return Err(Error::MissingField(attr.key().to_string()));
        }
        AttributeVector::from_codes(self.codes.map(|c| c.unwrap_or_default()))
    }
}

impl From<AttributeVector> for PartialAttributes {
    fn from(v: AttributeVector) -> Self {
        Self {
            codes: v.codes.map(Some),
        }
    }
}

impl Serialize for PartialAttributes {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let present: Vec<_> = Attribute::ALL
            .into_iter()
            .filter_map(|a| self.get(a).map(|c| (a, c)))
            .collect();
        let mut map = serializer.serialize_map(Some(present.len()))?;
        for (attr, code) in present {
            map.serialize_entry(attr.key(), &code)?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn paper_coding_examples() {
        assert_eq!(
            Attribute::BackgroundClutter
                .encode_label("cluttered")
                .unwrap(),
            1
        );
        assert_eq!(
            Attribute::BackgroundClutter
                .encode_label("moderately cluttered")
                .unwrap(),
            2
        );
        assert_eq!(
            Attribute::BackgroundClutter
                .encode_label("uncluttered")
                .unwrap(),
            3
        );
        assert_eq!(
            Attribute::SubjectIntegrity
                .encode_label("fully complete (no cuts or obstructions at all)")
                .unwrap(),
            3
        );
        assert_eq!(Attribute::LevelShot.encode_label("yes").unwrap(), 1);
        assert_eq!(Attribute::LevelShot.encode_label("no").unwrap(), 0);
        assert_eq!(Attribute::Exposure.encode_label("overexposed").unwrap(), 1);
        assert_eq!(Attribute::Exposure.encode_label("underexposed").unwrap(), 5);
    }

    #[test]
    fn short_labels_and_case_are_accepted() {
        assert_eq!(
            Attribute::SubjectIntegrity
                .encode_label("Partially complete")
                .unwrap(),
            2
        );
        assert_eq!(
            Attribute::ImageClarity
                .encode_label(" Very Clear ")
                .unwrap(),
            4
        );
    }

    #[test]
    fn unknown_label_names_field() {
        match Attribute::Exposure.encode_label("glowing") {
            Err(Error::UnknownLabel { field, label }) => {
                assert_eq!(field, "exposure");
                assert_eq!(label, "glowing");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Attribute::Composition.encode_label("11").is_err());
        assert!(Attribute::Composition.encode_label("0").is_err());
    }

    #[test]
    fn labels_and_codes_are_a_bijection() {
        for attr in Attribute::ALL {
            let mut seen = std::collections::HashSet::new();
            for code in attr.code_range() {
                let label = attr.label(code).unwrap();
                assert!(
                    seen.insert(label.clone()),
                    "{attr}: duplicate label {label}"
                );
                assert_eq!(attr.encode_label(&label).unwrap(), code);
            }
            let below = attr.code_range().start().wrapping_sub(1);
            assert!(attr.label(below).is_err());
            assert!(attr.label(attr.code_range().end() + 1).is_err());
        }
    }

    #[test]
    fn names_resolve() {
        assert_eq!(
            Attribute::from_name("Eye-catching score"),
            Some(Attribute::EyeCatching)
        );
        assert_eq!(
            Attribute::from_name("eye_catching"),
            Some(Attribute::EyeCatching)
        );
        assert_eq!(
            Attribute::from_name("background clutter"),
            Some(Attribute::BackgroundClutter)
        );
        assert_eq!(Attribute::from_name("Backgound clutter"), None);
    }

    #[test]
    fn encode_record() {
        let raw = json!({
            "eye_catching": 7,
            "composition": "6",
            "subject_integrity": "fully complete (no cuts or obstructions at all)",
            "subject_clutter": "uncluttered",
            "background_clutter": 2,
            "level_shot": "yes",
            "image_clarity": "moderately clear",
            "exposure": "properly exposed",
            "saturation": "medium saturation",
            "reason": "Bright storefront centred in frame."
        });
        let v = attribute_encode(raw.as_object().unwrap()).unwrap();
        assert_eq!(v.codes(), &[7, 6, 3, 3, 2, 1, 3, 3, 3]);

        let round: AttributeVector =
            serde_json::from_value(serde_json::to_value(v).unwrap()).unwrap();
        assert_eq!(round, v);

        let mut missing = raw.as_object().unwrap().clone();
        missing.remove("exposure");
        assert_eq!(
            attribute_encode(&missing),
            Err(Error::MissingField("exposure".into()))
        );
        let mut typo = raw.as_object().unwrap().clone();
        typo.insert("sharpness".into(), json!(3));
        assert!(matches!(
            attribute_encode(&typo),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn level_orders() {
        let high = LevelOrder::HighToLow.attributes();
        assert_eq!(high.first(), Some(&Attribute::EyeCatching));
        assert_eq!(high.last(), Some(&Attribute::Saturation));
        let low = LevelOrder::LowToHigh.attributes();
        assert_eq!(
            low[..3],
            [
                Attribute::ImageClarity,
                Attribute::Exposure,
                Attribute::Saturation
            ]
        );
        assert_eq!(low.last(), Some(&Attribute::Composition));
    }
}
