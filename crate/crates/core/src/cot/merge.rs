use std::collections::HashMap;
use std::io::BufRead;

use serde::Serialize;
use serde_json::Value;

use super::builder::id_of;
use super::Stage2Record;
use crate::attributes::{attribute_encode, AttributeVector};
use crate::error::{Error, Result};
use crate::score::QuantizerConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedId {
    pub id: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergeOutput {
    /// Joined records, in MOS-file order.
    pub records: Vec<Stage2Record>,
    /// MOS-only ids (file order) followed by attribute-only ids (file order).
    pub skipped: Vec<SkippedId>,
}

fn record_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Record {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Non-blank JSON lines as `(line number, object)`.
fn json_lines<'a, R: BufRead + 'a>(
    reader: R,
    source: &'a str,
) -> impl Iterator<Item = Result<(usize, serde_json::Map<String, Value>)>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(record_err(source, lineno, e.to_string()))),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => Ok((lineno, obj)),
            Ok(_) => Err(record_err(source, lineno, "expected a JSON object")),
            Err(e) => Err(record_err(source, lineno, e.to_string())),
        })
    })
}

/// Inner-joins MOS records `{id, mos}` with self-labeled attribute records
/// `{id, attributes}` and maps each MOS onto the digit grid.
///
/// The attribute file is hashed; the MOS file is streamed.
pub fn merge_self_labels<M: BufRead, A: BufRead>(
    mos: M,
    attrs: A,
    cfg: &QuantizerConfig,
) -> Result<MergeOutput> {
    let mut by_id: HashMap<String, (usize, AttributeVector)> = HashMap::new();
    let mut attr_order = Vec::new();
    for item in json_lines(attrs, "attributes") {
        let (line, obj) = item?;
        let id = id_of(obj.get("id")).map_err(|e| record_err("attributes", line, e.to_string()))?;
        let raw = obj
            .get("attributes")
            .and_then(Value::as_object)
            .ok_or_else(|| record_err("attributes", line, "missing attributes object"))?;
        let vector =
            attribute_encode(raw).map_err(|e| record_err("attributes", line, e.to_string()))?;
        if by_id
            .insert(id.clone(), (attr_order.len(), vector))
            .is_some()
        {
            return Err(record_err("attributes", line, format!("duplicate id {id}")));
        }
        attr_order.push(id);
    }

    let mut out = MergeOutput::default();
    let mut matched = vec![false; attr_order.len()];
    let mut seen = std::collections::HashSet::new();
    for item in json_lines(mos, "mos") {
        let (line, obj) = item?;
        let id = id_of(obj.get("id")).map_err(|e| record_err("mos", line, e.to_string()))?;
        if !seen.insert(id.clone()) {
            return Err(record_err("mos", line, format!("duplicate id {id}")));
        }
        let raw = obj
            .get("mos")
            .and_then(Value::as_f64)
            .ok_or_else(|| record_err("mos", line, "missing numeric mos"))?;
        let score = cfg
            .to_grid(raw)
            .map_err(|e| record_err("mos", line, e.to_string()))?;
        match by_id.get(&id) {
            Some(&(pos, attributes)) => {
                matched[pos] = true;
                out.records.push(Stage2Record {
                    id,
                    score,
                    attributes: Some(attributes),
                });
            }
            None => out.skipped.push(SkippedId {
                id,
                reason: "no attributes",
            }),
        }
    }
    out.skipped.extend(
        attr_order
            .into_iter()
            .zip(matched)
            .filter(|(_, m)| !m)
            .map(|(id, _)| SkippedId {
                id,
                reason: "no mos",
            }),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::render;

    const ATTRS: &str = r#"{"eye_catching":7,"composition":6,"subject_integrity":3,"subject_clutter":3,"background_clutter":2,"level_shot":1,"image_clarity":3,"exposure":3,"saturation":3}"#;

    fn attr_line(id: &str) -> String {
        format!(r#"{{"id":"{id}","attributes":{ATTRS}}}"#)
    }

    fn cfg() -> QuantizerConfig {
        QuantizerConfig::new(3, 0.0, 100.0).unwrap()
    }

    #[test]
    fn disjoint_ids_are_all_skipped() {
        let mos = r#"{"id":"a","mos":50}
{"id":"b","mos":60}"#;
        let attrs = [attr_line("c"), attr_line("d")].join("\n");
        let out = merge_self_labels(mos.as_bytes(), attrs.as_bytes(), &cfg()).unwrap();
        assert!(out.records.is_empty());
        let ids: Vec<_> = out.skipped.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c", "d"]);
    }

    #[test]
    fn partial_overlap() {
        let mos = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|id| format!(r#"{{"id":"{id}","mos":67.3}}"#))
            .collect::<Vec<_>>()
            .join("\n");
        let attrs = ["c", "d", "e", "f", "g"].map(attr_line).join("\n");
        let out = merge_self_labels(mos.as_bytes(), attrs.as_bytes(), &cfg()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.skipped.len(), 4);
        // 67.3 / 100 * 9.99 = 6.72327 -> 6.72
        assert_eq!(render(&out.records[0].score), "6.72");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mos = "{\"id\":\"a\",\"mos\":50}\n\n{not json";
        match merge_self_labels(mos.as_bytes(), "".as_bytes(), &cfg()) {
            Err(Error::Record {
                source_name, line, ..
            }) => {
                assert_eq!(source_name, "mos");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let out_of_range = "{\"id\":\"a\",\"mos\":150}";
        assert!(matches!(
            merge_self_labels(out_of_range.as_bytes(), "".as_bytes(), &cfg()),
            Err(Error::Record { line: 1, .. })
        ));
        let dup = [attr_line("a"), attr_line("a")].join("\n");
        assert!(merge_self_labels("".as_bytes(), dup.as_bytes(), &cfg()).is_err());
    }
}
