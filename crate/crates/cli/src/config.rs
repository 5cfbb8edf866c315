//! `--config` support: JSON values become flags placed right after the
//! subcommand, so flags typed on the command line override them.
//!
//! Top-level keys apply to the running subcommand; an object keyed by a
//! subcommand name applies only to that subcommand.

use std::ffi::OsString;

use serde_json::{Map, Value};

const SUBCOMMANDS: [&str; 10] = [
    "quantize",
    "ncm",
    "corr",
    "sort-eval",
    "build-cot",
    "parse",
    "merge-labels",
    "fit-pls",
    "score-composite",
    "simulate",
];

/// Position of the subcommand and the `--config` path, if any.
fn scan(argv: &[OsString]) -> (Option<usize>, Option<OsString>) {
    let mut sub = None;
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy();
        if arg == "--config" {
            config = argv.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            config = Some(path.into());
        } else if sub.is_none() && SUBCOMMANDS.contains(&arg.as_ref()) {
            sub = Some(i);
        }
        i += 1;
    }
    (sub, config)
}

fn flag_values(key: &str, value: &Value, out: &mut Vec<OsString>) -> Result<(), String> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::Null | Value::Bool(false) => {}
        Value::Bool(true) => out.push(flag.into()),
        Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
        Value::String(s) => out.extend([flag.into(), s.into()]),
        Value::Array(items) => {
            for item in items {
                flag_values(key, item, out)?;
            }
        }
        Value::Object(_) => return Err(format!("config key {key:?} is not a subcommand section")),
    }
    Ok(())
}

fn section_flags(
    obj: &Map<String, Value>,
    sub: &str,
    out: &mut Vec<OsString>,
) -> Result<(), String> {
    for (key, value) in obj {
        let name = key.replace('_', "-");
        if let Value::Object(inner) = value {
            if !SUBCOMMANDS.contains(&name.as_str()) {
                return Err(format!("unknown config section {key:?}"));
            }
            if name == sub {
                for (k, v) in inner {
                    flag_values(k, v, out)?;
                }
            }
        } else {
            flag_values(key, value, out)?;
        }
    }
    Ok(())
}

pub fn expand(mut argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let (sub, config) = scan(&argv);
    let (Some(sub_at), Some(path)) = (sub, config) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let Value::Object(obj) = value else {
        return Err("config must be a JSON object".into());
    };
    let sub = argv[sub_at].to_string_lossy().into_owned();
    let mut flags = Vec::new();
    section_flags(&obj, &sub, &mut flags)?;
    argv.splice(sub_at + 1..sub_at + 1, flags);
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn sections_and_flags() {
        let obj: Map<String, Value> = serde_json::from_str(
            r#"{"m": 2, "ncm": {"window": 50}, "simulate": {"steps": 10}, "rescale": true, "form": ["q1r1", "q3r3"]}"#,
        )
        .unwrap();
        let mut out = Vec::new();
        section_flags(&obj, "ncm", &mut out).unwrap();
        // serde_json maps iterate in key order
        assert_eq!(
            out,
            args(&[
                "--form",
                "q1r1",
                "--form",
                "q3r3",
                "--m",
                "2",
                "--window",
                "50",
                "--rescale"
            ])
        );
        let bad: Map<String, Value> = serde_json::from_str(r#"{"nope": {"x": 1}}"#).unwrap();
        assert!(section_flags(&bad, "ncm", &mut Vec::new()).is_err());
    }

    #[test]
    fn scan_finds_subcommand_after_config() {
        let (sub, cfg) = scan(&args(&[
            "numscore", "--config", "c.json", "ncm", "--window", "3",
        ]));
        assert_eq!(sub, Some(3));
        assert_eq!(cfg, Some("c.json".into()));
        let (sub, cfg) = scan(&args(&["numscore", "quantize", "--config=x.json"]));
        assert_eq!((sub, cfg), (Some(1), Some("x.json".into())));
    }
}
