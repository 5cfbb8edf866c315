use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use numscore::cot::{
    merge_self_labels, ConversationRecord, Forge, ResponseParser, Stage1Record, Stage2Record,
    Template, TemplateBank,
};
use numscore::score::QuantizerConfig;
use numscore::Error;

use crate::io::{
    csv_writer, id_field, open_input, open_output, read_jsonl, read_jsonl_with, write_jsonl,
    CliError, CliResult, LineError, Records,
};
use crate::{BuildCotArgs, Form, MergeLabelsArgs, ParseArgs};

fn load_bank(path: Option<&Path>) -> CliResult<TemplateBank> {
    match path {
        None => Ok(TemplateBank::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            TemplateBank::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

pub fn build(a: BuildCotArgs) -> CliResult {
    let forge = Forge::new(load_bank(a.templates.as_deref())?);
    let order = a.order.into();
    let source = a.input.display().to_string();
    let mut out = open_output(a.out.output.as_deref())?;
    let errors = if a.stage == 1 {
        let records = read_jsonl_with(&a.input, |v| {
            Stage1Record::from_json(&v).map_err(|e| e.to_string())
        })?;
        for (_, rec) in &records.items {
            for sample in forge.build_stage1(rec, a.mode.into(), order) {
                write_jsonl(&mut out, &ConversationRecord::from(&sample))?;
            }
        }
        records.errors
    } else {
        let mut forms: Vec<Form> = Vec::new();
        for f in &a.form {
            if matches!(f, Form::Attr | Form::Level | Form::Mix) {
                return Err(CliError::Usage(format!("--form {f:?} is a stage-1 form")));
            }
            if !forms.contains(f) {
                forms.push(*f);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let records = read_jsonl::<Stage2Record>(&a.input)?;
        let mut errors = records.errors;
        for (line, rec) in &records.items {
            let chosen = if a.sample_form {
                vec![forms[rng.random_range(0..forms.len())]]
            } else {
                forms.clone()
            };
            for form in chosen {
                match forge.build_stage2(
                    &rec.id,
                    &rec.score,
                    rec.attributes.as_ref(),
                    form.into(),
                    order,
                ) {
                    Ok(sample) => write_jsonl(&mut out, &ConversationRecord::from(&sample))?,
                    Err(e) => errors.push(LineError {
                        source: source.clone(),
                        line: *line,
                        message: e.to_string(),
                    }),
                }
            }
        }
        errors
    };
    out.flush()?;
    Records::<()>::finish(errors)
}

fn form_field(v: &Value) -> Result<Option<Template>, String> {
    match v.get("form") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => serde_json::from_value(Value::String(s.to_uppercase()))
            .map(Some)
            .map_err(|_| format!("unknown form {s:?}")),
        Some(_) => Err("form must be a string".into()),
    }
}

pub fn parse(a: ParseArgs) -> CliResult {
    let parser = ResponseParser::new(&load_bank(a.templates.as_deref())?);
    let default_form: Template = a.form.into();
    let records = read_jsonl_with(&a.input, |v| {
        let id = id_field(&v)?;
        let response = v
            .get("response")
            .and_then(Value::as_str)
            .ok_or("missing response text")?
            .to_string();
        Ok((id, response, form_field(&v)?))
    })?;
    let mut out = open_output(a.out.output.as_deref())?;
    for (_, (id, response, form)) in &records.items {
        let record = match parser.parse(response, form.unwrap_or(default_form)) {
            Ok(parsed) => {
                let mut v =
                    serde_json::to_value(&parsed).map_err(|e| CliError::Data(e.to_string()))?;
                v["id"] = json!(id);
                v["ok"] = json!(true);
                v
            }
            Err(Error::Extraction { diagnostics }) => {
                json!({"id": id, "ok": false, "diagnostics": diagnostics})
            }
            Err(e) => return Err(e.into()),
        };
        write_jsonl(&mut out, &record)?;
    }
    out.flush()?;
    Records::<()>::finish(records.errors)
}

pub fn merge(a: MergeLabelsArgs) -> CliResult {
    let cfg = QuantizerConfig::new(a.m, a.source_lo, a.source_hi)?;
    let merged = merge_self_labels(open_input(&a.mos)?, open_input(&a.attrs)?, &cfg).map_err(
        |e| match e {
            Error::Record {
                source_name,
                line,
                message,
            } => {
                let source = if source_name == "mos" {
                    &a.mos
                } else {
                    &a.attrs
                };
                CliError::Lines(vec![LineError {
                    source: source.display().to_string(),
                    line,
                    message,
                }])
            }
            other => other.into(),
        },
    )?;
    let mut out = open_output(a.out.output.as_deref())?;
    for rec in &merged.records {
        write_jsonl(&mut out, rec)?;
    }
    out.flush()?;
    let mut w = match &a.skipped {
        Some(p) => csv_writer(Some(p))?,
        None => csv::Writer::from_writer(Box::new(std::io::stderr()) as Box<dyn Write>),
    };
    if a.skipped.is_some() || !merged.skipped.is_empty() {
        w.write_record(["id", "reason"])?;
        for s in &merged.skipped {
            w.write_record([s.id.as_str(), s.reason])?;
        }
    }
    w.flush()?;
    Ok(())
}
