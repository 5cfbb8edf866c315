use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use numscore::attributes::AttributeVector;
use numscore::rank::{
    attr_mos_ranking, mean_sort_metrics, per_attribute_corr, plcc, sort_metrics, srcc,
    PairedSeries, SortTrial,
};
use numscore::Error;

use crate::io::{
    attributes_field, cell, csv_writer, f64_field, id_field, open_output, read_jsonl_with,
    write_jsonl, CliError, CliResult, LineError,
};
use crate::{CorrArgs, SortEvalArgs};

fn defined(r: numscore::Result<f64>) -> CliResult<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedCorrelation(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn corr(a: CorrArgs) -> CliResult {
    let out = a.out.output.as_deref();
    if let Some(path) = &a.input {
        let rows = read_jsonl_with(path, |v| {
            Ok((f64_field(&v, "pred")?, f64_field(&v, "mos")?))
        })?
        .all()?;
        let (x, y): (Vec<f64>, Vec<f64>) = rows.into_iter().map(|(_, p)| p).unzip();
        let n = x.len();
        let s = PairedSeries::new(x, y)?;
        let mut w = csv_writer(out)?;
        w.write_record(["n", "srcc", "plcc"])?;
        w.write_record([
            n.to_string(),
            cell(defined(srcc(&s))?),
            cell(defined(plcc(&s))?),
        ])?;
        w.flush()?;
        return Ok(());
    }
    if let (Some(pred_path), Some(gt_path)) = (&a.pred_attrs, &a.gt_attrs) {
        let read = |p| read_jsonl_with(p, |v| Ok((id_field(&v)?, attributes_field(&v)?)));
        let pred = read(pred_path)?.all()?;
        let gt = read(gt_path)?.all()?;
        let (pred, gt) = align(
            pred,
            gt,
            &pred_path.display().to_string(),
            &gt_path.display().to_string(),
        )?;
        let table = per_attribute_corr(&pred, &gt)?;
        let mut w = csv_writer(out)?;
        w.write_record(["attribute", "srcc", "plcc"])?;
        for row in &table.rows {
            w.write_record([
                row.attribute.key().to_string(),
                cell(row.srcc),
                cell(row.plcc),
            ])?;
        }
        w.write_record([
            "average".to_string(),
            cell(table.average_srcc),
            cell(table.average_plcc),
        ])?;
        w.flush()?;
        return Ok(());
    }
    if let Some(path) = &a.attrs {
        let rows =
            read_jsonl_with(path, |v| Ok((attributes_field(&v)?, f64_field(&v, "mos")?)))?.all()?;
        let (attrs, mos): (Vec<AttributeVector>, Vec<f64>) =
            rows.into_iter().map(|(_, p)| p).unzip();
        let ranking = attr_mos_ranking(&attrs, &mos, a.top)?;
        if !ranking.skipped.is_empty() {
            let names: Vec<&str> = ranking.skipped.iter().map(|s| s.key()).collect();
            eprintln!(
                "note: constant attribute columns skipped: {}",
                names.join(", ")
            );
        }
        let mut w = csv_writer(out)?;
        w.write_record(["rank", "attribute", "pearson"])?;
        for (i, (attr, r)) in ranking.top.iter().enumerate() {
            w.write_record([(i + 1).to_string(), attr.key().to_string(), r.to_string()])?;
        }
        w.flush()?;
        return Ok(());
    }
    Err(CliError::Usage(
        "corr needs --input, --pred-attrs with --gt-attrs, or --attrs".into(),
    ))
}

type Keyed = Vec<(usize, (String, AttributeVector))>;

/// Pairs predicted and ground-truth vectors by id, in prediction order.
fn align(
    pred: Keyed,
    gt: Keyed,
    pred_src: &str,
    gt_src: &str,
) -> CliResult<(Vec<AttributeVector>, Vec<AttributeVector>)> {
    let mut errors = Vec::new();
    let mut by_id = HashMap::new();
    for (line, (id, v)) in gt {
        if by_id.insert(id.clone(), (line, v, false)).is_some() {
            errors.push(LineError {
                source: gt_src.to_string(),
                line,
                message: format!("duplicate id {id}"),
            });
        }
    }
    let mut pairs = (Vec::new(), Vec::new());
    for (line, (id, v)) in pred {
        match by_id.get_mut(&id) {
            Some((_, g, used)) if !*used => {
                *used = true;
                pairs.0.push(v);
                pairs.1.push(*g);
            }
            Some(_) => errors.push(LineError {
                source: pred_src.to_string(),
                line,
                message: format!("duplicate id {id}"),
            }),
            None => errors.push(LineError {
                source: pred_src.to_string(),
                line,
                message: format!("id {id} has no ground truth"),
            }),
        }
    }
    let mut unmatched: Vec<_> = by_id
        .into_iter()
        .filter(|(_, (_, _, used))| !used)
        .collect();
    unmatched.sort_by_key(|(_, (line, _, _))| *line);
    for (id, (line, _, _)) in unmatched {
        errors.push(LineError {
            source: gt_src.to_string(),
            line,
            message: format!("id {id} has no prediction"),
        });
    }
    if errors.is_empty() {
        Ok(pairs)
    } else {
        Err(CliError::Lines(errors))
    }
}

/// Numbers in the last bracketed list of `text`, or in all of it when there
/// is no bracket.
pub fn answer_numbers(text: &str) -> Vec<f64> {
    let body = match text.rfind('[') {
        Some(open) => {
            let rest = &text[open + 1..];
            &rest[..rest.find(']').unwrap_or(rest.len())]
        }
        None => text,
    };
    let mut numbers = Vec::new();
    let mut token = String::new();
    let flush = |token: &mut String, numbers: &mut Vec<f64>| {
        let t = token.trim_end_matches('.');
        if let Ok(v) = t.parse::<f64>() {
            numbers.push(v);
        }
        token.clear();
    };
    for ch in body.chars() {
        if ch.is_ascii_digit() || (ch == '.' && !token.is_empty() && !token.contains('.')) {
            token.push(ch);
        } else {
            flush(&mut token, &mut numbers);
        }
    }
    flush(&mut token, &mut numbers);
    numbers
}

fn number_list(v: &Value, key: &str) -> Result<Vec<f64>, String> {
    v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("missing array {key}"))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| format!("{key} holds a non-number"))
        })
        .collect()
}

fn generate(a: &SortEvalArgs, n: usize) -> CliResult {
    if a.len == 0 {
        return Err(CliError::Usage("--len must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = open_output(a.out.output.as_deref())?;
    for i in 0..n {
        // up to two decimals in [1, 10): 3, 3.8, 3.99
        let gt: Vec<f64> = (0..a.len)
            .map(|_| {
                let decimals = rng.random_range(0..=2u32);
                let scale = 10u32.pow(decimals);
                rng.random_range(scale..10 * scale) as f64 / scale as f64
            })
            .collect();
        let listed: Vec<String> = gt.iter().map(f64::to_string).collect();
        let prompt = format!(
            "Sort the following numbers from low to high and answer with the sorted list in square brackets: [{}]",
            listed.join(", ")
        );
        write_jsonl(
            &mut out,
            &json!({"id": format!("t{i}"), "gt": gt, "prompt": prompt}),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn sort_eval(a: SortEvalArgs) -> CliResult {
    if let Some(n) = a.generate {
        return generate(&a, n);
    }
    let path = a
        .input
        .as_ref()
        .expect("clap requires --input without --generate");
    let trials = read_jsonl_with(path, |v| {
        let id = id_field(&v).ok();
        let gt = number_list(&v, "gt")?;
        let pred = match (v.get("pred"), v.get("answer").and_then(Value::as_str)) {
            (Some(_), _) => number_list(&v, "pred")?,
            (None, Some(text)) => answer_numbers(text),
            (None, None) => return Err("needs pred or answer".into()),
        };
        let trial = SortTrial { gt, pred };
        let m = sort_metrics(&trial).map_err(|e| e.to_string())?;
        Ok((id, m))
    })?
    .all()?;
    let trials: Vec<(String, _)> = trials
        .into_iter()
        .map(|(line, (id, m))| (id.unwrap_or_else(|| format!("line{line}")), m))
        .collect();
    let metrics: Vec<_> = trials.iter().map(|(_, m)| *m).collect();
    let mean = mean_sort_metrics(&metrics).ok_or_else(|| CliError::Data("no trials".into()))?;
    if let Some(p) = &a.per_trial {
        let mut w = csv_writer(Some(p))?;
        w.write_record([
            "id",
            "accuracy",
            "recall",
            "hallucination",
            "hallucination_defined",
        ])?;
        for (id, m) in &trials {
            w.write_record([
                id.clone(),
                m.accuracy.to_string(),
                m.recall.to_string(),
                m.hallucination.to_string(),
                m.hallucination_defined.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let mut w = csv_writer(a.out.output.as_deref())?;
    w.write_record(["trials", "accuracy", "recall", "hallucination"])?;
    w.write_record([
        metrics.len().to_string(),
        mean.accuracy.to_string(),
        mean.recall.to_string(),
        mean.hallucination.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_extraction() {
        assert_eq!(
            answer_numbers("Sure! The sorted list is [1.51, 2.0, 8.72, 9]."),
            vec![1.51, 2.0, 8.72, 9.0]
        );
        assert_eq!(answer_numbers("1, 2.5 and 3."), vec![1.0, 2.5, 3.0]);
        assert_eq!(answer_numbers("[]"), Vec::<f64>::new());
        assert_eq!(answer_numbers("from [9, 1]: [1, 9"), vec![1.0, 9.0]);
    }
}
