use std::io::Write;

use numscore::composite::{composite, CompositeModel};
use numscore::score::{quantize, render};

use crate::io::{
    attributes_field, csv_writer, f64_field, id_field, open_output, read_jsonl_with, CliError,
    CliResult, LineError, Records,
};
use crate::{FitPlsArgs, ScoreCompositeArgs};

pub fn fit(a: FitPlsArgs) -> CliResult {
    let rows = read_jsonl_with(&a.input, |v| {
        Ok((attributes_field(&v)?, f64_field(&v, "feedback")?))
    })?
    .all()?;
    let (attrs, y): (Vec<_>, Vec<_>) = rows.into_iter().map(|(_, r)| r).unzip();
    let model = CompositeModel::fit(&attrs, &y, a.k, a.rescale.then_some(a.m))?;
    let mut out = open_output(a.out.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &model).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn score(a: ScoreCompositeArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.model)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.model.display())))?;
    let model: CompositeModel = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.model.display())))?;
    model
        .validate()
        .map_err(|e| CliError::Data(format!("{}: {e}", a.model.display())))?;

    let source = a.input.display().to_string();
    let records = read_jsonl_with(&a.input, |v| Ok((id_field(&v)?, attributes_field(&v)?)))?;
    let mut errors = records.errors;
    let mut w = csv_writer(a.out.output.as_deref())?;
    let mut header = vec!["id", "composite"];
    if model.rescale.is_some() {
        header.push("grid_score");
    }
    w.write_record(&header)?;
    for (line, (id, attrs)) in &records.items {
        let value = composite(&model, attrs).and_then(|v| {
            let grid = model.rescale.map(|r| quantize(v, r.m)).transpose()?;
            Ok((v, grid))
        });
        match value {
            Ok((v, grid)) => {
                let mut row = vec![id.clone(), v.to_string()];
                row.extend(grid.map(|g| render(&g)));
                w.write_record(&row)?;
            }
            Err(e) => errors.push(LineError {
                source: source.clone(),
                line: *line,
                message: e.to_string(),
            }),
        }
    }
    w.flush()?;
    Records::<()>::finish(errors)
}
