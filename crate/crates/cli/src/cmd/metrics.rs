use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use numscore::expectation::{curve_report, CurveReport, DigitLogitSeq, MetricReport};
use numscore::records::LogitRecord;
use numscore::score::{quantize as to_grid, QuantizerConfig};
use numscore::sim::{emulate_training, uniform_grid_sampler, EmulationConfig};

use crate::io::{
    csv_writer, open_output, read_jsonl, read_lines, write_jsonl, CliError, CliResult, LineError,
    Records,
};
use crate::{NcmArgs, QuantizeArgs, SimulateArgs};

pub fn quantize(a: QuantizeArgs) -> CliResult {
    let range = match (a.source_lo, a.source_hi) {
        (Some(lo), Some(hi)) => Some(QuantizerConfig::new(a.m, lo, hi)?),
        _ => {
            // validates m
            QuantizerConfig::new(a.m, 0.0, 1.0)?;
            None
        }
    };
    let source = a.input.display().to_string();
    let mut out = open_output(a.out.output.as_deref())?;
    let mut errors = Vec::new();
    for (line, text) in read_lines(&a.input)? {
        let value = text
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("{:?}: {e}", text.trim()))
            .and_then(|raw| {
                match &range {
                    Some(cfg) => cfg.to_grid(raw),
                    None => to_grid(raw, a.m),
                }
                .map_err(|e| e.to_string())
            });
        match value {
            Ok(v) => writeln!(out, "{v}")?,
            Err(message) => errors.push(LineError {
                source: source.clone(),
                line,
                message,
            }),
        }
    }
    out.flush()?;
    Records::<()>::finish(errors)
}

type Series = Vec<(Option<u64>, MetricReport)>;

fn write_series(series: &Series, path: Option<&Path>) -> CliResult {
    let mut w = csv_writer(path)?;
    w.write_record([
        "step",
        "n_samples",
        "ncm",
        "ncm_star",
        "ce",
        "expectation",
        "expectation_star",
    ])?;
    for (step, r) in series {
        w.write_record([
            step.map(|s| s.to_string()).unwrap_or_default(),
            r.n_samples.to_string(),
            r.ncm.to_string(),
            r.ncm_star.to_string(),
            r.ce.to_string(),
            r.expectation.to_string(),
            r.expectation_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_curve(report: &CurveReport, path: Option<&Path>) -> CliResult {
    let mut w = match path {
        Some(p) => csv_writer(Some(p))?,
        None => csv::Writer::from_writer(Box::new(io::stderr()) as Box<dyn Write>),
    };
    w.write_record(["metric", "window", "first", "last", "ratio_pct"])?;
    for (name, first, last, ratio) in report.rows() {
        w.write_record([
            name.to_string(),
            report.window.to_string(),
            first.to_string(),
            last.to_string(),
            crate::io::cell(ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn curve_input(series: &Series) -> Vec<(u64, MetricReport)> {
    series.iter().map(|(s, r)| (s.unwrap_or(0), *r)).collect()
}

pub fn ncm(a: NcmArgs) -> CliResult {
    let source = a.input.display().to_string();
    let records = read_jsonl::<LogitRecord>(&a.input)?;
    let mut errors = records.errors;
    let mut groups: BTreeMap<Option<u64>, Vec<DigitLogitSeq>> = BTreeMap::new();
    for (line, rec) in records.items {
        match rec.to_seq() {
            Ok(seq) => groups.entry(rec.step).or_default().push(seq),
            Err(e) => errors.push(LineError {
                source: source.clone(),
                line,
                message: e.to_string(),
            }),
        }
    }
    Records::<()>::finish(errors)?;
    if groups.is_empty() {
        return Err(CliError::Data(format!("{source}: no records")));
    }
    let stepped = groups.keys().filter(|k| k.is_some()).count();
    if stepped != 0 && stepped != groups.len() {
        return Err(CliError::Data(format!(
            "{source}: some records carry a step and some do not"
        )));
    }
    let series: Series = groups
        .iter()
        .map(|(step, batch)| Ok((*step, MetricReport::from_batch(batch, a.mask.into())?)))
        .collect::<CliResult<_>>()?;
    write_series(&series, a.out.output.as_deref())?;
    if stepped == 0 {
        if a.curve.is_some() {
            return Err(CliError::Usage(
                "--curve needs records with a step field".into(),
            ));
        }
        return Ok(());
    }
    let report = curve_report(&curve_input(&series), a.window)?;
    write_curve(&report, a.curve.as_deref())
}

pub fn simulate(a: SimulateArgs) -> CliResult {
    let cfg = EmulationConfig {
        kind: a.kind.into(),
        start_prob: a.start_prob,
        end_prob: a.end_prob,
        start_spread: a.start_spread,
        end_spread: a.end_spread,
        steps: a.steps,
        batch: a.batch,
        seed: a.seed,
        mask_mode: a.mask.into(),
    };
    cfg.validate()?;
    QuantizerConfig::new(a.m, 0.0, 1.0)?;
    if a.window == 0 || a.window as u64 > a.steps {
        return Err(CliError::Usage(format!(
            "window {} must be within 1..={}",
            a.window, a.steps
        )));
    }
    let sampler = uniform_grid_sampler(a.m);
    let series: Series = emulate_training(&cfg, &sampler)?
        .into_iter()
        .map(|(s, r)| (Some(s), r))
        .collect();
    if let Some(path) = &a.records {
        let mut out = open_output(Some(path))?;
        for step in 0..cfg.steps {
            for (i, seq) in cfg.step_batch(step, &sampler)?.iter().enumerate() {
                write_jsonl(
                    &mut out,
                    &LogitRecord::from_seq(format!("s{step}-{i}"), seq, Some(step)),
                )?;
            }
        }
        out.flush()?;
    }
    write_series(&series, a.out.output.as_deref())?;
    write_curve(
        &curve_report(&curve_input(&series), a.window)?,
        a.curve.as_deref(),
    )
}
