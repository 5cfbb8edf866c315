use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// A rejected input line.
#[derive(Debug, Clone)]
pub struct LineError {
    pub source: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.source, self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, paths or configuration; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Input content problems; exit status 1.
    #[error("{0}")]
    Data(String),
    /// One or more bad input lines; exit status 1.
    #[error("{} malformed input line(s)", .0.len())]
    Lines(Vec<LineError>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Lines(_) => 1,
        }
    }
}

impl From<numscore::Error> for CliError {
    fn from(e: numscore::Error) -> Self {
        use numscore::Error as E;
        match e {
            E::Usage(_) | E::Config(_) | E::Template(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("writing output: {e}"))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(format!("i/o: {e}"))
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Opens `path` for reading; `-` is standard input.
pub fn open_input(path: &Path) -> CliResult<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    File::open(path)
        .map(|f| Box::new(BufReader::new(f)) as Box<dyn BufRead>)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", display(path))))
}

/// Opens `path` for writing, or standard output when absent.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", display(p)))),
    }
}

pub fn csv_writer(path: Option<&Path>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(open_output(path)?))
}

/// Non-blank lines with 1-based line numbers.
pub fn read_lines(path: &Path) -> CliResult<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open_input(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{}:{}: {e}", display(path), i + 1)))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// Parsed records of a JSON-lines file, plus every line that failed.
pub struct Records<T> {
    pub items: Vec<(usize, T)>,
    pub errors: Vec<LineError>,
}

impl<T> Records<T> {
    /// Errors out if any line failed.
    pub fn all(self) -> CliResult<Vec<(usize, T)>> {
        if self.errors.is_empty() {
            Ok(self.items)
        } else {
            Err(CliError::Lines(self.errors))
        }
    }

    /// Reports the failed lines after the good ones were processed.
    pub fn finish(errors: Vec<LineError>) -> CliResult {
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Lines(errors))
        }
    }
}

/// Reads a JSON-lines file, converting each object with `convert`.
pub fn read_jsonl_with<T>(
    path: &Path,
    mut convert: impl FnMut(Value) -> Result<T, String>,
) -> CliResult<Records<T>> {
    let source = display(path);
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for (line, text) in read_lines(path)? {
        let parsed = serde_json::from_str::<Value>(&text)
            .map_err(|e| e.to_string())
            .and_then(&mut convert);
        match parsed {
            Ok(v) => items.push((line, v)),
            Err(message) => errors.push(LineError {
                source: source.clone(),
                line,
                message,
            }),
        }
    }
    Ok(Records { items, errors })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Records<T>> {
    read_jsonl_with(path, |v| {
        serde_json::from_value(v).map_err(|e| e.to_string())
    })
}

pub fn write_jsonl<T: Serialize>(out: &mut dyn Write, record: &T) -> CliResult {
    serde_json::to_writer(&mut *out, record).map_err(|e| CliError::Data(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// `id` field as text; numbers are accepted.
pub fn id_field(obj: &Value) -> Result<String, String> {
    match obj.get("id") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err("missing id".into()),
    }
}

pub fn f64_field(obj: &Value, key: &str) -> Result<f64, String> {
    obj.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("missing numeric field {key}"))
}

pub fn attributes_field(obj: &Value) -> Result<numscore::attributes::AttributeVector, String> {
    let raw = obj
        .get("attributes")
        .and_then(Value::as_object)
        .ok_or("missing attributes object")?;
    numscore::attributes::attribute_encode(raw).map_err(|e| e.to_string())
}

/// Optional CSV cell for a maybe-undefined value.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "N.A.".to_string(), |x| x.to_string())
}
