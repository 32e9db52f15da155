//! Line-delimited JSON files with a schema header.
//!
//! Every pipeline file starts with one header line `{"schema": NAME,
//! "version": N}` followed by one JSON record per line. Writes go to a
//! temporary file in the destination directory and are renamed into place.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::TokenId;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Corpus,
    Annotated,
    Outputs,
    Trials,
    Labels,
    Blocklist,
    Manifest,
}

impl Schema {
    pub fn name(self) -> &'static str {
        match self {
            Schema::Corpus => "corpus",
            Schema::Annotated => "annotated",
            Schema::Outputs => "outputs",
            Schema::Trials => "trials",
            Schema::Labels => "labels",
            Schema::Blocklist => "blocklist",
            Schema::Manifest => "manifest",
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub version: u32,
}

/// One model output for one annotated document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub doc_id: String,
    pub output_text: String,
    /// Token ids as reported by the generator, when it reports them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_ids: Option<Vec<TokenId>>,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing schema header (expected {expected:?})")]
    MissingHeader { path: String, expected: &'static str },
    #[error("{path}: schema is {found:?}, expected {expected:?}")]
    WrongSchema { path: String, expected: &'static str, found: String },
    #[error("{path}: unsupported schema version {found} (this build reads version {SCHEMA_VERSION})")]
    Version { path: String, found: u32 },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: serialization failed: {message}")]
    Serialize { path: String, message: String },
}

impl RecordError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        RecordError::Io { path: path.display().to_string(), source }
    }
}

/// Parse a header line followed by records. `origin` names the source in
/// error messages; line numbers are 1-based and count the header.
pub fn parse_records<T: DeserializeOwned>(text: &str, schema: Schema, origin: &str) -> Result<Vec<T>, RecordError> {
    parse_inner(text, schema, origin, true)
}

/// Like [`parse_records`] but a missing header is accepted, for inputs
/// produced outside this tool.
pub fn parse_records_lenient<T: DeserializeOwned>(
    text: &str,
    schema: Schema,
    origin: &str,
) -> Result<Vec<T>, RecordError> {
    parse_inner(text, schema, origin, false)
}

fn parse_inner<T: DeserializeOwned>(
    text: &str,
    schema: Schema,
    origin: &str,
    require_header: bool,
) -> Result<Vec<T>, RecordError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let header = lines.peek().and_then(|(_, l)| serde_json::from_str::<Header>(l).ok());
    match header {
        Some(h) => {
            lines.next();
            if h.schema != schema.name() {
                return Err(RecordError::WrongSchema { path: origin.into(), expected: schema.name(), found: h.schema });
            }
            if h.version != SCHEMA_VERSION {
                return Err(RecordError::Version { path: origin.into(), found: h.version });
            }
        }
        None if require_header => {
            return Err(RecordError::MissingHeader { path: origin.into(), expected: schema.name() });
        }
        None => {}
    }
    lines
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RecordError::Parse { path: origin.into(), line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn read_records<T: DeserializeOwned>(path: impl AsRef<Path>, schema: Schema) -> Result<Vec<T>, RecordError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RecordError::io(path, e))?;
    parse_records(&text, schema, &path.display().to_string())
}

pub fn read_records_lenient<T: DeserializeOwned>(path: impl AsRef<Path>, schema: Schema) -> Result<Vec<T>, RecordError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RecordError::io(path, e))?;
    parse_records_lenient(&text, schema, &path.display().to_string())
}

/// Read a file holding exactly one record after the header.
pub fn read_single<T: DeserializeOwned>(path: impl AsRef<Path>, schema: Schema) -> Result<T, RecordError> {
    let path = path.as_ref();
    let mut items: Vec<T> = read_records(path, schema)?;
    if items.len() != 1 {
        return Err(RecordError::Parse {
            path: path.display().to_string(),
            line: 2,
            message: format!("expected exactly one record, found {}", items.len()),
        });
    }
    Ok(items.remove(0))
}

/// Render a header and records as text.
pub fn render_records<'a, T: Serialize + 'a>(
    schema: Schema,
    items: impl IntoIterator<Item = &'a T>,
    origin: &str,
) -> Result<String, RecordError> {
    let ser = |e: serde_json::Error| RecordError::Serialize { path: origin.into(), message: e.to_string() };
    let header = Header { schema: schema.name().into(), version: SCHEMA_VERSION };
    let mut out = serde_json::to_string(&header).map_err(ser)?;
    out.push('\n');
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(ser)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_records<'a, T: Serialize + 'a>(
    path: impl AsRef<Path>,
    schema: Schema,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), RecordError> {
    let path = path.as_ref();
    let text = render_records(schema, items, &path.display().to_string())?;
    write_atomic(path, text.as_bytes())
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<(), RecordError> {
    let path = path.as_ref();
    let dir: PathBuf = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| RecordError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| RecordError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| RecordError::io(path, e))?;
    tmp.persist(path).map_err(|e| RecordError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::CorpusDoc;

    fn docs() -> Vec<CorpusDoc> {
        vec![
            CorpusDoc { doc_id: "a".into(), text: "one\ntwo".into() },
            CorpusDoc { doc_id: "b".into(), text: "three".into() },
        ]
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_records(&path, Schema::Corpus, &docs()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(r#"{"schema":"corpus","version":1}"#));
        assert_eq!(read_records::<CorpusDoc>(&path, Schema::Corpus).unwrap(), docs());
        assert!(matches!(read_records::<CorpusDoc>(&path, Schema::Trials), Err(RecordError::WrongSchema { .. })));
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\"schema\":\"corpus\",\"version\":1}\n{\"doc_id\":\"a\",\"text\":\"x\"}\n{\"doc_id\":\"b\",\"te";
        match parse_records::<CorpusDoc>(text, Schema::Corpus, "f") {
            Err(RecordError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let headerless = "{\"doc_id\":\"a\",\"text\":\"x\"}";
        assert!(matches!(
            parse_records::<CorpusDoc>(headerless, Schema::Corpus, "f"),
            Err(RecordError::MissingHeader { .. })
        ));
        assert_eq!(parse_records_lenient::<CorpusDoc>(headerless, Schema::Corpus, "f").unwrap().len(), 1);
        let future = "{\"schema\":\"corpus\",\"version\":9}";
        assert!(matches!(parse_records::<CorpusDoc>(future, Schema::Corpus, "f"), Err(RecordError::Version { .. })));
    }

    #[test]
    fn output_ids_are_optional() {
        let r: OutputRecord = serde_json::from_str(r#"{"doc_id":"a","output_text":"x"}"#).unwrap();
        assert_eq!(r.output_ids, None);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"doc_id":"a","output_text":"x"}"#);
    }
}
