//! JSON / JSON Lines readers and writers for every on-disk record type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use pgxrag_core::corpus::DocumentError;
use pgxrag_core::eval::{AnnotationRecord, QueryRecord, QuizItem};
use pgxrag_core::lexicon::LexiconError;
use pgxrag_core::{Corpus, Document, GuidelineLexicon, Source};
use serde::de::{DeserializeOwned, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: file not found", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: malformed record: {message}", path.display())]
    MalformedRecord { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: duplicate doc_id {doc_id:?}", path.display())]
    DuplicateDocId { path: PathBuf, line: usize, doc_id: String },
    #[error("{}: duplicate key {key:?}", path.display())]
    DuplicateKey { path: PathBuf, key: String },
    #[error("{}: {source}", path.display())]
    InvalidLexicon { path: PathBuf, source: LexiconError },
}

impl LoadError {
    pub fn class(&self) -> &'static str {
        match self {
            LoadError::MissingFile { .. } => "MissingFile",
            LoadError::Io { .. } => "IoFailure",
            LoadError::MalformedRecord { .. } => "MalformedRecord",
            LoadError::DuplicateDocId { .. } => "DuplicateDocId",
            LoadError::DuplicateKey { .. } => "DuplicateKey",
            LoadError::InvalidLexicon { .. } => "InvalidLexicon",
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            LoadError::MissingFile { path: path.to_path_buf() }
        } else {
            LoadError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    fn malformed(path: &Path, line: usize, message: impl fmt::Display) -> Self {
        LoadError::MalformedRecord {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|e| LoadError::io(path, e))
}

/// Parses JSON Lines text; blank lines are skipped. Returns 1-based line
/// numbers alongside the records.
pub fn parse_jsonl<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<(usize, T)>, LoadError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| LoadError::malformed(path, i + 1, e))?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, LoadError> {
    parse_jsonl(path, &read_text(path)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| LoadError::malformed(path, e.line(), e))
}

/// Writes one JSON object per line, each terminated by `\n`.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.into_inner().map_err(|e| e.into_error())?.sync_all()
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)
}

/// Corpus files under `path`: the file itself, or every `*.jsonl` in a
/// directory in name order.
fn corpus_files(path: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let meta = fs::metadata(path).map_err(|e| LoadError::io(path, e))?;
    if !meta.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| LoadError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads a corpus fail-fast: the first invalid record aborts the load with
/// its line number. Documents from other sources are counted as excluded.
pub fn load_corpus(path: &Path, expected_sources: &BTreeSet<Source>) -> Result<Corpus, LoadError> {
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    let mut docs = Vec::new();
    for file in corpus_files(path)? {
        for (line, doc) in read_jsonl::<Document>(&file)? {
            doc.validate()
                .map_err(|e: DocumentError| LoadError::malformed(&file, line, e))?;
            if seen.insert(doc.doc_id.clone(), ()).is_some() {
                return Err(LoadError::DuplicateDocId {
                    path: file,
                    line,
                    doc_id: doc.doc_id,
                });
            }
            docs.push(doc);
        }
    }
    // ids and documents were checked above, so assembly cannot fail
    Ok(Corpus::assemble(docs, expected_sources).expect("validated records"))
}

pub fn write_corpus(path: &Path, documents: &[Document]) -> io::Result<()> {
    write_jsonl(path, documents)
}

pub fn load_lexicon(path: &Path) -> Result<GuidelineLexicon, LoadError> {
    let lexicon: GuidelineLexicon = read_json(path)?;
    lexicon.validate().map_err(|source| LoadError::InvalidLexicon {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(lexicon)
}

pub fn load_dataset(path: &Path) -> Result<Vec<QueryRecord>, LoadError> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}

pub fn load_quiz(path: &Path) -> Result<Vec<QuizItem>, LoadError> {
    read_json(path)
}

/// Annotation records, each range-checked; a bad record is reported by line.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, LoadError> {
    let mut out = Vec::new();
    for (line, rec) in read_jsonl::<AnnotationRecord>(path)? {
        rec.validate().map_err(|e| LoadError::malformed(path, line, e))?;
        out.push(rec);
    }
    Ok(out)
}

/// A JSON object `item_id -> choice index`, keeping repeated keys so that
/// scoring can reject them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnswerSheet(pub Vec<(String, usize)>);

impl<'de> Deserialize<'de> for AnswerSheet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = AnswerSheet;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping item ids to choice indices")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<AnswerSheet, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, usize>()? {
                    out.push((k, v));
                }
                Ok(AnswerSheet(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl Serialize for AnswerSheet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

pub fn load_answers(path: &Path) -> Result<AnswerSheet, LoadError> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    const DOC_A: &str = r#"{"doc_id":"a","source":"CPIC","guideline_key":"k","title":"t","body":"x y","drugs":[],"genes":[]}"#;
    const DOC_P: &str = r#"{"doc_id":"p","source":"PharmGKB","guideline_key":"k","title":"t","body":"x y","drugs":[],"genes":[]}"#;

    #[test]
    fn empty_file_is_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", "");
        let c = load_corpus(&p, &BTreeSet::from([Source::Cpic])).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.excluded(), 0);
    }

    #[test]
    fn missing_file() {
        let err = load_corpus(Path::new("/nonexistent/x.jsonl"), &BTreeSet::new()).unwrap_err();
        assert_eq!(err.class(), "MissingFile");
    }

    #[test]
    fn malformed_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", &format!("{DOC_A}\n\n{{not json\n"));
        match load_corpus(&p, &BTreeSet::from([Source::Cpic])).unwrap_err() {
            LoadError::MalformedRecord { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn duplicate_doc_id_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", &format!("{DOC_A}\n{DOC_A}\n"));
        match load_corpus(&p, &BTreeSet::from([Source::Cpic])).unwrap_err() {
            LoadError::DuplicateDocId { line, doc_id, .. } => assert_eq!((line, doc_id.as_str()), (2, "a")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn source_filter_counts_exclusions() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", &format!("{DOC_A}\n{DOC_P}\n"));
        let c = load_corpus(&p, &BTreeSet::from([Source::Cpic])).unwrap();
        assert_eq!((c.len(), c.excluded()), (1, 1));
    }

    #[test]
    fn directory_of_files() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "1.jsonl", DOC_A);
        write(dir.path(), "2.jsonl", DOC_P);
        write(dir.path(), "notes.txt", "ignored");
        let c = load_corpus(dir.path(), &BTreeSet::from([Source::Cpic, Source::PharmGkb])).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn unknown_fields_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", &DOC_A.replace("\"title\"", "\"extra\":1,\"title\""));
        assert_eq!(load_corpus(&p, &BTreeSet::new()).unwrap_err().class(), "MalformedRecord");
    }

    #[test]
    fn answer_sheet_keeps_duplicates() {
        let s: AnswerSheet = serde_json::from_str(r#"{"a": 1, "b": 2, "a": 3}"#).unwrap();
        assert_eq!(s.0, [("a".into(), 1), ("b".into(), 2), ("a".into(), 3)]);
        assert!(serde_json::from_str::<AnswerSheet>(r#"{"a": -1}"#).is_err());
    }
}
