use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenizer_by_name, Chunk, Corpus, CorpusError, Document, Role};

pub const CORPUS_EXT: &str = ".corpus.jsonl";

/// One line of a `.corpus.jsonl` file. Raw ingests carry only the document
/// fields; built corpora add role, chunking parameters and chunk offsets.
#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(flatten)]
    doc: Document,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chunk_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokenizer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chunks: Option<Vec<(usize, usize)>>,
}

/// `dir/target.corpus.jsonl` -> `target`.
pub fn corpus_name_from_path(path: &Path) -> String {
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    file.strip_suffix(CORPUS_EXT)
        .or_else(|| file.strip_suffix(".jsonl"))
        .unwrap_or(&file)
        .to_string()
}

fn read_lines(path: &Path) -> Result<Vec<Line>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(&line).map_err(|e| CorpusError::Format {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        rec.doc.validate().map_err(|e| CorpusError::Format {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    Ok(read_lines(path)?.into_iter().map(|l| l.doc).collect())
}

/// Every `*.corpus.jsonl` in `dir`, concatenated in file-name order.
pub fn read_corpus_dir(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(CORPUS_EXT))
        .collect();
    files.sort();
    let mut docs = Vec::new();
    for f in files {
        docs.extend(read_documents(&f)?);
    }
    Ok(docs)
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for d in docs {
        let line = Line {
            doc: d.clone(),
            role: None,
            chunk_len: None,
            tokenizer: None,
            chunks: None,
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, d) in corpus.documents.iter().enumerate() {
        let line = Line {
            doc: d.clone(),
            role: Some(corpus.role),
            chunk_len: Some(corpus.chunk_len),
            tokenizer: Some(corpus.tokenizer.clone()),
            chunks: Some(
                corpus
                    .chunks_of(i)
                    .into_iter()
                    .map(|c| (c.start, c.end))
                    .collect(),
            ),
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Load a corpus written by [`write_corpus`].
pub fn read_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let lines = read_lines(path)?;
    let bad = |line: usize, reason: &str| CorpusError::Format {
        path: path.display().to_string(),
        line,
        reason: reason.to_string(),
    };
    let first = lines.first().ok_or(CorpusError::NoDocuments)?;
    let role = first.role.ok_or_else(|| bad(1, "not a built corpus (missing role)"))?;
    let chunk_len = first.chunk_len.ok_or_else(|| bad(1, "missing chunk_len"))?;
    let tok_name = first.tokenizer.clone().unwrap_or_else(|| "words".into());
    let tokenizer = tokenizer_by_name(&tok_name)?;

    let mut documents = Vec::with_capacity(lines.len());
    let mut chunks = Vec::new();
    for (i, line) in lines.into_iter().enumerate() {
        if line.role != Some(role) || line.chunk_len != Some(chunk_len) {
            return Err(bad(i + 1, "inconsistent role or chunk_len"));
        }
        let ranges = line.chunks.ok_or_else(|| bad(i + 1, "missing chunks"))?;
        for (start, end) in ranges {
            let text = line
                .doc
                .text
                .get(start..end)
                .filter(|t| !t.is_empty())
                .ok_or_else(|| bad(i + 1, "chunk offsets out of range"))?;
            chunks.push(Chunk {
                doc: i,
                start,
                end,
                tokens: tokenizer.count(text)?,
                text: text.to_string(),
            });
        }
        documents.push(line.doc);
    }
    Ok(Corpus {
        name: corpus_name_from_path(path),
        role,
        documents,
        chunks,
        chunk_len,
        tokenizer: tok_name,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, WordTokenizer};
    use chrono::Utc;

    #[test]
    fn corpus_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let docs = vec![
            Document::new("https://www.gov.uk/a", "one two three ".repeat(20).trim(), "UC", "CC-MAIN-2024-10", Utc::now()).unwrap(),
            Document::new("https://www.gov.uk/b", "four five", "UC", "", Utc::now()).unwrap(),
        ];
        let c = build_corpus("target", docs, Role::Target, 16, &WordTokenizer).unwrap();
        let path = dir.path().join("target.corpus.jsonl");
        write_corpus(&path, &c).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn raw_documents_are_not_a_built_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.corpus.jsonl");
        let d = Document::new("https://www.gov.uk/a", "text", "", "", Utc::now()).unwrap();
        write_documents(&path, &[d.clone()]).unwrap();
        assert_eq!(read_documents(&path).unwrap(), vec![d]);
        assert!(read_corpus(&path).is_err());
        assert_eq!(read_corpus_dir(dir.path()).unwrap().len(), 1);
    }
}
