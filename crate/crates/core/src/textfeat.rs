//! TF-IDF featurization of one text document per class.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Tensor;

/// Class documents in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    documents: Vec<(String, String)>,
}

impl Corpus {
    /// `documents` are `(class id, raw text)` pairs; ids must be unique.
    pub fn new(documents: Vec<(String, String)>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::Input("corpus needs at least one document".into()));
        }
        let mut seen = HashSet::new();
        for (id, _) in &documents {
            if !seen.insert(id.as_str()) {
                return Err(Error::Input(format!("duplicate class id {id:?}")));
            }
        }
        Ok(Self { documents })
    }

    /// Reads every regular file in `dir`; the file stem is the class id.
    /// Documents are ordered by file name.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::MissingFile(dir.to_path_buf()));
        }
        let mut docs = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if !path.is_file() {
                continue;
            }
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Input(format!("non UTF-8 file name {}", path.display())))?
                .to_string();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let text = std::fs::read_to_string(&path)?;
            docs.insert(name, (id, text));
        }
        Self::new(docs.into_values().collect())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn class_ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|(id, _)| id.as_str())
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|(_, t)| t.as_str())
    }
}

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Sorted token list with document frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            tokens,
            doc_freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn doc_freq(&self, token: &str) -> Option<usize> {
        self.index_of(token).map(|i| self.doc_freq[i])
    }
}

/// Tokens present in at least `min_df` documents, sorted lexicographically.
pub fn build_vocab(corpus: &Corpus, min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::Usage("min_df must be at least 1".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in corpus.texts() {
        let unique: HashSet<String> = tokenize(text).into_iter().collect();
        for tok in unique {
            *df.entry(tok).or_default() += 1;
        }
    }
    let (tokens, doc_freq): (Vec<_>, Vec<_>) = df.into_iter().filter(|&(_, n)| n >= min_df).unzip();
    if tokens.is_empty() {
        return Err(Error::Input(format!("no token occurs in {min_df} or more documents")));
    }
    Ok(Vocabulary::from_parts(tokens, doc_freq))
}

/// Inverse-document-frequency weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfWeighting {
    /// `ln((1 + N) / (1 + df)) + 1`
    #[default]
    Smooth,
    /// `ln(N / df) + 1`
    Plain,
}

impl IdfWeighting {
    pub fn weight(self, num_docs: usize, df: usize) -> f64 {
        let (n, d) = (num_docs as f64, df as f64);
        match self {
            Self::Smooth => ((1.0 + n) / (1.0 + d)).ln() + 1.0,
            Self::Plain => (n / d).ln() + 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfOptions {
    pub idf: IdfWeighting,
    /// Scale each nonzero row to unit Euclidean norm.
    pub l2_normalize: bool,
}

impl Default for TfidfOptions {
    fn default() -> Self {
        Self {
            idf: IdfWeighting::Smooth,
            l2_normalize: true,
        }
    }
}

/// Documents x vocabulary weights, all non-negative.
#[derive(Clone, Debug)]
pub struct TfidfMatrix {
    pub matrix: Tensor<f64>,
    pub vocabulary: Vocabulary,
}

/// Term frequency (count over document length) times idf, per document.
pub fn tfidf(corpus: &Corpus, vocab: &Vocabulary, options: TfidfOptions) -> TfidfMatrix {
    let n_docs = corpus.len();
    let width = vocab.len();
    let idf: Vec<f64> = vocab
        .doc_freq
        .iter()
        .map(|&df| options.idf.weight(n_docs, df))
        .collect();
    let mut matrix = Tensor::zeros(&[n_docs, width]);
    for (d, text) in corpus.texts().enumerate() {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            continue;
        }
        let len = tokens.len() as f64;
        let row = matrix.row_mut(d);
        for tok in &tokens {
            if let Some(i) = vocab.index_of(tok) {
                row[i] += 1.0;
            }
        }
        for (v, w) in row.iter_mut().zip(&idf) {
            *v = *v / len * w;
        }
        if options.l2_normalize {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
    TfidfMatrix {
        matrix,
        vocabulary: vocab.clone(),
    }
}
