//! Sparse document-term matrices over a frozen vocabulary.
//!
//! Terms are indexed in lexicographic order, rows store `(column, count)`
//! pairs sorted by column with counts >= 1, and a vocabulary carries a SHA-256
//! fingerprint so models can verify at prediction time that they are applied
//! to the vocabulary they were trained on. Pruning keeps the terms whose
//! absence fraction `1 - doc_freq/n_docs` stays at or below a cap, matching
//! the usual sparse-term removal in text-mining toolkits.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DtmError {
    #[error("max_sparsity {0} must lie strictly between 0 and 1")]
    InvalidSparsity(f64),
    #[error("pruning at max_sparsity {max_sparsity} removes every term")]
    AllTermsPruned { max_sparsity: f64 },
    #[error("doc id count {ids} does not match token list count {docs}")]
    IdMismatch { ids: usize, docs: usize },
    #[error("csv write failed: {0}")]
    Write(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Lexicographically ordered terms with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn doc_freq(&self, index: usize) -> u32 {
        self.doc_freq[index]
    }

    /// Column index of `term`, if present (binary search over the sorted terms).
    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.terms
            .iter()
            .map(String::as_str)
            .zip(self.doc_freq.iter().copied())
    }

    /// SHA-256 over the serialised term/frequency table, hex-encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (term, df) in self.iter() {
            hasher.update(term.as_bytes());
            hasher.update(b"\t");
            hasher.update(df.to_le_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// One document's sparse term counts: `(column, count)` sorted by column.
pub type SparseRow = Vec<(u32, u32)>;

/// Sparse counts for a set of documents over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    pub vocab: Vocabulary,
    pub rows: Vec<SparseRow>,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    /// Keep the terms present in enough documents: a term survives when its
    /// absence fraction `1 - doc_freq/n_docs` is at most `max_sparsity`.
    /// Surviving terms are re-indexed densely, preserving their order.
    pub fn prune(&self, max_sparsity: f64) -> Result<DocTermMatrix, DtmError> {
        if !(max_sparsity > 0.0 && max_sparsity < 1.0) {
            return Err(DtmError::InvalidSparsity(max_sparsity));
        }
        if self.rows.is_empty() || self.vocab.is_empty() {
            return Ok(self.clone());
        }
        let n = self.rows.len() as f64;
        let mut keep = vec![false; self.vocab.len()];
        let mut remap = vec![u32::MAX; self.vocab.len()];
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (i, (term, df)) in self.vocab.iter().enumerate() {
            let absence = 1.0 - f64::from(df) / n;
            if absence <= max_sparsity {
                keep[i] = true;
                remap[i] = terms.len() as u32;
                terms.push(term.to_string());
                doc_freq.push(df);
            }
        }
        if terms.is_empty() {
            return Err(DtmError::AllTermsPruned { max_sparsity });
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(col, _)| keep[*col as usize])
                    .map(|&(col, count)| (remap[col as usize], count))
                    .collect()
            })
            .collect();
        Ok(DocTermMatrix {
            doc_ids: self.doc_ids.clone(),
            vocab: Vocabulary { terms, doc_freq },
            rows,
        })
    }

    /// The matrix restricted to `indices` (same vocabulary), in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DocTermMatrix {
        DocTermMatrix {
            doc_ids: indices.iter().map(|&i| self.doc_ids[i].clone()).collect(),
            vocab: self.vocab.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Dump the matrix as `doc_id,term,count` triplets.
    pub fn write_triplets<W: io::Write>(&self, writer: W) -> Result<(), DtmError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["doc_id", "term", "count"])?;
        for (id, row) in self.doc_ids.iter().zip(&self.rows) {
            for &(col, count) in row {
                out.write_record([id, self.vocab.term(col as usize), &count.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Dump the vocabulary as `term,index,doc_freq`.
    pub fn write_vocabulary<W: io::Write>(&self, writer: W) -> Result<(), DtmError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["term", "index", "doc_freq"])?;
        for (i, (term, df)) in self.vocab.iter().enumerate() {
            out.write_record([term, &i.to_string(), &df.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Build a matrix from per-document token lists. The vocabulary is the sorted
/// set of all tokens; row sums conserve token counts.
pub fn build(doc_ids: Vec<String>, docs_tokens: &[Vec<String>]) -> Result<DocTermMatrix, DtmError> {
    if doc_ids.len() != docs_tokens.len() {
        return Err(DtmError::IdMismatch {
            ids: doc_ids.len(),
            docs: docs_tokens.len(),
        });
    }
    let mut doc_freq: BTreeMap<&str, u32> = BTreeMap::new();
    for tokens in docs_tokens {
        let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for term in seen {
            *doc_freq.entry(term).or_insert(0) += 1;
        }
    }
    let terms: Vec<String> = doc_freq.keys().map(|t| t.to_string()).collect();
    let freqs: Vec<u32> = doc_freq.values().copied().collect();
    let vocab = Vocabulary {
        terms,
        doc_freq: freqs,
    };
    let rows = docs_tokens
        .iter()
        .map(|tokens| project(tokens, &vocab))
        .collect();
    Ok(DocTermMatrix {
        doc_ids,
        vocab,
        rows,
    })
}

/// [`project`] a whole document set onto a frozen vocabulary, keeping its
/// document frequencies. This is how held-out or new documents are aligned
/// with a matrix that was built (and possibly pruned) on training documents.
pub fn project_all(
    doc_ids: Vec<String>,
    docs_tokens: &[Vec<String>],
    vocab: &Vocabulary,
) -> Result<DocTermMatrix, DtmError> {
    if doc_ids.len() != docs_tokens.len() {
        return Err(DtmError::IdMismatch {
            ids: doc_ids.len(),
            docs: docs_tokens.len(),
        });
    }
    let rows = docs_tokens
        .iter()
        .map(|tokens| project(tokens, vocab))
        .collect();
    Ok(DocTermMatrix {
        doc_ids,
        vocab: vocab.clone(),
        rows,
    })
}

/// Count a token list against a frozen vocabulary. Out-of-vocabulary tokens
/// are dropped; an empty row is valid.
pub fn project(tokens: &[String], vocab: &Vocabulary) -> SparseRow {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for token in tokens {
        if let Some(col) = vocab.index_of(token) {
            *counts.entry(col as u32).or_insert(0) += 1;
        }
    }
    counts.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(lists: &[&[&str]]) -> Vec<Vec<String>> {
        lists
            .iter()
            .map(|l| l.iter().map(|t| t.to_string()).collect())
            .collect()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    fn sample_matrix() -> DocTermMatrix {
        build(
            ids(3),
            &tokens(&[
                &["veteran", "support", "support"],
                &["report", "data"],
                &["support", "data", "veteran"],
            ]),
        )
        .unwrap()
    }

    #[test]
    fn builds_sorted_vocabulary_with_doc_freqs() {
        let dtm = sample_matrix();
        let listed: Vec<(&str, u32)> = dtm.vocab.iter().collect();
        assert_eq!(
            listed,
            vec![("data", 2), ("report", 1), ("support", 2), ("veteran", 2)]
        );
        assert_eq!(dtm.vocab.index_of("support"), Some(2));
        assert_eq!(dtm.vocab.index_of("absent"), None);
    }

    #[test]
    fn rows_are_sorted_and_conserve_counts() {
        let dtm = sample_matrix();
        assert_eq!(dtm.rows[0], vec![(2, 2), (3, 1)]);
        for (row, toks) in dtm.rows.iter().zip(tokens(&[
            &["veteran", "support", "support"],
            &["report", "data"],
            &["support", "data", "veteran"],
        ])) {
            let total: u32 = row.iter().map(|&(_, c)| c).sum();
            assert_eq!(total as usize, toks.len());
            assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(row.iter().all(|&(_, c)| c >= 1));
        }
    }

    #[test]
    fn prune_drops_rare_terms_and_reindexes() {
        let dtm = sample_matrix();
        // "report" appears in 1 of 3 docs: absence 2/3 > 0.5, so it goes.
        let pruned = dtm.prune(0.5).unwrap();
        let listed: Vec<(&str, u32)> = pruned.vocab.iter().collect();
        assert_eq!(listed, vec![("data", 2), ("support", 2), ("veteran", 2)]);
        assert_eq!(pruned.rows[1], vec![(0, 1)]);
        assert_eq!(pruned.rows[0], vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn prune_rejects_bad_cap_and_total_removal() {
        let dtm = build(ids(2), &tokens(&[&["solo"], &["other"]])).unwrap();
        assert!(matches!(dtm.prune(0.0), Err(DtmError::InvalidSparsity(_))));
        assert!(matches!(dtm.prune(1.0), Err(DtmError::InvalidSparsity(_))));
        // Each term is absent from half the docs; a cap below 0.5 removes all.
        assert!(matches!(
            dtm.prune(0.25),
            Err(DtmError::AllTermsPruned { .. })
        ));
    }

    #[test]
    fn prune_keeps_everything_at_a_loose_cap() {
        let dtm = sample_matrix();
        let pruned = dtm.prune(0.95).unwrap();
        assert_eq!(pruned, dtm);
    }

    #[test]
    fn projection_drops_oov_and_handles_empty() {
        let dtm = sample_matrix();
        let row = project(
            &["support".into(), "unknown".into(), "support".into()],
            &dtm.vocab,
        );
        assert_eq!(row, vec![(2, 2)]);
        assert!(project(&[], &dtm.vocab).is_empty());
        assert!(project(&["missing".into()], &dtm.vocab).is_empty());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = sample_matrix();
        let b = sample_matrix();
        assert_eq!(a.vocab.fingerprint(), b.vocab.fingerprint());
        let pruned = a.prune(0.5).unwrap();
        assert_ne!(a.vocab.fingerprint(), pruned.vocab.fingerprint());
        assert_eq!(a.vocab.fingerprint().len(), 64);
    }

    #[test]
    fn dense_equivalent_matches_brute_force_counts() {
        let lists = tokens(&[
            &["a", "b", "a", "c"],
            &[],
            &["c", "c", "c"],
            &["b", "a", "b"],
        ]);
        let dtm = build(ids(4), &lists).unwrap();
        for (row, toks) in dtm.rows.iter().zip(&lists) {
            for col in 0..dtm.n_terms() {
                let want = toks
                    .iter()
                    .filter(|t| t.as_str() == dtm.vocab.term(col))
                    .count() as u32;
                let got = row
                    .iter()
                    .find(|&&(c, _)| c as usize == col)
                    .map_or(0, |&(_, c)| c);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn select_rows_subsets_in_order() {
        let dtm = sample_matrix();
        let sub = dtm.select_rows(&[2, 0]);
        assert_eq!(sub.doc_ids, vec!["d2", "d0"]);
        assert_eq!(sub.rows[0], dtm.rows[2]);
        assert_eq!(sub.vocab, dtm.vocab);
    }

    #[test]
    fn project_all_aligns_new_docs_with_an_existing_vocabulary() {
        let dtm = sample_matrix();
        let new_docs = tokens(&[&["support", "unheard", "support"], &[]]);
        let held = project_all(vec!["h0".into(), "h1".into()], &new_docs, &dtm.vocab).unwrap();
        assert_eq!(held.vocab, dtm.vocab);
        let support = dtm.vocab.index_of("support").unwrap() as u32;
        assert_eq!(held.rows[0], vec![(support, 2)]);
        assert!(held.rows[1].is_empty());
        assert!(matches!(
            project_all(vec!["h0".into()], &new_docs, &dtm.vocab),
            Err(DtmError::IdMismatch { ids: 1, docs: 2 })
        ));
    }

    #[test]
    fn csv_dumps_have_expected_shape() {
        let dtm = sample_matrix();
        let mut triplets = Vec::new();
        dtm.write_triplets(&mut triplets).unwrap();
        let text = String::from_utf8(triplets).unwrap();
        assert!(text.starts_with("doc_id,term,count\n"));
        assert!(text.contains("d0,support,2\n"));

        let mut vocab_csv = Vec::new();
        dtm.write_vocabulary(&mut vocab_csv).unwrap();
        let text = String::from_utf8(vocab_csv).unwrap();
        assert!(text.starts_with("term,index,doc_freq\n"));
        assert!(text.contains("support,2,2\n"));
    }
}
