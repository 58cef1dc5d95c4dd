//! Word-embedding table and loader for the whitespace text format
//! (`token v1 ... v_d`, one token per line, UTF-8).

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tape::{NodeId, ParamId, ParamStore, Tape};
use crate::tensor::Tensor;
use crate::vocab::Vocabulary;

pub const DEFAULT_EMBED_DIM: usize = 100;

/// `|V| × d_emb` embedding matrix held in the parameter store. Frozen by
/// default; pass `trainable = true` to fine-tune.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub param: ParamId,
    pub dim: usize,
    pub vocab_size: usize,
}

impl EmbeddingTable {
    /// All rows initialized uniform(-0.1, 0.1).
    pub fn random(
        store: &mut ParamStore,
        vocab: &Vocabulary,
        dim: usize,
        trainable: bool,
        rng: &mut SeededRng,
    ) -> Self {
        let data: Vec<f64> = (0..vocab.len() * dim)
            .map(|_| rng.uniform(-0.1, 0.1))
            .collect();
        let tensor = Tensor::matrix(vocab.len(), dim, data).unwrap();
        let param = if trainable {
            store.add("embedding", tensor)
        } else {
            store.add_frozen("embedding", tensor)
        };
        Self {
            param,
            dim,
            vocab_size: vocab.len(),
        }
    }

    /// Load pre-trained vectors for in-vocabulary tokens; remaining rows
    /// (including UNK) stay at their uniform(-0.1, 0.1) initialization.
    /// Returns the table and the number of matched tokens.
    pub fn load(
        store: &mut ParamStore,
        path: &Path,
        vocab: &Vocabulary,
        dim: usize,
        trainable: bool,
        rng: &mut SeededRng,
    ) -> Result<(Self, usize)> {
        let table = Self::random(store, vocab, dim, trainable, rng);
        let file = File::open(path)?;
        let reader = BufReader::new(file);
        let mut matched = 0usize;

        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: "empty line with whitespace".into(),
            })?;
            let values: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|_| Error::Parse {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        message: format!("bad float {p:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::Config(format!(
                    "embedding file {} line {}: expected {} dims, found {}",
                    path.display(),
                    lineno + 1,
                    dim,
                    values.len()
                )));
            }
            if vocab.contains(token) {
                let row = vocab.index_of(token);
                store
                    .get_mut(table.param)
                    .value
                    .row_mut(row)
                    .copy_from_slice(&values);
                matched += 1;
            }
        }
        Ok((table, matched))
    }

    /// Embedding row for a token id; gradient reaches only that row (and only
    /// when the table is trainable).
    pub fn lookup(&self, tape: &mut Tape, store: &ParamStore, token_id: usize) -> Result<NodeId> {
        tape.lookup(store, self.param, token_id)
    }
}
