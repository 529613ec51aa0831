use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::numerics::{read_matrix, write_matrix, Matrix};

use super::KbError;

/// Identifier → d-dimensional vector, stored as one row per identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<String>, vectors: Matrix) -> Result<Self, KbError> {
        if ids.len() != vectors.rows() {
            return Err(KbError::DimensionMismatch {
                expected: ids.len(),
                found: vectors.rows(),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(KbError::DuplicateIdentifier(id.clone()));
            }
        }
        Ok(Self { ids, index, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.vectors.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        self.vectors.row_mut(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.vectors
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.vectors
    }

    /// Writes `<stem>.mat` (matrix checkpoint) and `<stem>.ids` (one
    /// identifier per line, row order).
    pub fn save(&self, stem: &Path) -> Result<(), KbError> {
        let mut w = BufWriter::new(File::create(stem.with_extension("mat"))?);
        write_matrix(&mut w, &self.vectors)?;
        w.flush()?;
        let mut ids = BufWriter::new(File::create(stem.with_extension("ids"))?);
        for id in &self.ids {
            writeln!(ids, "{id}")?;
        }
        ids.flush()?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self, KbError> {
        let mut r = BufReader::new(File::open(stem.with_extension("mat"))?);
        let vectors = read_matrix(&mut r)?;
        let ids = BufReader::new(File::open(stem.with_extension("ids"))?)
            .lines()
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(ids, vectors)
    }
}
