use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::io::{read_f32_le, write_f32_le};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Matrix<T>,
    /// Overrides the optimizer's weight decay for this parameter.
    pub weight_decay: Option<f64>,
}

/// Named, ordered collection of trainable matrices.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix<T>) -> ParamId {
        self.add_with_decay(name, value, None)
    }

    pub fn add_with_decay(
        &mut self,
        name: impl Into<String>,
        value: Matrix<T>,
        weight_decay: Option<f64>,
    ) -> ParamId {
        self.params.push(Param {
            name: name.into(),
            value,
            weight_decay,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Matrix<T> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.params[id.0].value
    }

    pub fn param(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.data().len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: p.value.cast(),
                    weight_decay: p.weight_decay,
                })
                .collect(),
        }
    }

    /// Writes `meta.json` plus one little-endian f32 blob per parameter.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let mut meta = CheckpointMeta { params: Vec::new() };
        for (i, p) in self.params.iter().enumerate() {
            let file = format!("{i:03}_{}.bin", p.name);
            let data: Vec<f32> = p.value.data().iter().map(|v| v.to_f64() as f32).collect();
            write_f32_le(&dir.join(&file), &data)?;
            meta.params.push(CheckpointEntry {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                file,
                weight_decay: p.weight_decay,
            });
        }
        let path = dir.join("meta.json");
        let text = serde_json::to_string_pretty(&meta).map_err(Error::json(&path))?;
        fs::write(&path, text).map_err(Error::io(&path))
    }

    pub fn load_checkpoint(dir: &Path) -> Result<Self> {
        let path = dir.join("meta.json");
        if !path.exists() {
            return Err(Error::MissingFile(path));
        }
        let text = fs::read_to_string(&path).map_err(Error::io(&path))?;
        let meta: CheckpointMeta = serde_json::from_str(&text).map_err(Error::json(&path))?;
        let mut store = Self::new();
        for e in meta.params {
            let data = read_f32_le(&dir.join(&e.file), e.rows * e.cols)?;
            let value = Matrix::from_vec(
                e.rows,
                e.cols,
                data.into_iter().map(|v| T::from_f64(v as f64)).collect(),
            )?;
            store.add_with_decay(e.name, value, e.weight_decay);
        }
        Ok(store)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    params: Vec<CheckpointEntry>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    name: String,
    rows: usize,
    cols: usize,
    file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight_decay: Option<f64>,
}
