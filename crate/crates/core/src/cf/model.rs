use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AlsConfig, BprConfig};
use crate::error::{Error, Result};

/// Dense row-major matrix of latent factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FactorMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Validation(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(FactorMatrix { rows, cols, data })
    }

    /// Entries drawn uniformly from `[0, 1/sqrt(cols))`.
    pub fn random_init(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let high = 1.0 / (cols as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(0.0..high)).collect();
        FactorMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfAlgorithm {
    Als,
    Bpr,
}

/// Snapshot of the configuration a model was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum TrainingConfig {
    Als(AlsConfig),
    Bpr(BprConfig),
}

impl TrainingConfig {
    pub fn algorithm(&self) -> CfAlgorithm {
        match self {
            TrainingConfig::Als(_) => CfAlgorithm::Als,
            TrainingConfig::Bpr(_) => CfAlgorithm::Bpr,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            TrainingConfig::Als(c) => c.seed,
            TrainingConfig::Bpr(c) => c.seed,
        }
    }
}

/// User and item factor matrices plus the configuration that produced them.
/// Immutable once training returns.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentFactorModel {
    pub(crate) user_factors: FactorMatrix,
    pub(crate) item_factors: FactorMatrix,
    /// Items with at least one training rating; the rest have no learned
    /// representation.
    pub(crate) observed_items: Vec<bool>,
    pub(crate) config: TrainingConfig,
}

const MAGIC: &[u8; 8] = b"SEMRECLF";
const FORMAT_VERSION: u32 = 1;

impl LatentFactorModel {
    pub fn new(
        user_factors: FactorMatrix,
        item_factors: FactorMatrix,
        observed_items: Vec<bool>,
        config: TrainingConfig,
    ) -> Result<Self> {
        if user_factors.cols() != item_factors.cols() || user_factors.cols() == 0 {
            return Err(Error::Validation(format!(
                "factor dimensions disagree: {} vs {}",
                user_factors.cols(),
                item_factors.cols()
            )));
        }
        if observed_items.len() != item_factors.rows() {
            return Err(Error::Validation("observed-item mask has the wrong length".into()));
        }
        Ok(LatentFactorModel {
            user_factors,
            item_factors,
            observed_items,
            config,
        })
    }

    pub fn algorithm(&self) -> CfAlgorithm {
        self.config.algorithm()
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn factors(&self) -> usize {
        self.user_factors.cols()
    }

    pub fn num_users(&self) -> usize {
        self.user_factors.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_factors.rows()
    }

    pub fn user_factors(&self) -> &FactorMatrix {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &FactorMatrix {
        &self.item_factors
    }

    /// Whether the item had any training rating.
    pub fn has_item(&self, item: usize) -> bool {
        self.observed_items.get(item).copied().unwrap_or(false)
    }

    /// Dot product of the user's and the item's factor rows.
    pub fn score(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.num_users() || item >= self.num_items() {
            return Err(Error::Lookup(format!(
                "(user {user}, item {item}) outside a {}x{} model",
                self.num_users(),
                self.num_items()
            )));
        }
        Ok(dot(self.user_factors.row(user), self.item_factors.row(item)))
    }

    /// Scores for one user over many items.
    pub fn score_items(&self, user: usize, items: &[usize]) -> Result<Vec<f64>> {
        items.iter().map(|&i| self.score(user, i)).collect()
    }

    /// Scores for one item over many users.
    pub fn score_users(&self, item: usize, users: &[usize]) -> Result<Vec<f64>> {
        users.iter().map(|&u| self.score(u, item)).collect()
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let config = serde_json::to_vec(&self.config)
            .map_err(|e| Error::Format(format!("cannot encode config: {e}")))?;
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        out.write_u64::<LittleEndian>(config.len() as u64)?;
        out.write_all(&config)?;
        out.write_u64::<LittleEndian>(self.num_users() as u64)?;
        out.write_u64::<LittleEndian>(self.num_items() as u64)?;
        out.write_u64::<LittleEndian>(self.factors() as u64)?;
        for &seen in &self.observed_items {
            out.write_u8(u8::from(seen))?;
        }
        for v in self.user_factors.as_slice().iter().chain(self.item_factors.as_slice()) {
            out.write_u64::<LittleEndian>(v.to_bits())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a latent factor model file".into()));
        }
        let version = input.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format version {version}")));
        }
        let config_len = read_len(&mut input)?;
        let mut config = vec![0u8; config_len];
        input.read_exact(&mut config)?;
        let config: TrainingConfig = serde_json::from_slice(&config)
            .map_err(|e| Error::Format(format!("bad config snapshot: {e}")))?;
        let users = read_len(&mut input)?;
        let items = read_len(&mut input)?;
        let factors = read_len(&mut input)?;
        let mut observed_items = Vec::with_capacity(items);
        for _ in 0..items {
            observed_items.push(input.read_u8()? != 0);
        }
        let mut read_matrix = |rows: usize| -> Result<FactorMatrix> {
            let data = (0..rows * factors)
                .map(|_| input.read_u64::<LittleEndian>().map(f64::from_bits))
                .collect::<std::io::Result<Vec<f64>>>()?;
            FactorMatrix::from_vec(rows, factors, data)
        };
        let user_factors = read_matrix(users)?;
        let item_factors = read_matrix(items)?;
        LatentFactorModel::new(user_factors, item_factors, observed_items, config)
    }
}

fn read_len<R: Read>(input: &mut R) -> Result<usize> {
    let len = input.read_u64::<LittleEndian>()?;
    usize::try_from(len).map_err(|_| Error::Format(format!("length {len} out of range")))
}
