use serde::{Deserialize, Serialize};

use super::SysidError;
use crate::numerics::{self, Matrix, PINV_REL_TOL};
use crate::signal::SignalRecord;
use crate::statespace::matrix_rows;

/// One observer parameter block, split into its input and output parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverBlock {
    /// `z x v`.
    #[serde(with = "matrix_rows")]
    pub input: Matrix,
    /// `z x z`.
    #[serde(with = "matrix_rows")]
    pub output: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverMarkov {
    pub sample_time: f64,
    #[serde(with = "matrix_rows")]
    pub feedthrough: Matrix,
    /// Blocks `k = 1..=l`.
    pub blocks: Vec<ObserverBlock>,
    /// Numerical rank of the regressor and its row count.
    pub regressor_rank: usize,
    pub regressor_rows: usize,
}

impl ObserverMarkov {
    pub fn order(&self) -> usize {
        self.blocks.len()
    }

    pub fn outputs(&self) -> usize {
        self.feedthrough.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.feedthrough.ncols()
    }
}

/// System pulse response `Y_0, Y_1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovSequence {
    pub sample_time: f64,
    #[serde(with = "matrix_rows")]
    pub feedthrough: Matrix,
    /// `Y_k` for `k = 1..=m`; `pulse_blocks[0]` is `Y_1`.
    pub pulse_blocks: Vec<MatrixRows>,
}

/// Serde wrapper so that a list of matrices serializes as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixRows(#[serde(with = "matrix_rows")] pub Matrix);

impl std::ops::Deref for MatrixRows {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl MarkovSequence {
    pub fn new(sample_time: f64, feedthrough: Matrix, blocks: Vec<Matrix>) -> Result<Self, SysidError> {
        let (z, v) = feedthrough.shape();
        if let Some(bad) = blocks.iter().position(|b| b.shape() != (z, v)) {
            return Err(SysidError::Shape(format!(
                "pulse block {} is {}x{}, feedthrough is {z}x{v}",
                bad + 1,
                blocks[bad].nrows(),
                blocks[bad].ncols()
            )));
        }
        Ok(Self {
            sample_time,
            feedthrough,
            pulse_blocks: blocks.into_iter().map(MatrixRows).collect(),
        })
    }

    /// `Y_k`; `k = 0` is the feedthrough.
    pub fn block(&self, k: usize) -> &Matrix {
        if k == 0 {
            &self.feedthrough
        } else {
            &self.pulse_blocks[k - 1].0
        }
    }

    pub fn len(&self) -> usize {
        self.pulse_blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulse_blocks.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.feedthrough.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.feedthrough.ncols()
    }
}

/// Required record length for `l` observer blocks.
pub fn min_record_length(l: usize, inputs: usize, outputs: usize) -> usize {
    4 * l * (inputs + outputs)
}

/// Least-squares observer Markov parameters from data that start at rest.
pub fn estimate_observer_markov(u: &SignalRecord, y: &SignalRecord, l: usize) -> Result<ObserverMarkov, SysidError> {
    let (v, z) = (u.width(), y.width());
    if u.len() != y.len() {
        return Err(SysidError::Shape(format!(
            "input has {} samples, output has {}",
            u.len(),
            y.len()
        )));
    }
    if l == 0 || v == 0 || z == 0 {
        return Err(SysidError::Shape(format!(
            "need l >= 1 and non-empty channels (l = {l}, v = {v}, z = {z})"
        )));
    }
    let required = min_record_length(l, v, z);
    let m = u.len();
    if m < required {
        return Err(SysidError::TooShort { required, got: m });
    }

    let rows = v + l * (v + z);
    let mut reg = Matrix::zeros(rows, m);
    let mut out = Matrix::zeros(z, m);
    for k in 0..m {
        let uk = &u.samples()[k];
        let yk = &y.samples()[k];
        for j in 0..v {
            reg[(j, k)] = uk[j];
        }
        for j in 0..z {
            out[(j, k)] = yk[j];
        }
        for i in 1..=l.min(m - 1 - k) {
            let base = v + (i - 1) * (v + z);
            for j in 0..v {
                reg[(base + j, k + i)] = uk[j];
            }
            for j in 0..z {
                reg[(base + v + j, k + i)] = yk[j];
            }
        }
    }

    let input_rank = numerics::svd(&reg.rows(0, v).into_owned())?.rank(PINV_REL_TOL);
    if input_rank < v {
        return Err(SysidError::RankDeficient {
            what: "input excitation",
            rank: input_rank,
            required: v,
        });
    }
    let dec = numerics::svd(&reg)?;
    let rank = dec.rank(PINV_REL_TOL);
    if rank < rows {
        log::debug!("okid regressor is rank deficient: effective rank {rank} of {rows}");
    }
    let inv = numerics::pinv_from_svd(&dec, PINV_REL_TOL);
    let ybar = out * inv;

    let feedthrough = ybar.columns(0, v).into_owned();
    let blocks = (1..=l)
        .map(|i| {
            let base = v + (i - 1) * (v + z);
            ObserverBlock {
                input: ybar.columns(base, v).into_owned(),
                output: ybar.columns(base + v, z).into_owned(),
            }
        })
        .collect();
    Ok(ObserverMarkov {
        sample_time: u.sample_time(),
        feedthrough,
        blocks,
        regressor_rank: rank,
        regressor_rows: rows,
    })
}

/// System Markov parameters `Y_0..Y_m` from observer parameters; blocks
/// beyond `l` are taken as zero.
pub fn recover_system_markov(obs: &ObserverMarkov, m: usize) -> MarkovSequence {
    let l = obs.order();
    let y0 = obs.feedthrough.clone();
    let mut seq: Vec<Matrix> = Vec::with_capacity(m + 1);
    seq.push(y0.clone());
    for k in 1..=m {
        let mut acc = if k <= l {
            obs.blocks[k - 1].input.clone()
        } else {
            Matrix::zeros(y0.nrows(), y0.ncols())
        };
        for i in 1..=k.min(l) {
            acc += &obs.blocks[i - 1].output * &seq[k - i];
        }
        seq.push(acc);
    }
    let blocks = seq.split_off(1);
    MarkovSequence {
        sample_time: obs.sample_time,
        feedthrough: y0,
        pulse_blocks: blocks.into_iter().map(MatrixRows).collect(),
    }
}
