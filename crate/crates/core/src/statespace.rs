//! LTI state-space quadruples in continuous or discrete time.

use serde::{Deserialize, Serialize};

use crate::numerics::{self, Matrix, NumericsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum TimeDomain {
    Continuous,
    Discrete { sample_time: f64 },
}

/// `x' = A x + B u`, `y = C x + D u` where `'` is `d/dt` or a one-sample
/// shift depending on [`TimeDomain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    #[serde(with = "matrix_rows")]
    pub a: Matrix,
    #[serde(with = "matrix_rows")]
    pub b: Matrix,
    #[serde(with = "matrix_rows")]
    pub c: Matrix,
    #[serde(with = "matrix_rows")]
    pub d: Matrix,
    #[serde(flatten)]
    pub domain: TimeDomain,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix, domain: TimeDomain) -> Result<Self, NumericsError> {
        let n = a.nrows();
        let ok = a.is_square()
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(NumericsError::DimensionMismatch {
                op: "StateSpace::new",
                detail: format!(
                    "a {}x{}, b {}x{}, c {}x{}, d {}x{}",
                    a.nrows(),
                    a.ncols(),
                    b.nrows(),
                    b.ncols(),
                    c.nrows(),
                    c.ncols(),
                    d.nrows(),
                    d.ncols()
                ),
            });
        }
        for m in [&a, &b, &c, &d] {
            numerics::ensure_finite("StateSpace::new", m)?;
        }
        if let TimeDomain::Discrete { sample_time } = domain {
            if !(sample_time > 0.0) {
                return Err(NumericsError::DimensionMismatch {
                    op: "StateSpace::new",
                    detail: format!("sample time must be positive, got {sample_time}"),
                });
            }
        }
        Ok(Self { a, b, c, d, domain })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.domain, TimeDomain::Discrete { .. })
    }

    /// Zero-order-hold discretization: `A_d = e^{A T}`, `B_d = ∫_0^T e^{Aτ} dτ B`.
    pub fn discretize_zoh(&self, sample_time: f64) -> Result<StateSpace, NumericsError> {
        if self.is_discrete() {
            return Err(NumericsError::DimensionMismatch {
                op: "discretize_zoh",
                detail: "model is already discrete".into(),
            });
        }
        let (ad, gamma) = numerics::zoh_integral(&self.a, sample_time)?;
        StateSpace::new(
            ad,
            gamma * &self.b,
            self.c.clone(),
            self.d.clone(),
            TimeDomain::Discrete { sample_time },
        )
    }

    /// Discrete Markov parameters `D, C B, C A B, …` for `k = 0..count`.
    pub fn markov_parameters(&self, count: usize) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut ak_b = self.b.clone();
        for _ in 1..count {
            out.push(&self.c * &ak_b);
            ak_b = &self.a * ak_b;
        }
        out
    }

    /// Restriction to a subset of input columns.
    pub fn select_inputs(&self, cols: std::ops::Range<usize>) -> StateSpace {
        let width = cols.end - cols.start;
        StateSpace {
            a: self.a.clone(),
            b: self.b.columns(cols.start, width).into_owned(),
            c: self.c.clone(),
            d: self.d.columns(cols.start, width).into_owned(),
            domain: self.domain,
        }
    }
}

/// Serializes a matrix as a list of rows.
pub mod matrix_rows {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numerics::Matrix;

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        RowsRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data: rows,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let repr = RowsRepr::deserialize(d)?;
        if repr.data.len() != repr.rows || repr.data.iter().any(|r| r.len() != repr.cols) {
            return Err(D::Error::custom(format!(
                "matrix data does not match declared shape {}x{}",
                repr.rows, repr.cols
            )));
        }
        if repr.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(D::Error::custom("matrix contains non-finite entries"));
        }
        let flat: Vec<f64> = repr.data.into_iter().flatten().collect();
        Ok(Matrix::from_row_slice(repr.rows, repr.cols, &flat))
    }

    #[derive(Serialize, Deserialize)]
    struct RowsRepr {
        rows: usize,
        cols: usize,
        data: Vec<Vec<f64>>,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markov_of_scalar_system() {
        let ss = StateSpace::new(
            Matrix::from_element(1, 1, 0.5),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 2.0),
            Matrix::from_element(1, 1, 0.25),
            TimeDomain::Discrete { sample_time: 1.0 },
        )
        .unwrap();
        let mk = ss.markov_parameters(4);
        let vals: Vec<f64> = mk.iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(vals, vec![0.25, 2.0, 1.0, 0.5]);
    }

    #[test]
    fn json_round_trip_keeps_shape() {
        let ss = StateSpace::new(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]),
            Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Matrix::zeros(1, 1),
            TimeDomain::Continuous,
        )
        .unwrap();
        let text = serde_json::to_string(&ss).unwrap();
        let back: StateSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ss);
        let bad = text.replace("\"rows\":2,\"cols\":2", "\"rows\":3,\"cols\":2");
        assert!(serde_json::from_str::<StateSpace>(&bad).is_err());
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let err = StateSpace::new(
            Matrix::zeros(2, 2),
            Matrix::zeros(3, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 1),
            TimeDomain::Continuous,
        );
        assert!(err.is_err());
    }
}
