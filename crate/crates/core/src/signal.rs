//! Uniformly sampled multichannel time series and their CSV form.
//!
//! CSV layout: header `time,<channel>,…`, one row per sample, time in
//! seconds. Values are written with Rust's shortest round-trip float
//! formatting so that identical records produce identical bytes.

use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("sample time must be positive and finite, got {0}")]
    BadSampleTime(f64),
    #[error("sample {index} has {got} values, expected {expected} channels")]
    RaggedSample {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in channel '{channel}' at sample {index}")]
    NonFinite { channel: String, index: usize },
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
    #[error("duplicate channel '{0}'")]
    DuplicateChannel(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("csv: first column must be 'time', found '{0}'")]
    MissingTimeColumn(String),
    #[error("csv: non-uniform sampling at row {row} (dt {dt} vs {expected})")]
    NonUniform { row: usize, dt: f64, expected: f64 },
    #[error("csv: need at least two rows to infer the sample time")]
    TooShort,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    sample_time: f64,
    channels: Vec<String>,
    samples: Vec<Vec<f64>>,
}

impl SignalRecord {
    pub fn new(
        sample_time: f64,
        channels: Vec<String>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, SignalError> {
        if !(sample_time > 0.0 && sample_time.is_finite()) {
            return Err(SignalError::BadSampleTime(sample_time));
        }
        for (i, name) in channels.iter().enumerate() {
            if channels[..i].contains(name) {
                return Err(SignalError::DuplicateChannel(name.clone()));
            }
        }
        for (index, s) in samples.iter().enumerate() {
            if s.len() != channels.len() {
                return Err(SignalError::RaggedSample {
                    index,
                    got: s.len(),
                    expected: channels.len(),
                });
            }
            if let Some(c) = s.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite {
                    channel: channels[c].clone(),
                    index,
                });
            }
        }
        Ok(Self {
            sample_time,
            channels,
            samples,
        })
    }

    pub fn zeros<S: AsRef<str>>(sample_time: f64, channels: &[S], len: usize) -> Result<Self, SignalError> {
        let names: Vec<String> = channels.iter().map(|c| c.as_ref().to_string()).collect();
        let width = names.len();
        Self::new(sample_time, names, vec![vec![0.0; width]; len])
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn width(&self) -> usize {
        self.channels.len()
    }

    /// Time span covered by the samples, `(len − 1) · T_s`.
    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.sample_time
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.sample_time
    }

    pub fn channel_index(&self, name: &str) -> Result<usize, SignalError> {
        self.channels
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| SignalError::UnknownChannel(name.to_string()))
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[index]).collect()
    }

    pub fn channel(&self, name: &str) -> Result<Vec<f64>, SignalError> {
        Ok(self.column(self.channel_index(name)?))
    }

    pub fn sample_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.samples[index]
    }

    /// Keeps only the named channels, in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<SignalRecord, SignalError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.channel_index(n.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(SignalRecord {
            sample_time: self.sample_time,
            channels: names.iter().map(|n| n.as_ref().to_string()).collect(),
            samples: self
                .samples
                .iter()
                .map(|s| idx.iter().map(|&i| s[i]).collect())
                .collect(),
        })
    }

    /// Column-wise concatenation of records with the same length and rate.
    pub fn hstack(&self, other: &SignalRecord) -> Result<SignalRecord, SignalError> {
        if other.len() != self.len() {
            return Err(SignalError::RaggedSample {
                index: self.len().min(other.len()),
                got: other.len(),
                expected: self.len(),
            });
        }
        if (other.sample_time - self.sample_time).abs() > 1e-12 * self.sample_time {
            return Err(SignalError::BadSampleTime(other.sample_time));
        }
        let mut channels = self.channels.clone();
        channels.extend(other.channels.iter().cloned());
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        SignalRecord::new(self.sample_time, channels, samples)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SignalError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend(self.channels.iter().cloned());
        w.write_record(&header).map_err(|e| SignalError::Csv(e.to_string()))?;
        for (k, s) in self.samples.iter().enumerate() {
            let mut row = Vec::with_capacity(s.len() + 1);
            row.push(format_time(self.time(k)));
            row.extend(s.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(|e| SignalError::Csv(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SignalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers().map_err(|e| SignalError::Csv(e.to_string()))?.clone();
        let mut names = headers.iter();
        match names.next() {
            Some("time") => {}
            Some(other) => return Err(SignalError::MissingTimeColumn(other.to_string())),
            None => return Err(SignalError::MissingTimeColumn(String::new())),
        }
        let channels: Vec<String> = names.map(str::to_string).collect();
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SignalError::Csv(e.to_string()))?;
            let mut values = rec.iter().map(|f| {
                f.parse::<f64>()
                    .map_err(|e| SignalError::Csv(format!("row {}: '{f}': {e}", row + 1)))
            });
            let t = values.next().ok_or(SignalError::Csv(format!("row {}: empty", row + 1)))??;
            if !t.is_finite() {
                return Err(SignalError::Csv(format!("row {}: non-finite time", row + 1)));
            }
            times.push(t);
            samples.push(values.collect::<Result<Vec<_>, _>>()?);
        }
        if times.len() < 2 {
            return Err(SignalError::TooShort);
        }
        let expected = times[1] - times[0];
        if !(expected > 0.0) {
            return Err(SignalError::BadSampleTime(expected));
        }
        for row in 1..times.len() {
            let nominal = times[0] + row as f64 * expected;
            if (times[row] - nominal).abs() > 1e-6 * expected.max(1e-9) + 1e-9 {
                return Err(SignalError::NonUniform {
                    row,
                    dt: times[row] - times[row - 1],
                    expected,
                });
            }
        }
        SignalRecord::new(expected, channels, samples)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, SignalError> {
        Self::read_csv(text.as_bytes())
    }
}

fn format_time(t: f64) -> String {
    // Round away representation noise from k * T_s products.
    let r = (t * 1e9).round() / 1e9;
    r.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_shape_and_lookup() {
        let rec = SignalRecord::new(
            0.1,
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![3.0, -4.5], vec![0.0, 1e-9]],
        )
        .unwrap();
        let text = rec.to_csv_string();
        assert!(text.starts_with("time,a,b\n0,1,2\n0.1,3,-4.5\n"));
        let back = SignalRecord::from_csv_str(&text).unwrap();
        assert_eq!(back.channel("b").unwrap(), vec![2.0, -4.5, 1e-9]);
        assert!((back.duration() - 0.2).abs() < 1e-15);
        assert!(matches!(rec.channel("z"), Err(SignalError::UnknownChannel(_))));
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(matches!(
            SignalRecord::from_csv_str("t,a\n0,1\n1,2\n"),
            Err(SignalError::MissingTimeColumn(_))
        ));
        assert!(matches!(
            SignalRecord::from_csv_str("time,a\n0,1\n0.1,2\n0.35,3\n"),
            Err(SignalError::NonUniform { .. })
        ));
        assert!(SignalRecord::from_csv_str("time,a\n0,1\n0.1\n").is_err());
        assert!(SignalRecord::from_csv_str("time,a\n0,nan\n0.1,1\n").is_err());
        assert!(matches!(
            SignalRecord::from_csv_str("time,a\n0,1\n"),
            Err(SignalError::TooShort)
        ));
    }

    #[test]
    fn constructor_invariants() {
        assert!(SignalRecord::new(0.0, vec!["a".into()], vec![]).is_err());
        assert!(SignalRecord::new(0.1, vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(SignalRecord::new(0.1, vec!["a".into()], vec![vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            ts in 0.001f64..1.0,
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 2..40),
        ) {
            let ts = (ts * 1000.0).round() / 1000.0;
            let rec = SignalRecord::new(ts, vec!["x".into(), "y".into(), "z".into()], rows).unwrap();
            let back = SignalRecord::from_csv_str(&rec.to_csv_string()).unwrap();
            prop_assert_eq!(back.samples(), rec.samples());
            prop_assert!((back.sample_time() - ts).abs() < 1e-9);
        }
    }
}
