use crate::spec::{DistSpec, SamplerError};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::path::Path;

/// An n x d matrix of real samples with generation metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: DMatrix<f64>,
    pub seed: u64,
    pub spec: Option<DistSpec>,
}

impl Dataset {
    pub fn from_matrix(samples: DMatrix<f64>) -> Self {
        Self {
            samples,
            seed: 0,
            spec: None,
        }
    }

    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    pub fn d(&self) -> usize {
        self.samples.ncols()
    }

    pub fn row(&self, i: usize) -> nalgebra::DVector<f64> {
        self.samples.row(i).transpose()
    }

    /// Empirical second-moment matrix (1/n) sum_i x_i x_i^T.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let n = self.n() as f64;
        (self.samples.transpose() * &self.samples) / n
    }

    /// Empirical mean vector.
    pub fn mean(&self) -> nalgebra::DVector<f64> {
        let n = self.n() as f64;
        (self.samples.transpose() * nalgebra::DVector::from_element(self.n(), 1.0)) / n
    }
}

/// Writes the dataset text format: first line "n d", then n rows of d
/// decimal floats at 17 significant digits (lossless round trip).
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<(), SamplerError> {
    let mut out = String::new();
    writeln!(out, "{} {}", data.n(), data.d()).unwrap();
    for r in 0..data.n() {
        let row = (0..data.d())
            .map(|c| format!("{:.16e}", data.samples[(r, c)]))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "{row}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, SamplerError> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, SamplerError> {
    let mut lines = text.lines().enumerate();
    let (n, d) = loop {
        match lines.next() {
            Some((lineno, raw)) => {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 2 {
                    return Err(SamplerError::Parse {
                        line: lineno + 1,
                        msg: "expected header `n d`".into(),
                    });
                }
                let n: usize = toks[0].parse().map_err(|_| SamplerError::Parse {
                    line: lineno + 1,
                    msg: format!("bad sample count `{}`", toks[0]),
                })?;
                let d: usize = toks[1].parse().map_err(|_| SamplerError::Parse {
                    line: lineno + 1,
                    msg: format!("bad dimension `{}`", toks[1]),
                })?;
                break (n, d);
            }
            None => {
                return Err(SamplerError::Parse {
                    line: 0,
                    msg: "missing header".into(),
                })
            }
        }
    };
    if n == 0 || d == 0 {
        return Err(SamplerError::Parse {
            line: 1,
            msg: "n and d must be positive".into(),
        });
    }
    let mut samples = DMatrix::<f64>::zeros(n, d);
    let mut row = 0usize;
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if row >= n {
            return Err(SamplerError::Parse {
                line: lineno + 1,
                msg: format!("expected {n} rows, found more"),
            });
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d {
            return Err(SamplerError::Parse {
                line: lineno + 1,
                msg: format!("expected {d} values, got {}", toks.len()),
            });
        }
        for (c, t) in toks.iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| SamplerError::Parse {
                line: lineno + 1,
                msg: format!("bad value `{t}`"),
            })?;
            if !v.is_finite() {
                return Err(SamplerError::Parse {
                    line: lineno + 1,
                    msg: format!("non-finite value `{t}`"),
                });
            }
            samples[(row, c)] = v;
        }
        row += 1;
    }
    if row != n {
        return Err(SamplerError::Parse {
            line: 0,
            msg: format!("expected {n} rows, got {row}"),
        });
    }
    Ok(Dataset::from_matrix(samples))
}
