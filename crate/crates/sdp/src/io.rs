//! Text format for SDP problems and solutions.
//!
//! Problem files:
//!
//! ```text
//! nblocks ; size_1 size_2 ... ; nconstraints
//! c b i j value        (one line per sparse triplet, constraint 0 = objective,
//!                       blocks and indices 1-based, upper triangle)
//! rhs a_1 a_2 ... a_m
//! ```
//!
//! Lines starting with `#` are comments. Floats are written with 17
//! significant digits so a write/read round trip is lossless.

use crate::problem::{SdpError, SdpProblem, SparseSym};
use crate::solver::SdpSolution;
use nalgebra::DVector;
use std::fmt::Write as _;
use std::path::Path;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_problem(problem: &SdpProblem, path: &Path) -> Result<(), SdpError> {
    let mut out = String::new();
    let sizes = problem
        .block_sizes
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(
        out,
        "{} ; {} ; {}",
        problem.block_sizes.len(),
        sizes,
        problem.constraints.len()
    )
    .unwrap();
    let mut emit = |cons: usize, mat: &SparseSym| {
        for &(b, r, c, v) in &mat.entries {
            writeln!(out, "{} {} {} {} {}", cons, b + 1, r + 1, c + 1, format_f64(v)).unwrap();
        }
    };
    emit(0, &problem.objective);
    for (i, a) in problem.constraints.iter().enumerate() {
        emit(i + 1, a);
    }
    let rhs = problem
        .rhs
        .iter()
        .map(|v| format_f64(*v))
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(out, "rhs {rhs}").unwrap();
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a problem file; redundant constraint rows are pruned at load.
pub fn read_problem(path: &Path) -> Result<SdpProblem, SdpError> {
    let text = std::fs::read_to_string(path)?;
    let mut problem: Option<SdpProblem> = None;
    let mut n_cons = 0usize;
    let mut mats: Vec<SparseSym> = Vec::new();
    let mut rhs: Option<Vec<f64>> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = ln + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if problem.is_none() {
            let parts: Vec<&str> = line.split(';').map(|s| s.trim()).collect();
            if parts.len() != 3 {
                return Err(SdpError::Parse {
                    line: lineno,
                    msg: "expected header `nblocks ; sizes ; nconstraints`".into(),
                });
            }
            let nblocks: usize = parts[0].parse().map_err(|_| SdpError::Parse {
                line: lineno,
                msg: "bad block count".into(),
            })?;
            let sizes: Vec<usize> = parts[1]
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| SdpError::Parse {
                        line: lineno,
                        msg: format!("bad block size `{t}`"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if sizes.len() != nblocks {
                return Err(SdpError::Parse {
                    line: lineno,
                    msg: format!("expected {nblocks} block sizes, got {}", sizes.len()),
                });
            }
            n_cons = parts[2].parse().map_err(|_| SdpError::Parse {
                line: lineno,
                msg: "bad constraint count".into(),
            })?;
            problem = Some(SdpProblem::new(sizes));
            mats = vec![SparseSym::new(); n_cons + 1];
            continue;
        }
        if let Some(rest) = line.strip_prefix("rhs") {
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| SdpError::Parse {
                        line: lineno,
                        msg: format!("bad rhs value `{t}`"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != n_cons {
                return Err(SdpError::Parse {
                    line: lineno,
                    msg: format!("expected {n_cons} rhs values, got {}", vals.len()),
                });
            }
            rhs = Some(vals);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(SdpError::Parse {
                line: lineno,
                msg: "expected `constraint block row col value`".into(),
            });
        }
        let idx: Vec<usize> = toks[..4]
            .iter()
            .map(|t| {
                t.parse().map_err(|_| SdpError::Parse {
                    line: lineno,
                    msg: format!("bad index `{t}`"),
                })
            })
            .collect::<Result<_, _>>()?;
        let value: f64 = toks[4].parse().map_err(|_| SdpError::Parse {
            line: lineno,
            msg: format!("bad value `{}`", toks[4]),
        })?;
        let (cons, block, row, col) = (idx[0], idx[1], idx[2], idx[3]);
        if cons > n_cons || block == 0 || row == 0 || col == 0 {
            return Err(SdpError::Parse {
                line: lineno,
                msg: "index out of range".into(),
            });
        }
        mats[cons].add(block - 1, row - 1, col - 1, value);
    }
    let mut problem = problem.ok_or(SdpError::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    let rhs = rhs.ok_or(SdpError::Parse {
        line: 0,
        msg: "missing rhs line".into(),
    })?;
    problem.objective = mats[0].clone();
    for a in mats.into_iter().skip(1) {
        problem.constraints.push(a);
    }
    problem.rhs = DVector::from_vec(rhs);
    problem.validate()?;
    problem.prune_redundant()?;
    Ok(problem)
}

/// Writes a solution as text blocks with 17-significant-digit floats.
pub fn write_solution(sol: &SdpSolution, path: &Path) -> Result<(), SdpError> {
    let mut out = String::new();
    writeln!(out, "status {:?}", sol.status).unwrap();
    writeln!(out, "objective {}", format_f64(sol.objective)).unwrap();
    writeln!(out, "gap {}", format_f64(sol.gap)).unwrap();
    writeln!(out, "iterations {}", sol.iterations).unwrap();
    let y = sol
        .y
        .iter()
        .map(|v| format_f64(*v))
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(out, "y {y}").unwrap();
    for (which, mat) in [("x", &sol.x), ("s", &sol.s)] {
        for (b, blk) in mat.blocks.iter().enumerate() {
            writeln!(out, "{which} block {} size {}", b + 1, blk.nrows()).unwrap();
            for r in 0..blk.nrows() {
                let row = (0..blk.ncols())
                    .map(|c| format_f64(blk[(r, c)]))
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(out, "{row}").unwrap();
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads back the objective/gap/status header of a solution file. Used by
/// tests to verify round trips; the matrix blocks are not reconstructed.
pub fn read_solution(path: &Path) -> Result<(String, f64, f64), SdpError> {
    let text = std::fs::read_to_string(path)?;
    let mut status = String::new();
    let mut objective = f64::NAN;
    let mut gap = f64::NAN;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("status ") {
            status = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("objective ") {
            objective = rest.trim().parse().map_err(|_| SdpError::Parse {
                line: 0,
                msg: "bad objective".into(),
            })?;
        } else if let Some(rest) = line.strip_prefix("gap ") {
            gap = rest.trim().parse().map_err(|_| SdpError::Parse {
                line: 0,
                msg: "bad gap".into(),
            })?;
        }
    }
    Ok((status, objective, gap))
}
