use std::fmt::Write as _;
use std::path::Path;

/// Writes a run-summary text file next to the main output: key-value lines,
/// one per entry, in the given order.
pub fn write_summary(path: &Path, entries: &[(&str, String)]) -> std::io::Result<()> {
    let mut out = String::new();
    for (key, value) in entries {
        writeln!(out, "{key}: {value}").unwrap();
    }
    std::fs::write(path, out)
}

/// The conventional summary path for an output file: `<out>.summary.txt`.
pub fn summary_path(out: &Path) -> std::path::PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".summary.txt");
    std::path::PathBuf::from(os)
}

/// Serializes a matrix as rows for JSON output.
pub fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

pub fn vector_entries(v: &nalgebra::DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}
