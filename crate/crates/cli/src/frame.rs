use nalgebra::DMatrix;

use crate::CliError;

/// Parses `dim` whitespace-separated rows of `dim` reals. Blank lines and
/// `#` comments are skipped. Columns of the result are the frame vectors.
pub fn read_frame_matrix(text: &str, dim: usize) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            CliError::Usage(format!("frame row {}: `{tok}` is not a real", i + 1))
                        })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Usage(format!(
            "frame matrix must be {dim} rows of {dim} reals"
        )));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}
