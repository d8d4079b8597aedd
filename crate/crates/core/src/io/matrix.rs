use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: Some(path.to_path_buf()),
        reason: reason.into(),
    }
}

/// Write `contents` next to `path` and rename it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| format_err(path, "path has no file name"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn matrix_to_json(x: &ComplexMatrix) -> Result<String> {
    crate::linalg::ensure_finite(x, "matrix")?;
    let doc = MatrixDoc {
        rows: x.nrows(),
        cols: x.ncols(),
        entries: x.iter().map(|z| [z.re, z.im]).collect(),
    };
    serde_json::to_string(&doc).map_err(|e| Error::Format {
        path: None,
        reason: e.to_string(),
    })
}

pub fn matrix_from_json(text: &str, path: &Path) -> Result<ComplexMatrix> {
    let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| format_err(path, e.to_string()))?;
    if doc.rows == 0 || doc.cols == 0 {
        return Err(format_err(path, "rows and cols must be positive"));
    }
    if doc.rows.checked_mul(doc.cols) != Some(doc.entries.len()) {
        return Err(format_err(
            path,
            format!("{} entries for a {}x{} matrix", doc.entries.len(), doc.rows, doc.cols),
        ));
    }
    if doc.entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err(format_err(path, "non-finite entry"));
    }
    let data: Vec<C64> = doc.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    Array2::from_shape_vec((doc.rows, doc.cols), data).map_err(|e| format_err(path, e.to_string()))
}

/// Save in the `{"rows", "cols", "entries": [[re, im], ...]}` row-major exchange format.
pub fn save_matrix(path: &Path, x: &ComplexMatrix) -> Result<()> {
    let text = matrix_to_json(x)?;
    write_atomic(path, text.as_bytes())
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path)?;
    matrix_from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RngStream;
    use rand::Rng;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut rng = RngStream::new(1, 0);
        let x = Array2::from_shape_fn((4, 4), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() * 1e-7)
        });
        save_matrix(&path, &x).unwrap();
        let y = load_matrix(&path).unwrap();
        for (a, b) in x.iter().zip(y.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn rejects_bad_documents() {
        let p = Path::new("inline");
        let short = r#"{"rows": 2, "cols": 2, "entries": [[1,0],[0,0],[0,0]]}"#;
        assert!(matches!(matrix_from_json(short, p), Err(Error::Format { .. })));
        assert!(matrix_from_json(r#"{"rows": 1, "cols": 1}"#, p).is_err());
        assert!(matrix_from_json(r#"{"rows": 1, "cols": 1, "entries": [[1,0]], "x": 1}"#, p).is_err());
        let mut x = Array2::<C64>::zeros((1, 1));
        x[[0, 0]] = C64::new(f64::NAN, 0.0);
        assert!(matrix_to_json(&x).is_err());
    }
}
