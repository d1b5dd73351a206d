//! Readers and writers for Matrix Market, CSV and libsvm multilabel files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CcaError, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
    LibsvmMultilabel,
}

impl MatrixFormat {
    /// Guesses the format from a file extension (`.mtx`/`.mm`, `.csv`, `.svm`/`.libsvm`).
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mtx" | "mm" => Some(Self::MatrixMarket),
            "csv" => Some(Self::Csv),
            "svm" | "libsvm" => Some(Self::LibsvmMultilabel),
            _ => None,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mm" | "matrix-market" | "mtx" => Ok(Self::MatrixMarket),
            "csv" => Ok(Self::Csv),
            "libsvm" | "libsvm-multilabel" => Ok(Self::LibsvmMultilabel),
            other => Err(format!("unknown matrix format `{other}` (expected mm, csv or libsvm)")),
        }
    }
}

/// How label indices in a libsvm multilabel file are numbered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelBase {
    Zero,
    One,
    /// One-based unless a label `0` occurs anywhere in the file.
    #[default]
    Auto,
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Skip the first CSV line.
    pub csv_header: bool,
    pub n_features: Option<usize>,
    pub n_labels: Option<usize>,
    pub label_base: LabelBase,
}

#[derive(Clone, Debug)]
pub enum Loaded<T> {
    Dense(DenseMatrix<T>),
    Sparse(SparseMatrix<T>),
    Multilabel {
        features: SparseMatrix<T>,
        labels: SparseMatrix<T>,
    },
}

impl<T: Real> Loaded<T> {
    /// Dense view of a single-matrix load; for multilabel files this is the feature matrix.
    pub fn into_dense(self) -> DenseMatrix<T> {
        match self {
            Loaded::Dense(d) => d,
            Loaded::Sparse(s) => s.to_dense(),
            Loaded::Multilabel { features, .. } => features.to_dense(),
        }
    }
}

pub fn load_matrix<T: Real>(path: &Path, format: MatrixFormat, opts: &LoadOptions) -> Result<Loaded<T>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CcaError::DatasetNotFound(path.to_path_buf()),
        _ => CcaError::Io(e),
    })?;
    let reader = BufReader::new(file);
    match format {
        MatrixFormat::Csv => read_csv(reader, opts.csv_header).map(Loaded::Dense),
        MatrixFormat::MatrixMarket => read_matrix_market(reader),
        MatrixFormat::LibsvmMultilabel => {
            let (features, labels) = read_libsvm_multilabel(reader, opts)?;
            Ok(Loaded::Multilabel { features, labels })
        }
    }
}

fn parse_value<T: Real>(token: &str, line: usize) -> Result<T> {
    let v: T = token
        .trim()
        .parse()
        .map_err(|_| CcaError::parse(line, format!("invalid number `{token}`")))?;
    if !v.is_finite() {
        return Err(CcaError::parse(line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

fn parse_index(token: &str, line: usize) -> Result<usize> {
    token
        .trim()
        .parse()
        .map_err(|_| CcaError::parse(line, format!("invalid index `{token}`")))
}

pub fn read_csv<T: Real>(reader: impl BufRead, header: bool) -> Result<DenseMatrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if header && idx == 0 {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|tok| parse_value(tok, line_no))
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CcaError::DimensionMismatch(format!(
                    "line {line_no} has {} fields, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

#[derive(PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn read_matrix_market<T: Real>(reader: impl BufRead) -> Result<Loaded<T>> {
    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines
        .next()
        .ok_or_else(|| CcaError::parse(1, "empty file"))?;
    let banner = banner?;
    let fields: Vec<String> = banner.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(CcaError::parse(1, "missing %%MatrixMarket matrix banner"));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(CcaError::parse(1, format!("unsupported layout `{other}`"))),
    };
    let pattern = match fields[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(CcaError::parse(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(CcaError::parse(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut data_lines = lines.filter_map(|(i, l)| match l {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
        Err(e) => Some(Err(CcaError::Io(e))),
    });

    let (size_line, size) = data_lines
        .next()
        .ok_or_else(|| CcaError::parse(1, "missing size line"))??;
    let dims = size
        .split_whitespace()
        .map(|t| parse_index(t, size_line))
        .collect::<Result<Vec<_>>>()?;

    if coordinate {
        if dims.len() != 3 {
            return Err(CcaError::parse(size_line, "coordinate size line needs rows cols nnz"));
        }
        let (rows, cols, nnz) = (dims[0], dims[1], dims[2]);
        let mut triplets = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (ln, text) = data_lines
                .next()
                .ok_or_else(|| CcaError::parse(size_line, format!("expected {nnz} entries")))??;
            let toks: Vec<&str> = text.split_whitespace().collect();
            let need = if pattern { 2 } else { 3 };
            if toks.len() < need {
                return Err(CcaError::parse(ln, "too few fields in entry"));
            }
            let i = parse_index(toks[0], ln)?;
            let j = parse_index(toks[1], ln)?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(CcaError::parse(ln, format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            let v: T = if pattern { T::one() } else { parse_value(toks[2], ln)? };
            triplets.push((i - 1, j - 1, v));
            if symmetry != Symmetry::General && i != j {
                let mirrored = if symmetry == Symmetry::Skew { -v } else { v };
                triplets.push((j - 1, i - 1, mirrored));
            }
        }
        Ok(Loaded::Sparse(SparseMatrix::from_triplets(rows, cols, triplets)?))
    } else {
        if dims.len() != 2 {
            return Err(CcaError::parse(size_line, "array size line needs rows cols"));
        }
        let (rows, cols) = (dims[0], dims[1]);
        let mut out = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            let start = if symmetry == Symmetry::General {
                0
            } else if symmetry == Symmetry::Skew {
                j + 1
            } else {
                j
            };
            for i in start..rows {
                let (ln, text) = data_lines
                    .next()
                    .ok_or_else(|| CcaError::parse(size_line, "array ended early"))??;
                let v: T = parse_value(&text, ln)?;
                out.set(i, j, v);
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => out.set(j, i, v),
                    Symmetry::Skew => out.set(j, i, -v),
                }
            }
        }
        Ok(Loaded::Dense(out))
    }
}

/// Reads `labels features` lines: comma-separated label indices followed by
/// space-separated 1-based `index:value` pairs.
pub fn read_libsvm_multilabel<T: Real>(
    reader: impl BufRead,
    opts: &LoadOptions,
) -> Result<(SparseMatrix<T>, SparseMatrix<T>)> {
    let mut feature_triplets = Vec::new();
    let mut label_entries: Vec<(usize, usize)> = Vec::new();
    let mut max_feature = 0usize;
    let mut max_label = 0usize;
    let mut saw_zero_label = false;
    let mut row = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end();
        if trimmed.trim().is_empty() {
            continue;
        }
        let mut tokens = trimmed.split_whitespace().peekable();
        let label_field = match tokens.peek() {
            Some(first) if !first.contains(':') && !trimmed.starts_with(char::is_whitespace) => {
                tokens.next()
            }
            _ => None,
        };
        if let Some(field) = label_field {
            for lab in field.split(',').filter(|s| !s.is_empty()) {
                let l = parse_index(lab, line_no)?;
                saw_zero_label |= l == 0;
                max_label = max_label.max(l);
                label_entries.push((row, l));
            }
        }
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| CcaError::parse(line_no, format!("expected index:value, got `{tok}`")))?;
            let i = parse_index(i, line_no)?;
            if i == 0 {
                return Err(CcaError::parse(line_no, "feature indices are 1-based"));
            }
            let v: T = parse_value(v, line_no)?;
            max_feature = max_feature.max(i);
            feature_triplets.push((row, i - 1, v));
        }
        row += 1;
    }

    let zero_based = match opts.label_base {
        LabelBase::Zero => true,
        LabelBase::One => false,
        LabelBase::Auto => saw_zero_label,
    };
    if !zero_based && saw_zero_label {
        return Err(CcaError::parse(0, "label 0 found in a one-based label file"));
    }
    let inferred_labels = if zero_based { max_label + 1 } else { max_label };
    let n_labels = opts.n_labels.unwrap_or(inferred_labels);
    let n_features = opts.n_features.unwrap_or(max_feature);
    if n_features < max_feature {
        return Err(CcaError::DimensionMismatch(format!(
            "feature index {max_feature} exceeds declared {n_features} features"
        )));
    }
    if n_labels < inferred_labels {
        return Err(CcaError::DimensionMismatch(format!(
            "label index exceeds declared {n_labels} labels"
        )));
    }
    let label_triplets = label_entries
        .into_iter()
        .map(|(r, l)| (r, if zero_based { l } else { l - 1 }, T::one()));
    let features = SparseMatrix::from_triplets(row, n_features, feature_triplets)?;
    let labels = SparseMatrix::from_triplets(row, n_labels, label_triplets)?;
    Ok((features, labels))
}

/// CSV with 17 significant digits per entry.
pub fn write_csv<T: Real>(mut w: impl Write, x: &DenseMatrix<T>) -> Result<()> {
    for i in 0..x.rows() {
        let line: Vec<String> = (0..x.cols()).map(|j| format!("{:.16e}", x.get(i, j))).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Matrix Market array file; values use the shortest round-tripping representation.
pub fn write_matrix_market_dense<T: Real>(mut w: impl Write, x: &DenseMatrix<T>) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", x.rows(), x.cols())?;
    for v in x.as_slice() {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

pub fn write_matrix_market_sparse<T: Real>(mut w: impl Write, x: &SparseMatrix<T>) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", x.rows(), x.cols(), x.nnz())?;
    for (i, j, v) in x.triplets() {
        writeln!(w, "{} {} {v:e}", i + 1, j + 1)?;
    }
    Ok(())
}

pub fn save_dense<T: Real>(path: &Path, format: MatrixFormat, x: &DenseMatrix<T>) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        MatrixFormat::Csv => write_csv(w, x),
        MatrixFormat::MatrixMarket => write_matrix_market_dense(w, x),
        MatrixFormat::LibsvmMultilabel => Err(CcaError::DimensionMismatch(
            "libsvm output is not supported for a single matrix".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn csv_two_by_two() {
        let m: DenseMatrix<f64> = read_csv(Cursor::new("1,2\n3,4\n"), false).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let h: DenseMatrix<f64> = read_csv(Cursor::new("a,b\n1,2\n"), true).unwrap();
        assert_eq!(h.shape(), (1, 2));
    }

    #[test]
    fn csv_errors_carry_location() {
        let ragged = read_csv::<f64>(Cursor::new("1,2\n3\n"), false);
        assert!(matches!(ragged, Err(CcaError::DimensionMismatch(msg)) if msg.contains("line 2")));
        let bad = read_csv::<f64>(Cursor::new("1,2\n3,x\n"), false);
        assert!(matches!(bad, Err(CcaError::Parse { line: 2, .. })));
    }

    #[test]
    fn matrix_market_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n3 4 3\n1 1 1.5\n2 4 -2\n3 2 7\n";
        match read_matrix_market::<f64>(Cursor::new(text)).unwrap() {
            Loaded::Sparse(s) => {
                assert_eq!(s.shape(), (3, 4));
                assert_eq!(s.nnz(), 3);
                assert_eq!(s.to_dense().get(1, 3), -2.0);
            }
            _ => panic!("expected sparse"),
        }
    }

    #[test]
    fn matrix_market_array_and_symmetric() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let d = read_matrix_market::<f64>(Cursor::new(text)).unwrap().into_dense();
        assert_eq!(d.to_rows(), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 1 5\n";
        let s = read_matrix_market::<f64>(Cursor::new(sym)).unwrap().into_dense();
        assert_eq!(s.get(0, 1), 5.0);
        assert_eq!(s.get(1, 0), 5.0);
    }

    #[test]
    fn matrix_market_bad_entry() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            read_matrix_market::<f64>(Cursor::new(text)),
            Err(CcaError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn libsvm_multilabel_line() {
        let opts = LoadOptions {
            n_features: Some(3),
            n_labels: Some(4),
            ..Default::default()
        };
        let (f, l) = read_libsvm_multilabel::<f64>(Cursor::new("1,3 2:0.5\n"), &opts).unwrap();
        assert_eq!(l.to_dense().row(0), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(f.to_dense().row(0), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn libsvm_zero_based_labels_and_unlabelled_rows() {
        let text = "0,2 1:1 3:2\n 2:4\n1 1:-1\n";
        let (f, l) = read_libsvm_multilabel::<f64>(Cursor::new(text), &LoadOptions::default()).unwrap();
        assert_eq!(f.shape(), (3, 3));
        assert_eq!(l.shape(), (3, 3));
        assert_eq!(l.to_dense().row(0), vec![1.0, 0.0, 1.0]);
        assert_eq!(l.to_dense().row(1), vec![0.0, 0.0, 0.0]);
        assert_eq!(f.to_dense().row(1), vec![0.0, 4.0, 0.0]);
    }

    #[test]
    fn format_names() {
        assert_eq!("mm".parse::<MatrixFormat>().unwrap(), MatrixFormat::MatrixMarket);
        assert_eq!(
            MatrixFormat::from_extension(Path::new("x.svm")),
            Some(MatrixFormat::LibsvmMultilabel)
        );
        assert!("xls".parse::<MatrixFormat>().is_err());
    }
}
