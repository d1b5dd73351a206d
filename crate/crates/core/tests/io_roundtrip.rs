mod common;

use std::io::Cursor;

use common::gaussian;
use fastcca::matrix::io::{
    load_matrix, read_csv, read_libsvm_multilabel, read_matrix_market, save_dense, write_csv,
    write_matrix_market_sparse, LoadOptions, Loaded, MatrixFormat,
};
use fastcca::{CcaError, DenseMatrix, SparseMatrix};

#[test]
fn csv_two_by_two() {
    let x: DenseMatrix<f64> = read_csv(Cursor::new("1,2\n3,4\n"), false).unwrap();
    assert_eq!(x.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    let h: DenseMatrix<f64> = read_csv(Cursor::new("a,b\n1,2\n"), true).unwrap();
    assert_eq!(h.shape(), (1, 2));
}

#[test]
fn ragged_csv_is_a_dimension_mismatch() {
    let r = read_csv::<f64>(Cursor::new("1,2\n3\n"), false);
    assert!(matches!(r, Err(CcaError::DimensionMismatch(_))));
    let r = read_csv::<f64>(Cursor::new("1,2\n3,x\n"), false);
    assert!(matches!(r, Err(CcaError::Parse { line: 2, .. })));
}

#[test]
fn matrix_market_coordinate() {
    let text = "%%MatrixMarket matrix coordinate real general\n% c\n3 3 3\n1 1 1.5\n2 3 -2\n3 2 4\n";
    match read_matrix_market::<f64>(Cursor::new(text)).unwrap() {
        Loaded::Sparse(s) => {
            assert_eq!(s.nnz(), 3);
            assert_eq!(s.to_dense().get(1, 2), -2.0);
        }
        _ => panic!("expected sparse"),
    }
}

#[test]
fn libsvm_example_line() {
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
fn matrix_market_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let x = gaussian(17, 4, 3).scale(1e-7);
    let path = dir.path().join("x.mtx");
    save_dense(&path, MatrixFormat::MatrixMarket, &x).unwrap();
    let y = load_matrix::<f64>(&path, MatrixFormat::MatrixMarket, &LoadOptions::default())
        .unwrap()
        .into_dense();
    let bits = |m: &DenseMatrix<f64>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&x), bits(&y));

    let s = SparseMatrix::from_dense(&x);
    let mut buf = Vec::new();
    write_matrix_market_sparse(&mut buf, &s).unwrap();
    let back = match read_matrix_market::<f64>(Cursor::new(buf)).unwrap() {
        Loaded::Sparse(s) => s,
        _ => panic!("expected sparse"),
    };
    assert_eq!(back, s);
}

#[test]
fn csv_round_trip_to_17_digits() {
    let x = gaussian(9, 3, 4).scale(std::f64::consts::PI);
    let mut buf = Vec::new();
    write_csv(&mut buf, &x).unwrap();
    let y: DenseMatrix<f64> = read_csv(Cursor::new(buf), false).unwrap();
    for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
        assert!((a - b).abs() <= 1e-16 * a.abs());
    }
}

#[test]
fn missing_file() {
    let r = load_matrix::<f64>(
        std::path::Path::new("/no/such/file.csv"),
        MatrixFormat::Csv,
        &LoadOptions::default(),
    );
    assert!(matches!(r, Err(CcaError::DatasetNotFound(_))));
}
