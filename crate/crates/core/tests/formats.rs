mod common;

use std::io::Cursor;

use common::*;
use ndarray::Array2;
use otce::data::{decode_feature_file, encode_feature_file, read_csv_from, FTRS_HEADER_LEN};
use otce::{read_csv, read_feature_file, write_feature_file, Error, FeatureSet};

#[test]
fn ftrs_round_trip_is_bit_exact() {
    let mut rng = rng(51);
    let x = gaussian(&mut rng, 100, 16).mapv(|v| v as f32 as f64);
    let set = FeatureSet::new("r", x, labels(&mut rng, 100, 7), 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.ftrs");
    write_feature_file(&set, &path).unwrap();
    let back: FeatureSet<f64> = read_feature_file(&path).unwrap();
    assert_eq!(back.labels(), set.labels());
    assert_eq!(back.class_count(), 9);
    for (a, b) in back.features().iter().zip(set.features().iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    // read then write reproduces the bytes
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(encode_feature_file(&back).unwrap(), bytes);
}

#[test]
fn file_size_arithmetic() {
    let set = FeatureSet::new("big", Array2::<f64>::zeros((1000, 512)), vec![0; 1000], 1).unwrap();
    let bytes = encode_feature_file(&set).unwrap();
    assert_eq!(bytes.len(), 32 + 1000 * 4 + 1000 * 512 * 4);
    assert_eq!(bytes.len(), 2_052_032);
    assert_eq!(&bytes[..4], b"FTRS");
    assert_eq!(FTRS_HEADER_LEN, 32);
}

#[test]
fn minimal_file() {
    let set = FeatureSet::new("m", Array2::<f64>::zeros((1, 1)), vec![0], 1).unwrap();
    let bytes = encode_feature_file(&set).unwrap();
    let back: FeatureSet<f64> = decode_feature_file(&bytes, "m").unwrap();
    assert_eq!((back.len(), back.dim(), back.class_count()), (1, 1, 1));
}

#[test]
fn corrupt_label_stream() {
    let set = FeatureSet::new("m", Array2::<f64>::zeros((2, 1)), vec![0, 1], 3).unwrap();
    let mut bytes = encode_feature_file(&set).unwrap();
    bytes[36..40].copy_from_slice(&5i32.to_le_bytes());
    let err = decode_feature_file::<f64>(&bytes, "m").unwrap_err();
    assert!(matches!(
        err,
        Error::LabelOutOfRange {
            record: 1,
            label: 5,
            classes: 3
        }
    ));
}

#[test]
fn truncated_and_bad_magic() {
    let set = FeatureSet::new("m", Array2::<f64>::ones((2, 2)), vec![0, 1], 2).unwrap();
    let bytes = encode_feature_file(&set).unwrap();
    assert!(matches!(
        decode_feature_file::<f64>(&bytes[..bytes.len() - 1], "m"),
        Err(Error::DimensionMismatch(_))
    ));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(
        decode_feature_file::<f64>(&bad, "m"),
        Err(Error::MalformedHeader { offset: 0, .. })
    ));
    assert!(matches!(
        decode_feature_file::<f64>(&bytes[..10], "m"),
        Err(Error::MalformedHeader { .. })
    ));
}

#[test]
fn nan_is_rejected_before_write() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.ftrs");
    let set = FeatureSet::new("x", ndarray::array![[1e300f64]], vec![0], 1).unwrap();
    assert!(matches!(
        write_feature_file(&set, &path),
        Err(Error::NonFiniteValue { .. })
    ));
    assert!(!path.exists());
}

#[test]
fn csv_examples() {
    let set: FeatureSet<f64> = read_csv_from(Cursor::new("0,1.5,2.5\n1,0.0,1.0"), false, "c").unwrap();
    assert_eq!((set.len(), set.dim(), set.class_count()), (2, 2, 2));

    let err = read_csv_from::<f64, _>(Cursor::new("0,1,2\n1,1,2,3\n"), false, "c").unwrap_err();
    assert!(matches!(
        err,
        Error::RaggedRow {
            row: 1,
            expected: 3,
            found: 4
        }
    ));

    let set: FeatureSet<f64> = read_csv_from(Cursor::new("label,a\n0,1\n4,2\n"), true, "c").unwrap();
    assert_eq!(set.class_count(), 5);
    assert_eq!(set.present_classes(), vec![0, 4]);

    assert!(matches!(
        read_csv_from::<f64, _>(Cursor::new("0,abc\n"), false, "c"),
        Err(Error::NonNumericField { .. })
    ));
    assert!(matches!(
        read_csv_from::<f64, _>(Cursor::new("-1,0.5\n"), false, "c"),
        Err(Error::NegativeLabel { .. })
    ));
}

#[test]
fn csv_to_ftrs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    std::fs::write(&csv, "2,0.25,-1.5\n0,3.0,0.125\n").unwrap();
    let set: FeatureSet<f64> = read_csv(&csv, false).unwrap();
    let ftrs = dir.path().join("a.ftrs");
    write_feature_file(&set, &ftrs).unwrap();
    let back: FeatureSet<f64> = read_feature_file(&ftrs).unwrap();
    assert_eq!(back.features(), set.features());
    assert_eq!(back.labels(), set.labels());
    assert_eq!(back.class_count(), 3);
}

#[test]
fn missing_file_names_path() {
    let err = read_feature_file::<f64>("/nonexistent/x.ftrs").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/x.ftrs"), "{err}");
}
