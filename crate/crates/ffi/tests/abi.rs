use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use sresnet::data::Standardization;
use sresnet::model::{Mode, Model, ModelConfig, SeScheme};
use sresnet::tensor::Tensor;
use sresnet::train::predictions;
use sresnet_ffi::*;
use tempfile::TempDir;

const SIDE: usize = 16;

fn saved_model(dir: &Path) -> (Model, Standardization, CString) {
    let mut config = ModelConfig::tiny(3, SeScheme::S3);
    config.input_size = (SIDE, SIDE);
    let mut model = Model::build(config, 17).unwrap();
    let stats = Standardization::new([0.4, 0.5, 0.6], [0.2, 0.25, 0.3]).unwrap();
    let path = dir.join("m.ckpt");
    model.save_with(&path, Some(stats.clone())).unwrap();
    model.set_mode(Mode::Inference);
    (model, stats, CString::new(path.to_str().unwrap()).unwrap())
}

fn images(n: usize) -> Vec<f64> {
    (0..n * 3 * SIDE * SIDE)
        .map(|i| ((i * 7919) % 1000) as f64 / 999.0)
        .collect()
}

fn standardized(pixels: &[f64], n: usize, s: &Standardization) -> Tensor {
    let plane = SIDE * SIDE;
    let data = pixels
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = (i / plane) % 3;
            (v - s.mean[c]) / s.std[c]
        })
        .collect();
    Tensor::new(&[n, 3, SIDE, SIDE], data).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(srn_last_error_message()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn load(path: &CString) -> *mut SrnModel {
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { srn_model_load(path.as_ptr(), &mut handle) },
        SrnStatus::Ok,
        "{}",
        last_error()
    );
    assert!(!handle.is_null());
    handle
}

#[test]
fn loaded_model_matches_library_forward() {
    let dir = TempDir::new().unwrap();
    let (model, stats, path) = saved_model(dir.path());
    let handle = load(&path);
    unsafe {
        assert_eq!(srn_model_feature_dim(handle), 128);
        assert_eq!(srn_model_num_classes(handle), 3);
        let (mut h, mut w) = (0, 0);
        assert_eq!(srn_model_input_size(handle, &mut h, &mut w), SrnStatus::Ok);
        assert_eq!((h, w), (SIDE, SIDE));

        let n = 2;
        let px = images(n);
        let mut feats = vec![0.0; n * 128];
        assert_eq!(
            srn_model_extract_features(handle, px.as_ptr(), n, feats.as_mut_ptr(), feats.len()),
            SrnStatus::Ok
        );
        let x = standardized(&px, n, &stats);
        assert_eq!(feats, model.extract_features(&x).unwrap().data());

        let mut labels = vec![usize::MAX; n];
        assert_eq!(
            srn_model_predict(handle, px.as_ptr(), n, labels.as_mut_ptr()),
            SrnStatus::Ok
        );
        assert_eq!(labels, predictions(&model.forward(&x).unwrap()));
        assert_eq!(last_error(), "");
        srn_model_free(handle);
    }
}

#[test]
fn buffer_and_argument_errors() {
    let dir = TempDir::new().unwrap();
    let (_, _, path) = saved_model(dir.path());
    let handle = load(&path);
    let px = images(1);
    let mut feats = vec![0.0; 128];
    unsafe {
        assert_eq!(
            srn_model_extract_features(handle, px.as_ptr(), 1, feats.as_mut_ptr(), 127),
            SrnStatus::BufferTooSmall
        );
        assert!(last_error().contains("need 128"), "{}", last_error());
        assert_eq!(
            srn_model_extract_features(handle, px.as_ptr(), 0, feats.as_mut_ptr(), 128),
            SrnStatus::InvalidArgument
        );
        assert_eq!(
            srn_model_extract_features(handle, ptr::null(), 1, feats.as_mut_ptr(), 128),
            SrnStatus::NullPointer
        );
        assert_eq!(
            srn_model_extract_features(ptr::null(), px.as_ptr(), 1, feats.as_mut_ptr(), 128),
            SrnStatus::NullPointer
        );
        assert_eq!(
            srn_model_predict(handle, px.as_ptr(), 1, ptr::null_mut()),
            SrnStatus::NullPointer
        );
        assert_eq!(
            srn_model_input_size(handle, ptr::null_mut(), ptr::null_mut()),
            SrnStatus::NullPointer
        );
        assert_eq!(srn_model_feature_dim(ptr::null()), 0);
        assert_eq!(srn_model_num_classes(ptr::null()), 0);
        srn_model_free(handle);
        srn_model_free(ptr::null_mut());
    }
}

#[test]
fn load_failures_report_status_and_message() {
    let dir = TempDir::new().unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        let missing = CString::new(dir.path().join("absent.ckpt").to_str().unwrap()).unwrap();
        assert_eq!(srn_model_load(missing.as_ptr(), &mut handle), SrnStatus::Io);
        assert!(handle.is_null());
        assert!(last_error().contains("absent.ckpt"), "{}", last_error());

        let junk = dir.path().join("junk.ckpt");
        std::fs::write(&junk, b"NOTACKPT and some bytes").unwrap();
        let junk = CString::new(junk.to_str().unwrap()).unwrap();
        assert_eq!(
            srn_model_load(junk.as_ptr(), &mut handle),
            SrnStatus::Format
        );
        assert!(!last_error().is_empty());

        let (_, _, path) = saved_model(dir.path());
        let mut bytes = std::fs::read(path.to_str().unwrap()).unwrap();
        bytes[8] = 99;
        let newer = dir.path().join("newer.ckpt");
        std::fs::write(&newer, &bytes).unwrap();
        let newer = CString::new(newer.to_str().unwrap()).unwrap();
        assert_eq!(
            srn_model_load(newer.as_ptr(), &mut handle),
            SrnStatus::Version
        );

        assert_eq!(
            srn_model_load(ptr::null(), &mut handle),
            SrnStatus::NullPointer
        );
        assert_eq!(
            srn_model_load(path.as_ptr(), ptr::null_mut()),
            SrnStatus::NullPointer
        );
        assert_eq!(last_error(), "out is null");
    }
}

#[test]
fn metrics_through_the_abi() {
    let (x, y) = ([0.0, 0.0], [3.0, 4.0]);
    let mut out = f64::NAN;
    unsafe {
        assert_eq!(
            srn_euclidean(x.as_ptr(), y.as_ptr(), 2, &mut out),
            SrnStatus::Ok
        );
        assert_eq!(out, 5.0);
        assert_eq!(
            srn_manhattan(x.as_ptr(), y.as_ptr(), 2, &mut out),
            SrnStatus::Ok
        );
        assert_eq!(out, 7.0);
        assert_eq!(
            srn_cosine(y.as_ptr(), y.as_ptr(), 2, &mut out),
            SrnStatus::Ok
        );
        assert!((out - 1.0).abs() < 1e-15);

        assert_eq!(
            srn_cosine(x.as_ptr(), y.as_ptr(), 2, &mut out),
            SrnStatus::UndefinedSimilarity
        );
        assert!(!last_error().is_empty());
        assert_eq!(
            srn_euclidean(ptr::null(), y.as_ptr(), 2, &mut out),
            SrnStatus::NullPointer
        );
        assert_eq!(last_error(), "x is null");
        assert_eq!(
            srn_euclidean(x.as_ptr(), y.as_ptr(), 2, ptr::null_mut()),
            SrnStatus::NullPointer
        );
        assert_eq!(
            srn_euclidean(ptr::null(), ptr::null(), 0, &mut out),
            SrnStatus::Ok
        );
        assert_eq!(out, 0.0);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(srn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sresnet.h"))
            .unwrap();
    let source =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|rest| &rest[..rest.find('(').unwrap()])
        .collect();
    assert_eq!(exports.len(), 12);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(header.contains("typedef struct SrnModel SrnModel;"));
    assert!(header.contains("SRN_STATUS_BUFFER_TOO_SMALL = 9"));
}
