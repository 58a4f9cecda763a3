//! Compiles a small C program against `include/sresnet.h` and runs it
//! against the shared library cargo built next to this test binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sresnet::model::{Model, ModelConfig, SeScheme};
use tempfile::TempDir;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "sresnet.h"

int main(int argc, char **argv) {
    double a[2] = {0.0, 0.0}, b[2] = {3.0, 4.0}, d = 0.0, m = 0.0;
    if (srn_euclidean(a, b, 2, &d) != SRN_STATUS_OK) return 10;
    if (srn_manhattan(a, b, 2, &m) != SRN_STATUS_OK) return 11;
    if (srn_cosine(a, b, 2, &d) != SRN_STATUS_UNDEFINED_SIMILARITY) return 12;
    if (strlen(srn_last_error_message()) == 0) return 13;
    srn_euclidean(a, b, 2, &d);

    SrnModel *model = NULL;
    SrnStatus st = srn_model_load(argv[1], &model);
    if (st != SRN_STATUS_OK) {
        fprintf(stderr, "load: %s\n", srn_last_error_message());
        return 20;
    }
    size_t h = 0, w = 0;
    srn_model_input_size(model, &h, &w);
    double pixels[3 * 8 * 8];
    for (size_t i = 0; i < sizeof pixels / sizeof pixels[0]; i++) pixels[i] = (double)(i % 17) / 16.0;
    size_t label = 99;
    st = srn_model_predict(model, pixels, 1, &label);
    printf("%s %.1f %.1f %zu %zux%zu %zu %d\n", srn_version(), d, m, srn_model_feature_dim(model), h, w,
           srn_model_num_classes(model), label < 3);
    srn_model_free(model);
    return st == SRN_STATUS_OK ? 0 : 21;
}
"#;

fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    // target/<profile>/deps/<test> -> target/<profile>
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = lib_dir();
    let so = lib.join("libsresnet_ffi.so");
    if Command::new("cc").arg("--version").output().is_err() || !so.exists() {
        eprintln!("skipping: no C compiler or no {}", so.display());
        return;
    }
    let dir = TempDir::new().unwrap();
    let mut config = ModelConfig::tiny(3, SeScheme::S2);
    config.input_size = (8, 8);
    let ckpt = dir.path().join("m.ckpt");
    Model::build(config, 1).unwrap().save(&ckpt).unwrap();

    let src = dir.path().join("main.c");
    fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let cc = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg(format!("-I{}", include.display()))
        .arg(format!("-L{}", lib.display()))
        .arg("-lsresnet_ffi")
        .arg(format!("-Wl,-rpath,{}", lib.display()))
        .output()
        .unwrap();
    assert!(
        cc.status.success(),
        "cc failed:\n{}",
        String::from_utf8_lossy(&cc.stderr)
    );

    let run = Command::new(&exe).arg(&ckpt).output().unwrap();
    assert!(
        run.status.success(),
        "exit {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8(run.stdout).unwrap();
    let expected = format!("{} 5.0 7.0 128 8x8 3 1\n", env!("CARGO_PKG_VERSION"));
    assert_eq!(stdout, expected);
}
