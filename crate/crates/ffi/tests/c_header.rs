//! Compiles a small C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "wcrlab.h"

int main(void) {
    WcrFamily *f = NULL;
    if (wcr_family_new("uniform-scale", &f) != WCR_STATUS_OK) return 10;
    double theta = 2.0, j = 0.0;
    if (wcr_information(f, &theta, 1, &j, 1) != WCR_STATUS_OK) return 11;
    if (fabs(j - 1.0 / 3.0) > 1e-12) return 12;
    double bad = -1.0;
    if (wcr_information(f, &bad, 1, &j, 1) != WCR_STATUS_INVALID_ARGUMENT) return 13;
    if (wcr_last_error()[0] == '\0') return 14;
    wcr_family_free(f);
    printf("ok %s\n", wcr_version());
    return 0;
}
"#;

/// The static library built alongside this test binary, in `target/<profile>/deps`.
fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().join("libwcrlab_ffi.a")
}

#[test]
fn header_compiles_and_links() {
    let lib = static_lib();
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
