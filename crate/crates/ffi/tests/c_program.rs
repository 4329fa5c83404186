//! Compiles and runs a C program against `include/schro.h` and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "schro.h"

int main(void) {
    SchroGrid *grid = NULL;
    SchroGroundState *gs = NULL;
    if (schro_grid_new(1, 15.0, 1501, &grid) != SCHRO_STATUS_OK) return 10;
    if (schro_ground_state_solve(grid, 1e-10, &gs) != SCHRO_STATUS_OK) return 11;
    double lambdas[2];
    if (schro_eigenvalues(gs, 0.0, 2, lambdas) != SCHRO_STATUS_OK) return 12;
    SchroVerdict v;
    if (schro_classify_region(-0.5, 1.0, 1.0, 1.0, &v) != SCHRO_STATUS_OK) return 13;
    if (schro_grid_new(7, 1.0, 100, &grid) != SCHRO_STATUS_INVALID_ARGUMENT) return 14;
    char msg[128];
    schro_last_error_message(msg, sizeof msg);
    printf("%.12f %.12f %d %s\n", schro_ground_state_center(gs), lambdas[0], (int)v, msg);
    schro_ground_state_free(gs);
    schro_grid_free(grid);
    return fabs(lambdas[0] - 1.0) < 1e-4 ? 0 : 15;
}
"#;

/// The static library from this build, or a fresh one built into a separate
/// target directory (plain `cargo test` only produces the rlib).
fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libschro_ffi.a");
    if lib.exists() {
        return lib;
    }
    let target = profile_dir.parent().unwrap().join("ffi-link");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "--lib", "--manifest-path"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml"))
        .arg("--target-dir")
        .arg(&target)
        .status()
        .unwrap();
    assert!(status.success(), "building the static library failed");
    target.join("debug/libschro_ffi.a")
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok()?.status.success().then_some(cc)
}

#[test]
fn c_program_links_against_the_header() {
    let cc = compiler().expect("a C compiler (set CC) is needed for this test");
    let lib = static_lib();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "exit {:?}: {stdout}", out.status.code());
    assert!(stdout.starts_with("1.41421"), "{stdout}");
    assert!(stdout.contains(" 1 invalid configuration: dimension must be 1, 2 or 3"), "{stdout}");
}
