//! Compile a C program against the generated header and link the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

/// `target/<profile>`, found from the running test binary in `target/<profile>/deps`.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().expect("test binary path");
    exe.parent().and_then(Path::parent).expect("target/<profile>/deps").to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let archive = profile_dir().join("liblookahead_smc_ffi.a");
    assert!(archive.exists(), "static library missing at {}", archive.display());
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&out).output().expect("run smoke binary");
    assert!(run.status.success(), "smoke binary exited with {:?}", run.status.code());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
}
