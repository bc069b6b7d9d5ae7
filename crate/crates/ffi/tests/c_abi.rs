use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_matches_exported_symbols() {
    let header = include_str!("../include/gsgi.h");
    let src = include_str!("../src/lib.rs");
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 10);
    for f in exported {
        assert!(header.contains(&format!("{f}(")), "{f} missing from the header");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    // integration tests only get the rlib, so build the archive here
    let here = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "-p", "gsgi-ffi"])
        .current_dir(&here)
        .status()
        .unwrap();
    assert!(built.success());
    let lib = target_dir().join("libgsgi_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let exe = std::env::temp_dir().join(format!("gsgi_ffi_smoke_{}", std::process::id()));
    let status = Command::new(&cc)
        .arg(here.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(here.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).current_dir(&here).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "smoke program failed: {text} {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(text.starts_with("ok "), "{text}");
}
