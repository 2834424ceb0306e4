#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Output;

/// Every shipped scene with the subcommand it is meant for.
pub const SCENES: &[(&str, &str)] = &[
    ("embed_points", "embed"),
    ("spacelike_slice", "classify"),
    ("timelike_hyperplane", "classify"),
    ("hypersphere_timelike", "classify"),
    ("hypersphere_spacelike", "classify"),
    ("sphere_mixed", "classify"),
    ("lightcone3_classify", "classify"),
    ("lightcone3", "lightlike"),
    ("null_hyperplane", "lightlike"),
    ("tilted_null_family", "lightlike"),
    ("null_torus", "lightlike"),
    ("parallel_null", "congruence"),
    ("light_cone_normal", "congruence"),
    ("twisted", "congruence"),
];

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scene_path(name: &str) -> PathBuf {
    root().join("scenes").join(format!("{name}.toml"))
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.out"))
}

pub fn pcgeom(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_pcgeom"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Standard output of `command --scene <name>`.
pub fn run_scene(name: &str, command: &str) -> Output {
    let path = scene_path(name);
    pcgeom(&[command, "--scene", path.to_str().unwrap()])
}
