#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use treecut_core::synthetic::{hierarchy_image, HierarchyImage, HierarchyOptions};
use treecut_core::tuning::Scale;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treecut"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// Value printed after `key: ` on its own line.
    pub fn field(&self, key: &str) -> Option<&str> {
        let prefix = format!("{key}: ");
        self.stdout
            .lines()
            .find_map(|l| l.strip_prefix(prefix.as_str()))
    }

    pub fn number(&self, key: &str) -> f64 {
        self.field(key)
            .unwrap_or_else(|| panic!("no {key:?} in output:\n{}", self.stdout))
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    }
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Self {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

pub fn treecut<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Run {
    bin().args(args).output().expect("binary runs").into()
}

pub fn ok<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Run {
    let run = treecut(args);
    assert_eq!(run.code, 0, "stdout:\n{}\nstderr:\n{}", run.stdout, run.stderr);
    run
}

pub fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Synthetic image with its planted tree, superpixels and per-scale
/// ground truths written under `dir` as `<stem>.*`.
pub struct SceneFiles {
    pub image: PathBuf,
    pub tree: PathBuf,
    pub superpixels: PathBuf,
    pub coarse: PathBuf,
    pub medium: PathBuf,
    pub fine: PathBuf,
    pub data: HierarchyImage,
}

pub fn write_scene(dir: &Path, stem: &str, options: &HierarchyOptions, seed: u64) -> SceneFiles {
    let data = hierarchy_image(options, seed).unwrap();
    write_hierarchy(dir, stem, data)
}

pub fn write_hierarchy(dir: &Path, stem: &str, data: HierarchyImage) -> SceneFiles {
    let f = |ext: &str| dir.join(format!("{stem}.{ext}"));
    let files = SceneFiles {
        image: f("ppm"),
        tree: f("tree.json"),
        superpixels: f("sp.pgm"),
        coarse: f("coarse.pgm"),
        medium: f("medium.pgm"),
        fine: f("fine.pgm"),
        data,
    };
    files.data.image.write_ppm(&files.image).unwrap();
    files.data.tree.write_json(&files.tree).unwrap();
    files.data.superpixels.write_pgm(&files.superpixels).unwrap();
    for (scale, path) in Scale::ALL.iter().zip([&files.coarse, &files.medium, &files.fine]) {
        files.data.ground_truth(*scale).write_pgm(path).unwrap();
    }
    files
}

/// Every regular file in `dir` by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

pub fn distinct_labels(path: &Path) -> usize {
    let raw = treecut_core::pnm::read_pgm(path).unwrap();
    raw.data
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len()
}
