//! File helpers shared by the commands.

use std::path::{Path, PathBuf};

use treecut_core::{
    color_superpixels, grid_superpixels, pnm, AnnotationSet, Image, RegionTree, Segmentation,
    SuperpixelMap,
};

use crate::error::{CliError, CliResult};

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn read_image(path: &Path) -> CliResult<Image> {
    Image::read_ppm(path).map_err(|e| CliError::from(e).in_file(path))
}

pub fn read_tree(path: &Path) -> CliResult<RegionTree> {
    RegionTree::read_json(path).map_err(|e| CliError::from(e).in_file(path))
}

pub fn read_segmentation(path: &Path) -> CliResult<Segmentation> {
    Segmentation::read_pgm(path).map_err(|e| CliError::from(e).in_file(path))
}

pub fn read_annotations(id: &str, paths: &[PathBuf]) -> CliResult<AnnotationSet> {
    if paths.is_empty() {
        return Err(CliError::usage(format!("image {id}: no annotations given")));
    }
    let segs = paths
        .iter()
        .map(|p| read_segmentation(p))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(AnnotationSet::new(id, segs)?)
}

/// Paths in manifests are relative to the manifest's directory.
pub fn relative_to(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

pub fn manifest_dir(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

/// Superpixels from `grid:CELL`, `slic:COUNT` or a PGM label map.
pub fn superpixels(source: &str, image: &Image, seed: u64) -> CliResult<SuperpixelMap> {
    let number = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| CliError::usage(format!("bad superpixel source {source:?}")))
    };
    let map = if let Some(cell) = source.strip_prefix("grid:") {
        grid_superpixels(image, number(cell)?)?
    } else if let Some(count) = source.strip_prefix("slic:") {
        color_superpixels(image, number(count)?, seed)?
    } else {
        let path = Path::new(source);
        let map = SuperpixelMap::read_pgm(path).map_err(|e| CliError::from(e).in_file(path))?;
        map.check_matches(image)?;
        map
    };
    Ok(map)
}

/// Each region painted with the per-channel lower median of its 8-bit
/// pixel colors.
pub fn median_render(image: &Image, seg: &Segmentation) -> Vec<[u8; 3]> {
    let rgb = image.to_rgb8();
    let mut members: Vec<Vec<[u8; 3]>> = vec![Vec::new(); seg.num_regions()];
    for (px, &l) in rgb.iter().zip(seg.labels()) {
        members[l as usize].push(*px);
    }
    let colors: Vec<[u8; 3]> = members
        .iter_mut()
        .map(|m| {
            std::array::from_fn(|c| {
                let mut v: Vec<u8> = m.iter().map(|px| px[c]).collect();
                v.sort_unstable();
                v[(v.len() - 1) / 2]
            })
        })
        .collect();
    seg.labels().iter().map(|&l| colors[l as usize]).collect()
}

pub fn write_render(path: &Path, image: &Image, seg: &Segmentation) -> CliResult<()> {
    let data = median_render(image, seg);
    write_file(path, pnm::encode_ppm(image.width(), image.height(), &data))
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
