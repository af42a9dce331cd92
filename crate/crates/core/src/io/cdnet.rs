//! Change-detection dataset layout discovery.
//!
//! A sequence directory holds `input/` frames (`in%06d.jpg` or `.ppm`),
//! optionally `groundtruth/` (`gt%06d.png` or `.pgm`), `semantic/`
//! (`sem%06d.pgm`), `availability/` (`avail%06d.pgm`), and a
//! `temporalROI.txt` with two space-separated frame numbers.

use std::fs;
use std::path::{Path, PathBuf};

use super::parse_frame_index;
use crate::error::{Error, Result};

/// A discovered video sequence: sorted frame list plus optional side data.
#[derive(Clone, Debug)]
pub struct SequenceDescriptor {
    pub name: String,
    /// Parent category name; empty for flat suites.
    pub category: String,
    pub root: PathBuf,
    /// `(frame number, path)` sorted by strictly increasing frame number.
    pub frames: Vec<(u32, PathBuf)>,
    pub gt_dir: Option<PathBuf>,
    pub semantic_dir: Option<PathBuf>,
    pub availability_dir: Option<PathBuf>,
    /// Inclusive `(first, last)` frame numbers to evaluate.
    pub temporal_roi: Option<(u32, u32)>,
}

const FRAME_EXTENSIONS: [&str; 5] = ["ppm", "pgm", "png", "jpg", "jpeg"];

/// Discovers one sequence rooted at a directory containing `input/`.
///
/// The frame list is sorted by the number parsed from each file name, so
/// the result does not depend on filesystem listing order.
pub fn discover_cdnet_sequence(root: &Path) -> Result<SequenceDescriptor> {
    let input = root.join("input");
    if !input.is_dir() {
        return Err(Error::Layout(format!(
            "{}: no input/ subdirectory",
            root.display()
        )));
    }

    let mut frames = Vec::new();
    for entry in fs::read_dir(&input).map_err(|e| Error::io(&input, e))? {
        let entry = entry.map_err(|e| Error::io(&input, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        if !FRAME_EXTENSIONS.contains(&ext.as_str()) {
            continue;
        }
        let index = parse_frame_index(&path).ok_or_else(|| {
            Error::Layout(format!("{}: frame name carries no index", path.display()))
        })?;
        frames.push((index, path));
    }
    if frames.is_empty() {
        return Err(Error::Layout(format!(
            "{}: input/ holds no frames",
            root.display()
        )));
    }
    frames.sort_by_key(|(i, _)| *i);
    for pair in frames.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Layout(format!(
                "{}: duplicate frame number {}",
                root.display(),
                pair[0].0
            )));
        }
    }

    let name = root
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
        .to_string();
    let category = root
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .unwrap_or("")
        .to_string();

    Ok(SequenceDescriptor {
        name,
        category,
        root: root.to_path_buf(),
        frames,
        gt_dir: existing_dir(root.join("groundtruth")),
        semantic_dir: existing_dir(root.join("semantic")),
        availability_dir: existing_dir(root.join("availability")),
        temporal_roi: read_temporal_roi(&root.join("temporalROI.txt"))?,
    })
}

/// Discovers every sequence under a root.
///
/// Accepts a single sequence directory, a flat directory of sequences, or
/// the two-level `category/video` benchmark layout. Results are sorted by
/// `(category, name)`. Flat layouts get an empty category.
pub fn discover_dataset(root: &Path) -> Result<Vec<SequenceDescriptor>> {
    if root.join("input").is_dir() {
        let mut seq = discover_cdnet_sequence(root)?;
        seq.category = String::new();
        return Ok(vec![seq]);
    }
    let mut found = Vec::new();
    let mut subdirs: Vec<PathBuf> = list_dirs(root)?;
    subdirs.sort();
    for child in &subdirs {
        if child.join("input").is_dir() {
            let mut seq = discover_cdnet_sequence(child)?;
            seq.category = String::new();
            found.push(seq);
        } else {
            let mut grandchildren = list_dirs(child)?;
            grandchildren.sort();
            for video in grandchildren {
                if video.join("input").is_dir() {
                    found.push(discover_cdnet_sequence(&video)?);
                }
            }
        }
    }
    if found.is_empty() {
        return Err(Error::Layout(format!(
            "{}: no sequences found (no input/ directories)",
            root.display()
        )));
    }
    found.sort_by(|a, b| (&a.category, &a.name).cmp(&(&b.category, &b.name)));
    Ok(found)
}

fn list_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    Ok(dirs)
}

fn existing_dir(path: PathBuf) -> Option<PathBuf> {
    path.is_dir().then_some(path)
}

fn read_temporal_roi(path: &Path) -> Result<Option<(u32, u32)>> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut nums = text.split_whitespace();
    let parse = |s: Option<&str>| -> Result<u32> {
        s.ok_or_else(|| Error::Format(format!("{}: expected two integers", path.display())))?
            .parse()
            .map_err(|_| Error::Format(format!("{}: expected two integers", path.display())))
    };
    let first = parse(nums.next())?;
    let last = parse(nums.next())?;
    Ok(Some((first, last)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn make_sequence(root: &Path, n: u32, shuffle: bool) {
        let input = root.join("input");
        fs::create_dir_all(&input).unwrap();
        let mut order: Vec<u32> = (1..=n).collect();
        if shuffle {
            order.reverse();
        }
        for i in order {
            let mut bytes = b"P6\n1 1\n255\n".to_vec();
            bytes.extend_from_slice(&[1, 2, 3]);
            fs::write(input.join(format!("in{i:06}.ppm")), bytes).unwrap();
        }
    }

    #[test]
    fn discovers_frames_and_roi() {
        let dir = tempfile::tempdir().unwrap();
        make_sequence(dir.path(), 10, false);
        fs::write(dir.path().join("temporalROI.txt"), "5 10").unwrap();
        let seq = discover_cdnet_sequence(dir.path()).unwrap();
        assert_eq!(seq.frames.len(), 10);
        assert_eq!(seq.temporal_roi, Some((5, 10)));
        assert_eq!(seq.frames[0].0, 1);
        assert_eq!(seq.frames[9].0, 10);
    }

    #[test]
    fn missing_input_is_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            discover_cdnet_sequence(dir.path()),
            Err(Error::Layout(_))
        ));
    }

    #[test]
    fn missing_groundtruth_is_not_an_error() {
        let dir = tempfile::tempdir().unwrap();
        make_sequence(dir.path(), 3, false);
        let seq = discover_cdnet_sequence(dir.path()).unwrap();
        assert!(seq.gt_dir.is_none());
        assert!(seq.temporal_roi.is_none());
    }

    #[test]
    fn discovery_sorts_regardless_of_creation_order() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        make_sequence(a.path(), 6, false);
        make_sequence(b.path(), 6, true);
        let sa = discover_cdnet_sequence(a.path()).unwrap();
        let sb = discover_cdnet_sequence(b.path()).unwrap();
        let ia: Vec<u32> = sa.frames.iter().map(|(i, _)| *i).collect();
        let ib: Vec<u32> = sb.frames.iter().map(|(i, _)| *i).collect();
        assert_eq!(ia, ib);
    }

    #[test]
    fn dataset_discovery_handles_flat_and_nested() {
        let dir = tempfile::tempdir().unwrap();
        make_sequence(&dir.path().join("vid_b"), 2, false);
        make_sequence(&dir.path().join("vid_a"), 2, false);
        let flat = discover_dataset(dir.path()).unwrap();
        assert_eq!(flat.len(), 2);
        assert_eq!(flat[0].name, "vid_a");
        assert!(flat.iter().all(|s| s.category.is_empty()));

        let dir2 = tempfile::tempdir().unwrap();
        make_sequence(&dir2.path().join("cat1").join("vid"), 2, false);
        make_sequence(&dir2.path().join("cat0").join("vid"), 2, false);
        let nested = discover_dataset(dir2.path()).unwrap();
        assert_eq!(nested.len(), 2);
        assert_eq!(nested[0].category, "cat0");
        assert_eq!(nested[1].category, "cat1");
    }
}
