//! Floor plans shipped with the crate. They reproduce the room and exit counts
//! of the three evaluated buildings; geometry is an approximation.

use std::path::Path;

use crate::layout::{FloorLayout, LayoutError};

pub const STRUCTURE1: &str = include_str!("../maps/structure1.map");
pub const GYTE_FLOOR1: &str = include_str!("../maps/gyte_floor1.map");
pub const SULB_FLOOR3: &str = include_str!("../maps/sulb_floor3.map");

pub const BUNDLED: [(&str, &str); 3] = [
    ("structure1", STRUCTURE1),
    ("gyte_floor1", GYTE_FLOOR1),
    ("sulb_floor3", SULB_FLOOR3),
];

/// Loads a bundled map by name (`structure1`, `gyte_floor1`, `sulb_floor3`).
pub fn bundled(name: &str) -> Option<FloorLayout> {
    let name = name.strip_suffix(".map").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(n, src)| {
        FloorLayout::parse(src)
            .expect("bundled maps are valid")
            .with_name(*n)
    })
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Layout {
        path: String,
        #[source]
        source: LayoutError,
    },
}

/// Reads a map file. The layout name is the `; name:` directive if present,
/// otherwise the file stem.
pub fn load_file(path: &Path) -> Result<FloorLayout, LoadError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    let layout = FloorLayout::parse(&text).map_err(|source| LoadError::Layout {
        path: display,
        source,
    })?;
    if layout.name().is_empty() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(layout.with_name(stem))
    } else {
        Ok(layout)
    }
}

/// A bundled name, or else a path (relative paths resolve against `base`).
pub fn resolve(name_or_path: &str, base: Option<&Path>) -> Result<FloorLayout, LoadError> {
    let candidate = match base {
        Some(dir) => dir.join(name_or_path),
        None => Path::new(name_or_path).to_path_buf(),
    };
    if !candidate.exists() {
        if let Some(layout) = bundled(name_or_path) {
            return Ok(layout);
        }
    }
    load_file(&candidate)
}
