//! Deterministic data-file writers: CSV with an embedded schema line,
//! binary PPM/PGM images, and JSON. No timestamps anywhere; identical runs
//! produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const SCHEMA_PREFIX: &str = "tropgeom";
pub const SCHEMA_VERSION: &str = "v1";

/// CSV buffer with a `# schema:` comment line followed by a header row.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(schema_name: &str, header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!(
            "# schema: {SCHEMA_PREFIX}.{schema_name}.{SCHEMA_VERSION}\n"
        ));
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }

    pub fn write(self, path: &Path) -> Result<(), CliError> {
        write_bytes(path, self.buf.as_bytes())
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    let mut f =
        fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialize: {e}")))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Binary PPM (P6): 8-bit RGB, row-major from the top row.
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<(), CliError> {
    debug_assert_eq!(rgb.len(), width * height * 3);
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(rgb);
    write_bytes(path, &bytes)
}

/// Binary PGM (P5): 8-bit grayscale, row-major from the top row.
pub fn write_pgm(path: &Path, width: usize, height: usize, gray: &[u8]) -> Result<(), CliError> {
    debug_assert_eq!(gray.len(), width * height);
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(gray);
    write_bytes(path, &bytes)
}

/// Shortest-roundtrip decimal form of an `f64` (Rust's `Display`).
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
