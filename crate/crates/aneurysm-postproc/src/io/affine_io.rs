//! Plain-text 4x4 transform files: four rows of four whitespace-separated
//! decimal numbers, mapping template world coordinates to target world
//! coordinates.

use std::fmt::Write as _;
use std::path::Path;

use crate::affine::Affine4;
use crate::error::{Error, Result};
use crate::io::{atomic_write, read_to_string};

pub fn read_affine(path: &Path) -> Result<Affine4> {
    let text = read_to_string(path)?;
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 16 {
        return Err(Error::parse(
            path,
            format!("expected 16 numbers (4 rows x 4 columns), found {}", tokens.len()),
        ));
    }
    let mut m = [[0.0f64; 4]; 4];
    for (i, tok) in tokens.iter().enumerate() {
        m[i / 4][i % 4] = tok.parse().map_err(|_| {
            Error::parse(path, format!("token {} ('{}') is not a number", i + 1, tok))
        })?;
    }
    // construction errors (bad last row, singular) are file-content problems
    Affine4::new(m).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_affine(path: &Path, t: &Affine4) -> Result<()> {
    let mut out = String::new();
    for row in t.matrix() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            // shortest representation that round-trips the f64 exactly
            write!(out, "{v}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}
