//! Density rasters as binary P5 graymaps: one pixel per element, solid
//! material prints black (`gray = round(255 * (1 - rho))`), rows written
//! top-to-bottom so the image matches the physical layout.

use std::path::Path;

use crate::error::ConfigError;
use crate::field::Grid;

pub fn density_pgm(densities: &[f64], grid: &Grid) -> Vec<u8> {
    assert_eq!(densities.len(), grid.elem_count(), "raster size mismatch");
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    for row in (0..grid.ny).rev() {
        for col in 0..grid.nx {
            let rho = densities[row * grid.nx + col];
            out.push((255.0 * (1.0 - rho)).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn write_density_raster(densities: &[f64], grid: &Grid, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, density_pgm(densities, grid))
}

/// Reads a file written by [`write_density_raster`] back into densities
/// (element order, bottom row first) plus the pixel dimensions. Gray
/// levels quantize the density to 1/255.
pub fn read_density_raster(path: &Path) -> Result<(Vec<f64>, usize, usize), ConfigError> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<(Vec<f64>, usize, usize), ConfigError> {
    let syntax = |message: &str| ConfigError::Syntax {
        line: 1,
        message: message.to_string(),
    };
    // Header: "P5", width, height, maxval as whitespace-separated tokens,
    // then a single whitespace byte before the payload.
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String, ConfigError> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(ConfigError::Syntax {
                line: 1,
                message: "truncated graymap header".to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token(bytes)? != "P5" {
        return Err(syntax("not a binary graymap (missing P5 magic)"));
    }
    let w: usize = token(bytes)?.parse().map_err(|_| syntax("bad width"))?;
    let h: usize = token(bytes)?.parse().map_err(|_| syntax("bad height"))?;
    let maxval: usize = token(bytes)?.parse().map_err(|_| syntax("bad maxval"))?;
    if maxval != 255 {
        return Err(syntax("only maxval 255 is supported"));
    }
    pos += 1;
    let payload = &bytes[pos..];
    if payload.len() != w * h {
        return Err(syntax(&format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            w * h
        )));
    }
    let mut densities = vec![0.0; w * h];
    for (i, &g) in payload.iter().enumerate() {
        let (row, col) = (i / w, i % w);
        densities[(h - 1 - row) * w + col] = 1.0 - g as f64 / 255.0;
    }
    Ok((densities, w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_prints_black() {
        let grid = Grid::new(4, 3, 4.0, 3.0);
        let pgm = density_pgm(&vec![1.0; 12], &grid);
        let payload = &pgm[pgm.len() - 12..];
        assert!(payload.iter().all(|&b| b == 0));
    }

    #[test]
    fn deep_void_prints_white() {
        let grid = Grid::new(4, 3, 4.0, 3.0);
        // Ersatz floor alpha^2 for alpha = 1e-3.
        let pgm = density_pgm(&vec![1e-6; 12], &grid);
        let payload = &pgm[pgm.len() - 12..];
        assert!(payload.iter().all(|&b| b == 255));
    }

    #[test]
    fn checkerboard_alternates() {
        let grid = Grid::new(2, 2, 1.0, 1.0);
        let d = [1e-6, 1.0, 1.0, 1e-6];
        let pgm = density_pgm(&d, &grid);
        let payload = &pgm[pgm.len() - 4..];
        // Top row first: elements (0,1) then (1,1), then the bottom row.
        assert_eq!(payload, &[0, 255, 255, 0]);
    }

    #[test]
    fn header_and_orientation() {
        let grid = Grid::new(3, 2, 3.0, 2.0);
        let mut d = vec![0.5; 6];
        d[0] = 1.0;
        let pgm = density_pgm(&d, &grid);
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        // Element (0,0) is bottom-left, so it lands in the last pixel row.
        assert_eq!(pgm[pgm.len() - 3], 0);
    }

    #[test]
    fn round_trip_quantizes_to_one_part_in_255() {
        let grid = Grid::new(5, 4, 5.0, 4.0);
        let d: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let (back, w, h) = parse_pgm(&density_pgm(&d, &grid)).unwrap();
        assert_eq!((w, h), (5, 4));
        for (a, b) in d.iter().zip(&back) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12, "{a} vs {b}");
        }
    }
}
