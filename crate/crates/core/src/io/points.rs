//! Control point tables as CSV: one row per B-spline control point of
//! every void curve, fixed 4-decimal coordinates.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::ConfigError;
use crate::geometry::ShellSpec;

pub const POINTS_HEADER: &str = "void_index,point_index,x,y";

pub fn control_points_csv(shell: &ShellSpec) -> String {
    let mut s = String::new();
    s.push_str(POINTS_HEADER);
    s.push('\n');
    for (v, void) in shell.voids.iter().enumerate() {
        for (k, p) in void.control_points().iter().enumerate() {
            let _ = writeln!(s, "{v},{k},{:.4},{:.4}", p[0], p[1]);
        }
    }
    s
}

pub fn write_control_points_csv(shell: &ShellSpec, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, control_points_csv(shell))
}

/// Rows of a file written by [`write_control_points_csv`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlPointRow {
    pub void_index: usize,
    pub point_index: usize,
    pub pos: [f64; 2],
}

pub fn read_control_points_csv(path: &Path) -> Result<Vec<ControlPointRow>, ConfigError> {
    parse_control_points_csv(&std::fs::read_to_string(path)?)
}

pub fn parse_control_points_csv(text: &str) -> Result<Vec<ControlPointRow>, ConfigError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == POINTS_HEADER => {}
        other => {
            return Err(ConfigError::Syntax {
                line: 1,
                message: format!(
                    "expected control point header, got `{}`",
                    other.map_or("", |o| o.1)
                ),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, row) in lines {
        let line = i + 1;
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        let bad = |what: &str, v: &str| ConfigError::Syntax {
            line,
            message: format!("cannot parse `{v}` as {what}"),
        };
        rows.push(ControlPointRow {
            void_index: fields[0].parse().map_err(|_| bad("an index", fields[0]))?,
            point_index: fields[1].parse().map_err(|_| bad("an index", fields[1]))?,
            pos: [
                fields[2].parse().map_err(|_| bad("a coordinate", fields[2]))?,
                fields[3].parse().map_err(|_| bad("a coordinate", fields[3]))?,
            ],
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{VoidCurve, SAMPLES_PER_CONTROL};

    fn unit_circle_shell() -> ShellSpec {
        ShellSpec {
            voids: vec![VoidCurve {
                center: [0.0, 0.0],
                radii: vec![1.0; 12],
                degree: 2,
                inverted: false,
            }],
            delta: 0.1,
            samples_per_control: SAMPLES_PER_CONTROL,
        }
    }

    #[test]
    fn first_point_lies_on_positive_x_axis() {
        let text = control_points_csv(&unit_circle_shell());
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row, "0,0,1.0000,0.0000");
    }

    #[test]
    fn quarter_turn_point_lies_on_y_axis() {
        let text = control_points_csv(&unit_circle_shell());
        let row = text.lines().nth(4).unwrap();
        assert_eq!(row, "0,3,0.0000,1.0000");
    }

    #[test]
    fn round_trip_preserves_rows_to_print_precision() {
        let mut shell = unit_circle_shell();
        shell.voids[0].center = [5.1234567, 2.9876];
        let rows = parse_control_points_csv(&control_points_csv(&shell)).unwrap();
        assert_eq!(rows.len(), 12);
        let exact = shell.voids[0].control_points();
        for (row, p) in rows.iter().zip(&exact) {
            assert_eq!(row.void_index, 0);
            assert!((row.pos[0] - p[0]).abs() <= 5e-5);
            assert!((row.pos[1] - p[1]).abs() <= 5e-5);
        }
    }

    #[test]
    fn published_style_coordinates_parse() {
        let text = format!("{POINTS_HEADER}\n0,0,5.3974,2.3705\n");
        let rows = parse_control_points_csv(&text).unwrap();
        assert_eq!(
            rows[0],
            ControlPointRow {
                void_index: 0,
                point_index: 0,
                pos: [5.3974, 2.3705]
            }
        );
    }
}
