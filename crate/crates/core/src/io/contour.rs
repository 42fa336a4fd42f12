//! Zero-level-set extraction from a nodal field by marching squares with
//! linear edge interpolation, and stroke-only SVG output of the resulting
//! polylines in physical coordinates.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::ConfigError;
use crate::field::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Contours of `phi = 0` over the nodal field. Each crossing point is
/// computed once per grid edge, so segments from neighboring cells share
/// endpoints exactly and chain into polylines that are either closed or
/// end on the domain boundary.
pub fn extract_boundaries(phi: &[f64], grid: &Grid) -> Vec<Polyline> {
    assert_eq!(phi.len(), grid.node_count(), "field size mismatch");
    let (nx, ny) = (grid.nx, grid.ny);
    let inside = |v: f64| v < 0.0;
    let n_hedges = nx * (ny + 1);

    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut edge_point: HashMap<usize, usize> = HashMap::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();

    {
        let mut point_on = |edge: usize, n1: usize, n2: usize| -> usize {
            *edge_point.entry(edge).or_insert_with(|| {
                let (v1, v2) = (phi[n1], phi[n2]);
                let t = v1 / (v1 - v2);
                let (p1, p2) = (grid.node_pos(n1), grid.node_pos(n2));
                points.push([p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1])]);
                points.len() - 1
            })
        };

        for j in 0..ny {
            for i in 0..nx {
                let a = grid.node_index(i, j);
                let b = grid.node_index(i + 1, j);
                let c = grid.node_index(i + 1, j + 1);
                let d = grid.node_index(i, j + 1);
                let mask = (inside(phi[a]) as usize)
                    | (inside(phi[b]) as usize) << 1
                    | (inside(phi[c]) as usize) << 2
                    | (inside(phi[d]) as usize) << 3;
                if mask == 0 || mask == 0b1111 {
                    continue;
                }
                let bottom = (j * nx + i, a, b);
                let top = ((j + 1) * nx + i, d, c);
                let left = (n_hedges + j * (nx + 1) + i, a, d);
                let right = (n_hedges + j * (nx + 1) + i + 1, b, c);
                let mut seg = |e1: (usize, usize, usize), e2: (usize, usize, usize)| {
                    let p = point_on(e1.0, e1.1, e1.2);
                    let q = point_on(e2.0, e2.1, e2.2);
                    if points[p] != points[q] {
                        segments.push((p, q));
                    }
                };
                match mask {
                    0b0001 | 0b1110 => seg(left, bottom),
                    0b0010 | 0b1101 => seg(bottom, right),
                    0b0100 | 0b1011 => seg(right, top),
                    0b1000 | 0b0111 => seg(top, left),
                    0b0011 | 0b1100 => seg(left, right),
                    0b0110 | 0b1001 => seg(bottom, top),
                    // Saddles: the cell-center average decides whether the
                    // two inside corners join across the cell.
                    0b0101 => {
                        if inside(0.25 * (phi[a] + phi[b] + phi[c] + phi[d])) {
                            seg(bottom, right);
                            seg(top, left);
                        } else {
                            seg(left, bottom);
                            seg(right, top);
                        }
                    }
                    0b1010 => {
                        if inside(0.25 * (phi[a] + phi[b] + phi[c] + phi[d])) {
                            seg(left, bottom);
                            seg(right, top);
                        } else {
                            seg(bottom, right);
                            seg(top, left);
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    chain(&points, &segments)
}

/// Joins segments into polylines: open chains first (started from
/// odd-degree endpoints, lowest point index first), then closed loops.
fn chain(points: &[[f64; 2]], segments: &[(usize, usize)]) -> Vec<Polyline> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); points.len()];
    for (s, &(p, q)) in segments.iter().enumerate() {
        adj[p].push((q, s));
        adj[q].push((p, s));
    }
    let mut used = vec![false; segments.len()];
    let mut walk = |start: usize, used: &mut Vec<bool>| -> Option<Polyline> {
        adj[start].iter().find(|&&(_, s)| !used[s])?;
        let mut pts = vec![points[start]];
        let mut cur = start;
        loop {
            let Some(&(next, s)) = adj[cur].iter().find(|&&(_, s)| !used[s]) else {
                break;
            };
            used[s] = true;
            cur = next;
            pts.push(points[cur]);
        }
        let closed = cur == start && pts.len() > 2;
        if closed {
            pts.pop();
        }
        pts.dedup();
        if pts.len() < 2 {
            return None;
        }
        Some(Polyline { points: pts, closed })
    };

    let mut polylines = Vec::new();
    for start in 0..points.len() {
        if adj[start].len() % 2 == 1 {
            while let Some(pl) = walk(start, &mut used) {
                polylines.push(pl);
            }
        }
    }
    for start in 0..points.len() {
        while let Some(pl) = walk(start, &mut used) {
            polylines.push(pl);
        }
    }
    polylines
}

/// Area enclosed by a closed polyline (shoelace formula), positive
/// regardless of orientation.
pub fn polygon_area(pl: &Polyline) -> f64 {
    let pts = &pl.points;
    let n = pts.len();
    let mut twice = 0.0;
    for i in 0..n {
        let [x1, y1] = pts[i];
        let [x2, y2] = pts[(i + 1) % n];
        twice += x1 * y2 - x2 * y1;
    }
    0.5 * twice.abs()
}

pub fn boundaries_svg(polylines: &[Polyline], domain: [f64; 2]) -> String {
    let [l, h] = domain;
    let stroke = 0.004 * l.max(h);
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{l}\" height=\"{h}\" viewBox=\"0 0 {l} {h}\">"
    );
    let _ = writeln!(
        s,
        "<g transform=\"translate(0,{h}) scale(1,-1)\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke}\">"
    );
    for pl in polylines {
        let mut d = String::new();
        for (i, p) in pl.points.iter().enumerate() {
            let _ = write!(d, "{}{} {}", if i == 0 { "M " } else { " L " }, p[0], p[1]);
        }
        if pl.closed {
            d.push_str(" Z");
        }
        let _ = writeln!(s, "<path d=\"{d}\"/>");
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

pub fn write_boundaries_svg(
    polylines: &[Polyline],
    domain: [f64; 2],
    path: &Path,
) -> std::io::Result<()> {
    std::fs::write(path, boundaries_svg(polylines, domain))
}

/// Reads back the path elements of a file written by
/// [`write_boundaries_svg`] (only the `M`/`L`/`Z` subset this module
/// emits).
pub fn read_boundaries_svg(path: &Path) -> Result<Vec<Polyline>, ConfigError> {
    parse_boundaries_svg(&std::fs::read_to_string(path)?)
}

pub fn parse_boundaries_svg(text: &str) -> Result<Vec<Polyline>, ConfigError> {
    let syntax = |message: String| ConfigError::Syntax { line: 1, message };
    let mut polylines = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("d=\"") {
        let after = &rest[start + 3..];
        let Some(end) = after.find('"') else {
            return Err(syntax("unterminated path data".to_string()));
        };
        let data = &after[..end];
        rest = &after[end + 1..];

        let mut points = Vec::new();
        let mut closed = false;
        let mut tokens = data.split_whitespace().peekable();
        while let Some(tok) = tokens.next() {
            match tok {
                "M" | "L" => {
                    let x = tokens.next().ok_or_else(|| syntax("missing x".to_string()))?;
                    let y = tokens.next().ok_or_else(|| syntax("missing y".to_string()))?;
                    let parse = |v: &str| {
                        v.parse::<f64>()
                            .map_err(|_| syntax(format!("bad coordinate `{v}`")))
                    };
                    points.push([parse(x)?, parse(y)?]);
                }
                "Z" => closed = true,
                other => return Err(syntax(format!("unsupported path command `{other}`"))),
            }
        }
        polylines.push(Polyline { points, closed });
    }
    Ok(polylines)
}
