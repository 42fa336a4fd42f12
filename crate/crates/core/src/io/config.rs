//! Problem configuration files: a flat `[section]` / `key = value` text
//! format covering every field a run needs, with strict parsing (unknown
//! or duplicate keys are errors) and a serializer whose output parses
//! back to an equal configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::fem::Material;
use crate::field::HeavisideParams;
use crate::geometry::Aggregation;
use crate::mma::MmaOptions;
use crate::problems::{LoadCase, PointLoad, StopRules, Support};

/// Everything needed to construct a [`crate::problems::Problem`]:
/// geometry, mesh, loads, supports, lattice and shell layout, constraint
/// levels, and solver settings. The benchmark constructors build one of
/// these; [`parse_config`] reads one from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub name: String,
    /// Reserved for future stochastic features; the pipeline is
    /// deterministic and never reads it.
    pub seed: u64,
    pub domain: [f64; 2],
    pub mesh: [usize; 2],
    pub material: Material,
    pub load_cases: Vec<LoadCase>,
    pub supports: Vec<Support>,
    pub cells: [usize; 2],
    pub components: usize,
    pub movable_centers: bool,
    pub shared_cpf: bool,
    pub cpf_terms: [usize; 2],
    pub lattice_exponent: i32,
    pub delta: f64,
    pub void_grid: [usize; 2],
    pub controls: usize,
    pub degree: usize,
    pub boundary_inset: [f64; 4],
    /// Solid volume cap as a fraction of the domain volume.
    pub v_bar: f64,
    /// Infill-region floor as a fraction of the domain volume; `None`
    /// disables the constraint.
    pub v_lower: Option<f64>,
    pub heaviside: HeavisideParams,
    pub aggregation: Aggregation,
    pub mma: MmaOptions,
    pub stop: StopRules,
}

const SECTIONS: [&str; 12] = [
    "domain",
    "grid",
    "material",
    "loads",
    "bcs",
    "lattice",
    "shell",
    "constraints",
    "heaviside",
    "ks",
    "mma",
    "output",
];

pub fn parse_config(path: &Path) -> Result<ProblemConfig, ConfigError> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

pub fn parse_config_str(text: &str) -> Result<ProblemConfig, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut current: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(name) = t.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("malformed section header `{t}`"),
                });
            };
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    section: name.to_string(),
                    line,
                });
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.push(Section::new(name));
            current = Some(sections.len() - 1);
            continue;
        }
        let Some((key, value)) = t.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{t}`"),
            });
        };
        let Some(cur) = current else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("key `{}` before any section", key.trim()),
            });
        };
        sections[cur].push(key.trim(), value.trim(), line)?;
    }

    let mut get = |name: &'static str| -> Result<Section, ConfigError> {
        match sections.iter().position(|s| s.name == name) {
            Some(i) => Ok(sections.swap_remove(i)),
            None => Err(ConfigError::MissingSection {
                section: name.to_string(),
            }),
        }
    };

    let mut domain = get("domain")?;
    let mut grid = get("grid")?;
    let mut material = get("material")?;
    let mut loads = get("loads")?;
    let mut bcs = get("bcs")?;
    let mut lattice = get("lattice")?;
    let mut shell = get("shell")?;
    let mut constraints = get("constraints")?;
    let mut heaviside = get("heaviside")?;
    let mut ks = get("ks")?;
    let mut mma = get("mma")?;
    let mut output = get("output")?;

    let cfg = ProblemConfig {
        name: output.take("name")?.0.to_string(),
        seed: output.parse("seed")?,
        domain: [domain.parse("length")?, domain.parse("height")?],
        mesh: [grid.parse("nx")?, grid.parse("ny")?],
        material: Material {
            youngs: material.parse("youngs")?,
            poisson: material.parse("poisson")?,
            thickness: material.parse("thickness")?,
        },
        load_cases: parse_load_cases(&mut loads)?,
        supports: parse_supports(&mut bcs)?,
        cells: [lattice.parse("cells_x")?, lattice.parse("cells_y")?],
        components: lattice.parse("components")?,
        movable_centers: lattice.parse("movable_centers")?,
        shared_cpf: lattice.parse("shared_cpf")?,
        cpf_terms: [lattice.parse("cpf_terms_x")?, lattice.parse("cpf_terms_y")?],
        lattice_exponent: lattice.parse("exponent")?,
        delta: shell.parse("delta")?,
        void_grid: [shell.parse("voids_x")?, shell.parse("voids_y")?],
        controls: shell.parse("controls")?,
        degree: shell.parse("degree")?,
        boundary_inset: {
            let (v, line) = shell.take("inset")?;
            parse_floats::<4>("shell", "inset", v, line)?
        },
        v_bar: constraints.parse("v_bar")?,
        v_lower: constraints.parse_option("v_lower")?,
        heaviside: HeavisideParams {
            epsilon: heaviside.parse("epsilon")?,
            alpha: heaviside.parse("alpha")?,
            penal: heaviside.parse("penal")?,
        },
        aggregation: Aggregation {
            l_plus: ks.parse("l_plus")?,
            l_minus: ks.parse("l_minus")?,
        },
        mma: MmaOptions {
            asym_init: mma.parse("asym_init")?,
            asym_expand: mma.parse("asym_expand")?,
            asym_contract: mma.parse("asym_contract")?,
            move_limit: mma.parse("move_limit")?,
            move_cap: mma.parse_option("move_cap")?,
            bisect_tol: mma.parse("bisect_tol")?,
        },
        stop: StopRules {
            threshold: mma.parse("threshold")?,
            min_iters: mma.parse("min_iters")?,
            max_iters: mma.parse("max_iters")?,
        },
    };

    for s in [
        domain,
        grid,
        material,
        loads,
        bcs,
        lattice,
        shell,
        constraints,
        heaviside,
        ks,
        mma,
        output,
    ] {
        s.finish()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ProblemConfig {
    /// Invariant checks shared by the file parser and programmatic
    /// construction; errors name the offending `section.key`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |section: &str, key: &str, message: String| ConfigError::Invalid {
            section: section.to_string(),
            key: key.to_string(),
            message,
        };
        let finite_pos = |section: &str, key: &str, v: f64| -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(section, key, format!("must be finite and positive, got {v}")))
            }
        };
        finite_pos("domain", "length", self.domain[0])?;
        finite_pos("domain", "height", self.domain[1])?;
        if self.mesh[0] == 0 || self.mesh[1] == 0 {
            return Err(bad("grid", "nx", "mesh must have at least one element per axis".into()));
        }
        finite_pos("material", "youngs", self.material.youngs)?;
        finite_pos("material", "thickness", self.material.thickness)?;
        if !(self.material.poisson.is_finite() && self.material.poisson.abs() < 0.5) {
            return Err(bad(
                "material",
                "poisson",
                format!("must lie in (-0.5, 0.5), got {}", self.material.poisson),
            ));
        }
        if self.load_cases.is_empty() {
            return Err(bad("loads", "cases", "at least one load case is required".into()));
        }
        if self.cells[0] == 0 || self.cells[1] == 0 {
            return Err(bad("lattice", "cells_x", "cell grid must be nonempty".into()));
        }
        if self.components == 0 {
            return Err(bad("lattice", "components", "at least one bar per cell".into()));
        }
        if self.void_grid[0] == 0 || self.void_grid[1] == 0 {
            return Err(bad("shell", "voids_x", "void grid must be nonempty".into()));
        }
        if self.controls < 3 {
            return Err(bad(
                "shell",
                "controls",
                format!("a closed curve needs at least 3 control points, got {}", self.controls),
            ));
        }
        if self.degree != 2 {
            return Err(bad(
                "shell",
                "degree",
                format!("only quadratic boundary splines are supported, got {}", self.degree),
            ));
        }
        finite_pos("shell", "delta", self.delta)?;
        if !(self.v_bar > 0.0 && self.v_bar <= 1.0) {
            return Err(bad(
                "constraints",
                "v_bar",
                format!("volume cap is a fraction of the domain, got {}", self.v_bar),
            ));
        }
        if let Some(vl) = self.v_lower {
            if !(vl > 0.0 && vl <= 1.0) {
                return Err(bad(
                    "constraints",
                    "v_lower",
                    format!("infill floor is a fraction of the domain, got {vl}"),
                ));
            }
        }
        finite_pos("heaviside", "epsilon", self.heaviside.epsilon)?;
        if !(self.heaviside.alpha > 0.0 && self.heaviside.alpha < 1.0) {
            return Err(bad(
                "heaviside",
                "alpha",
                format!("void stiffness floor must lie in (0, 1), got {}", self.heaviside.alpha),
            ));
        }
        if self.heaviside.penal < 1 {
            return Err(bad("heaviside", "penal", "penalization exponent must be >= 1".into()));
        }
        if !(self.aggregation.l_plus > 0.0) || !(self.aggregation.l_minus < 0.0) {
            return Err(bad(
                "ks",
                "l_plus",
                "aggregation needs l_plus > 0 and l_minus < 0".into(),
            ));
        }
        if self.stop.min_iters > self.stop.max_iters {
            return Err(bad("mma", "min_iters", "min_iters must not exceed max_iters".into()));
        }
        for (i, case) in self.load_cases.iter().enumerate() {
            if case.loads.is_empty() {
                return Err(bad(
                    "loads",
                    &format!("case{}", i + 1),
                    "a load case needs at least one point load".into(),
                ));
            }
            if !(case.weight.is_finite() && case.weight > 0.0) {
                return Err(bad(
                    "loads",
                    &format!("case{}", i + 1),
                    format!("weight must be positive, got {}", case.weight),
                ));
            }
        }
        Ok(())
    }
}

fn parse_load_cases(s: &mut Section) -> Result<Vec<LoadCase>, ConfigError> {
    let count: usize = s.parse("cases")?;
    let mut cases = Vec::with_capacity(count);
    for i in 1..=count {
        let key = format!("case{i}");
        let (value, line) = s.take(&key)?;
        let mut parts = value.split(';').map(str::trim);
        let weight = parse_one::<f64>("loads", &key, parts.next().unwrap_or(""), line)?;
        let mut loads = Vec::new();
        for p in parts {
            let [x, y, fx, fy] = parse_floats::<4>("loads", &key, p, line)?;
            loads.push(PointLoad {
                pos: [x, y],
                force: [fx, fy],
            });
        }
        cases.push(LoadCase { loads, weight });
    }
    Ok(cases)
}

fn parse_supports(s: &mut Section) -> Result<Vec<Support>, ConfigError> {
    let count: usize = s.parse("supports")?;
    let mut supports = Vec::with_capacity(count);
    for i in 1..=count {
        let key = format!("support{i}");
        let (value, line) = s.take(&key)?;
        let fields: Vec<&str> = value.split_whitespace().collect();
        let err = |message: String| ConfigError::BadValue {
            section: "bcs".to_string(),
            key: key.clone(),
            line,
            message,
        };
        let fix_of = |f: &str| -> Result<[bool; 2], ConfigError> {
            match f {
                "x" => Ok([true, false]),
                "y" => Ok([false, true]),
                "xy" => Ok([true, true]),
                other => Err(err(format!("fixed components must be x, y, or xy, got `{other}`"))),
            }
        };
        let support = match fields.as_slice() {
            ["point", x, y, fix] => Support::Point {
                pos: [
                    parse_one("bcs", &key, x, line)?,
                    parse_one("bcs", &key, y, line)?,
                ],
                fix: fix_of(fix)?,
            },
            ["edge", axis, value, fix] => Support::Edge {
                axis: match *axis {
                    "x" => 0,
                    "y" => 1,
                    other => return Err(err(format!("axis must be x or y, got `{other}`"))),
                },
                value: parse_one("bcs", &key, value, line)?,
                fix: fix_of(fix)?,
            },
            _ => {
                return Err(err(
                    "expected `point <x> <y> <fix>` or `edge <axis> <value> <fix>`".to_string(),
                ))
            }
        };
        supports.push(support);
    }
    Ok(supports)
}

fn parse_one<T: FromStr>(
    section: &str,
    key: &str,
    value: &str,
    line: usize,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        section: section.to_string(),
        key: key.to_string(),
        line,
        message: format!(
            "cannot parse `{value}` as {}",
            std::any::type_name::<T>().rsplit("::").next().unwrap()
        ),
    })
}

fn parse_floats<const N: usize>(
    section: &str,
    key: &str,
    value: &str,
    line: usize,
) -> Result<[f64; N], ConfigError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != N {
        return Err(ConfigError::BadValue {
            section: section.to_string(),
            key: key.to_string(),
            line,
            message: format!("expected {N} numbers, got {}", parts.len()),
        });
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_one(section, key, p, line)?;
    }
    Ok(out)
}

struct Section {
    name: &'static str,
    entries: Vec<(String, String, usize)>,
    used: Vec<bool>,
}

impl Section {
    fn new(name: &str) -> Self {
        Section {
            name: SECTIONS.iter().find(|&&s| s == name).unwrap(),
            entries: Vec::new(),
            used: Vec::new(),
        }
    }

    fn push(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        if self.entries.iter().any(|(k, _, _)| k == key) {
            return Err(ConfigError::DuplicateKey {
                section: self.name.to_string(),
                key: key.to_string(),
                line,
            });
        }
        self.entries.push((key.to_string(), value.to_string(), line));
        self.used.push(false);
        Ok(())
    }

    fn take(&mut self, key: &str) -> Result<(&str, usize), ConfigError> {
        match self.entries.iter().position(|(k, _, _)| k == key) {
            Some(i) => {
                self.used[i] = true;
                Ok((&self.entries[i].1, self.entries[i].2))
            }
            None => Err(ConfigError::MissingKey {
                section: self.name.to_string(),
                key: key.to_string(),
            }),
        }
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        let name = self.name;
        let (value, line) = self.take(key)?;
        parse_one(name, key, value, line)
    }

    /// `none` or a number.
    fn parse_option(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let name = self.name;
        let (value, line) = self.take(key)?;
        if value == "none" {
            return Ok(None);
        }
        parse_one(name, key, value, line).map(Some)
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (i, (key, _, line)) in self.entries.iter().enumerate() {
            if !self.used[i] {
                return Err(ConfigError::UnknownKey {
                    section: self.name.to_string(),
                    key: key.clone(),
                    line: *line,
                });
            }
        }
        Ok(())
    }
}

pub fn serialize_config(cfg: &ProblemConfig) -> String {
    let mut s = String::new();
    let opt = |v: Option<f64>| match v {
        Some(v) => v.to_string(),
        None => "none".to_string(),
    };
    let _ = write!(
        s,
        "[domain]\nlength = {}\nheight = {}\n\n[grid]\nnx = {}\nny = {}\n\n\
         [material]\nyoungs = {}\npoisson = {}\nthickness = {}\n\n",
        cfg.domain[0],
        cfg.domain[1],
        cfg.mesh[0],
        cfg.mesh[1],
        cfg.material.youngs,
        cfg.material.poisson,
        cfg.material.thickness,
    );
    let _ = writeln!(s, "[loads]\ncases = {}", cfg.load_cases.len());
    for (i, case) in cfg.load_cases.iter().enumerate() {
        let _ = write!(s, "case{} = {}", i + 1, case.weight);
        for p in &case.loads {
            let _ = write!(s, " ; {} {} {} {}", p.pos[0], p.pos[1], p.force[0], p.force[1]);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "\n[bcs]\nsupports = {}", cfg.supports.len());
    for (i, sup) in cfg.supports.iter().enumerate() {
        let fix_str = |fix: [bool; 2]| match fix {
            [true, false] => "x",
            [false, true] => "y",
            _ => "xy",
        };
        match *sup {
            Support::Point { pos, fix } => {
                let _ = writeln!(s, "support{} = point {} {} {}", i + 1, pos[0], pos[1], fix_str(fix));
            }
            Support::Edge { axis, value, fix } => {
                let _ = writeln!(
                    s,
                    "support{} = edge {} {} {}",
                    i + 1,
                    if axis == 0 { "x" } else { "y" },
                    value,
                    fix_str(fix)
                );
            }
        }
    }
    let _ = write!(
        s,
        "\n[lattice]\ncells_x = {}\ncells_y = {}\ncomponents = {}\nmovable_centers = {}\n\
         shared_cpf = {}\ncpf_terms_x = {}\ncpf_terms_y = {}\nexponent = {}\n\n\
         [shell]\ndelta = {}\nvoids_x = {}\nvoids_y = {}\ncontrols = {}\ndegree = {}\n\
         inset = {} {} {} {}\n\n\
         [constraints]\nv_bar = {}\nv_lower = {}\n\n\
         [heaviside]\nepsilon = {}\nalpha = {}\npenal = {}\n\n\
         [ks]\nl_plus = {}\nl_minus = {}\n\n\
         [mma]\nasym_init = {}\nasym_expand = {}\nasym_contract = {}\nmove_limit = {}\n\
         move_cap = {}\nbisect_tol = {}\nthreshold = {}\nmin_iters = {}\nmax_iters = {}\n\n\
         [output]\nname = {}\nseed = {}\n",
        cfg.cells[0],
        cfg.cells[1],
        cfg.components,
        cfg.movable_centers,
        cfg.shared_cpf,
        cfg.cpf_terms[0],
        cfg.cpf_terms[1],
        cfg.lattice_exponent,
        cfg.delta,
        cfg.void_grid[0],
        cfg.void_grid[1],
        cfg.controls,
        cfg.degree,
        cfg.boundary_inset[0],
        cfg.boundary_inset[1],
        cfg.boundary_inset[2],
        cfg.boundary_inset[3],
        cfg.v_bar,
        opt(cfg.v_lower),
        cfg.heaviside.epsilon,
        cfg.heaviside.alpha,
        cfg.heaviside.penal,
        cfg.aggregation.l_plus,
        cfg.aggregation.l_minus,
        cfg.mma.asym_init,
        cfg.mma.asym_expand,
        cfg.mma.asym_contract,
        cfg.mma.move_limit,
        opt(cfg.mma.move_cap),
        cfg.mma.bisect_tol,
        cfg.stop.threshold,
        cfg.stop.min_iters,
        cfg.stop.max_iters,
        cfg.name,
        cfg.seed,
    );
    s
}
