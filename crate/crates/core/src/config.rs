//! Run configuration: flat `key = value` files with `#` comments, dotted
//! keys, and programmatic overrides. Unknown keys are rejected; keys under
//! `result.` are ignored so a run summary can be fed back in directly.

use std::path::{Path, PathBuf};

use crate::cases::BeamGeometry;
use crate::error::{Error, Result};
use crate::linalg::{SolveMethod, SolverConfig};
use crate::timestepping::Scheme;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// beam | moving_square
    pub case: String,
    /// Mesh file path; generated when absent.
    pub mesh_file: Option<PathBuf>,
    pub degree: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot cadence in steps; 0 disables field output.
    pub output_every: usize,
    pub delta0: f64,
    pub mu: f64,
    /// Inverse-inequality constant; degree default when absent.
    pub c_inv: Option<f64>,
    pub dt_cap: bool,
    pub solver_method: SolveMethod,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub out_dir: PathBuf,
    pub beam: BeamGeometry,
    /// analytic | elastic
    pub beam_motion: String,
    pub beam_stiffen: bool,
    /// Cells per side of the moving-square mesh.
    pub square_n: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "beam".into(),
            mesh_file: None,
            degree: 2,
            scheme: Scheme::Euler,
            dt: 0.01,
            t_end: 2.5,
            output_every: 0,
            delta0: 5.0,
            mu: 0.0,
            c_inv: None,
            dt_cap: true,
            solver_method: SolveMethod::Gmres,
            solver_tol: 1e-10,
            solver_max_iter: 2000,
            out_dir: PathBuf::from("out"),
            beam: BeamGeometry::default(),
            beam_motion: "analytic".into(),
            beam_stiffen: true,
            square_n: 32,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean '{value}' for key '{key}'"
        ))),
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "case" => {
                if value != "beam" && value != "moving_square" {
                    return Err(Error::Config(format!("unknown case '{value}'")));
                }
                self.case = value.into();
            }
            "mesh.file" => self.mesh_file = Some(PathBuf::from(value)),
            "fem.degree" => {
                let d: usize = parse(key, value)?;
                if d != 1 && d != 2 {
                    return Err(Error::Config(format!("degree {d} unsupported")));
                }
                self.degree = d;
            }
            "time.scheme" => self.scheme = Scheme::parse(value)?,
            "time.dt" => self.dt = parse(key, value)?,
            "time.T" => self.t_end = parse(key, value)?,
            "time.output_every" => self.output_every = parse(key, value)?,
            "stab.delta0" => self.delta0 = parse(key, value)?,
            "stab.mu" => self.mu = parse(key, value)?,
            "stab.c_inv" => self.c_inv = Some(parse(key, value)?),
            "stab.dt_cap" => self.dt_cap = parse_bool(key, value)?,
            "solver.method" => {
                self.solver_method = match value {
                    "gmres" => SolveMethod::Gmres,
                    "direct" => SolveMethod::DirectSmall,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown solver method '{value}' (gmres or direct)"
                        )))
                    }
                }
            }
            "solver.tol" => self.solver_tol = parse(key, value)?,
            "solver.max_iter" => self.solver_max_iter = parse(key, value)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            "beam.near_h" => self.beam.near_h = parse(key, value)?,
            "beam.far_h" => self.beam.far_h = parse(key, value)?,
            "beam.n_arc" => self.beam.n_arc = parse(key, value)?,
            "beam.motion" => {
                if value != "analytic" && value != "elastic" {
                    return Err(Error::Config(format!("unknown beam motion '{value}'")));
                }
                self.beam_motion = value.into();
            }
            "beam.stiffen" => self.beam_stiffen = parse_bool(key, value)?,
            "square.n" => self.square_n = parse(key, value)?,
            _ if key.starts_with("result.") => {}
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Parses config text, one assignment per line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config = RunConfig::default();
        config.apply_text(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::Config("time.dt must be > 0".into()));
        }
        if self.t_end < self.dt {
            return Err(Error::Config("time.T must be at least time.dt".into()));
        }
        if self.delta0 < 0.0 {
            return Err(Error::Config("stab.delta0 must be >= 0".into()));
        }
        if self.solver_tol <= 0.0 {
            return Err(Error::Config("solver.tol must be > 0".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            method: self.solver_method,
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
        }
    }

    /// Fully resolved config as parseable `key = value` lines.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("case", self.case.clone());
        if let Some(p) = &self.mesh_file {
            kv("mesh.file", p.display().to_string());
        }
        kv("fem.degree", self.degree.to_string());
        kv("time.scheme", self.scheme.as_str().into());
        kv("time.dt", format!("{:e}", self.dt));
        kv("time.T", format!("{:e}", self.t_end));
        kv("time.output_every", self.output_every.to_string());
        kv("stab.delta0", format!("{:e}", self.delta0));
        kv("stab.mu", format!("{:e}", self.mu));
        if let Some(c) = self.c_inv {
            kv("stab.c_inv", format!("{c:e}"));
        }
        kv("stab.dt_cap", self.dt_cap.to_string());
        kv(
            "solver.method",
            match self.solver_method {
                SolveMethod::Gmres => "gmres".into(),
                SolveMethod::DirectSmall => "direct".into(),
            },
        );
        kv("solver.tol", format!("{:e}", self.solver_tol));
        kv("solver.max_iter", self.solver_max_iter.to_string());
        kv("output.dir", self.out_dir.display().to_string());
        kv("beam.near_h", format!("{:e}", self.beam.near_h));
        kv("beam.far_h", format!("{:e}", self.beam.far_h));
        kv("beam.n_arc", self.beam.n_arc.to_string());
        kv("beam.motion", self.beam_motion.clone());
        kv("beam.stiffen", self.beam_stiffen.to_string());
        kv("square.n", self.square_n.to_string());
        s
    }
}
