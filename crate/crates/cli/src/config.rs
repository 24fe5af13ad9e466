use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use extbound::analytic::Mode;
use extbound::geometry::{DomainKind, DomainSpec, Point};
use extbound::roots::{Discretization, Problem, DEFAULT_TOL_ROOT};

pub const DEFAULT_RADIUS: f64 = 8.0;
pub const DEFAULT_MESH_SIZE: f64 = 0.1;

/// Invalid flags, config file entries or inconsistent settings (exit 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Wedge,
    WedgeComplement,
    Rectangle,
    RectangleComplement,
    #[value(alias = "half-plane")]
    Halfplane,
    Polygon,
    PolygonComplement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Robin,
    Delta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by all commands. Every field may also come from the
/// `--config` file; flags given on the command line take precedence.
#[derive(Args, Clone, Debug, Default)]
#[command(allow_negative_numbers = true)]
pub struct Settings {
    /// Config file with `key = value` lines (`#` starts a comment)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    /// Wedge opening angle in radians (degrees with --degrees)
    #[arg(long)]
    pub angle: Option<f64>,
    /// Read --angle in degrees
    #[arg(long)]
    pub degrees: bool,
    /// Rectangle side along x1
    #[arg(long)]
    pub a: Option<f64>,
    /// Rectangle side along x2
    #[arg(long)]
    pub b: Option<f64>,
    /// File with one `x y` vertex per line
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    /// Truncation radius of unbounded domains [default: 8]
    #[arg(long = "R")]
    pub radius: Option<f64>,
    /// Target mesh size [default: 0.1]
    #[arg(long)]
    pub h: Option<f64>,
    /// Half-width of the delta-problem box
    #[arg(long = "box-R")]
    pub box_radius: Option<f64>,
    /// Truncation radius of the complement in numeric-estimate mode
    #[arg(long = "complement-R")]
    pub complement_radius: Option<f64>,
    /// Uniform refinements applied after meshing
    #[arg(long)]
    pub refinements: Option<usize>,
    /// Bisection tolerance on the coupling [default: 1e-4]
    #[arg(long)]
    pub tol_root: Option<f64>,
    /// Relative residual tolerance of eigenpairs [default: 1e-9]
    #[arg(long)]
    pub eig_tol: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// analytic | numeric-certified | numeric-estimate [default: analytic]
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_enum)]
    pub problem: Option<ProblemArg>,
    /// Coupling grid `start:stop:step` or a comma-separated list (sweep)
    #[arg(long)]
    pub betas: Option<String>,
    /// Coupling value (spectrum) [default: 1]
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Comma-separated truncation radii (convergence)
    #[arg(long)]
    pub radii: Option<String>,
    /// Comma-separated mesh sizes (convergence)
    #[arg(long)]
    pub sizes: Option<String>,
    /// Only run verification checks whose name contains this text
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (standard output when absent)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Directory receiving A, M and B in coordinate format
    #[arg(long)]
    pub dump_matrices: Option<PathBuf>,
    /// File receiving the mesh in plain-text format
    #[arg(long)]
    pub dump_mesh: Option<PathBuf>,
    /// File receiving per-triangle gradient deviations (opnorm)
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
    value
        .parse()
        .map_err(|_| config_error(format!("config key {key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> anyhow::Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_error(format!("config key {key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> anyhow::Result<T> {
    T::from_str(value, true).map_err(|_| config_error(format!("config key {key}: unknown value {value:?}")))
}

macro_rules! fill {
    ($slot:expr, $v:expr) => {
        if $slot.is_none() {
            $slot = Some($v);
        }
    };
}

impl Settings {
    /// Fills unset fields from `key = value` text.
    pub fn merge_text(&mut self, text: &str) -> anyhow::Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim().trim_matches('"');
            match key.as_str() {
                "domain" => fill!(self.domain, parse_enum(&key, value)?),
                "angle" => fill!(self.angle, parse(&key, value)?),
                "degrees" => self.degrees |= parse_bool(&key, value)?,
                "a" => fill!(self.a, parse(&key, value)?),
                "b" => fill!(self.b, parse(&key, value)?),
                "polygon" => fill!(self.polygon, PathBuf::from(value)),
                "R" | "r" => fill!(self.radius, parse(&key, value)?),
                "h" => fill!(self.h, parse(&key, value)?),
                "box-R" | "box-r" => fill!(self.box_radius, parse(&key, value)?),
                "complement-R" | "complement-r" => fill!(self.complement_radius, parse(&key, value)?),
                "refinements" => fill!(self.refinements, parse(&key, value)?),
                "tol-root" => fill!(self.tol_root, parse(&key, value)?),
                "eig-tol" => fill!(self.eig_tol, parse(&key, value)?),
                "max-iterations" => fill!(self.max_iterations, parse(&key, value)?),
                "mode" => fill!(self.mode, value.to_string()),
                "problem" => fill!(self.problem, parse_enum(&key, value)?),
                "betas" => fill!(self.betas, value.to_string()),
                "coupling" => fill!(self.coupling, parse(&key, value)?),
                "radii" => fill!(self.radii, value.to_string()),
                "sizes" => fill!(self.sizes, value.to_string()),
                "filter" => fill!(self.filter, value.to_string()),
                "format" => fill!(self.format, parse_enum(&key, value)?),
                "output" => fill!(self.output, PathBuf::from(value)),
                "dump-matrices" => fill!(self.dump_matrices, PathBuf::from(value)),
                "dump-mesh" => fill!(self.dump_mesh, PathBuf::from(value)),
                "diagnostics" => fill!(self.diagnostics, PathBuf::from(value)),
                _ => return Err(config_error(format!("config line {}: unknown key {key:?}", n + 1))),
            }
        }
        Ok(())
    }

    pub fn load_config_file(&mut self) -> anyhow::Result<()> {
        if let Some(path) = self.config.clone() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
            self.merge_text(&text)?;
        }
        Ok(())
    }

    pub fn angle_radians(&self) -> anyhow::Result<f64> {
        let angle = self
            .angle
            .ok_or_else(|| config_error("--angle is required for wedge domains"))?;
        Ok(if self.degrees { angle.to_radians() } else { angle })
    }

    pub fn domain_kind(&self) -> anyhow::Result<DomainKind> {
        let domain = self.domain.ok_or_else(|| config_error("--domain is required"))?;
        let sides = || -> anyhow::Result<(f64, f64)> {
            match (self.a, self.b) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(config_error("--a and --b are required for rectangles")),
            }
        };
        let polygon = || -> anyhow::Result<Vec<Point>> {
            let path = self
                .polygon
                .as_ref()
                .ok_or_else(|| config_error("--polygon is required for polygon domains"))?;
            read_polygon(path)
        };
        let kind = match domain {
            DomainArg::Wedge => DomainKind::wedge(self.angle_radians()?),
            DomainArg::WedgeComplement => DomainKind::wedge_complement(self.angle_radians()?),
            DomainArg::Rectangle => {
                let (a, b) = sides()?;
                DomainKind::rectangle(a, b)
            }
            DomainArg::RectangleComplement => {
                let (a, b) = sides()?;
                DomainKind::rectangle_complement(a, b)
            }
            DomainArg::Halfplane => Ok(DomainKind::HalfPlane),
            DomainArg::Polygon => DomainKind::polygon(polygon()?),
            DomainArg::PolygonComplement => DomainKind::polygon_complement(polygon()?),
        };
        kind.map_err(|e| config_error(e.to_string()))
    }

    pub fn spec(&self) -> anyhow::Result<DomainSpec> {
        self.spec_with(self.radius.unwrap_or(DEFAULT_RADIUS), self.mesh_size())
    }

    pub fn spec_with(&self, radius: f64, h: f64) -> anyhow::Result<DomainSpec> {
        DomainSpec::new(self.domain_kind()?, radius, h).map_err(|e| config_error(e.to_string()))
    }

    pub fn mesh_size(&self) -> f64 {
        self.h.unwrap_or(DEFAULT_MESH_SIZE)
    }

    pub fn tol_root(&self) -> anyhow::Result<f64> {
        positive("tol-root", self.tol_root.unwrap_or(DEFAULT_TOL_ROOT))
    }

    pub fn disc(&self) -> anyhow::Result<Discretization> {
        let d = Discretization::default();
        Ok(Discretization {
            eig_tol: positive("eig-tol", self.eig_tol.unwrap_or(d.eig_tol))?,
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            refinements: self.refinements.unwrap_or(0),
            delta_box_radius: self.box_radius.map(|r| positive("box-R", r)).transpose()?,
            complement_radius: self.complement_radius.map(|r| positive("complement-R", r)).transpose()?,
        })
    }

    pub fn mode(&self) -> anyhow::Result<Mode> {
        self.mode
            .as_deref()
            .unwrap_or("analytic")
            .parse()
            .map_err(|e: extbound::Error| config_error(e.to_string()))
    }

    pub fn problem(&self) -> Problem {
        match self.problem.unwrap_or(ProblemArg::Robin) {
            ProblemArg::Robin => Problem::Robin,
            ProblemArg::Delta => Problem::Delta,
        }
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn positive(name: &str, v: f64) -> anyhow::Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_error(format!("--{name} must be positive, got {v}")))
    }
}

/// Vertices as `x y` or `x,y` lines; blank lines and `#` comments skipped.
pub fn read_polygon(path: &Path) -> anyhow::Result<Vec<Point>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read polygon {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| config_error(format!("polygon line {}: expected two numbers", n + 1)))?;
        match nums[..] {
            [x, y] => out.push([x, y]),
            _ => return Err(config_error(format!("polygon line {}: expected two numbers", n + 1))),
        }
    }
    Ok(out)
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or `v1,v2,...`.
pub fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || config_error(format!("cannot parse grid {text:?}"));
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest.split_once(':').ok_or_else(bad)?;
        let (start, stop, step): (f64, f64, f64) = (
            start.trim().parse().map_err(|_| bad())?,
            stop.trim().parse().map_err(|_| bad())?,
            step.trim().parse().map_err(|_| bad())?,
        );
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + step * i as f64).collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_inclusive() {
        let g = parse_grid("0:2:0.25").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], 2.0);
        assert_eq!(parse_grid("0.5, 1,1.5").unwrap(), vec![0.5, 1.0, 1.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn file_does_not_override_flags() {
        let mut s = Settings {
            h: Some(0.2),
            ..Default::default()
        };
        s.merge_text("# comment\nh = 0.05\nR = 12 # trailing\ndomain = halfplane\ndegrees = true\n")
            .unwrap();
        assert_eq!(s.h, Some(0.2));
        assert_eq!(s.radius, Some(12.0));
        assert_eq!(s.domain, Some(DomainArg::Halfplane));
        assert!(s.degrees);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Settings::default().merge_text("colour = blue").unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn degrees_convert() {
        let s = Settings {
            domain: Some(DomainArg::Wedge),
            angle: Some(90.0),
            degrees: true,
            ..Default::default()
        };
        assert!((s.angle_radians().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
