//! Discrete spectral functions `F(beta)` and their unit roots.
//!
//! `F_h(c)` is the ground eigenvalue of `A - c B` relative to `M` on a
//! conforming P1 space. The space sits inside the continuous form domain
//! (truncation imposes zero on the artificial boundary), so `F_h >= F`
//! pointwise and the discrete root of `F_h = -1` is never below the true
//! root. The root search relies only on monotonicity and continuity in the
//! coupling: doubling to find a bracket, then bisection.

use std::cell::RefCell;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, pencil, FormSet};
use crate::eigensolve::{
    EigenOptions, PencilSolver, SpectralResult, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::format::fmt_float;
use crate::geometry::{build_delta_mesh, build_mesh, refine, BoundaryTag, DomainSpec, Mesh};

pub const DEFAULT_TOL_ROOT: f64 = 1e-4;
/// Couplings are never doubled past this value.
pub const MAX_COUPLING: f64 = 18446744073709551616.0; // 2^64
/// Box margin around a bounded domain for the delta problem.
pub const DEFAULT_DELTA_MARGIN: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// `|grad f|^2 - beta |f|_boundary|^2` on the domain.
    Robin,
    /// `|grad f|^2 - alpha |f|_interface|^2` on the whole (truncated) plane.
    Delta,
}

impl Problem {
    pub fn tag(self) -> BoundaryTag {
        match self {
            Problem::Robin => BoundaryTag::Robin,
            Problem::Delta => BoundaryTag::Interface,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::Robin => "robin",
            Problem::Delta => "delta",
        }
    }
}

/// Solver and mesh settings beyond those carried by the [`DomainSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub eig_tol: f64,
    pub max_iterations: usize,
    /// Uniform refinements applied after meshing.
    pub refinements: usize,
    /// Half-width of the delta box. Defaults to the truncation radius, or to
    /// the half-extent of a bounded domain plus [`DEFAULT_DELTA_MARGIN`].
    pub delta_box_radius: Option<f64>,
    /// Truncation radius for the complement problem in numeric-estimate
    /// reports. Defaults to the domain's own radius.
    pub complement_radius: Option<f64>,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            eig_tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            refinements: 0,
            delta_box_radius: None,
            complement_radius: None,
        }
    }
}

impl Discretization {
    pub fn box_radius(&self, spec: &DomainSpec) -> f64 {
        if let Some(r) = self.delta_box_radius {
            return r;
        }
        if let Some(r) = spec.truncation_radius {
            return r;
        }
        spec.kind.half_extent().unwrap_or(1.0) + DEFAULT_DELTA_MARGIN
    }
}

/// Builds the mesh a problem is solved on, refinements included.
pub fn problem_mesh(spec: &DomainSpec, problem: Problem, disc: &Discretization) -> Result<Mesh> {
    let mut mesh = match problem {
        Problem::Robin => build_mesh(spec)?,
        Problem::Delta => build_delta_mesh(spec, disc.box_radius(spec))?,
    };
    for _ in 0..disc.refinements {
        mesh = refine(&mesh);
    }
    Ok(mesh)
}

/// Cached mesh, forms and eigensolver for repeated evaluations of `F`.
///
/// Each evaluation starts from the eigenvector of the previous one and
/// uses its eigenvalue as the shift hint.
pub struct FEvaluator {
    problem: Problem,
    disc: Discretization,
    mesh: Mesh,
    forms: FormSet,
    solver: PencilSolver,
    last: Option<SpectralResult>,
}

impl FEvaluator {
    pub fn new(spec: &DomainSpec, problem: Problem, disc: &Discretization) -> Result<Self> {
        let mesh = problem_mesh(spec, problem, disc)?;
        FEvaluator::from_mesh(mesh, problem, disc)
    }

    pub fn from_mesh(mesh: Mesh, problem: Problem, disc: &Discretization) -> Result<Self> {
        if !(disc.eig_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "eigen tolerance must be positive, got {}",
                disc.eig_tol
            )));
        }
        let forms = assemble(&mesh, problem.tag())?;
        let solver = PencilSolver::new(forms.m.clone());
        Ok(FEvaluator {
            problem,
            disc: disc.clone(),
            mesh,
            forms,
            solver,
            last: None,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn forms(&self) -> &FormSet {
        &self.forms
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    /// Ground eigenpair of the pencil at `coupling`.
    pub fn eval(&mut self, coupling: f64) -> Result<SpectralResult> {
        if !coupling.is_finite() {
            return Err(Error::InvalidInput(format!("coupling {coupling}")));
        }
        let s = pencil(&self.forms, coupling);
        let opts = EigenOptions {
            tol: self.disc.eig_tol,
            max_iterations: self.disc.max_iterations,
            start: self.last.as_ref().map(|r| r.eigenvector.clone()),
            shift_hint: self.last.as_ref().map(|r| r.eigenvalue),
            ..Default::default()
        };
        let r = self.solver.smallest(&s, &opts)?;
        self.last = Some(r.clone());
        Ok(r)
    }
}

thread_local! {
    static CACHE: RefCell<Option<(String, FEvaluator)>> = const { RefCell::new(None) };
}

/// `F_h(coupling)` for the problem on `spec`. The mesh and forms of the
/// last `(spec, problem, disc)` are kept per thread, so successive calls
/// that only change the coupling reuse them.
#[allow(non_snake_case)]
pub fn F_discrete(
    spec: &DomainSpec,
    coupling: f64,
    problem: Problem,
    disc: &Discretization,
) -> Result<(f64, SpectralResult)> {
    if !(coupling >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "coupling must be nonnegative, got {coupling}"
        )));
    }
    let key = serde_json::to_string(&(spec, problem, disc)).expect("serializable key");
    CACHE.with(|cell| {
        let mut cache = cell.borrow_mut();
        if cache.as_ref().map_or(true, |(k, _)| *k != key) {
            *cache = None;
            *cache = Some((key, FEvaluator::new(spec, problem, disc)?));
        }
        let r = cache.as_mut().unwrap().1.eval(coupling)?;
        Ok((r.eigenvalue, r))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    /// Midpoint of the final bracket.
    pub root: f64,
    pub bracket: (f64, f64),
    /// `(coupling, ground eigenvalue)` in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
    /// The discrete root is an upper estimate of the continuous root: the
    /// P1 space is conforming and truncation only shrinks it.
    pub certified_side: bool,
    pub num_dofs: usize,
}

impl RootResult {
    /// `bracket.1`, where `F_h < -1` was observed, hence `>=` the root.
    pub fn certified_upper(&self) -> f64 {
        self.bracket.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Side {
    /// `F > -1`: coupling below the root.
    Above,
    /// `F < -1`: coupling above the root.
    Below,
    Inconclusive,
}

struct Search<'a> {
    eval: &'a mut FEvaluator,
    evaluations: Vec<(f64, f64)>,
}

impl Search<'_> {
    fn side(&mut self, c: f64) -> Result<Side> {
        let r = self.eval.eval(c)?;
        self.evaluations.push((c, r.eigenvalue));
        let gap = r.eigenvalue + 1.0;
        let noise = 10.0 * r.relative_residual * r.eigenvalue.abs().max(1.0);
        Ok(if gap.abs() < noise {
            Side::Inconclusive
        } else if gap > 0.0 {
            Side::Above
        } else {
            Side::Below
        })
    }
}

pub fn solve_unit_root(
    spec: &DomainSpec,
    problem: Problem,
    disc: &Discretization,
    tol_root: f64,
) -> Result<RootResult> {
    let mut eval = FEvaluator::new(spec, problem, disc)?;
    solve_unit_root_with(&mut eval, tol_root)
}

/// Root of `F_h = -1` on an existing evaluator.
pub fn solve_unit_root_with(eval: &mut FEvaluator, tol_root: f64) -> Result<RootResult> {
    if !(tol_root > 0.0) {
        return Err(Error::InvalidInput(format!(
            "root tolerance must be positive, got {tol_root}"
        )));
    }
    let num_dofs = eval.forms().num_dofs();
    let mut search = Search {
        eval,
        evaluations: Vec::new(),
    };
    let (mut low, mut high) = (0.0, 1.0);
    loop {
        match search.side(high)? {
            Side::Below => break,
            Side::Above => {
                low = high;
                high *= 2.0;
                if high > MAX_COUPLING {
                    return Err(Error::BracketFailure { last: low });
                }
            }
            Side::Inconclusive => {
                (low, high) = shrink_around(&mut search, high, tol_root, low, high)?;
                break;
            }
        }
    }
    while high - low > tol_root {
        let mid = 0.5 * (low + high);
        match search.side(mid)? {
            Side::Above => low = mid,
            Side::Below => high = mid,
            Side::Inconclusive => (low, high) = shrink_around(&mut search, mid, tol_root, low, high)?,
        }
    }
    Ok(RootResult {
        root: 0.5 * (low + high),
        bracket: (low, high),
        evaluations: search.evaluations,
        certified_side: true,
        num_dofs,
    })
}

/// `F(c)` is within solver noise of `-1`: probe `c -+ tol/2` and keep the
/// part of `[low, high]` the probes allow.
fn shrink_around(
    search: &mut Search,
    c: f64,
    tol: f64,
    low: f64,
    high: f64,
) -> Result<(f64, f64)> {
    let (a, b) = ((c - 0.5 * tol).max(low), (c + 0.5 * tol).min(high));
    let new_low = if a > low && search.side(a)? == Side::Above { a } else { low };
    let new_high = if b < high && search.side(b)? == Side::Below { b } else { high };
    if new_high - new_low > tol {
        // probes inconclusive as well: the root is pinned to c within noise
        return Ok((a, b));
    }
    Ok((new_low, new_high))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub coupling: f64,
    pub ground_eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[allow(non_snake_case)]
pub fn sweep_F(
    spec: &DomainSpec,
    problem: Problem,
    disc: &Discretization,
    couplings: &[f64],
) -> Result<Vec<SweepPoint>> {
    let mut eval = FEvaluator::new(spec, problem, disc)?;
    sweep_with(&mut eval, couplings)
}

pub fn sweep_with(eval: &mut FEvaluator, couplings: &[f64]) -> Result<Vec<SweepPoint>> {
    if couplings.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::InvalidInput("couplings must be nonnegative".into()));
    }
    if couplings.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("couplings must be sorted ascending".into()));
    }
    couplings
        .iter()
        .map(|&c| {
            let r = eval.eval(c)?;
            Ok(SweepPoint {
                coupling: c,
                ground_eigenvalue: r.eigenvalue,
                residual: r.relative_residual,
                iterations: r.iterations,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "coupling,ground_eigenvalue,residual,iterations")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(p.coupling),
            fmt_float(p.ground_eigenvalue),
            fmt_float(p.residual),
            p.iterations
        )?;
    }
    Ok(())
}
