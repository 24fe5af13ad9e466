//! Closed-form spectral functions, roots and extension-norm bounds, and the
//! [`BoundReport`] that combines them with finite-element roots.
//!
//! The two combinators are
//! `E(Omega) >= sqrt(1 + beta(complement) / beta(Omega))` and
//! `E(Omega) >= sqrt(alpha(boundary) / beta(Omega))`. Both stay valid lower
//! bounds when `beta(Omega)` is replaced by an upper estimate and the
//! numerator root by a lower estimate, which is how the certified mode
//! mixes finite elements with analytic inequalities.

use std::f64::consts::{PI, SQRT_2};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{fmt_float, round_sig};
use crate::geometry::{DomainKind, DomainSpec};
use crate::roots::{solve_unit_root, Discretization, Problem, RootResult};

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {x}")))
    }
}

fn nonnegative(name: &str, x: f64) -> Result<f64> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidInput(format!("{name} must be nonnegative, got {x}")))
    }
}

/// Opening angle in `(0, pi]`; `pi` is the half-plane.
fn angle(phi: f64) -> Result<f64> {
    if phi > 0.0 && phi <= PI {
        Ok(phi)
    } else {
        Err(Error::InvalidInput(format!("angle must lie in (0, pi], got {phi}")))
    }
}

pub fn lower_bound_robin(beta_domain: f64, beta_complement: f64) -> Result<f64> {
    let b = positive("beta_domain", beta_domain)?;
    let c = positive("beta_complement", beta_complement)?;
    Ok((1.0 + c / b).sqrt())
}

pub fn lower_bound_delta(alpha_interface: f64, beta_domain: f64) -> Result<f64> {
    let a = positive("alpha_interface", alpha_interface)?;
    let b = positive("beta_domain", beta_domain)?;
    Ok((a / b).sqrt())
}

/// `F(beta) = -beta^2 / sin^2(phi/2)` for the wedge of opening `phi`.
#[allow(non_snake_case)]
pub fn wedge_F_robin(phi: f64, beta: f64) -> Result<f64> {
    let s = (angle(phi)? / 2.0).sin();
    let beta = nonnegative("beta", beta)?;
    Ok(-beta * beta / (s * s))
}

/// `F(beta) = -beta^2` for the exterior of any wedge.
#[allow(non_snake_case)]
pub fn wedge_complement_F_robin(beta: f64) -> Result<f64> {
    let beta = nonnegative("beta", beta)?;
    Ok(-beta * beta)
}

/// Lower bound `-alpha^2 / (1 + sin(phi/2))^2` on the delta spectral
/// function of the wedge boundary. Exact only at `phi = pi`.
#[allow(non_snake_case)]
pub fn wedge_delta_F_lower(phi: f64, alpha: f64) -> Result<f64> {
    let s = (angle(phi)? / 2.0).sin();
    let alpha = nonnegative("alpha", alpha)?;
    Ok(-alpha * alpha / ((1.0 + s) * (1.0 + s)))
}

/// `F(alpha) = -alpha^2 / 4` for the line.
#[allow(non_snake_case)]
pub fn halfplane_F_delta(alpha: f64) -> Result<f64> {
    let alpha = nonnegative("alpha", alpha)?;
    Ok(-alpha * alpha / 4.0)
}

/// `beta(wedge) = sin(phi/2)`.
pub fn wedge_beta(phi: f64) -> Result<f64> {
    Ok((angle(phi)? / 2.0).sin())
}

/// Root of `wedge_delta_F_lower = -1`, a lower estimate of
/// `alpha(boundary)`.
pub fn wedge_alpha_lower(phi: f64) -> Result<f64> {
    Ok(1.0 + (angle(phi)? / 2.0).sin())
}

pub fn wedge_lower_bound(phi: f64) -> Result<f64> {
    let s = (angle(phi)? / 2.0).sin();
    Ok((1.0 + 1.0 / s).sqrt())
}

/// Norm bound of the reflection across the wedge boundary:
/// `sqrt(2) / sin(phi/2) * sqrt(1 + cos(phi/2))`.
pub fn wedge_upper_bound(phi: f64) -> Result<f64> {
    let half = angle(phi)? / 2.0;
    Ok(SQRT_2 / half.sin() * (1.0 + half.cos()).sqrt())
}

/// The weight `t = 2 cot^2(phi/2) + 2 cot(phi/2) / sin(phi/2)` balancing
/// the Young inequality in the reflection bound;
/// `wedge_upper_bound^2 = 2 + t`.
pub fn optimal_t(phi: f64) -> Result<f64> {
    let half = angle(phi)? / 2.0;
    let cot = half.cos() / half.sin();
    Ok(2.0 * cot * cot + 2.0 * cot / half.sin())
}

/// Upper estimate `ab / (2a + 2b)` of the rectangle root, from the
/// characteristic function as a test function.
pub fn rectangle_beta_upper(a: f64, b: f64) -> Result<f64> {
    let (a, b) = (positive("a", a)?, positive("b", b)?);
    Ok(a * b / (2.0 * a + 2.0 * b))
}

/// `F(beta) <= -beta (2/a + 2/b)` for the rectangle.
#[allow(non_snake_case)]
pub fn rectangle_F_upper(a: f64, b: f64, beta: f64) -> Result<f64> {
    let (a, b) = (positive("a", a)?, positive("b", b)?);
    Ok(-nonnegative("beta", beta)? * (2.0 / a + 2.0 / b))
}

pub fn rectangle_lower_bound(a: f64, b: f64) -> Result<f64> {
    let (a, b) = (positive("a", a)?, positive("b", b)?);
    Ok((1.0 + 2.0 * (1.0 / a + 1.0 / b)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticBand {
    pub theta: f64,
    /// `sqrt(2) + sqrt(2) theta^2 / 32`
    pub low: f64,
    /// `sqrt(2) + sqrt(2) theta / 4`
    pub high: f64,
    pub exact_lower: f64,
    pub exact_upper: f64,
}

/// Leading terms of the two-sided bound for the wedge of opening
/// `pi - theta`, alongside the exact bounds they expand.
pub fn asymptotic_band(theta: f64) -> Result<AsymptoticBand> {
    if !(0.0..PI).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, pi), got {theta}")));
    }
    Ok(AsymptoticBand {
        theta,
        low: SQRT_2 + SQRT_2 / 32.0 * theta * theta,
        high: SQRT_2 + SQRT_2 / 4.0 * theta,
        exact_lower: wedge_lower_bound(PI - theta)?,
        exact_upper: wedge_upper_bound(PI - theta)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "numeric-certified")]
    NumericCertified,
    #[serde(rename = "numeric-estimate")]
    NumericEstimate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::NumericCertified => "numeric-certified",
            Mode::NumericEstimate => "numeric-estimate",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "numeric-certified" => Ok(Mode::NumericCertified),
            "numeric-estimate" => Ok(Mode::NumericEstimate),
            _ => Err(Error::InvalidInput(format!("unknown mode {s:?}"))),
        }
    }
}

/// Where a stored root value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Exact,
    /// Closed-form lower estimate of the root.
    AnalyticLower,
    /// Closed-form upper estimate of the root.
    AnalyticUpper,
    /// Finite-element root (an upper estimate by conformity).
    Fem,
}

/// Closed-form values attached to a report for comparison.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct References {
    pub beta_domain: Option<f64>,
    pub beta_complement: Option<f64>,
    pub alpha_interface: Option<f64>,
    /// `alpha_interface` above solves a lower bound on `F`, not `F`
    /// itself; it must not be compared for equality with computed roots.
    pub alpha_bound_only: bool,
    pub lower_bound_robin: Option<f64>,
    pub lower_bound_delta: Option<f64>,
    pub upper_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSummary {
    pub problem: Problem,
    pub domain: String,
    pub root: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub num_dofs: usize,
}

impl RootSummary {
    fn new(problem: Problem, kind: &DomainKind, r: &RootResult) -> Self {
        RootSummary {
            problem,
            domain: kind.name().into(),
            root: r.root,
            bracket: r.bracket,
            evaluations: r.evaluations.len(),
            num_dofs: r.num_dofs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationInfo {
    pub truncation_radius: Option<f64>,
    pub mesh_size: f64,
    pub delta_box_radius: Option<f64>,
    pub complement_radius: Option<f64>,
    pub refinements: usize,
    pub tol_root: f64,
    pub eig_tol: f64,
    pub roots: Vec<RootSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub spec: DomainSpec,
    pub beta_domain: f64,
    pub beta_complement: f64,
    pub alpha_interface: Option<f64>,
    pub lower_bound_robin: f64,
    pub lower_bound_delta: Option<f64>,
    pub upper_bound: Option<f64>,
    pub mode: Mode,
    pub sources: Sources,
    pub references: References,
    pub discretization: Option<DiscretizationInfo>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sources {
    pub beta_domain: Source,
    pub beta_complement: Source,
    pub alpha_interface: Option<Source>,
}

/// Closed-form roots (with their sources) for kinds that have them.
struct Closed {
    beta_domain: Option<(f64, Source)>,
    beta_complement: Option<(f64, Source)>,
    alpha: Option<(f64, Source)>,
    upper_bound: Option<f64>,
}

fn closed_forms(kind: &DomainKind) -> Result<Closed> {
    Ok(match kind {
        DomainKind::Wedge { angle } => Closed {
            beta_domain: Some((wedge_beta(*angle)?, Source::Exact)),
            beta_complement: Some((1.0, Source::Exact)),
            alpha: Some((wedge_alpha_lower(*angle)?, Source::AnalyticLower)),
            upper_bound: Some(wedge_upper_bound(*angle)?),
        },
        DomainKind::WedgeComplement { angle } => Closed {
            beta_domain: Some((1.0, Source::Exact)),
            beta_complement: Some((wedge_beta(*angle)?, Source::Exact)),
            alpha: Some((wedge_alpha_lower(*angle)?, Source::AnalyticLower)),
            upper_bound: None,
        },
        DomainKind::HalfPlane => Closed {
            beta_domain: Some((1.0, Source::Exact)),
            beta_complement: Some((1.0, Source::Exact)),
            alpha: Some((2.0, Source::Exact)),
            upper_bound: Some(SQRT_2),
        },
        DomainKind::Rectangle { a, b } => Closed {
            beta_domain: Some((rectangle_beta_upper(*a, *b)?, Source::AnalyticUpper)),
            beta_complement: Some((1.0, Source::AnalyticLower)),
            alpha: None,
            upper_bound: None,
        },
        DomainKind::RectangleComplement { .. } => Closed {
            beta_domain: Some((1.0, Source::AnalyticLower)),
            beta_complement: None,
            alpha: None,
            upper_bound: None,
        },
        DomainKind::Polygon { .. } | DomainKind::PolygonComplement { .. } => Closed {
            beta_domain: None,
            beta_complement: None,
            alpha: None,
            upper_bound: None,
        },
    })
}

fn references(kind: &DomainKind) -> Result<References> {
    let c = closed_forms(kind)?;
    let mut r = References {
        beta_domain: c.beta_domain.map(|x| x.0),
        beta_complement: c.beta_complement.map(|x| x.0),
        alpha_interface: c.alpha.map(|x| x.0),
        alpha_bound_only: matches!(c.alpha, Some((_, Source::AnalyticLower))),
        upper_bound: c.upper_bound,
        ..Default::default()
    };
    if let (Some((b, bs)), Some((c, cs))) = (c.beta_domain, c.beta_complement) {
        if bs != Source::AnalyticLower && cs != Source::AnalyticUpper {
            r.lower_bound_robin = Some(lower_bound_robin(b, c)?);
        }
        if let (Some(a), true) = (r.alpha_interface, bs != Source::AnalyticLower) {
            r.lower_bound_delta = Some(lower_bound_delta(a, b)?);
        }
    }
    Ok(r)
}

/// Assembles a [`BoundReport`].
///
/// * `Analytic`: closed forms only (wedges, their complements, the
///   half-plane, rectangles).
/// * `NumericCertified`: the denominator `beta(Omega)` is the upper end of
///   the finite-element bracket; numerator roots are analytic lower
///   estimates. Requires an analytic complement bound.
/// * `NumericEstimate`: every root from finite elements; not rigorous.
pub fn build_report(
    spec: &DomainSpec,
    disc: &Discretization,
    tol_root: f64,
    mode: Mode,
) -> Result<BoundReport> {
    let closed = closed_forms(&spec.kind)?;
    let refs = references(&spec.kind)?;
    let mut notes = Vec::new();
    let mut roots = Vec::new();

    let (beta_domain, beta_complement, alpha) = match mode {
        Mode::Analytic => {
            let unsupported = || {
                Error::Unsupported(format!(
                    "no closed-form bound for {} (use a numeric mode)",
                    spec.kind.name()
                ))
            };
            let b = closed.beta_domain.ok_or_else(unsupported)?;
            let c = closed.beta_complement.ok_or_else(unsupported)?;
            if b.1 == Source::AnalyticLower || c.1 == Source::AnalyticUpper {
                return Err(unsupported());
            }
            (b, c, closed.alpha)
        }
        Mode::NumericCertified => {
            let c = closed
                .beta_complement
                .filter(|c| c.1 != Source::AnalyticUpper)
                .ok_or_else(|| {
                    Error::Unsupported(format!(
                        "numeric-certified needs an analytic complement bound, none for {}",
                        spec.kind.name()
                    ))
                })?;
            let r = solve_unit_root(spec, Problem::Robin, disc, tol_root)?;
            roots.push(RootSummary::new(Problem::Robin, &spec.kind, &r));
            notes.push(
                "beta_domain is the upper end of the finite-element bracket (conforming, \
                 truncated: an upper estimate); numerator roots are analytic lower estimates"
                    .into(),
            );
            (
                (r.certified_upper(), Source::Fem),
                c,
                closed.alpha.filter(|a| a.1 != Source::AnalyticUpper),
            )
        }
        Mode::NumericEstimate => {
            let r = solve_unit_root(spec, Problem::Robin, disc, tol_root)?;
            roots.push(RootSummary::new(Problem::Robin, &spec.kind, &r));
            let comp = complement_spec(spec, disc)?;
            let rc = solve_unit_root(&comp, Problem::Robin, disc, tol_root)?;
            roots.push(RootSummary::new(Problem::Robin, &comp.kind, &rc));
            let interface = interface_spec(spec, disc)?;
            let ra = solve_unit_root(&interface, Problem::Delta, disc, tol_root)?;
            roots.push(RootSummary::new(Problem::Delta, &interface.kind, &ra));
            notes.push(
                "numeric-estimate: all roots are finite-element upper estimates; the \
                 resulting bounds are not rigorous"
                    .into(),
            );
            (
                (r.root, Source::Fem),
                (rc.root, Source::Fem),
                Some((ra.root, Source::Fem)),
            )
        }
    };

    let lower_bound_robin = lower_bound_robin(beta_domain.0, beta_complement.0)?;
    let lower_bound_delta = alpha
        .map(|a| lower_bound_delta(a.0, beta_domain.0))
        .transpose()?;
    if matches!(alpha, Some((_, Source::AnalyticLower))) {
        notes.push(
            "alpha_interface solves a lower bound on the delta spectral function \
             (bound_only); it is a lower estimate of the true root"
                .into(),
        );
    }
    let discretization = (mode != Mode::Analytic).then(|| DiscretizationInfo {
        truncation_radius: spec.truncation_radius,
        mesh_size: spec.mesh_size,
        delta_box_radius: disc.delta_box_radius,
        complement_radius: disc.complement_radius,
        refinements: disc.refinements,
        tol_root,
        eig_tol: disc.eig_tol,
        roots,
    });
    Ok(BoundReport {
        spec: spec.clone(),
        beta_domain: beta_domain.0,
        beta_complement: beta_complement.0,
        alpha_interface: alpha.map(|a| a.0),
        lower_bound_robin,
        lower_bound_delta,
        upper_bound: closed.upper_bound,
        mode,
        sources: Sources {
            beta_domain: beta_domain.1,
            beta_complement: beta_complement.1,
            alpha_interface: alpha.map(|a| a.1),
        },
        references: refs,
        discretization,
        notes,
    })
}

/// Spec of the complement, truncated at `disc.complement_radius`, else like
/// the domain (bounded domains get the delta box radius).
pub fn complement_spec(spec: &DomainSpec, disc: &Discretization) -> Result<DomainSpec> {
    let kind = spec.kind.complement();
    let radius = disc
        .complement_radius
        .or(spec.truncation_radius)
        .unwrap_or_else(|| disc.box_radius(spec));
    Ok(DomainSpec::new(kind, radius, spec.mesh_size)?)
}

/// A spec whose delta mesh carries the boundary of `spec` as interface.
pub fn interface_spec(spec: &DomainSpec, disc: &Discretization) -> Result<DomainSpec> {
    let kind = match &spec.kind {
        DomainKind::WedgeComplement { .. }
        | DomainKind::RectangleComplement { .. }
        | DomainKind::PolygonComplement { .. } => spec.kind.complement(),
        k => k.clone(),
    };
    let radius = spec
        .truncation_radius
        .unwrap_or_else(|| disc.box_radius(spec));
    Ok(DomainSpec::new(kind, radius, spec.mesh_size)?)
}

impl BoundReport {
    /// Checks the stored invariants: bounds at least one (up to rounding)
    /// and the Robin bound recomputable from the stored roots.
    pub fn check(&self) -> std::result::Result<(), String> {
        let bounds = [Some(self.lower_bound_robin), self.lower_bound_delta, self.upper_bound];
        if let Some(b) = bounds.into_iter().flatten().find(|b| *b < 1.0 - 1e-12) {
            return Err(format!("stored bound {b} is below 1"));
        }
        let again = lower_bound_robin(self.beta_domain, self.beta_complement)
            .map_err(|e| e.to_string())?;
        if (again - self.lower_bound_robin).abs() > 1e-12 {
            return Err("lower_bound_robin does not match the stored roots".into());
        }
        Ok(())
    }

    /// JSON object; every float rounded to 12 significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serializable report");
        round_json(&mut v);
        serde_json::to_string_pretty(&v).expect("serializable report")
    }

    pub const CSV_HEADER: &'static str = "domain,mode,truncation_radius,mesh_size,beta_domain,\
        beta_complement,alpha_interface,lower_bound_robin,lower_bound_delta,upper_bound";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            self.spec.kind.name(),
            self.mode.as_str(),
            opt(self.spec.truncation_radius),
            fmt_float(self.spec.mesh_size),
            fmt_float(self.beta_domain),
            fmt_float(self.beta_complement),
            opt(self.alpha_interface),
            fmt_float(self.lower_bound_robin),
            opt(self.lower_bound_delta),
            opt(self.upper_bound),
        )
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap());
            if let Some(m) = serde_json::Number::from_f64(x) {
                *n = m;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI: f64 = PI / 2.0;

    #[test]
    fn wedge_examples() {
        assert!((wedge_F_robin(PHI, 1.0).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(wedge_F_robin(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(wedge_complement_F_robin(3.0).unwrap(), -9.0);
        assert!((wedge_lower_bound(PHI).unwrap() - 1.55377).abs() < 1e-5);
        assert!((wedge_upper_bound(PHI).unwrap() - 2.61313).abs() < 1e-5);
        assert!((optimal_t(PHI).unwrap() - (2.0 + 2.0 * SQRT_2)).abs() < 1e-12);
        let a = 1.0 + (PI / 4.0).sin();
        assert!((wedge_delta_F_lower(PHI, a).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_plane_endpoint() {
        assert!((wedge_lower_bound(PI).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((wedge_upper_bound(PI).unwrap() - SQRT_2).abs() < 1e-15);
        assert!(optimal_t(PI).unwrap().abs() < 1e-15);
        assert_eq!(wedge_delta_F_lower(PI, 3.0).unwrap(), halfplane_F_delta(3.0).unwrap());
    }

    #[test]
    fn combinators() {
        assert!((lower_bound_robin(1.0, 1.0).unwrap() - SQRT_2).abs() < 1e-15);
        assert_eq!(lower_bound_robin(1.0, 1.0).unwrap(), lower_bound_delta(2.0, 1.0).unwrap());
        assert_eq!(lower_bound_delta(0.3, 0.3).unwrap(), 1.0);
        assert!(lower_bound_robin(0.0, 1.0).is_err());
        assert!(lower_bound_delta(1.0, -1.0).is_err());
        let s = (PI / 4.0).sin();
        assert!((lower_bound_delta(1.0 + s, s).unwrap() - 1.55377).abs() < 1e-5);
    }

    #[test]
    fn rectangle() {
        assert!((rectangle_lower_bound(1.0, 1.0).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rectangle_lower_bound(2.0, 3.0).unwrap(), rectangle_lower_bound(3.0, 2.0).unwrap());
        assert!(rectangle_lower_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn band_values() {
        let b = asymptotic_band(0.1).unwrap();
        assert!((b.low - 1.4146555).abs() < 1e-7);
        assert!((b.high - 1.44957).abs() < 1e-5);
        let b = asymptotic_band(0.0).unwrap();
        assert_eq!((b.low, b.high), (SQRT_2, SQRT_2));
    }

    #[test]
    fn analytic_reports() {
        let disc = Discretization::default();
        let spec = DomainSpec::new(DomainKind::wedge(PHI).unwrap(), 8.0, 0.1).unwrap();
        let r = build_report(&spec, &disc, 1e-4, Mode::Analytic).unwrap();
        assert!((r.lower_bound_robin - (1.0 + SQRT_2).sqrt()).abs() < 1e-12);
        assert!(r.references.alpha_bound_only);
        r.check().unwrap();

        let spec = DomainSpec::new(DomainKind::HalfPlane, 8.0, 0.1).unwrap();
        let r = build_report(&spec, &disc, 1e-4, Mode::Analytic).unwrap();
        assert_eq!(r.lower_bound_robin, r.lower_bound_delta.unwrap());
        assert!((r.lower_bound_robin - SQRT_2).abs() < 1e-15);

        let spec = DomainSpec::bounded(DomainKind::rectangle(1.0, 1.0).unwrap(), 0.1).unwrap();
        let r = build_report(&spec, &disc, 1e-4, Mode::Analytic).unwrap();
        assert!((r.lower_bound_robin - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn certified_needs_complement_bound() {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let spec = DomainSpec::bounded(DomainKind::polygon(square).unwrap(), 0.2).unwrap();
        let err = build_report(&spec, &Discretization::default(), 1e-4, Mode::NumericCertified);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn json_has_field_names_and_rounding() {
        let spec = DomainSpec::new(DomainKind::wedge(PHI).unwrap(), 8.0, 0.1).unwrap();
        let r = build_report(&spec, &Discretization::default(), 1e-4, Mode::Analytic).unwrap();
        let json = r.to_json();
        for key in ["beta_domain", "beta_complement", "alpha_interface", "lower_bound_robin",
            "lower_bound_delta", "upper_bound", "mode"] {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
        assert!(json.contains("1.55377397403"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 2);
    }
}
