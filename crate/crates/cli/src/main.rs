mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use extbound::analytic::{build_report, round_json};
use extbound::assembly::assemble;
use extbound::eigensolve::{default_start, EigenOptions};
use extbound::format::fmt_float;
use extbound::geometry::{build_mesh, DomainKind, DomainSpec};
use extbound::reflection::{build_mirror_mesh, discrete_operator_norm_with, verify_gradient_identities};
use extbound::roots::{
    problem_mesh, solve_unit_root, sweep_with, write_sweep_csv, Discretization, FEvaluator, Problem,
};
use extbound::verify::{run_suite, VerifyConfig};
use serde_json::json;

use config::{config_error, parse_grid, ConfigError, Format, Settings};

#[derive(Parser, Debug)]
#[command(name = "extbound", version, about = "Lower bounds on extension operator norms from Robin and delta-interaction spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roots, lower bounds and (for wedges) the reflection upper bound
    Bound(Settings),
    /// Ground eigenvalue F over a grid of couplings (CSV)
    Sweep(Settings),
    /// Ground eigenpair at a single coupling
    Spectrum(Settings),
    /// Discrete norm of the reflection extension operator of a wedge
    Opnorm(Settings),
    /// Run the invariant suite; exits with status 1 on any failure
    Verify(Settings),
    /// Unit roots along truncation-radius and mesh-size ladders (CSV)
    Convergence(Settings),
}

/// Outcome of a command that completed without an error.
enum Status {
    Ok,
    VerifyFailed(usize),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("EXTBOUND_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => extbound::set_threads(n),
            _ => return fail(config_error(format!("EXTBOUND_THREADS must be a positive integer, got {v:?}"))),
        }
    }
    match run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerifyFailed(n)) => {
            let line = json!({"error": "verification_failed", "exit_code": 1, "failures": n});
            eprintln!("{line}");
            ExitCode::from(1)
        }
        Err(e) => fail(e),
    }
}

/// Prints one JSON error line on stderr and maps the error to an exit code:
/// 2 for configuration and I/O, 3 for numerical failures.
fn fail(e: anyhow::Error) -> ExitCode {
    let (code, kind) = classify(&e);
    let line = json!({"error": kind, "exit_code": code, "message": format!("{e:#}")});
    eprintln!("{line}");
    ExitCode::from(code)
}

fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    if e.downcast_ref::<ConfigError>().is_some() {
        return (2, "config");
    }
    if let Some(err) = e.downcast_ref::<extbound::Error>() {
        use extbound::Error as E;
        return match err {
            _ if err.is_non_convergence() => (3, "non_convergence"),
            E::BracketFailure { .. } => (3, "bracket_failure"),
            E::Eigen(_) | E::Assembly(_) => (3, "numerical"),
            E::Geometry(_) | E::InvalidInput(_) | E::Unsupported(_) => (2, "config"),
            E::Io(_) => (2, "io"),
        };
    }
    if e.downcast_ref::<io::Error>().is_some() {
        return (2, "io");
    }
    (2, "config")
}

fn run(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Bound(s) => bound(prepare(s)?),
        Command::Sweep(s) => sweep(prepare(s)?),
        Command::Spectrum(s) => spectrum(prepare(s)?),
        Command::Opnorm(s) => opnorm(prepare(s)?),
        Command::Verify(s) => verify(prepare(s)?),
        Command::Convergence(s) => convergence(prepare(s)?),
    }
}

fn prepare(mut s: Settings) -> anyhow::Result<Settings> {
    s.load_config_file()?;
    Ok(s)
}

/// Writes `body` to `--output` or standard output once it is complete.
fn emit(s: &Settings, body: &[u8]) -> anyhow::Result<()> {
    match &s.output {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_text(mut v: serde_json::Value) -> Vec<u8> {
    round_json(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn dumps(s: &Settings, spec: &DomainSpec, problem: Problem) -> anyhow::Result<()> {
    if s.dump_mesh.is_none() && s.dump_matrices.is_none() {
        return Ok(());
    }
    let mesh = problem_mesh(spec, problem, &s.disc()?)?;
    if let Some(path) = &s.dump_mesh {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        mesh.write_text(&mut w)?;
        w.flush()?;
    }
    if let Some(dir) = &s.dump_matrices {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let forms = assemble(&mesh, problem.tag())?;
        for (name, m) in [("A", &forms.a), ("M", &forms.m), ("B", &forms.b)] {
            let path = dir.join(format!("{name}.txt"));
            let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            m.write_coordinate(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn bound(s: Settings) -> anyhow::Result<Status> {
    let spec = s.spec()?;
    dumps(&s, &spec, Problem::Robin)?;
    let report = build_report(&spec, &s.disc()?, s.tol_root()?, s.mode()?)?;
    let body = match s.format_or(Format::Json) {
        Format::Json => {
            let mut text = report.to_json();
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
    };
    emit(&s, &body)?;
    Ok(Status::Ok)
}

fn sweep(s: Settings) -> anyhow::Result<Status> {
    let spec = s.spec()?;
    let problem = s.problem();
    let betas = parse_grid(s.betas.as_deref().ok_or_else(|| config_error("--betas is required"))?)?;
    dumps(&s, &spec, problem)?;
    let mut eval = FEvaluator::new(&spec, problem, &s.disc()?)?;
    let points = sweep_with(&mut eval, &betas)?;
    let body = match s.format_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&points, &mut buf)?;
            buf
        }
        Format::Json => json_text(json!({
            "domain": spec.kind.name(),
            "problem": problem.name(),
            "num_dofs": eval.forms().num_dofs(),
            "points": points,
        })),
    };
    emit(&s, &body)?;
    Ok(Status::Ok)
}

fn spectrum(s: Settings) -> anyhow::Result<Status> {
    let spec = s.spec()?;
    let problem = s.problem();
    let coupling = s.coupling.unwrap_or(1.0);
    dumps(&s, &spec, problem)?;
    let mut eval = FEvaluator::new(&spec, problem, &s.disc()?)?;
    let r = eval.eval(coupling)?;
    let n = eval.forms().num_dofs();
    let body = match s.format_or(Format::Json) {
        Format::Json => json_text(json!({
            "domain": spec.kind.name(),
            "problem": problem.name(),
            "coupling": coupling,
            "num_dofs": n,
            "eigenvalue": r.eigenvalue,
            "relative_residual": r.relative_residual,
            "iterations": r.iterations,
            "eigenvector": r.eigenvector,
        })),
        Format::Csv => format!(
            "coupling,eigenvalue,relative_residual,iterations,num_dofs\n{},{},{},{},{}\n",
            fmt_float(coupling),
            fmt_float(r.eigenvalue),
            fmt_float(r.relative_residual),
            r.iterations,
            n
        )
        .into_bytes(),
    };
    emit(&s, &body)?;
    Ok(Status::Ok)
}

fn opnorm(s: Settings) -> anyhow::Result<Status> {
    let spec = s.spec()?;
    if !matches!(spec.kind, DomainKind::Wedge { .. } | DomainKind::HalfPlane) {
        return Err(config_error(format!(
            "opnorm requires a wedge or half-plane domain, got {}",
            spec.kind.name()
        )));
    }
    dumps(&s, &spec, Problem::Robin)?;
    let disc = s.disc()?;
    let mut mesh = build_mesh(&spec)?;
    for _ in 0..disc.refinements {
        mesh = extbound::geometry::refine(&mesh);
    }
    let opts = EigenOptions::with_tol(disc.eig_tol, disc.max_iterations);
    let norm = discrete_operator_norm_with(&mesh, &opts)?;
    if let Some(path) = &s.diagnostics {
        let mirror = build_mirror_mesh(&mesh)?;
        let f = default_start(mirror.wedge.num_vertices());
        let diag = verify_gradient_identities(&mirror, &f)?;
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        diag.write_csv(&mut w)?;
        w.flush()?;
    }
    let body = match s.format_or(Format::Json) {
        Format::Json => json_text(json!({
            "domain": spec.kind.name(),
            "angle": norm.angle,
            "value": norm.value,
            "upper_bound": norm.upper_bound,
            "gap": norm.upper_bound - norm.value,
            "relative_residual": norm.relative_residual,
            "iterations": norm.iterations,
            "num_dofs": norm.num_dofs,
        })),
        Format::Csv => format!(
            "angle,value,upper_bound,relative_residual,iterations,num_dofs\n{},{},{},{},{},{}\n",
            fmt_float(norm.angle),
            fmt_float(norm.value),
            fmt_float(norm.upper_bound),
            fmt_float(norm.relative_residual),
            norm.iterations,
            norm.num_dofs
        )
        .into_bytes(),
    };
    emit(&s, &body)?;
    Ok(Status::Ok)
}

fn verify(s: Settings) -> anyhow::Result<Status> {
    let d = VerifyConfig::default();
    let cfg = VerifyConfig {
        truncation_radius: s.radius.unwrap_or(d.truncation_radius),
        mesh_size: s.h.unwrap_or(d.mesh_size),
        tol_root: s.tol_root()?,
        eig_tol: s.disc()?.eig_tol,
        seed: d.seed,
    };
    let report = run_suite(&cfg, s.filter.as_deref());
    if report.checks.is_empty() {
        return Err(config_error("no verification check matches --filter"));
    }
    let body = match s.format {
        None => {
            let mut text = String::new();
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                text += &format!("{status} {}::{} ({:.2} s) {}\n", c.module, c.name, c.seconds, c.detail);
            }
            text += &format!(
                "{} checks, {} failed\n",
                report.checks.len(),
                report.failures()
            );
            text.into_bytes()
        }
        Some(Format::Csv) => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
        Some(Format::Json) => json_text(serde_json::to_value(&report)?),
    };
    emit(&s, &body)?;
    Ok(if report.all_passed() {
        Status::Ok
    } else {
        Status::VerifyFailed(report.failures())
    })
}

fn ladder(text: Option<&str>, default: &[f64], name: &str) -> anyhow::Result<Vec<f64>> {
    let values = match text {
        Some(t) => parse_grid(t)?,
        None => default.to_vec(),
    };
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(config_error(format!("--{name} values must be positive")));
    }
    Ok(values)
}

fn convergence(s: Settings) -> anyhow::Result<Status> {
    let base = s.spec()?;
    let problem = s.problem();
    let disc = s.disc()?;
    let tol = s.tol_root()?;
    let r0 = s.radius.unwrap_or(config::DEFAULT_RADIUS);
    let h0 = s.mesh_size();
    let radii = ladder(s.radii.as_deref(), &[r0 / 2.0, r0, 1.5 * r0, 2.0 * r0], "radii")?;
    let sizes = ladder(s.sizes.as_deref(), &[4.0 * h0, 2.0 * h0, h0], "sizes")?;
    let truncated = base.truncation_radius.is_some() || problem == Problem::Delta;
    let mut rows = Vec::new();
    if truncated {
        for &r in &radii {
            let spec = s.spec_with(r, h0)?;
            let d = match problem {
                Problem::Delta => Discretization {
                    delta_box_radius: Some(r),
                    ..disc.clone()
                },
                Problem::Robin => disc.clone(),
            };
            rows.push(("R", r, solve_unit_root(&spec, problem, &d, tol)?, spec, d));
        }
    }
    for &h in &sizes {
        let spec = s.spec_with(r0, h)?;
        rows.push(("h", h, solve_unit_root(&spec, problem, &disc, tol)?, spec, disc.clone()));
    }
    let body = match s.format_or(Format::Csv) {
        Format::Csv => {
            let mut text = String::from(
                "parameter,value,truncation_radius,mesh_size,root,bracket_low,bracket_high,num_dofs,evaluations\n",
            );
            for (p, v, r, spec, d) in &rows {
                let radius = match problem {
                    Problem::Delta => Some(d.box_radius(spec)),
                    Problem::Robin => spec.truncation_radius,
                };
                text += &format!(
                    "{p},{},{},{},{},{},{},{},{}\n",
                    fmt_float(*v),
                    radius.map(fmt_float).unwrap_or_default(),
                    fmt_float(spec.mesh_size),
                    fmt_float(r.root),
                    fmt_float(r.bracket.0),
                    fmt_float(r.bracket.1),
                    r.num_dofs,
                    r.evaluations.len()
                );
            }
            text.into_bytes()
        }
        Format::Json => json_text(json!({
            "domain": base.kind.name(),
            "problem": problem.name(),
            "rows": rows.iter().map(|(p, v, r, spec, _)| json!({
                "parameter": p,
                "value": v,
                "mesh_size": spec.mesh_size,
                "truncation_radius": spec.truncation_radius,
                "root": r.root,
                "bracket": [r.bracket.0, r.bracket.1],
                "num_dofs": r.num_dofs,
            })).collect::<Vec<_>>(),
        })),
    };
    emit(&s, &body)?;
    Ok(Status::Ok)
}
