//! Runtime invariant suite behind `extbound verify`.
//!
//! Every check returns a one-line detail; failures carry the measured
//! value that broke the invariant.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};
use std::io::{self, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{self, Mode};
use crate::assembly::{
    assemble, assemble_unreduced, edge_mass, element_mass, element_stiffness, pencil, rayleigh,
    SymSparse,
};
use crate::eigensolve::{EigenOptions, Method, PencilSolver};
use crate::format::fmt_float;
use crate::geometry::{
    build_delta_mesh, build_mesh, refine, BoundaryTag, DomainKind, DomainSpec, Mesh,
};
use crate::reflection::{
    build_mirror_mesh, discrete_operator_norm, extend, fixed_vertices, verify_gradient_identities,
};
use crate::roots::{solve_unit_root, sweep_F, Discretization, Problem};

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub truncation_radius: f64,
    pub mesh_size: f64,
    pub tol_root: f64,
    pub eig_tol: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            truncation_radius: 8.0,
            mesh_size: 0.1,
            tol_root: 1e-4,
            eig_tol: 1e-9,
            seed: 7,
        }
    }
}

impl VerifyConfig {
    fn disc(&self) -> Discretization {
        Discretization {
            eig_tol: self.eig_tol,
            ..Default::default()
        }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9).wrapping_add(salt))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "module,check,passed,seconds,detail")?;
        for c in &self.checks {
            writeln!(
                w,
                "{},{},{},{:.3},\"{}\"",
                c.module,
                c.name,
                c.passed,
                c.seconds,
                c.detail.replace('"', "'")
            )?;
        }
        Ok(())
    }
}

type Outcome = std::result::Result<String, String>;

type Check = (&'static str, &'static str, fn(&VerifyConfig) -> Outcome);

const CHECKS: &[Check] = &[
    ("geometry", "rectangle_grid_counts", rectangle_grid_counts),
    ("geometry", "area_consistency", area_consistency),
    ("geometry", "tag_partition", tag_partition),
    ("geometry", "mesh_quality", mesh_quality),
    ("geometry", "refinement_nestedness", refinement_nestedness),
    ("geometry", "delta_interface_lengths", delta_interface_lengths),
    ("assembly", "element_matrices", element_matrices),
    ("assembly", "constant_identities", constant_identities),
    ("assembly", "matrix_invariants", matrix_invariants),
    ("assembly", "rectangle_constant_quotient", rectangle_constant_quotient),
    ("assembly", "pencil_linearity", pencil_linearity),
    ("assembly", "dirichlet_monotonicity", dirichlet_monotonicity),
    ("eigensolve", "trivial_pencils", trivial_pencils),
    ("eigensolve", "dense_agreement", dense_agreement),
    ("eigensolve", "shift_identity", shift_identity),
    ("eigensolve", "normalization", normalization),
    ("roots", "sign_at_zero", sign_at_zero),
    ("roots", "monotone_sweep", monotone_sweep),
    ("roots", "rectangle_curve", rectangle_curve),
    ("roots", "bracket_invariants", bracket_invariants),
    ("roots", "refinement_monotonicity", refinement_monotonicity),
    ("roots", "certified_side", certified_side),
    ("analytic", "wedge_bound_grid", wedge_bound_grid),
    ("analytic", "halfplane_consistency", halfplane_consistency),
    ("analytic", "report_invariants", report_invariants),
    ("analytic", "asymptotic_band", asymptotic_band),
    ("analytic", "fem_wedge_roots", fem_wedge_roots),
    ("reflection", "mirror_geometry", mirror_geometry),
    ("reflection", "restriction_identity", restriction_identity),
    ("reflection", "norm_identities", norm_identities),
    ("reflection", "gradient_chain_rule", gradient_chain_rule),
    ("reflection", "norm_sandwich", norm_sandwich),
];

/// Names of all checks as `module::name`.
pub fn check_names() -> Vec<String> {
    CHECKS.iter().map(|(m, n, _)| format!("{m}::{n}")).collect()
}

/// Runs the checks whose `module::name` contains `filter` (all when `None`).
pub fn run_suite(cfg: &VerifyConfig, filter: Option<&str>) -> VerifyReport {
    let checks = CHECKS
        .iter()
        .filter(|(m, n, _)| filter.map_or(true, |f| format!("{m}::{n}").contains(f)))
        .map(|&(module, name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f(cfg) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult {
                module,
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    VerifyReport { checks }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn wedge(phi: f64, r: f64, h: f64) -> std::result::Result<Mesh, String> {
    let kind = if phi >= PI {
        DomainKind::HalfPlane
    } else {
        lib(DomainKind::wedge(phi))?
    };
    lib(build_mesh(&lib(DomainSpec::new(kind, r, h))?))
}

/// A small catalog of Robin meshes of every kind.
fn sample_meshes() -> std::result::Result<Vec<Mesh>, String> {
    let square = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 2.0], [0.0, 1.0]];
    let kinds = [
        (lib(DomainKind::rectangle(2.0, 1.5))?, 0.2),
        (lib(DomainKind::rectangle_complement(1.0, 1.0))?, 0.3),
        (lib(DomainKind::wedge(FRAC_PI_3))?, 0.3),
        (lib(DomainKind::wedge_complement(FRAC_PI_2))?, 0.3),
        (DomainKind::HalfPlane, 0.3),
        (lib(DomainKind::polygon(square))?, 0.2),
    ];
    kinds
        .into_iter()
        .map(|(k, h)| lib(build_mesh(&lib(DomainSpec::new(k, 3.0, h))?)))
        .collect()
}

/// Area enclosed by the oriented boundary edges (shoelace formula), which
/// is independent of the triangle areas.
fn boundary_area(mesh: &Mesh) -> f64 {
    let mut sum = 0.0;
    let edges = mesh.edge_triangles();
    for &[a, b, c] in &mesh.triangles {
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let key = if p < q { (p, q) } else { (q, p) };
            if edges[&key].len() == 1 {
                let (u, v) = (mesh.vertices[p], mesh.vertices[q]);
                sum += u[0] * v[1] - v[0] * u[1];
            }
        }
    }
    0.5 * sum
}

fn rectangle_grid_counts(_: &VerifyConfig) -> Outcome {
    let spec = lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 1.0))?, 0.5))?;
    let m = lib(build_mesh(&spec))?;
    let got = (
        m.num_vertices(),
        m.num_triangles(),
        m.count_tag(BoundaryTag::Robin),
        m.count_tag(BoundaryTag::ArtificialDirichlet),
    );
    ensure(got == (9, 8, 8, 0), || format!("counts {got:?}, expected (9, 8, 8, 0)"))?;
    let fine = refine(&m);
    ensure(fine.num_triangles() == 32 && fine.num_vertices() == 25, || {
        format!("refined to {} vertices, {} triangles", fine.num_vertices(), fine.num_triangles())
    })?;
    Ok("Rectangle(1,1), h = 0.5: 9 vertices, 8 triangles, 8 Robin edges".into())
}

fn area_consistency(_: &VerifyConfig) -> Outcome {
    let mut worst = 0.0f64;
    let spec = lib(DomainSpec::bounded(lib(DomainKind::rectangle(2.0, 1.5))?, 0.1))?;
    let m = lib(build_mesh(&spec))?;
    worst = worst.max((m.area() - 3.0).abs());
    for mesh in sample_meshes()? {
        let d = (mesh.area() - boundary_area(&mesh)).abs();
        worst = worst.max(d / mesh.area().max(1.0));
    }
    ensure(worst <= 1e-10, || format!("area mismatch {worst:e}"))?;
    Ok(format!("max area mismatch {worst:.1e}"))
}

fn tag_partition(_: &VerifyConfig) -> Outcome {
    let mut meshes = sample_meshes()?;
    let hp = lib(DomainSpec::new(DomainKind::HalfPlane, 3.0, 0.3))?;
    meshes.push(lib(build_delta_mesh(&hp, 3.0))?);
    let sq = lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 1.0))?, 0.2))?;
    meshes.push(lib(build_delta_mesh(&sq, 3.0))?);
    for m in &meshes {
        lib(m.validate())?;
        let boundary = m.boundary_edges().len();
        let tagged = m.count_tag(BoundaryTag::Robin) + m.count_tag(BoundaryTag::ArtificialDirichlet);
        ensure(boundary == tagged, || {
            format!("{}: {boundary} boundary edges, {tagged} Robin/Dirichlet", m.spec().kind)
        })?;
    }
    Ok(format!("{} meshes validated", meshes.len()))
}

fn mesh_quality(cfg: &VerifyConfig) -> Outcome {
    let h = cfg.mesh_size;
    let mut worst_angle = f64::INFINITY;
    for phi in [PI / 6.0, FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI] {
        let m = wedge(phi, cfg.truncation_radius, h)?;
        ensure(m.max_edge_length() <= 1.5 * h, || {
            format!("phi = {phi}: max edge {} > 1.5 h", m.max_edge_length())
        })?;
        worst_angle = worst_angle.min(m.min_angle_deg());
        let cot = 1.0 / (phi / 2.0).tan();
        for e in m.tagged_edges.iter().filter(|e| e.tag == BoundaryTag::Robin) {
            for v in e.vertices {
                let p = m.vertices[v];
                let d = (p[1] - cot * p[0].abs()).abs();
                ensure(d <= 1e-12 * cfg.truncation_radius, || {
                    format!("phi = {phi}: Robin vertex {p:?} off the boundary by {d:e}")
                })?;
            }
        }
    }
    ensure(worst_angle >= 15.0 - 1e-9, || format!("min angle {worst_angle} deg"))?;
    Ok(format!("wedge meshes: min angle {worst_angle:.2} deg, edges <= 1.5 h"))
}

fn refinement_nestedness(_: &VerifyConfig) -> Outcome {
    for m in sample_meshes()? {
        let f = refine(&m);
        ensure(f.vertices[..m.vertices.len()] == m.vertices[..], || {
            "coarse vertices moved".to_string()
        })?;
        ensure((f.area() - m.area()).abs() <= 1e-12 * m.area().max(1.0), || {
            format!("area {} -> {}", m.area(), f.area())
        })?;
        let (lc, lf) = (m.tagged_length(BoundaryTag::Robin), f.tagged_length(BoundaryTag::Robin));
        ensure((lc - lf).abs() <= 1e-12 * lc.max(1.0), || format!("Robin length {lc} -> {lf}"))?;
        lib(f.validate())?;
    }
    Ok("vertices, area and Robin length preserved".into())
}

fn delta_interface_lengths(_: &VerifyConfig) -> Outcome {
    let hp = lib(build_delta_mesh(&lib(DomainSpec::new(DomainKind::HalfPlane, 4.0, 0.25))?, 4.0))?;
    let on_axis = hp
        .tagged_edges
        .iter()
        .filter(|e| e.tag == BoundaryTag::Interface)
        .all(|e| e.vertices.iter().all(|&v| hp.vertices[v][1] == 0.0));
    ensure(on_axis, || "half-plane interface edge off x2 = 0".into())?;
    let cases = [
        (hp.tagged_length(BoundaryTag::Interface), 8.0, "half-plane"),
        (
            lib(build_delta_mesh(
                &lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 1.0))?, 0.25))?,
                4.0,
            ))?
            .tagged_length(BoundaryTag::Interface),
            4.0,
            "unit square",
        ),
        (
            lib(build_delta_mesh(
                &lib(DomainSpec::new(lib(DomainKind::wedge(FRAC_PI_2))?, 4.0, 0.25))?,
                4.0,
            ))?
            .tagged_length(BoundaryTag::Interface),
            8.0 * SQRT_2,
            "right wedge",
        ),
    ];
    for (got, want, name) in cases {
        ensure((got - want).abs() <= 1e-12, || format!("{name}: interface length {got}, expected {want}"))?;
    }
    Ok("interface lengths 8, 4, 8 sqrt 2".into())
}

fn max_abs_diff<const N: usize>(a: [[f64; N]; N], b: [[f64; N]; N]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

fn element_matrices(cfg: &VerifyConfig) -> Outcome {
    let k = element_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    ensure(max_abs_diff(k, want) <= 1e-15, || format!("reference stiffness {k:?}"))?;
    let mut rng = cfg.rng(1);
    for _ in 0..20 {
        let t: f64 = rng.gen_range(0.01..10.0);
        let m = element_mass(t);
        let want = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]].map(|r| r.map(|v| v * t / 12.0));
        ensure(max_abs_diff(m, want) <= 1e-15 * t, || format!("mass for area {t}"))?;
        let l: f64 = rng.gen_range(0.01..10.0);
        let e = edge_mass(l);
        let want = [[2.0, 1.0], [1.0, 2.0]].map(|r| r.map(|v| v * l / 6.0));
        ensure(max_abs_diff(e, want) <= 1e-15 * l, || format!("edge mass for length {l}"))?;
    }
    Ok("stiffness, mass and edge matrices exact".into())
}

fn constant_identities(_: &VerifyConfig) -> Outcome {
    let mut worst = [0.0f64; 3];
    for mesh in sample_meshes()? {
        let f = lib(assemble_unreduced(&mesh, BoundaryTag::Robin))?;
        let one = vec![1.0; f.num_dofs()];
        let a1 = f.a.mul_vec(&one).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = f.a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst[0] = worst[0].max(a1 / scale);
        worst[1] = worst[1].max((f.m.quadratic_form(&one) - mesh.area()).abs());
        let len = mesh.tagged_length(BoundaryTag::Robin);
        worst[2] = worst[2].max((f.b.quadratic_form(&one) - len).abs());
    }
    ensure(worst[0] <= 1e-13, || format!("|A 1| / |A| = {:e}", worst[0]))?;
    ensure(worst[1] <= 1e-10, || format!("1'M1 - area = {:e}", worst[1]))?;
    ensure(worst[2] <= 1e-10, || format!("1'B1 - length = {:e}", worst[2]))?;
    Ok(format!(
        "A1 = 0 ({:.1e}), 1'M1 = area ({:.1e}), 1'B1 = length ({:.1e})",
        worst[0], worst[1], worst[2]
    ))
}

fn matrix_invariants(_: &VerifyConfig) -> Outcome {
    let mut meshes = sample_meshes()?;
    meshes.truncate(3);
    for mesh in &meshes {
        let f = lib(assemble(mesh, BoundaryTag::Robin))?;
        for s in [&f.a, &f.m, &f.b] {
            ensure(s.values().iter().all(|v| v.is_finite()), || "non-finite entry".into())?;
            let (cp, ri) = (s.pattern().col_ptr(), s.pattern().row_idx());
            for j in 0..s.dim() {
                let col = &ri[cp[j]..cp[j + 1]];
                ensure(col.windows(2).all(|w| w[0] < w[1]) && col.iter().all(|&i| i <= j), || {
                    format!("column {j} not strictly increasing upper")
                })?;
            }
        }
        let id = SymSparse::identity(f.num_dofs());
        let mut solver = PencilSolver::new(id.clone());
        let opts = EigenOptions::default();
        let amin = lib(solver.smallest(&f.a, &opts))?.eigenvalue;
        let bmin = lib(solver.smallest(&f.b, &opts))?.eigenvalue;
        let mmin = lib(solver.smallest(&f.m, &opts))?.eigenvalue;
        let scale = lib(solver.largest(&f.a, &opts))?.eigenvalue;
        ensure(amin >= -1e-10 * scale && bmin >= -1e-10 * scale && mmin > 0.0, || {
            format!("lambda_min A = {amin:e}, B = {bmin:e}, M = {mmin:e}")
        })?;
        let rank_b = mesh.tagged_vertices(BoundaryTag::Robin).iter().filter(|&&t| t).count();
        let nonzero_rows = (0..f.num_dofs()).filter(|&i| f.b.get(i, i) != 0.0).count();
        ensure(nonzero_rows <= rank_b, || format!("B has {nonzero_rows} nonzero rows, {rank_b} tagged vertices"))?;
    }
    Ok("finite, upper-triangular unique pattern; A, B PSD; M PD".into())
}

fn rectangle_constant_quotient(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(2);
    for (a, b) in [(1.0, 1.0), (2.0, 0.5), (3.0, 1.25)] {
        let spec = lib(DomainSpec::bounded(lib(DomainKind::rectangle(a, b))?, 0.25))?;
        let f = lib(assemble(&lib(build_mesh(&spec))?, BoundaryTag::Robin))?;
        let one = vec![1.0; f.num_dofs()];
        for _ in 0..5 {
            let beta: f64 = rng.gen_range(0.0..3.0);
            let q = lib(rayleigh(&f, beta, &one))?;
            let want = -beta * (2.0 / a + 2.0 / b);
            ensure((q - want).abs() <= 1e-12 * want.abs().max(1.0), || {
                format!("({a}, {b}), beta = {beta}: quotient {q}, expected {want}")
            })?;
        }
    }
    Ok("constant quotient = -beta (2/a + 2/b)".into())
}

fn pencil_linearity(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(3);
    let mesh = wedge(FRAC_PI_2, 3.0, 0.3)?;
    let f = lib(assemble(&mesh, BoundaryTag::Robin))?;
    ensure(pencil(&f, 0.0).values() == f.a.values(), || "pencil(0) != A".into())?;
    let p0 = pencil(&f, 0.0);
    for _ in 0..10 {
        let (b1, b2): (f64, f64) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
        let lhs = lib(lib(pencil(&f, b1).combine(1.0, &pencil(&f, b2), 1.0))?.combine(1.0, &p0, -1.0))?;
        let rhs = pencil(&f, b1 + b2);
        let d = lhs
            .values()
            .iter()
            .zip(rhs.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        ensure(d <= 1e-12, || format!("linearity defect {d:e} at ({b1}, {b2})"))?;
    }
    Ok("pencil affine in beta".into())
}

fn dirichlet_monotonicity(_: &VerifyConfig) -> Outcome {
    let mut n = 0;
    for phi in [FRAC_PI_2, PI] {
        let mesh = wedge(phi, 2.0, 0.4)?;
        let red = lib(assemble(&mesh, BoundaryTag::Robin))?;
        let full = lib(assemble_unreduced(&mesh, BoundaryTag::Robin))?;
        for beta in [0.0, 0.5, 2.0] {
            let opts = EigenOptions::default();
            let lr = lib(PencilSolver::new(red.m.clone()).smallest(&pencil(&red, beta), &opts))?;
            let lf = lib(PencilSolver::new(full.m.clone()).smallest(&pencil(&full, beta), &opts))?;
            ensure(lr.eigenvalue >= lf.eigenvalue - 1e-9 * lf.eigenvalue.abs().max(1.0), || {
                format!("reduced {} < unreduced {}", lr.eigenvalue, lf.eigenvalue)
            })?;
            n += 1;
        }
    }
    Ok(format!("{n} reduced ground values >= unreduced"))
}

fn diag(d: &[f64]) -> std::result::Result<SymSparse, String> {
    lib(SymSparse::diagonal(d))
}

fn trivial_pencils(_: &VerifyConfig) -> Outcome {
    let opts = EigenOptions::default();
    for method in [Method::Dense, Method::Krylov] {
        let o = EigenOptions { method, ..opts.clone() };
        let id = SymSparse::identity(5);
        let r = lib(PencilSolver::new(id.clone()).smallest(&id, &o))?;
        ensure((r.eigenvalue - 1.0).abs() <= 1e-12, || format!("identity: {}", r.eigenvalue))?;
        let s = diag(&[3.0, -2.0, 7.0])?;
        let mut solver = PencilSolver::new(SymSparse::identity(3));
        let lo = lib(solver.smallest(&s, &o))?;
        let hi = lib(solver.largest(&s, &o))?;
        ensure((lo.eigenvalue + 2.0).abs() <= 1e-12 && (lo.eigenvector[1].abs() - 1.0).abs() <= 1e-9, || {
            format!("{method:?} diag smallest {} {:?}", lo.eigenvalue, lo.eigenvector)
        })?;
        ensure((hi.eigenvalue - 7.0).abs() <= 1e-12, || format!("{method:?} diag largest {}", hi.eigenvalue))?;
    }
    Ok("identity and diagonal pencils, dense and Krylov".into())
}

fn random_pencil(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(SymSparse, SymSparse), String> {
    let mut s = vec![vec![0.0; n]; n];
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = rng.gen_range(-1.0..1.0);
        }
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (0..n).map(|k| g[k][i] * g[k][j]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
        }
    }
    Ok((lib(SymSparse::from_dense(&s))?, lib(SymSparse::from_dense(&m))?))
}

fn dense_agreement(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(4);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [1, 2, 3, 6, 10, 20, 35, 50] {
        for _ in 0..3 {
            let (s, m) = random_pencil(&mut rng, n)?;
            let dense = EigenOptions { method: Method::Dense, ..Default::default() };
            let krylov = EigenOptions { method: Method::Krylov, ..Default::default() };
            let mut solver = PencilSolver::new(m);
            let pairs = [
                (lib(solver.smallest(&s, &dense))?, lib(solver.smallest(&s, &krylov))?),
                (lib(solver.largest(&s, &dense))?, lib(solver.largest(&s, &krylov))?),
            ];
            for (a, b) in pairs {
                let d = (a.eigenvalue - b.eigenvalue).abs() / a.eigenvalue.abs().max(1.0);
                worst = worst.max(d);
                ensure(d <= 1e-8, || format!("n = {n}: dense {} vs Krylov {}", a.eigenvalue, b.eigenvalue))?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} random pencils, max deviation {worst:.1e}"))
}

fn shift_identity(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(5);
    let mesh = wedge(FRAC_PI_2, 4.0, 0.15)?;
    let f = lib(assemble(&mesh, BoundaryTag::Robin))?;
    let s = pencil(&f, 1.0);
    let tol = cfg.eig_tol;
    let opts = EigenOptions::with_tol(tol, 500);
    let mut solver = PencilSolver::new(f.m.clone());
    let base = lib(solver.smallest(&s, &opts))?.eigenvalue;
    for _ in 0..3 {
        let sigma: f64 = rng.gen_range(-5.0..5.0);
        let shifted = lib(s.combine(1.0, &f.m, sigma))?;
        let l = lib(solver.smallest(&shifted, &opts))?.eigenvalue;
        let d = (l - base - sigma).abs();
        ensure(d <= 10.0 * tol * (base.abs() + sigma.abs()).max(1.0), || {
            format!("sigma = {sigma}: defect {d:e}")
        })?;
    }
    Ok(format!("{} dofs, base eigenvalue {}", f.num_dofs(), fmt_float(base)))
}

fn normalization(cfg: &VerifyConfig) -> Outcome {
    let mesh = wedge(FRAC_PI_3, 4.0, 0.15)?;
    let f = lib(assemble(&mesh, BoundaryTag::Robin))?;
    let mut solver = PencilSolver::new(f.m.clone());
    let opts = EigenOptions::with_tol(cfg.eig_tol, 500);
    for beta in [0.0, 0.5, 2.0] {
        let r = lib(solver.smallest(&pencil(&f, beta), &opts))?;
        let n = f.m.quadratic_form(&r.eigenvector);
        ensure((n - 1.0).abs() <= 1e-10, || format!("v'Mv = {n}"))?;
        ensure(r.relative_residual <= cfg.eig_tol, || format!("residual {}", r.relative_residual))?;
    }
    Ok("v'Mv = 1, residual within tolerance".into())
}

fn coarse_specs() -> std::result::Result<Vec<(DomainSpec, Problem)>, String> {
    Ok(vec![
        (lib(DomainSpec::new(DomainKind::HalfPlane, 5.0, 0.2))?, Problem::Robin),
        (lib(DomainSpec::new(lib(DomainKind::wedge(FRAC_PI_2))?, 5.0, 0.2))?, Problem::Robin),
        (lib(DomainSpec::new(lib(DomainKind::wedge_complement(FRAC_PI_2))?, 5.0, 0.3))?, Problem::Robin),
        (lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 2.0))?, 0.1))?, Problem::Robin),
        (lib(DomainSpec::new(DomainKind::HalfPlane, 4.0, 0.2))?, Problem::Delta),
        (lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 1.0))?, 0.2))?, Problem::Delta),
    ])
}

fn sign_at_zero(cfg: &VerifyConfig) -> Outcome {
    let mut worst = f64::INFINITY;
    for (spec, problem) in coarse_specs()? {
        let v = lib(sweep_F(&spec, problem, &cfg.disc(), &[0.0]))?[0].ground_eigenvalue;
        worst = worst.min(v);
        ensure(v >= -1e-10, || format!("{} {}: F(0) = {v:e}", spec.kind, problem.name()))?;
    }
    Ok(format!("min F(0) = {worst:.2e}"))
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

fn monotone_sweep(cfg: &VerifyConfig) -> Outcome {
    for (spec, problem) in coarse_specs()? {
        let betas = match problem {
            Problem::Robin => grid(0.0, 2.0, 0.125),
            Problem::Delta => grid(0.0, 4.0, 0.25),
        };
        let pts = lib(sweep_F(&spec, problem, &cfg.disc(), &betas))?;
        let label = || format!("{} {}", spec.kind, problem.name());
        for w in pts.windows(2) {
            let (a, b) = (w[0].ground_eigenvalue, w[1].ground_eigenvalue);
            let slack = 10.0 * cfg.eig_tol * a.abs().max(1.0);
            ensure(b <= a + slack, || format!("{}: increase {a} -> {b}", label()))?;
            if a < -1e-8 {
                ensure(b < a, || format!("{}: not strictly decreasing at {}", label(), w[0].coupling))?;
            }
        }
        let crossings = pts
            .windows(2)
            .filter(|w| (w[0].ground_eigenvalue + 1.0 > 0.0) != (w[1].ground_eigenvalue + 1.0 > 0.0))
            .count();
        ensure(crossings == 1, || format!("{}: {crossings} sign changes of F + 1", label()))?;
    }
    Ok("non-increasing, strictly below zero, one crossing of -1".into())
}

fn rectangle_curve(cfg: &VerifyConfig) -> Outcome {
    let spec = lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 1.0))?, 0.1))?;
    let pts = lib(sweep_F(&spec, Problem::Robin, &cfg.disc(), &[0.1, 0.2, 0.25, 1.0]))?;
    for p in &pts {
        let bound = -4.0 * p.coupling;
        ensure(p.ground_eigenvalue <= bound + 1e-12, || {
            format!("F({}) = {} > {bound}", p.coupling, p.ground_eigenvalue)
        })?;
    }
    Ok("F(beta) <= -4 beta on the unit square".into())
}

fn bracket_invariants(cfg: &VerifyConfig) -> Outcome {
    let mut n = 0;
    for (spec, problem) in coarse_specs()?.into_iter().take(2) {
        let r = lib(solve_unit_root(&spec, problem, &cfg.disc(), cfg.tol_root))?;
        let (lo, hi) = r.bracket;
        ensure(hi - lo <= cfg.tol_root && lo <= r.root && r.root <= hi, || {
            format!("bracket {:?}, root {}", r.bracket, r.root)
        })?;
        let at = |c: f64| r.evaluations.iter().find(|e| e.0 == c).map(|e| e.1);
        if lo > 0.0 {
            let f = at(lo).ok_or("low end not evaluated")?;
            ensure(f > -1.0, || format!("F(low) = {f}"))?;
        }
        let f = at(hi).ok_or("high end not evaluated")?;
        ensure(f < -1.0, || format!("F(high) = {f}"))?;
        n += 1;
    }
    Ok(format!("{n} brackets straddle -1 with width <= tol"))
}

fn refinement_monotonicity(cfg: &VerifyConfig) -> Outcome {
    let mut out = Vec::new();
    for (kind, problem) in [
        (lib(DomainKind::wedge(FRAC_PI_2))?, Problem::Robin),
        (DomainKind::HalfPlane, Problem::Delta),
    ] {
        let spec = lib(DomainSpec::new(kind, 3.0, 0.4))?;
        let coarse = lib(solve_unit_root(&spec, problem, &cfg.disc(), cfg.tol_root))?;
        let disc = Discretization { refinements: 1, ..cfg.disc() };
        let fine = lib(solve_unit_root(&spec, problem, &disc, cfg.tol_root))?;
        ensure(fine.root <= coarse.root + cfg.tol_root, || {
            format!("{}: refined root {} > coarse {}", spec.kind, fine.root, coarse.root)
        })?;
        out.push(format!("{:.5} -> {:.5}", coarse.root, fine.root));
    }
    Ok(out.join(", "))
}

fn certified_side(cfg: &VerifyConfig) -> Outcome {
    let mut out = Vec::new();
    for (kind, exact) in [
        (DomainKind::HalfPlane, 1.0),
        (lib(DomainKind::wedge(FRAC_PI_3))?, 0.5),
        (lib(DomainKind::wedge_complement(FRAC_PI_2))?, 1.0),
    ] {
        let spec = lib(DomainSpec::new(kind, 4.0, 0.3))?;
        let r = lib(solve_unit_root(&spec, Problem::Robin, &cfg.disc(), cfg.tol_root))?;
        ensure(r.root >= exact - cfg.tol_root, || format!("{}: root {} < {exact}", spec.kind, r.root))?;
        out.push(format!("{:.4}", r.root));
    }
    Ok(format!("roots above analytic values: {}", out.join(", ")))
}

fn wedge_bound_grid(_: &VerifyConfig) -> Outcome {
    let n = 64;
    for k in 1..=n {
        let phi = PI * k as f64 / n as f64;
        let lo = lib(analytic::wedge_lower_bound(phi))?;
        let hi = lib(analytic::wedge_upper_bound(phi))?;
        let t = lib(analytic::optimal_t(phi))?;
        ensure(lo <= hi + 1e-12 && lo >= SQRT_2 - 1e-12, || format!("phi = {phi}: {lo} vs {hi}"))?;
        ensure((hi * hi - 2.0 - t).abs() <= 1e-12 * hi * hi, || format!("phi = {phi}: upper^2 != 2 + t"))?;
        let half = lib(analytic::wedge_lower_bound(phi / 2.0))?;
        ensure(half > lo, || format!("lower bound not decreasing at {phi}"))?;
    }
    let tiny = lib(analytic::wedge_lower_bound(1e-8))?;
    ensure(tiny > 1e3, || format!("lower bound at 1e-8 only {tiny}"))?;
    Ok(format!("{n} angles: sqrt 2 <= lower <= upper, upper^2 = 2 + t, lower decreasing"))
}

fn halfplane_consistency(_: &VerifyConfig) -> Outcome {
    let r = lib(analytic::lower_bound_robin(1.0, 1.0))?;
    let d = lib(analytic::lower_bound_delta(2.0, 1.0))?;
    ensure(r == d, || format!("{r} != {d}"))?;
    ensure((r - SQRT_2).abs() <= 1e-15, || format!("{r} != sqrt 2"))?;
    Ok("lower_bound_robin(1, 1) = lower_bound_delta(2, 1) = sqrt 2".into())
}

fn report_invariants(cfg: &VerifyConfig) -> Outcome {
    let disc = cfg.disc();
    let specs = [
        lib(DomainSpec::new(lib(DomainKind::wedge(FRAC_PI_2))?, 8.0, 0.1))?,
        lib(DomainSpec::new(lib(DomainKind::wedge_complement(FRAC_PI_3))?, 8.0, 0.1))?,
        lib(DomainSpec::new(DomainKind::HalfPlane, 8.0, 0.1))?,
        lib(DomainSpec::bounded(lib(DomainKind::rectangle(1.0, 2.0))?, 0.1))?,
    ];
    for spec in &specs {
        let rep = lib(analytic::build_report(spec, &disc, cfg.tol_root, Mode::Analytic))?;
        rep.check().map_err(|e| format!("{}: {e}", spec.kind))?;
        let recomputed = (1.0 + rep.beta_complement / rep.beta_domain).sqrt();
        ensure((recomputed - rep.lower_bound_robin).abs() <= 1e-12, || {
            format!("{}: stored {} vs {recomputed}", spec.kind, rep.lower_bound_robin)
        })?;
        if spec.kind == DomainKind::HalfPlane {
            ensure(rep.lower_bound_delta == Some(rep.lower_bound_robin), || {
                format!("half-plane bounds differ: {:?}", rep.lower_bound_delta)
            })?;
        }
    }
    Ok(format!("{} analytic reports consistent", specs.len()))
}

fn asymptotic_band(_: &VerifyConfig) -> Outcome {
    for theta in [0.0, 0.05, 0.1, 0.2] {
        let b = lib(analytic::asymptotic_band(theta))?;
        ensure(b.exact_lower >= b.low - 1e-3 && (b.exact_lower - b.low).abs() <= 1e-3, || {
            format!("theta = {theta}: lower {} vs band {}", b.exact_lower, b.low)
        })?;
        ensure((b.exact_upper - b.high).abs() <= 1e-2, || {
            format!("theta = {theta}: upper {} vs band {}", b.exact_upper, b.high)
        })?;
    }
    Ok("exact bounds within 1e-3 / 1e-2 of the leading terms".into())
}

fn fem_wedge_roots(cfg: &VerifyConfig) -> Outcome {
    let mut out = Vec::new();
    for phi in [FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI] {
        // The half-plane ground state is not localized at a vertex, so its
        // truncation error decays only like R^-2.
        let r = if phi >= PI {
            cfg.truncation_radius.max(12.0)
        } else {
            cfg.truncation_radius
        };
        let kind = if phi >= PI { DomainKind::HalfPlane } else { lib(DomainKind::wedge(phi))? };
        let spec = lib(DomainSpec::new(kind, r, cfg.mesh_size))?;
        let root = lib(solve_unit_root(&spec, Problem::Robin, &cfg.disc(), cfg.tol_root))?.certified_upper();
        let exact = (phi / 2.0).sin();
        let rel = (root - exact).abs() / exact;
        ensure(rel <= 0.02, || format!("phi = {phi}: root {root} vs {exact} ({:.2}%)", 100.0 * rel))?;
        out.push(format!("{:.2}%", 100.0 * rel));
    }
    Ok(format!("relative errors {}", out.join(", ")))
}

fn mirror_geometry(_: &VerifyConfig) -> Outcome {
    for phi in [FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI] {
        let mirror = lib(build_mirror_mesh(&wedge(phi, 3.0, 0.25)?))?;
        for t in mirror.num_wedge_triangles()..mirror.full.num_triangles() {
            let pre = mirror.preimage_triangle[t];
            let (a, b) = (mirror.full.signed_area(t), mirror.wedge.signed_area(pre));
            ensure((a - b).abs() <= 1e-12, || format!("phi = {phi}: area {a} vs {b}"))?;
        }
        let robin = mirror.wedge.tagged_vertices(BoundaryTag::Robin);
        let fixed = fixed_vertices(&mirror);
        ensure(robin.iter().enumerate().filter(|r| *r.1).all(|(v, _)| fixed.contains(&v)), || {
            format!("phi = {phi}: Robin vertex moved by the reflection")
        })?;
        if phi >= PI {
            for (v, &pre) in mirror.mirror_map.iter().enumerate().skip(mirror.wedge.num_vertices()) {
                let (p, q) = (mirror.full.vertices[v], mirror.wedge.vertices[pre]);
                ensure(p[0] == q[0] && p[1] == -q[1], || "half-plane mirror not (x1, -x2)".into())?;
            }
        }
    }
    Ok("unit Jacobian, fixed boundary, half-plane symmetry".into())
}

fn restriction_identity(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(6);
    let mirror = lib(build_mirror_mesh(&wedge(FRAC_PI_2, 3.0, 0.25)?))?;
    let nw = mirror.wedge.num_vertices();
    for _ in 0..100 {
        let f: Vec<f64> = (0..nw).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = lib(extend(&mirror, &f))?;
        ensure(e.restrict() == &f[..], || "restriction differs".into())?;
        ensure(e.full_coeffs.iter().zip(&mirror.mirror_map).all(|(v, &p)| *v == f[p]), || {
            "mirrored value differs from its preimage".into()
        })?;
    }
    let e = lib(extend(&mirror, &vec![1.0; nw]))?;
    ensure(e.full_coeffs.iter().all(|&v| v == 1.0), || "constant not preserved".into())?;
    Ok("100 random functions: exact restriction and mirror values".into())
}

fn norm_identities(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(7);
    let mut worst = [0.0f64; 2];
    for phi in [FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI] {
        let mirror = lib(build_mirror_mesh(&wedge(phi, 3.0, 0.3)?))?;
        let t = lib(analytic::optimal_t(phi))?;
        let n = if phi == FRAC_PI_2 { 100 } else { 20 };
        for _ in 0..n {
            let f: Vec<f64> = (0..mirror.wedge.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = lib(verify_gradient_identities(&mirror, &f))?;
            let l2 = (d.l2_full - 2.0 * d.l2_wedge).abs() / d.l2_wedge;
            let d2 = (d.d2_full - 2.0 * d.d2_wedge).abs() / d.d2_wedge;
            worst[0] = worst[0].max(l2);
            worst[1] = worst[1].max(d2);
            ensure(l2 <= 1e-10, || format!("phi = {phi}: L2 doubling defect {l2:e}"))?;
            ensure(d2 <= 1e-10, || format!("phi = {phi}: d2 doubling defect {d2:e}"))?;
            let bound = d.d1_bound(phi, t.max(f64::MIN_POSITIVE));
            let d1_mirror = d.d1_full - d.d1_wedge;
            if t > 0.0 {
                ensure(d.d1_full <= bound + 1e-8 * bound, || {
                    format!("phi = {phi}: |d1 Ef|^2 = {} > {bound}", d.d1_full)
                })?;
            } else {
                ensure((d1_mirror - d.d1_wedge).abs() <= 1e-10 * d.d1_wedge, || {
                    "half-plane d1 not doubled".to_string()
                })?;
            }
        }
    }
    Ok(format!("L2 doubling {:.1e}, d2 doubling {:.1e}, d1 inequality holds", worst[0], worst[1]))
}

fn gradient_chain_rule(cfg: &VerifyConfig) -> Outcome {
    let mut rng = cfg.rng(8);
    for phi in [FRAC_PI_2, PI] {
        let mirror = lib(build_mirror_mesh(&wedge(phi, 3.0, 0.3)?))?;
        let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let affine: Vec<f64> = mirror.wedge.vertices.iter().map(|p| a + b * p[0] + c * p[1]).collect();
        let random: Vec<f64> = (0..affine.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for f in [affine, random] {
            let d = lib(verify_gradient_identities(&mirror, &f))?;
            ensure(d.max_deviation <= 1e-10, || format!("phi = {phi}: deviation {:e}", d.max_deviation))?;
        }
    }
    Ok("mirrored gradients match the chain rule".into())
}

fn norm_sandwich(_: &VerifyConfig) -> Outcome {
    let mut out = Vec::new();
    for phi in [FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI] {
        let mesh = wedge(phi, 4.0, 0.2)?;
        let coarse = lib(discrete_operator_norm(&mesh))?;
        let fine = lib(discrete_operator_norm(&refine(&mesh)))?;
        for n in [&coarse, &fine] {
            ensure(n.value >= 1.0 && n.value <= n.upper_bound + 1e-6, || {
                format!("phi = {phi}: norm {} outside [1, {}]", n.value, n.upper_bound)
            })?;
        }
        ensure(fine.value >= coarse.value - 1e-7, || {
            format!("phi = {phi}: refined norm {} < coarse {}", fine.value, coarse.value)
        })?;
        if phi >= PI {
            ensure(fine.value >= SQRT_2 - 1e-3 && fine.value <= SQRT_2 + 1e-12, || {
                format!("half-plane norm {}", fine.value)
            })?;
        }
        out.push(format!("{:.5}/{:.5}", fine.value, fine.upper_bound));
    }
    Ok(format!("norm/bound {}", out.join(", ")))
}
