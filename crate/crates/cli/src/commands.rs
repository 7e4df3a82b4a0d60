//! The four batch commands: background, solve, verify, sweep.
//!
//! Every file is written atomically (temp + rename); a run emits a manifest
//! listing all files with content hashes. Field and CSV outputs carry no
//! timestamps, so identical configurations produce byte-identical files;
//! wall-clock timings appear only as `#` comment lines in reports, which
//! the manifest hash ignores.

use crate::config::{ConfigError, RunConfig};
use crate::manifest::Manifest;
use crate::svg::{line_chart, Series};
use ep_core::elliptic::assemble_coupled;
use ep_core::export;
use ep_core::solver::{
    verify_solution, BoundaryData, NozzleSolver, PrimitiveState, Solution,
};
use ep_core::{
    sample_background, solve_background, Background2D, BackgroundSolution, Grid2D, ScalarField,
};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    NotConverged(String),
    Regime(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Regime(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::Regime(m) => write!(f, "physics regime: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ep_core::Error> for CliError {
    fn from(e: ep_core::Error) -> Self {
        use ep_core::Error as E;
        match &e {
            E::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            E::InvalidParams(_) | E::GridMismatch(_) | E::IncompatibleBoundaryData(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Regime(e.to_string()),
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

struct RunContext {
    bg: BackgroundSolution,
    bg2: Background2D,
    grid: Grid2D,
}

fn build_background(cfg: &RunConfig) -> Result<RunContext, CliError> {
    let bg = solve_background(&cfg.params, cfg.bg_steps())?;
    let grid = Grid2D::new(cfg.n1, cfg.n2, cfg.params.length)?;
    let bg2 = sample_background(&bg, &grid)?;
    Ok(RunContext { bg, bg2, grid })
}

pub fn cmd_background(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let started = std::time::Instant::now();
    let ctx = build_background(cfg)?;
    let mut manifest = Manifest::new();

    let mut csv = Vec::new();
    export::write_background_csv(&ctx.bg, &mut csv).map_err(CliError::from)?;
    write_atomic(&out.join("background.csv"), &csv)?;
    manifest.add_bytes("background.csv", &csv);

    let series = [
        ("rho", "#1f77b4", &ctx.bg.rho),
        ("u", "#d62728", &ctx.bg.u),
        ("E", "#2ca02c", &ctx.bg.e_field),
        ("Phi0", "#9467bd", &ctx.bg.potential),
    ];
    let svg = line_chart(
        "background profiles",
        "x1",
        &series
            .iter()
            .map(|(label, color, y)| Series {
                label,
                color,
                x: &ctx.bg.x1,
                y,
            })
            .collect::<Vec<_>>(),
    );
    write_atomic(&out.join("background_profiles.svg"), svg.as_bytes())?;
    manifest.add_bytes("background_profiles.svg", svg.as_bytes());

    let (rho_min, rho_max) = ctx.bg.rho_range();
    let mut report = String::new();
    report.push_str("# background run report\n");
    let _ = writeln!(report, "command: background");
    write_params(&mut report, cfg);
    let _ = writeln!(report, "n_steps: {}", ctx.bg.n_steps());
    let _ = writeln!(report, "nu0: {}", fmt_f(ctx.bg.nu0));
    let _ = writeln!(report, "rho_min: {}", fmt_f(rho_min));
    let _ = writeln!(report, "rho_max: {}", fmt_f(rho_max));
    let _ = writeln!(report, "rho_star: {}", fmt_f(cfg.params.rho_star()));
    let _ = writeln!(report, "exit_u: {}", fmt_f(ctx.bg.exit_u()));
    let _ = writeln!(report, "exit_p: {}", fmt_f(ctx.bg.exit_p()));
    let _ = writeln!(report, "# wall_time_ms: {}", started.elapsed().as_millis());
    write_atomic(&out.join("run_report.txt"), report.as_bytes())?;
    manifest.add_report("run_report.txt", &report);

    write_atomic(&out.join("manifest.txt"), manifest.render().as_bytes())?;
    Ok(())
}

fn write_params(report: &mut String, cfg: &RunConfig) {
    let p = &cfg.params;
    let _ = writeln!(report, "grid: {}x{}", cfg.n1, cfg.n2);
    for (k, v) in [
        ("j0", p.j0),
        ("s0", p.s0),
        ("b0", p.b0),
        ("rho0", p.rho0),
        ("e0", p.e0),
        ("length", p.length),
        ("gamma", p.gamma),
        ("p_hat", p.p_hat),
        ("c_v", p.c_v),
        ("a_phi", cfg.amplitudes.potential),
        ("a_p", cfg.amplitudes.pressure),
        ("a_S", cfg.amplitudes.entropy),
        ("a_B", cfg.amplitudes.bernoulli),
        ("a_b", cfg.amplitudes.charge),
    ] {
        let _ = writeln!(report, "{k}: {}", fmt_f(v));
    }
}

fn field_files(sol: &Solution) -> Vec<(&'static str, &ScalarField)> {
    vec![
        ("rho", &sol.primitives.rho),
        ("u", &sol.primitives.u),
        ("v", &sol.primitives.v),
        ("p", &sol.primitives.p),
        ("Phi", &sol.primitives.potential),
        ("S", &sol.primitives.entropy),
        ("K", &sol.primitives.invariant),
        ("Psi", &sol.potentials.elec),
        ("phi_pert", &sol.potentials.phi),
        ("psi_stream", &sol.potentials.stream),
    ]
}

/// Run the full solve and write all artifacts. Returns the solution for
/// callers that tabulate across runs.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<Solution, CliError> {
    let started = std::time::Instant::now();
    let ctx = build_background(cfg)?;
    let bd = BoundaryData::build(&ctx.bg2, &ctx.grid, &cfg.amplitudes)?;
    let mut solver = NozzleSolver::new(ctx.bg2, bd, cfg.solver.clone())?;
    let sol = solver.outer_iterate(None)?;
    let mut manifest = Manifest::new();

    for (name, field) in field_files(&sol) {
        let mut csv = Vec::new();
        export::write_field_csv(field, &mut csv).map_err(CliError::from)?;
        let rel = format!("fields/{name}.csv");
        write_atomic(&out.join(&rel), &csv)?;
        manifest.add_bytes(&rel, &csv);

        let mut pgm = Vec::new();
        let mapping = export::write_field_pgm(field, &mut pgm).map_err(CliError::from)?;
        let rel_pgm = format!("heatmaps/{name}.pgm");
        write_atomic(&out.join(&rel_pgm), &pgm)?;
        manifest.add_bytes(&rel_pgm, &pgm);
        let mut sidecar = Vec::new();
        export::write_pgm_sidecar(mapping, &format!("{name}.pgm"), &mut sidecar)
            .map_err(CliError::from)?;
        let rel_sidecar = format!("heatmaps/{name}.pgm.txt");
        write_atomic(&out.join(&rel_sidecar), &sidecar)?;
        manifest.add_bytes(&rel_sidecar, &sidecar);
    }

    let mut history = String::from("sweep,residual,inner_sweeps,linear_iterations\n");
    for (k, resid) in sol.report.residual_history.iter().enumerate() {
        let inner = &sol.report.inner_reports[k];
        let _ = writeln!(
            history,
            "{},{},{},{}",
            k + 1,
            fmt_f(*resid),
            inner.sweeps,
            inner.linear_iterations
        );
    }
    write_atomic(&out.join("residual_history.csv"), history.as_bytes())?;
    manifest.add_bytes("residual_history.csv", history.as_bytes());

    if cfg.dump_system {
        let zero_f = ep_core::VectorField::zeros(&ctx.grid);
        let zero_s = ScalarField::zeros(&ctx.grid);
        let spec = ep_core::elliptic::LinearSystemSpec {
            coeffs: &solver.coeffs,
            f: &zero_f,
            f1: &zero_s,
            g: vec![0.0; ctx.grid.n2() + 1],
            psi_bd: solver.boundary.psi_bd.clone(),
            wall_flux: None,
            coercivity_pairs: 0,
            coercivity_seed: cfg.seed,
        };
        let sys = assemble_coupled(&spec)?;
        let mut mm = Vec::new();
        sys.matrix()
            .write_matrix_market(&mut mm)
            .map_err(CliError::from)?;
        write_atomic(&out.join("coupled_system.mtx"), &mm)?;
        manifest.add_bytes("coupled_system.mtx", &mm);
    }

    let report = render_solve_report(cfg, &sol, started.elapsed());
    write_atomic(&out.join("run_report.txt"), report.as_bytes())?;
    manifest.add_report("run_report.txt", &report);

    write_atomic(&out.join("manifest.txt"), manifest.render().as_bytes())?;
    Ok(sol)
}

fn render_solve_report(cfg: &RunConfig, sol: &Solution, elapsed: std::time::Duration) -> String {
    let mut report = String::new();
    report.push_str("# solve run report (timings in # lines are excluded from the hash)\n");
    let _ = writeln!(report, "command: solve");
    write_params(&mut report, cfg);
    let r = &sol.report;
    let _ = writeln!(report, "sigma: {}", fmt_f(r.sigma));
    let _ = writeln!(report, "converged: {}", r.converged);
    let _ = writeln!(report, "outer_sweeps: {}", r.outer_sweeps);
    let _ = writeln!(report, "deviation_w: {}", fmt_f(r.deviation_w));
    let _ = writeln!(report, "deviation_u: {}", fmt_f(r.deviation_u));
    let _ = writeln!(report, "deviation_w_sup: {}", fmt_f(r.deviation_w_sup));
    let _ = writeln!(report, "deviation_u_sup: {}", fmt_f(r.deviation_u_sup));
    let _ = writeln!(report, "theta_final: {}", fmt_f(r.theta_final));
    let _ = writeln!(report, "growth_flagged: {}", r.growth_flagged);
    let _ = writeln!(report, "flux_drift_max: {}", fmt_f(r.flux_drift_max));
    let _ = writeln!(report, "clamped_nodes_max: {}", r.clamped_nodes_max);
    let _ = writeln!(report, "linear_iterations: {}", r.linear_iterations);
    let _ = writeln!(report, "smooth_inlet: {}", r.smooth_inlet);
    if let Some(nu3) = r.coercivity_nu3 {
        let _ = writeln!(report, "coercivity_nu3: {}", fmt_f(nu3));
    }
    let _ = writeln!(report, "min_u: {}", fmt_f(sol.primitives.min_u));
    let _ = writeln!(report, "min_rho: {}", fmt_f(sol.primitives.min_rho));
    let _ = writeln!(
        report,
        "positive_axial_velocity: {}",
        sol.primitives.positive_axial_velocity
    );
    for (key, value) in sol.residuals().lines() {
        let _ = writeln!(report, "{key}: {}", fmt_f(value));
    }
    let _ = writeln!(report, "# wall_time_ms: {}", elapsed.as_millis());
    report
}

/// Recompute the verification residuals from previously dumped fields.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ctx = build_background(cfg)?;
    let bd = BoundaryData::build(&ctx.bg2, &ctx.grid, &cfg.amplitudes)?;
    let sc = ep_core::eos::StateConstants::from(&cfg.params);

    let load = |name: &str| -> Result<ScalarField, CliError> {
        let path = out.join("fields").join(format!("{name}.csv"));
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        export::read_field_csv(&ctx.grid, &text).map_err(CliError::from)
    };
    let rho = load("rho")?;
    let u = load("u")?;
    let v = load("v")?;
    let p = load("p")?;
    let potential = load("Phi")?;
    let entropy = load("S")?;
    let invariant = load("K")?;

    let mut bernoulli = ScalarField::zeros(&ctx.grid);
    let mut min_u = f64::INFINITY;
    let mut min_rho = f64::INFINITY;
    let mut subsonic_margin = f64::INFINITY;
    for (i1, i2) in ctx.grid.nodes() {
        let speed_sq = u.at(i1, i2).powi(2) + v.at(i1, i2).powi(2);
        bernoulli.set(
            i1,
            i2,
            0.5 * speed_sq + sc.enthalpy(rho.at(i1, i2), entropy.at(i1, i2)),
        );
        min_u = min_u.min(u.at(i1, i2));
        min_rho = min_rho.min(rho.at(i1, i2));
        subsonic_margin = subsonic_margin
            .min(sc.sound_speed_sq(rho.at(i1, i2), entropy.at(i1, i2)) - speed_sq);
    }
    let ps = PrimitiveState {
        rho,
        u,
        v,
        p,
        potential,
        entropy,
        invariant,
        bernoulli,
        min_u,
        min_rho,
        subsonic_margin,
        positive_axial_velocity: min_u > 0.0,
        residuals: None,
    };
    let residuals = verify_solution(&ps, &bd, &sc);

    let mut report = String::new();
    report.push_str("# verification report (recomputed from dumped fields)\n");
    let _ = writeln!(report, "command: verify");
    write_params(&mut report, cfg);
    let _ = writeln!(report, "min_u: {}", fmt_f(min_u));
    let _ = writeln!(report, "min_rho: {}", fmt_f(min_rho));
    let _ = writeln!(report, "positive_axial_velocity: {}", min_u > 0.0);
    for (key, value) in residuals.lines() {
        let _ = writeln!(report, "{key}: {}", fmt_f(value));
    }
    write_atomic(&out.join("verify_report.txt"), report.as_bytes())?;
    let mut manifest = Manifest::new();
    manifest.add_report("verify_report.txt", &report);
    write_atomic(&out.join("verify_manifest.txt"), manifest.render().as_bytes())?;
    Ok(())
}

/// Solve once per amplitude and tabulate deviation norms against a.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    if cfg.sweep_amplitudes.is_empty() {
        return Err(CliError::Config(
            "sweep requires a non-empty sweep_amplitudes list".into(),
        ));
    }
    let mut rows = Vec::new();
    // TODO: amplitudes are independent and could run in parallel; each
    // sub-run is already deterministic on its own
    for &a in &cfg.sweep_amplitudes {
        let mut run_cfg = cfg.clone();
        run_cfg.amplitudes = cfg.sweep_channel.amplitudes(a);
        let dir: PathBuf = out.join(format!("{}_a_{a}", cfg.sweep_channel.name()));
        let sol = cmd_solve(&run_cfg, &dir)?;
        rows.push((
            a,
            sol.report.sigma,
            sol.report.deviation_w,
            sol.report.deviation_u,
        ));
    }
    let mut summary = String::from(
        "amplitude,sigma,deviation_w,deviation_u,deviation_total,ratio_to_next\n",
    );
    for (k, &(a, sigma, dw, du)) in rows.iter().enumerate() {
        let total = dw + du;
        let ratio = rows.get(k + 1).map(|&(_, _, nw, nu)| total / (nw + nu));
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            a,
            fmt_f(sigma),
            fmt_f(dw),
            fmt_f(du),
            fmt_f(total),
            ratio.map(|r| format!("{r:.6}")).unwrap_or_default()
        );
    }
    write_atomic(&out.join("sweep_summary.csv"), summary.as_bytes())?;
    let mut manifest = Manifest::new();
    manifest.add_bytes("sweep_summary.csv", summary.as_bytes());
    write_atomic(&out.join("manifest.txt"), manifest.render().as_bytes())?;
    Ok(())
}
