use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ale_supg::assembly::{
    apply_dirichlet, assemble_rhs, assemble_supg_form, dirichlet_values, l2_error_sq,
    AssemblyContext,
};
use ale_supg::cases::{
    benchmark_problem, generate_beam_mesh, moving_square_case, moving_square_motion,
    steady_case, BeamMotion, BeamMotionMode, ExactFn,
};
use ale_supg::config::RunConfig;
use ale_supg::diagnostics::{line_sample, write_line_csv, write_step_csv};
use ale_supg::error::{Error, Result};
use ale_supg::linalg::solve;
use ale_supg::mesh::{unit_square_mesh, Mesh};
use ale_supg::problem::ProblemSpec;
use ale_supg::space::{build_function_space, FunctionSpace};
use ale_supg::stab::StabilizationConfig;
use ale_supg::timestepping::{run, MeshMotion, RunOptions};
use ale_supg::vtk::write_snapshot;

#[derive(Parser)]
#[command(name = "ale-supg", about = "SUPG finite elements on moving meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file with key = value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One full simulation with CSV, line-sample and field output.
    Run(ConfigArgs),
    /// Full runs over a list of stabilization strengths per scheme.
    SweepDelta {
        #[command(flatten)]
        common: ConfigArgs,
        /// Comma-separated delta0 values.
        #[arg(long = "delta0-list", default_value = "0.5,1,5,10")]
        delta0_list: String,
        /// Comma-separated schemes.
        #[arg(long, default_value = "euler,cn")]
        schemes: String,
        /// Run the sweep entries as concurrent child processes.
        #[arg(long)]
        parallel: bool,
    },
    /// Temporal or spatial order verification on manufactured cases.
    Convergence {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long, default_value = "temporal")]
        mode: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Mesh statistics (generated or loaded).
    MeshInfo(ConfigArgs),
}

fn build_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for s in &args.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{s}'")))?;
        config.apply(k.trim(), v.trim())?;
    }
    if let Some(v) = &args.case {
        config.apply("case", v)?;
    }
    if let Some(v) = &args.scheme {
        config.apply("time.scheme", v)?;
    }
    if let Some(v) = args.delta0 {
        config.apply("stab.delta0", &v.to_string())?;
    }
    if let Some(v) = args.dt {
        config.apply("time.dt", &v.to_string())?;
    }
    if let Some(v) = args.t_end {
        config.apply("time.T", &v.to_string())?;
    }
    if let Some(v) = &args.out {
        config.out_dir = v.clone();
    }
    if let Some(v) = &args.mesh {
        config.mesh_file = Some(v.clone());
    }
    config.validate()?;
    Ok(config)
}

struct CaseSetup {
    mesh: Mesh,
    problem: ProblemSpec,
    motion: Box<dyn MeshMotion>,
    bounds: [f64; 2],
    exact: Option<ExactFn>,
    /// (y0, x range) of the line probe.
    line: (f64, [f64; 2]),
    /// Coercivity constant used by the stability monitors.
    mu: f64,
}

fn setup_case(config: &RunConfig) -> Result<CaseSetup> {
    match config.case.as_str() {
        "beam" => {
            let mesh = match &config.mesh_file {
                Some(path) => {
                    let file = std::fs::File::open(path).map_err(|e| {
                        Error::Config(format!("cannot read mesh file {}: {e}", path.display()))
                    })?;
                    Mesh::read(std::io::BufReader::new(file))?
                }
                None => generate_beam_mesh(&config.beam)?,
            };
            let mode = if config.beam_motion == "elastic" {
                BeamMotionMode::Elastic(ale_supg::ale::ElasticParams {
                    stiffen_small_cells: config.beam_stiffen,
                    ..Default::default()
                })
            } else {
                BeamMotionMode::AnalyticCutoff
            };
            Ok(CaseSetup {
                mesh,
                problem: benchmark_problem(),
                motion: Box::new(BeamMotion { mode }),
                bounds: [0.0, 1.0],
                exact: None,
                line: (0.0, [-5.0, 18.0]),
                mu: config.mu,
            })
        }
        "moving_square" => {
            let case = moving_square_case(1e-3, [1.0, 0.5], 1.0);
            Ok(CaseSetup {
                mesh: unit_square_mesh(config.square_n)?,
                problem: case.problem,
                motion: Box::new(moving_square_motion()),
                bounds: [0.0, 1.0],
                exact: Some(case.exact),
                line: (0.5, [0.0, 1.0]),
                mu: 1.0,
            })
        }
        other => Err(Error::Config(format!("unknown case '{other}'"))),
    }
}

fn stab_config(config: &RunConfig, mu: f64) -> StabilizationConfig {
    let mut s = StabilizationConfig::for_degree(config.delta0, config.degree);
    s.mu = mu.max(config.mu);
    if let Some(c) = config.c_inv {
        s.c_inv = c;
    }
    s.dt_cap_enabled = config.dt_cap;
    s
}

struct RunSummary {
    max_undershoot: f64,
    max_overshoot: f64,
    final_min: f64,
    final_max: f64,
    dt_warnings: usize,
    final_l2_error: Option<f64>,
    wall_seconds: f64,
}

fn execute_run(config: &RunConfig, out_dir: &PathBuf) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let case = setup_case(config)?;
    let space: FunctionSpace = build_function_space(&case.mesh, config.degree)?;
    let stab = stab_config(config, case.mu);
    stab.validate()?;
    let options = RunOptions {
        scheme: config.scheme,
        dt: config.dt,
        t_end: config.t_end,
        solver: config.solver(),
        bounds: case.bounds,
        output_every: config.output_every,
    };
    let mesh = &case.mesh;
    let snap_dir = out_dir.clone();
    let mut snapshot_error: Option<Error> = None;
    let mut write_snap = |s: &ale_supg::timestepping::Snapshot| -> Result<()> {
        let path = snap_dir.join(format!("u_{:05}.vtk", s.step));
        if let Err(e) = write_snapshot(&path, mesh, s.coords, s.velocity, s.u, &format!("t = {}", s.t)) {
            snapshot_error = Some(e);
        }
        Ok(())
    };
    let result = run(
        mesh,
        &space,
        &case.problem,
        case.motion.as_ref(),
        Some(&stab),
        &options,
        if config.output_every > 0 {
            Some(&mut write_snap)
        } else {
            None
        },
    )?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    write_step_csv(&out_dir.join("steps.csv"), &result.records)?;
    let (y0, [x_lo, x_hi]) = case.line;
    let samples = line_sample(mesh, &space, &result.coords, &result.u, y0, x_lo, x_hi, 600)?;
    write_line_csv(&out_dir.join(format!("line_y{y0}.csv")), &samples)?;

    let mut max_under = 0.0f64;
    let mut max_over = 0.0f64;
    for r in &result.records {
        max_under = max_under.max(r.undershoot);
        max_over = max_over.max(r.overshoot);
    }
    let (fmin, fmax) = result
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let final_l2_error = match &case.exact {
        Some(exact) => {
            let ctx = AssemblyContext::new(mesh, &space)?;
            let exact = exact.clone();
            let t = config.dt * result.records.len() as f64;
            Some(
                l2_error_sq(&ctx, &result.coords, &result.u, move |x| exact(t, x))?
                    .max(0.0)
                    .sqrt(),
            )
        }
        None => None,
    };
    let summary = RunSummary {
        max_undershoot: max_under,
        max_overshoot: max_over,
        final_min: fmin,
        final_max: fmax,
        dt_warnings: result.dt_warnings,
        final_l2_error,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let mut text = config.resolved();
    text.push_str(&format!("result.final_u_min = {:e}\n", summary.final_min));
    text.push_str(&format!("result.final_u_max = {:e}\n", summary.final_max));
    text.push_str(&format!(
        "result.max_undershoot = {:e}\n",
        summary.max_undershoot
    ));
    text.push_str(&format!(
        "result.max_overshoot = {:e}\n",
        summary.max_overshoot
    ));
    text.push_str(&format!("result.dt_warnings = {}\n", summary.dt_warnings));
    if let Some(e) = summary.final_l2_error {
        text.push_str(&format!("result.final_l2_error = {e:e}\n"));
    }
    text.push_str(&format!(
        "result.wall_seconds = {:.3}\n",
        summary.wall_seconds
    ));
    std::fs::write(out_dir.join("summary.txt"), text)?;
    Ok(summary)
}

fn cmd_run(args: &ConfigArgs) -> Result<()> {
    let config = build_config(args)?;
    let summary = execute_run(&config, &config.out_dir)?;
    println!(
        "done: undershoot {:.4e}, overshoot {:.4e}, dt warnings {}, {:.2}s",
        summary.max_undershoot, summary.max_overshoot, summary.dt_warnings, summary.wall_seconds
    );
    if let Some(e) = summary.final_l2_error {
        println!("final L2 error vs exact solution: {e:.6e}");
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items: std::result::Result<Vec<T>, _> =
        s.split(',').map(|x| x.trim().parse::<T>()).collect();
    items.map_err(|_| Error::Config(format!("invalid {what} list '{s}'")))
}

fn cmd_sweep(args: &ConfigArgs, delta0_list: &str, schemes: &str, parallel: bool) -> Result<()> {
    let base = build_config(args)?;
    let delta0s: Vec<f64> = parse_list(delta0_list, "delta0")?;
    let schemes: Vec<String> = schemes.split(',').map(|s| s.trim().to_string()).collect();
    if delta0s.is_empty() || schemes.is_empty() {
        return Err(Error::Config("sweep lists must be nonempty".into()));
    }
    std::fs::create_dir_all(&base.out_dir)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for scheme in &schemes {
        for &d0 in &delta0s {
            let mut config = base.clone();
            config.apply("time.scheme", scheme)?;
            config.delta0 = d0;
            let sub = base.out_dir.join(format!("{scheme}_delta{d0}"));
            entries.push((scheme.clone(), d0, config, sub));
        }
    }
    if parallel {
        let exe = std::env::current_exe()?;
        let mut children = Vec::new();
        for (scheme, d0, config, sub) in &entries {
            std::fs::create_dir_all(sub)?;
            let mut cfg = config.clone();
            cfg.out_dir = sub.clone();
            let cfg_path = sub.join("run.conf");
            std::fs::write(&cfg_path, cfg.resolved())?;
            let child = std::process::Command::new(&exe)
                .arg("run")
                .arg("--config")
                .arg(&cfg_path)
                .spawn()?;
            children.push((scheme.clone(), *d0, sub.clone(), child));
        }
        for (scheme, d0, sub, mut child) in children {
            let status = child.wait()?;
            if !status.success() {
                return Err(Error::Config(format!(
                    "sweep entry {scheme} delta0={d0} failed"
                )));
            }
            let summary = std::fs::read_to_string(sub.join("summary.txt"))?;
            let get = |key: &str| -> f64 {
                summary
                    .lines()
                    .find_map(|l| l.strip_prefix(&format!("{key} = ")))
                    .and_then(|v| v.trim().parse().ok())
                    .unwrap_or(f64::NAN)
            };
            rows.push((scheme, d0, get("result.max_undershoot"), get("result.max_overshoot")));
        }
    } else {
        for (scheme, d0, config, sub) in entries {
            let mut cfg = config;
            cfg.out_dir = sub.clone();
            let summary = execute_run(&cfg, &sub)?;
            rows.push((scheme, d0, summary.max_undershoot, summary.max_overshoot));
        }
    }
    let mut csv = String::from("scheme,delta0,max_undershoot,max_overshoot\n");
    for (scheme, d0, under, over) in &rows {
        csv.push_str(&format!("{scheme},{d0},{under:e},{over:e}\n"));
        println!("{scheme:>6} delta0={d0:<6} undershoot {under:.4e} overshoot {over:.4e}");
    }
    std::fs::write(base.out_dir.join("sweep.csv"), csv)?;
    Ok(())
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

fn cmd_convergence(args: &ConfigArgs, mode: &str, levels: usize) -> Result<()> {
    if levels < 3 {
        return Err(Error::Config("convergence needs at least 3 levels".into()));
    }
    let config = build_config(args)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let mut csv = String::from("level,h_or_dt,error,order\n");
    let mut errors = Vec::new();
    let mut params = Vec::new();
    match mode {
        "temporal" => {
            let case = moving_square_case(1e-3, [1.0, 0.5], 1.0);
            let mesh = unit_square_mesh(config.square_n)?;
            let space = build_function_space(&mesh, config.degree)?;
            let motion = moving_square_motion();
            let ctx = AssemblyContext::new(&mesh, &space)?;
            for level in 0..levels {
                let dt = config.dt / (1 << level) as f64;
                let options = RunOptions {
                    scheme: config.scheme,
                    dt,
                    t_end: config.t_end,
                    solver: config.solver(),
                    bounds: [0.0, 1.0],
                    output_every: 0,
                };
                let out = run(&mesh, &space, &case.problem, &motion, None, &options, None)?;
                let exact = case.exact.clone();
                let t = dt * out.records.len() as f64;
                let err = l2_error_sq(&ctx, &out.coords, &out.u, move |x| exact(t, x))?
                    .max(0.0)
                    .sqrt();
                errors.push(err);
                params.push(dt);
            }
        }
        "spatial" => {
            let case = steady_case(1.0, [1.0, 0.5], 1.0);
            for level in 0..levels {
                let n = 8 << level;
                let mesh = unit_square_mesh(n)?;
                let space = build_function_space(&mesh, config.degree)?;
                let ctx = AssemblyContext::new(&mesh, &space)?;
                let mut a =
                    assemble_supg_form(&ctx, &mesh.nodes, None, &case.problem, None, 0.0, 1.0)?;
                let mut rhs =
                    assemble_rhs(&ctx, &mesh.nodes, None, &case.problem, None, 0.0, 1.0)?;
                let bc = dirichlet_values(&space, &mesh.nodes, &case.problem, 0.0);
                apply_dirichlet(&mut a, &mut rhs, &bc);
                let (u, _) = solve(&a, &rhs, &config.solver(), None)?;
                let exact = case.exact.clone();
                let err = l2_error_sq(&ctx, &mesh.nodes, &u, move |x| exact(0.0, x))?
                    .max(0.0)
                    .sqrt();
                errors.push(err);
                params.push(1.0 / n as f64);
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown convergence mode '{other}' (temporal or spatial)"
            )))
        }
    }
    let ord = orders(&errors);
    for (level, (err, p)) in errors.iter().zip(&params).enumerate() {
        let o = if level == 0 {
            "".to_string()
        } else {
            format!("{:.3}", ord[level - 1])
        };
        csv.push_str(&format!("{level},{p:e},{err:e},{o}\n"));
        println!("level {level}: param {p:.4e} error {err:.6e} order {o}");
    }
    std::fs::write(config.out_dir.join("convergence.csv"), csv)?;
    Ok(())
}

fn cmd_mesh_info(args: &ConfigArgs) -> Result<()> {
    let config = build_config(args)?;
    let case = setup_case(&config)?;
    let mesh = &case.mesh;
    let mut h_min = f64::INFINITY;
    let mut h_max = 0.0f64;
    let mut area = 0.0;
    for k in 0..mesh.n_cells() {
        let h = ale_supg::mesh::cell_diameter(&mesh.cells, &mesh.nodes, k);
        h_min = h_min.min(h);
        h_max = h_max.max(h);
        area += ale_supg::mesh::cell_area(&mesh.cells, &mesh.nodes, k);
    }
    println!("nodes: {}", mesh.n_nodes());
    println!("cells: {}", mesh.n_cells());
    println!("boundary edges: {}", mesh.boundary_edges.len());
    for tag in [
        ale_supg::mesh::BoundaryTag::Dirichlet,
        ale_supg::mesh::BoundaryTag::Neumann,
        ale_supg::mesh::BoundaryTag::Solid,
    ] {
        let count = mesh.boundary_edges.iter().filter(|e| e.tag == tag).count();
        println!("  {}: {count}", tag.as_str());
    }
    println!("h min: {h_min:.6e}");
    println!("h max: {h_max:.6e}");
    println!("total area: {area:.6e}");
    Ok(())
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        Error::Io(_) | Error::MeshFormat(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ALE_SUPG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepDelta {
            common,
            delta0_list,
            schemes,
            parallel,
        } => cmd_sweep(common, delta0_list, schemes, *parallel),
        Command::Convergence {
            common,
            mode,
            levels,
        } => cmd_convergence(common, mode, *levels),
        Command::MeshInfo(args) => cmd_mesh_info(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
