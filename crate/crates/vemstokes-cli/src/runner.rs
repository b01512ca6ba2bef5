//! Experiment drivers: the four canned studies plus ad-hoc subcommands.

use crate::spec::ExperimentSpec;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use vemstokes::adapt::{adaptive_loop_with, fit_order, fit_slope, AdaptConfig, AdaptHistory};
use vemstokes::estimator::global_estimate;
use vemstokes::io::{write_mesh_text, VtkWriter};
use vemstokes::mesh::{generate, Domain, Family, PolyMesh};
use vemstokes::system::{
    assemble, solve_eigs, spectral_gap_report, Bc, EigenPair, EigenSolution, SaddleSystem,
    SolverConfig,
};

pub type AnyError = Box<dyn std::error::Error + Send + Sync>;
type AnyResult<T> = Result<T, AnyError>;

pub struct RunArgs {
    pub test: String,
    pub families: Vec<String>,
    pub n: Vec<usize>,
    pub alpha: Vec<f64>,
    pub bc: Option<Bc>,
    pub k: Option<usize>,
    pub seed: u64,
    pub nu: f64,
    pub jump_nu: bool,
    pub out: PathBuf,
}

pub fn run(args: RunArgs) -> AnyResult<()> {
    fs::create_dir_all(&args.out)?;
    let started = Instant::now();
    let outcome = match args.test.as_str() {
        "1" | "test1" => test1(&args),
        "2" | "test2" => test2(&args),
        "3-sweep" | "test3-sweep" => test3_sweep(&args),
        "3-order" | "test3-order" => test3_order(&args),
        "4" | "test4" => test4(&args),
        other => Err(format!("unknown test `{other}` (use 1, 2, 3-sweep, 3-order, 4)").into()),
    };
    let log = args.out.join("run.log");
    match &outcome {
        Ok(files) => {
            let mut msg = format!(
                "test {} completed in {:.1} s\n",
                args.test,
                started.elapsed().as_secs_f64()
            );
            for f in files {
                let _ = writeln!(msg, "wrote {}", f.display());
            }
            fs::write(log, msg)?;
        }
        Err(e) => {
            // partial outputs stay on disk; the marker records the failure
            fs::write(args.out.join("FAILED"), format!("{e}\n"))?;
            fs::write(log, format!("test {} failed: {e}\n", args.test))?;
        }
    }
    outcome.map(|_| ())
}

fn solver_config(nu: f64, alpha: f64, bc: Bc) -> SolverConfig {
    SolverConfig {
        nu,
        alpha,
        bc,
        ..SolverConfig::default()
    }
}

fn spectrum_csv_header(k: usize) -> String {
    let mut s = String::from("family,row");
    for i in 1..=k {
        let _ = write!(s, ",lambda{i}");
    }
    s.push_str(",config\n");
    s
}

fn push_row(out: &mut String, family: &str, row: &str, values: &[f64], hash: &str) {
    let _ = write!(out, "{family},{row}");
    for v in values {
        let _ = write!(out, ",{v:.9e}");
    }
    let _ = writeln!(out, ",{hash}");
}

/// Convergence table on one domain: eigenvalues per resolution plus fitted
/// order and extrapolation per mode.
fn convergence_table(
    domain: Domain,
    families: &[String],
    ns: &[usize],
    k: usize,
    spec: &ExperimentSpec,
) -> AnyResult<String> {
    let grid: Vec<(String, usize)> = families
        .iter()
        .flat_map(|f| ns.iter().map(move |&n| (f.clone(), n)))
        .collect();
    let solved: Vec<AnyResult<(String, usize, Vec<f64>)>> = grid
        .par_iter()
        .map(|(fam, n)| {
            let family: Family = fam.parse::<Family>().map_err(AnyError::from)?;
            let mesh = generate(domain, family, *n, spec.seed).map_err(AnyError::from)?;
            let cfg = solver_config(spec.nu, spec.alpha[0], spec.bc);
            let sys = assemble(&mesh, &cfg).map_err(AnyError::from)?;
            let sol = solve_eigs(&sys, k, 0.0).map_err(AnyError::from)?;
            Ok((fam.clone(), *n, sol.lambdas()))
        })
        .collect();

    let hash = spec.config_hash();
    let mut csv = spectrum_csv_header(k);
    for fam in families {
        let mut series: Vec<(usize, Vec<f64>)> = Vec::new();
        for item in &solved {
            match item {
                Ok((f, n, l)) if f == fam => series.push((*n, l.clone())),
                Ok(_) => {}
                Err(e) => return Err(format!("{e}").into()),
            }
        }
        series.sort_by_key(|s| s.0);
        for (n, lambdas) in &series {
            push_row(&mut csv, fam, &format!("N={n}"), lambdas, &hash);
        }
        if series.len() >= 3 {
            let h: Vec<f64> = series.iter().map(|(n, _)| 1.0 / *n as f64).collect();
            let mut orders = Vec::with_capacity(k);
            let mut extr = Vec::with_capacity(k);
            for mode in 0..k {
                let l: Vec<f64> = series.iter().map(|(_, ls)| ls[mode]).collect();
                let fit = fit_order(&h, &l).map_err(AnyError::from)?;
                orders.push(fit.rate);
                extr.push(fit.extrapolated);
            }
            push_row(&mut csv, fam, "order", &orders, &hash);
            push_row(&mut csv, fam, "extr", &extr, &hash);
        }
    }
    Ok(csv)
}

fn test1(args: &RunArgs) -> AnyResult<Vec<PathBuf>> {
    let families = if args.families.is_empty() {
        ["t1", "t2", "t3", "t4", "t5"].map(String::from).to_vec()
    } else {
        args.families.clone()
    };
    let ns = if args.n.is_empty() {
        vec![16, 32, 64]
    } else {
        args.n.clone()
    };
    let k = args.k.unwrap_or(4);
    let spec = ExperimentSpec {
        test: "1".into(),
        families: families.clone(),
        n: ns.clone(),
        alpha: if args.alpha.is_empty() { vec![1.0] } else { args.alpha.clone() },
        bc: args.bc.unwrap_or(Bc::Clamped),
        k,
        seed: args.seed,
        nu: args.nu,
        jump_nu: args.jump_nu,
    };
    let csv = convergence_table(Domain::Square, &families, &ns, k, &spec)?;
    let path = args.out.join("test1.csv");
    fs::write(&path, csv)?;
    Ok(vec![path])
}

fn test2(args: &RunArgs) -> AnyResult<Vec<PathBuf>> {
    let families = if args.families.is_empty() {
        vec!["t2".to_string()]
    } else {
        args.families.clone()
    };
    let ns = if args.n.is_empty() {
        vec![16, 32, 64]
    } else {
        args.n.clone()
    };
    let k = args.k.unwrap_or(5);
    let spec = ExperimentSpec {
        test: "2".into(),
        families: families.clone(),
        n: ns.clone(),
        alpha: if args.alpha.is_empty() { vec![1.0] } else { args.alpha.clone() },
        bc: args.bc.unwrap_or(Bc::Clamped),
        k,
        seed: args.seed,
        nu: args.nu,
        jump_nu: args.jump_nu,
    };
    let csv = convergence_table(Domain::Disk, &families, &ns, k, &spec)?;
    let path = args.out.join("test2.csv");
    fs::write(&path, csv)?;
    Ok(vec![path])
}

fn test3_sweep(args: &RunArgs) -> AnyResult<Vec<PathBuf>> {
    let families = if args.families.is_empty() {
        ["t1", "t2", "t5"].map(String::from).to_vec()
    } else {
        args.families.clone()
    };
    let n = *args.n.first().unwrap_or(&11);
    let alphas = if args.alpha.is_empty() {
        vec![0.1, 0.2, 1.0, 5.0, 10.0]
    } else {
        args.alpha.clone()
    };
    let k = args.k.unwrap_or(10);
    let spec = ExperimentSpec {
        test: "3-sweep".into(),
        families: families.clone(),
        n: vec![n],
        alpha: alphas.clone(),
        bc: args.bc.unwrap_or(Bc::MixedBottomClamped),
        k,
        seed: args.seed,
        nu: args.nu,
        jump_nu: args.jump_nu,
    };
    let hash = spec.config_hash();

    let mut csv = String::from("family,alpha");
    for i in 1..=k {
        let _ = write!(csv, ",lambda{i}");
    }
    csv.push_str(",suspect_modes,config\n");

    for fam in &families {
        let family: Family = fam.parse::<Family>()?;
        let mesh = generate(Domain::UnitSquare, family, n, spec.seed)?;
        let spectra: Vec<AnyResult<Vec<f64>>> = alphas
            .par_iter()
            .map(|&alpha| {
                let cfg = solver_config(spec.nu, alpha, spec.bc);
                let sys = assemble(&mesh, &cfg).map_err(AnyError::from)?;
                Ok(solve_eigs(&sys, k, 0.0).map_err(AnyError::from)?.lambdas())
            })
            .collect();
        let spectra: Vec<Vec<f64>> = spectra.into_iter().collect::<AnyResult<_>>()?;
        // reference spectrum at the stiffest alpha of the sweep
        let reference = &spectra[spectra.len() - 1];
        for (ai, alpha) in alphas.iter().enumerate() {
            let lambdas = &spectra[ai];
            let suspects: Vec<String> = lambdas
                .iter()
                .enumerate()
                .filter(|(_, &l)| {
                    !reference
                        .iter()
                        .any(|&r| (l - r).abs() <= 0.02 * r.abs().max(1e-300))
                })
                .map(|(i, _)| (i + 1).to_string())
                .collect();
            let _ = write!(csv, "{fam},{alpha}");
            for l in lambdas {
                let _ = write!(csv, ",{l:.9e}");
            }
            let _ = writeln!(csv, ",{},{hash}", suspects.join(";"));
        }
    }
    let path = args.out.join("test3_sweep.csv");
    fs::write(&path, csv)?;
    Ok(vec![path])
}

fn test3_order(args: &RunArgs) -> AnyResult<Vec<PathBuf>> {
    let ns = if args.n.is_empty() {
        vec![32, 64, 128]
    } else {
        args.n.clone()
    };
    let alphas = if args.alpha.is_empty() {
        vec![1.0 / 16.0, 0.25, 1.0, 4.0, 16.0]
    } else {
        args.alpha.clone()
    };
    let k = args.k.unwrap_or(5);
    let spec = ExperimentSpec {
        test: "3-order".into(),
        families: vec!["t1".into()],
        n: ns.clone(),
        alpha: alphas.clone(),
        bc: args.bc.unwrap_or(Bc::MixedBottomClamped),
        k,
        seed: args.seed,
        nu: args.nu,
        jump_nu: args.jump_nu,
    };
    let hash = spec.config_hash();

    let grid: Vec<(f64, usize)> = alphas
        .iter()
        .flat_map(|&a| ns.iter().map(move |&n| (a, n)))
        .collect();
    let solved: Vec<AnyResult<(f64, usize, Vec<f64>)>> = grid
        .par_iter()
        .map(|&(alpha, n)| {
            let mesh = generate(Domain::UnitSquare, Family::T1, n, spec.seed)
                .map_err(AnyError::from)?;
            let cfg = solver_config(spec.nu, alpha, spec.bc);
            let sys = assemble(&mesh, &cfg).map_err(AnyError::from)?;
            let sol = solve_eigs(&sys, k, 0.0).map_err(AnyError::from)?;
            Ok((alpha, n, sol.lambdas()))
        })
        .collect();
    let solved: Vec<(f64, usize, Vec<f64>)> = solved.into_iter().collect::<AnyResult<_>>()?;

    let mut csv = String::from("alpha,row");
    for i in 1..=k {
        let _ = write!(csv, ",lambda{i}");
    }
    csv.push_str(",config\n");
    for &alpha in &alphas {
        let mut series: Vec<(usize, Vec<f64>)> = solved
            .iter()
            .filter(|(a, _, _)| *a == alpha)
            .map(|(_, n, l)| (*n, l.clone()))
            .collect();
        series.sort_by_key(|s| s.0);
        for (n, lambdas) in &series {
            push_row(&mut csv, &format!("{alpha}"), &format!("N={n}"), lambdas, &hash);
        }
        if series.len() >= 3 {
            let h: Vec<f64> = series.iter().map(|(n, _)| 1.0 / *n as f64).collect();
            let mut orders = Vec::with_capacity(k);
            let mut extr = Vec::with_capacity(k);
            for mode in 0..k {
                let l: Vec<f64> = series.iter().map(|(_, ls)| ls[mode]).collect();
                let fit = fit_order(&h, &l)?;
                orders.push(fit.rate);
                extr.push(fit.extrapolated);
            }
            push_row(&mut csv, &format!("{alpha}"), "order", &orders, &hash);
            push_row(&mut csv, &format!("{alpha}"), "extr", &extr, &hash);
        }
    }
    let path = args.out.join("test3_order.csv");
    fs::write(&path, csv)?;
    Ok(vec![path])
}

/// Reference value used for the singular-domain error columns.
pub const LSHAPE_LAMBDA1: f64 = 32.1321;

fn test4(args: &RunArgs) -> AnyResult<Vec<PathBuf>> {
    let spec = ExperimentSpec {
        test: "4".into(),
        families: vec!["t1".into(), "tri".into()],
        n: args.n.clone(),
        alpha: if args.alpha.is_empty() { vec![1.0] } else { args.alpha.clone() },
        bc: Bc::Clamped,
        k: args.k.unwrap_or(1),
        seed: args.seed,
        nu: args.nu,
        jump_nu: args.jump_nu,
    };
    let hash = spec.config_hash();
    let mut files = Vec::new();

    // uniform refinement study
    let uniform_ns = if args.n.is_empty() {
        vec![16, 24, 32, 48]
    } else {
        args.n.clone()
    };
    let mut rows: Vec<(usize, usize, f64)> = uniform_ns
        .par_iter()
        .map(|&n| -> AnyResult<(usize, usize, f64)> {
            let mesh = generate(Domain::LShape, Family::T1, n, spec.seed)?;
            let cfg = solver_config(spec.nu, spec.alpha[0], Bc::Clamped);
            let sys = assemble(&mesh, &cfg)?;
            let sol = solve_eigs(&sys, 1, 0.0)?;
            Ok((mesh.num_cells(), sys.dofs.total, sol.pairs[0].lambda))
        })
        .collect::<AnyResult<_>>()?;
    rows.sort_by_key(|r| r.0);
    let mut csv = String::from("scheme,cells,dofs,lambda1,err,config\n");
    for (cells, dofs, lambda) in &rows {
        let err = (lambda - LSHAPE_LAMBDA1).abs() / LSHAPE_LAMBDA1;
        let _ = writeln!(csv, "uniform,{cells},{dofs},{lambda:.9e},{err:.9e},{hash}");
    }
    let cells: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let errs: Vec<f64> = rows
        .iter()
        .map(|r| (r.2 - LSHAPE_LAMBDA1).abs() / LSHAPE_LAMBDA1)
        .collect();
    let uniform_slope = fit_slope(&cells, &errs)?;
    let path = args.out.join("test4_uniform.csv");
    fs::write(&path, &csv)?;
    files.push(path);

    // adaptive runs: squares and triangles
    let mut summary = String::from("scheme,slope,final_cells,final_lambda1,final_err,config\n");
    let _ = writeln!(
        summary,
        "uniform,{uniform_slope:.4},{},{:.9e},{:.9e},{hash}",
        rows.last().unwrap().0,
        rows.last().unwrap().2,
        errs.last().unwrap()
    );
    for scheme in ["squares", "triangles"] {
        let start = match scheme {
            "squares" => generate(Domain::LShape, Family::T1, 21, spec.seed)?,
            _ => generate(Domain::LShape, Family::T1, 24, spec.seed)?.split_into_triangles()?,
        };
        let cfg = AdaptConfig {
            solver: solver_config(spec.nu, spec.alpha[0], Bc::Clamped),
            lambda_ref: Some(LSHAPE_LAMBDA1),
            jump_nu: spec.jump_nu,
            max_steps: 12,
            dof_budget: 300_000,
            ..AdaptConfig::default()
        };
        let out_dir = args.out.clone();
        let scheme_name = scheme.to_string();
        let history = adaptive_loop_with(start, &cfg, |view| {
            let file = out_dir.join(format!("test4_{scheme_name}_step{:02}.vtk", view.step));
            let _ = write_step_vtk(&file, view.mesh, view.solution, &view.indicators.eta2);
        })?;
        let path = args.out.join(format!("test4_adaptive_{scheme}.csv"));
        fs::write(&path, history_csv(&history, &hash))?;
        files.push(path);
        // slope over the asymptotic tail (skip the pre-asymptotic head)
        let tail: Vec<&vemstokes::adapt::AdaptStep> =
            history.steps.iter().skip(history.steps.len() / 3).collect();
        let cells: Vec<usize> = tail.iter().map(|s| s.cells).collect();
        let errs: Vec<f64> = tail.iter().filter_map(|s| s.err).collect();
        let slope = fit_slope(&cells, &errs)?;
        let last = history.steps.last().unwrap();
        let _ = writeln!(
            summary,
            "{scheme},{slope:.4},{},{:.9e},{:.9e},{hash}",
            last.cells,
            last.lambda1,
            last.err.unwrap_or(f64::NAN)
        );
    }
    let path = args.out.join("test4_summary.csv");
    fs::write(&path, summary)?;
    files.push(path);
    Ok(files)
}

fn history_csv(history: &AdaptHistory, hash: &str) -> String {
    let base = history.to_csv();
    let mut out = String::new();
    for (i, line) in base.lines().enumerate() {
        if i == 0 {
            out.push_str(line);
            out.push_str(",config\n");
        } else {
            out.push_str(line);
            out.push(',');
            out.push_str(hash);
            out.push('\n');
        }
    }
    out
}

fn write_step_vtk(
    path: &Path,
    mesh: &PolyMesh,
    solution: &EigenSolution,
    eta2: &[f64],
) -> AnyResult<()> {
    let pair = &solution.pairs[0];
    let file = fs::File::create(path)?;
    vtk_with_fields(mesh, pair, Some(eta2))
        .write(std::io::BufWriter::new(file))?;
    Ok(())
}

fn vtk_with_fields<'m>(
    mesh: &'m PolyMesh,
    pair: &EigenPair,
    eta2: Option<&[f64]>,
) -> VtkWriter<'m> {
    let velocity: Vec<[f64; 2]> = (0..mesh.num_vertices())
        .map(|v| [pair.velocity[2 * v], pair.velocity[2 * v + 1]])
        .collect();
    let mut writer = VtkWriter::new(mesh, "stokes eigenfunction")
        .point_vectors("velocity", velocity)
        .cell_scalars("pressure", pair.pressure.clone());
    if let Some(e) = eta2 {
        writer = writer.cell_scalars("eta2", e.to_vec());
    }
    writer
}

pub fn mesh_export(domain: &str, family: &str, n: usize, seed: u64, out: &Path) -> AnyResult<()> {
    let mesh = generate(domain.parse::<Domain>()?, family.parse::<Family>()?, n, seed)?;
    let q = mesh.quality();
    println!(
        "mesh: {} cells, {} vertices, {} edges; min kernel ratio {:.4}, min spacing ratio {:.4}",
        mesh.num_cells(),
        mesh.num_vertices(),
        mesh.num_edges(),
        q.min_kernel_ratio,
        q.min_spacing_ratio
    );
    let file = fs::File::create(out)?;
    let mut w = std::io::BufWriter::new(file);
    match out.extension().and_then(|e| e.to_str()) {
        Some("vtk") => VtkWriter::new(&mesh, "generated mesh").write(&mut w)?,
        _ => write_mesh_text(&mesh, &mut w)?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn solve_once(
    domain: &str,
    family: &str,
    n: usize,
    seed: u64,
    nu: f64,
    alpha: f64,
    bc: Bc,
    k: usize,
    sigma: f64,
    out: Option<PathBuf>,
) -> AnyResult<()> {
    let mesh = generate(domain.parse::<Domain>()?, family.parse::<Family>()?, n, seed)?;
    let sys = assemble(&mesh, &solver_config(nu, alpha, bc))?;
    println!(
        "system: {} unknowns ({} velocity, {} pressure{})",
        sys.dofs.total,
        sys.dofs.num_free_velocity,
        sys.dofs.num_cells,
        if sys.dofs.multiplier.is_some() {
            ", 1 multiplier"
        } else {
            ""
        }
    );
    let sol = solve_eigs(&sys, k, sigma)?;
    for (i, p) in sol.pairs.iter().enumerate() {
        println!(
            "lambda_{} = {:.6}   residual {:.2e}   divergence {:.2e}",
            i + 1,
            p.lambda,
            p.residual,
            p.divergence_residual
        );
    }
    if sol.pairs.len() >= 2 {
        let gaps = spectral_gap_report(&sol)?;
        for (i, (g, m)) in gaps.gaps.iter().zip(&gaps.multiple).enumerate() {
            println!(
                "gap {}-{}: {:.4}{}",
                i + 1,
                i + 2,
                g,
                if *m { "   (numerically multiple)" } else { "" }
            );
        }
    }
    if let Some(path) = out {
        write_solution_vtk(&path, &mesh, &sys, &sol, None)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_once(
    domain: &str,
    family: &str,
    n: usize,
    seed: u64,
    nu: f64,
    alpha: f64,
    bc: Bc,
    jump_nu: bool,
    out: Option<PathBuf>,
) -> AnyResult<()> {
    let mesh = generate(domain.parse::<Domain>()?, family.parse::<Family>()?, n, seed)?;
    let sys = assemble(&mesh, &solver_config(nu, alpha, bc))?;
    let sol = solve_eigs(&sys, 1, 0.0)?;
    let field = global_estimate(&mesh, &sys, &sol.pairs[0], jump_nu);
    println!(
        "lambda_1 = {:.6}; eta^2 = {:.6e} (theta^2 {:.3e}, R^2 {:.3e}, J^2 {:.3e})",
        sol.pairs[0].lambda,
        field.eta2_total(),
        field.theta2_total(),
        field.r2_total(),
        field.jump2_total()
    );
    if let Some(path) = out {
        write_solution_vtk(&path, &mesh, &sys, &sol, Some(&field.eta2))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_solution_vtk(
    path: &Path,
    mesh: &PolyMesh,
    sys: &SaddleSystem,
    sol: &EigenSolution,
    eta2: Option<&[f64]>,
) -> AnyResult<()> {
    let pair = &sol.pairs[0];
    // cellwise L2-projected velocity (its constant coefficient is the value
    // at the centroid)
    let pi0_velocity: Vec<[f64; 2]> = (0..mesh.num_cells())
        .map(|c| {
            let dofs = vemstokes::estimator::cell_dofs(mesh, c, &pair.velocity);
            let s = sys.locals[c].pi0_apply(&dofs);
            [s[0], s[1]]
        })
        .collect();
    let file = fs::File::create(path)?;
    let mut writer = vtk_with_fields(mesh, pair, eta2).cell_vectors("pi0_velocity", pi0_velocity);
    let _ = &mut writer;
    writer.write(std::io::BufWriter::new(file))?;
    Ok(())
}
