//! nk6: batch front end for the nearly Kahler S^6 laboratory.
//!
//! Subcommands: verify (structure equations), spectrum (deformation space),
//! obstruction (Kuranishi pairings), secondvar (volume second variation),
//! mesh (build + NK6MESH round trip). Exit codes: 0 pass, 1 failed check,
//! 2 inconclusive spectral cluster, 3 usage or IO error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nk6_core::immersion::{ExampleId, HopfLift, Immersion};
use nk6_core::nk6::{NkSphere, VerifyConfig};
use nk6_core::rng::Rng;

use nk6_lab::config::RunConfig;
use nk6_lab::dec::Cochain;
use nk6_lab::deform::{obstruction, second_variation, tau_series, FQuad, LinearizedOperator};
use nk6_lab::mesh::write_nk6mesh;
use nk6_lab::report::{
    self, to_json, MeshReport, ObstructionReport, SecondVarReport, SpectrumReport, VerifyReport,
};
use nk6_lab::spectrum::{
    deformation_space, max_metric_edge, setup_example, setup_immersion, ProblemSetup,
    SpectralBasis,
};
use nk6_lab::LabError;

#[derive(Parser)]
#[command(name = "nk6", version, about = "numerical laboratory for Lagrangian submanifolds of the nearly Kahler 6-sphere")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// one of L0..L4
    #[arg(long)]
    example: Option<String>,
    /// JSON immersion description (e.g. a conic Hopf lift)
    #[arg(long)]
    immersion: Option<PathBuf>,
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory for reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the structure-equation verifier for the nearly Kahler S^6
    Verify {
        #[command(flatten)]
        common: Common,
        /// samples per check
        #[arg(long)]
        samples: Option<usize>,
        /// negative control: corrupt the complex-volume convention
        #[arg(long, default_value_t = false)]
        flip_convention: bool,
    },
    /// Mesh an example and compute its deformation-space dimension
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Kuranishi obstruction pairings on random kernel directions
    Obstruction {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        directions: usize,
        /// also fail (exit 1) when a pairing exceeds the regularity budget
        #[arg(long, default_value_t = false)]
        expect_regular: bool,
    },
    /// Second variation of volume on kernel or random directions
    Secondvar {
        #[command(flatten)]
        common: Common,
        /// from-kernel | random
        #[arg(long, default_value = "from-kernel")]
        beta: String,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Build a mesh, write it in NK6MESH format and verify the round trip
    Mesh {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, LabError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_text(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(e) = &common.example {
        cfg.example = e.clone();
    }
    if let Some(r) = common.refine {
        cfg.refine = r;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(serde::Deserialize)]
#[serde(tag = "type")]
enum ImmersionFile {
    #[serde(rename = "example")]
    Example { id: String },
    #[serde(rename = "hopf_lift")]
    HopfLift { conic: [[[f64; 2]; 3]; 3] },
}

fn build_setup(cfg: &RunConfig, common: &Common) -> Result<ProblemSetup, LabError> {
    if let Some(path) = &common.immersion {
        let parsed: ImmersionFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        return match parsed {
            ImmersionFile::Example { id } => {
                let id = ExampleId::parse(&id)
                    .ok_or_else(|| LabError::Config(format!("unknown example {id:?}")))?;
                setup_example(id, cfg.refine, cfg.min_quality)
            }
            ImmersionFile::HopfLift { conic } => {
                let imm: Box<dyn Immersion> = Box::new(HopfLift::new(conic)?);
                setup_immersion(imm, None, None, cfg.refine, cfg.min_quality)
            }
        };
    }
    let id = ExampleId::parse(&cfg.example)
        .ok_or_else(|| LabError::Config(format!("unknown example {:?}", cfg.example)))?;
    setup_example(id, cfg.refine, cfg.min_quality)
}

fn write_out(dir: &str, name: &str, contents: &str) -> Result<(), LabError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(Path::new(dir).join(name), contents)?;
    Ok(())
}

/// Random unit direction in the computed kernel span.
fn random_t_direction(basis: &SpectralBasis, rng: &mut Rng) -> Cochain {
    let dim = basis.t_vectors.len();
    let coefs: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let norm: f64 = coefs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let n = basis.t_vectors[0].values.len();
    let mut values = vec![0.0; n];
    for (c, v) in coefs.iter().zip(basis.t_vectors.iter()) {
        for i in 0..n {
            values[i] += c / norm * v.values[i];
        }
    }
    Cochain { degree: 1, values }
}

fn cmd_verify(common: &Common, samples: Option<usize>, flip: bool) -> Result<u8, LabError> {
    let mut cfg = load_config(common)?;
    if flip {
        cfg.convention = "flipped".into();
    }
    let samples = samples.unwrap_or(cfg.samples);
    let nk = if cfg.convention == "flipped" {
        NkSphere::corrupted()
    } else {
        NkSphere::standard()
    };
    let mut vc = VerifyConfig::default();
    vc.fd_step = cfg.fd_step_verify;
    let report = nk.verify_structure(samples, &vc, cfg.seed);
    for c in &report.checks {
        println!(
            "{:<45} samples {:>5}  max residual {:>12.3e}  tol {:>8.1e}  {}",
            c.check_name,
            c.samples,
            c.max_residual,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let envelope = VerifyReport {
        schema: report::SCHEMA.into(),
        version: report::version().into(),
        config_hash: cfg.hash(),
        convention: cfg.convention.clone(),
        report: report.clone(),
    };
    write_out(&cfg.out_dir, "verify.json", &to_json(&envelope)?)?;
    if report.all_pass {
        Ok(0)
    } else {
        let first = report.first_failure().unwrap();
        eprintln!("first failing check: {}", first.check_name);
        Ok(1)
    }
}

fn example_name(cfg: &RunConfig, common: &Common) -> String {
    if common.immersion.is_some() {
        "custom".into()
    } else {
        cfg.example.clone()
    }
}

fn cmd_spectrum(common: &Common) -> Result<u8, LabError> {
    let cfg = load_config(common)?;
    let setup = build_setup(&cfg, common)?;
    let scfg = cfg.spectrum_config();
    match deformation_space(&setup, &scfg) {
        Ok(basis) => {
            println!(
                "example {} refine {}: dim T = {} (window [{}, {}])",
                example_name(&cfg, common),
                cfg.refine,
                basis.dim_t,
                scfg.window_lo,
                scfg.window_hi
            );
            for (i, mu) in basis.t_eigenvalues.iter().enumerate() {
                println!(
                    "  kernel pair {i:>3}: curl eigenvalue {:>10.6}  curl residual {:>9.2e}",
                    mu, basis.curl_residuals[i]
                );
            }
            let rep = SpectrumReport::new(&cfg.hash(), &example_name(&cfg, common), cfg.refine, &basis);
            write_out(&cfg.out_dir, "spectrum.json", &to_json(&rep)?)?;
            write_out(
                &cfg.out_dir,
                "spectrum.csv",
                &report::spectrum_csv(&basis, cfg.cluster_gap),
            )?;
            write_out(
                &cfg.out_dir,
                "spectrum.gp",
                &report::spectrum_gnuplot("spectrum.csv"),
            )?;
            Ok(0)
        }
        Err(LabError::UnresolvedCluster(msg)) => {
            eprintln!("inconclusive: {msg}");
            write_out(
                &cfg.out_dir,
                "spectrum.json",
                &format!(
                    "{{\n  \"schema\": \"{}\",\n  \"inconclusive\": \"{}\"\n}}\n",
                    report::SCHEMA,
                    msg.replace('"', "'")
                ),
            )?;
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

fn cmd_obstruction(common: &Common, directions: usize, expect_regular: bool) -> Result<u8, LabError> {
    let cfg = load_config(common)?;
    let setup = build_setup(&cfg, common)?;
    let scfg = cfg.spectrum_config();
    let basis = match deformation_space(&setup, &scfg) {
        Ok(b) => b,
        Err(LabError::UnresolvedCluster(msg)) => {
            eprintln!("inconclusive: {msg}");
            return Ok(2);
        }
        Err(e) => return Err(e),
    };
    let mesh = setup.mesh();
    let quad = FQuad::build(&setup.metric, setup.imm.as_ref());
    let linop = LinearizedOperator::assemble(mesh, &setup.metric);
    let mut rng = Rng::new(cfg.seed ^ 0x6f62737472);
    let mut raw = Vec::new();
    let mut relative = Vec::new();
    let mut tau2s = Vec::new();
    let mut max_rel = 0.0f64;
    let mut max_sym = 0.0f64;
    for k in 0..directions {
        let alpha = random_t_direction(&basis, &mut rng);
        let obs = obstruction(
            &quad,
            mesh,
            &setup.metric,
            &basis.t_vectors,
            &alpha,
            cfg.fd_step_kuranishi,
            cfg.sup_bound,
        )?;
        let tau = tau_series(
            &quad,
            mesh,
            &setup.metric,
            &linop,
            &basis.t_vectors,
            &alpha,
            2,
            cfg.fd_step_kuranishi,
            cfg.sup_bound,
        )?;
        let dir_max = obs.relative.iter().fold(0.0f64, |m, v| m.max(*v));
        println!(
            "direction {k}: max relative pairing {dir_max:.3e}, kuranishi symmetry defect {:.3e}",
            obs.kuranishi_symmetry_defect
        );
        max_rel = max_rel.max(dir_max);
        max_sym = max_sym.max(obs.kuranishi_symmetry_defect);
        raw.push(obs.raw);
        relative.push(obs.relative);
        tau2s.push(tau.tau2);
    }
    let rep = ObstructionReport {
        schema: report::SCHEMA.into(),
        version: report::version().into(),
        config_hash: cfg.hash(),
        mesh_hash: basis.mesh_hash.clone(),
        example: example_name(&cfg, common),
        refine: cfg.refine,
        dim_t: basis.dim_t,
        directions,
        raw_pairings: raw,
        relative_pairings: relative,
        max_relative_pairing: max_rel,
        kuranishi_symmetry_defect: max_sym,
        tau2: tau2s,
    };
    write_out(&cfg.out_dir, "obstruction.json", &to_json(&rep)?)?;
    let sym_ok = max_sym < 1e-6;
    let reg_ok = !expect_regular || max_rel < 1e-3;
    println!(
        "max relative pairing {max_rel:.3e} ({}), symmetry defect {max_sym:.3e} ({})",
        if reg_ok { "ok" } else { "exceeds 1e-3" },
        if sym_ok { "ok" } else { "exceeds 1e-6" }
    );
    Ok(if sym_ok && reg_ok { 0 } else { 1 })
}

fn cmd_secondvar(common: &Common, beta: &str, lambda: Option<f64>) -> Result<u8, LabError> {
    let cfg = load_config(common)?;
    let lambda = lambda.unwrap_or(cfg.lambda);
    let setup = build_setup(&cfg, common)?;
    let mesh = setup.mesh();
    let mut results = Vec::new();
    let mut normalized = Vec::new();
    let mut pass = true;
    match beta {
        "from-kernel" => {
            let basis = match deformation_space(&setup, &cfg.spectrum_config()) {
                Ok(b) => b,
                Err(LabError::UnresolvedCluster(msg)) => {
                    eprintln!("inconclusive: {msg}");
                    return Ok(2);
                }
                Err(e) => return Err(e),
            };
            for b in &basis.t_vectors {
                let q = second_variation(mesh, &setup.metric, b, lambda)?;
                let norm2 = nk6_lab::dec::hodge_inner(&setup.metric, b, b)?;
                let rel = q.value.abs() / norm2;
                normalized.push(rel);
                if rel >= 1e-2 {
                    pass = false;
                }
                results.push(q);
            }
            println!(
                "kernel directions: max |Q|/|beta|^2 = {:.3e} ({})",
                normalized.iter().fold(0.0f64, |m, v| m.max(*v)),
                if pass { "PASS" } else { "FAIL" }
            );
        }
        "random" => {
            let mut rng = Rng::new(cfg.seed ^ 0x7365636f6e64);
            for _ in 0..100 {
                let values: Vec<f64> = (0..mesh.edges.len()).map(|_| rng.normal()).collect();
                let b = Cochain { degree: 1, values };
                let q = second_variation(mesh, &setup.metric, &b, lambda)?;
                let norm2 = nk6_lab::dec::hodge_inner(&setup.metric, &b, &b)?;
                normalized.push(q.value / norm2);
                if lambda == 0.0 && q.value < -1e-10 * norm2 {
                    pass = false;
                }
                results.push(q);
            }
            if lambda == 0.0 {
                println!(
                    "lambda = 0 on random directions: min Q/|beta|^2 = {:.3e} ({})",
                    normalized.iter().fold(f64::INFINITY, |m, v| m.min(*v)),
                    if pass { "PASS" } else { "FAIL" }
                );
            }
        }
        other => {
            return Err(LabError::Config(format!(
                "--beta must be from-kernel or random, got {other:?}"
            )))
        }
    }
    let rep = SecondVarReport {
        schema: report::SCHEMA.into(),
        version: report::version().into(),
        config_hash: cfg.hash(),
        mesh_hash: setup.mesh().hash(),
        example: example_name(&cfg, common),
        refine: cfg.refine,
        lambda,
        results,
        normalized_kernel_values: normalized,
    };
    write_out(&cfg.out_dir, "secondvar.json", &to_json(&rep)?)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_mesh(common: &Common) -> Result<u8, LabError> {
    let cfg = load_config(common)?;
    let setup = build_setup(&cfg, common)?;
    let mesh = setup.mesh();
    let text = write_nk6mesh(mesh);
    write_out(&cfg.out_dir, "mesh.nk6mesh", &text)?;
    let reread = nk6_lab::mesh::read_nk6mesh(&text)?;
    let text2 = write_nk6mesh(&reread);
    let identical = text == text2;
    let rep = MeshReport {
        schema: report::SCHEMA.into(),
        version: report::version().into(),
        config_hash: cfg.hash(),
        mesh_hash: mesh.hash(),
        example: example_name(&cfg, common),
        refine: cfg.refine,
        vertices: mesh.vertices.len(),
        edges: mesh.edges.len(),
        faces: mesh.faces.len(),
        tets: mesh.tets.len(),
        euler_characteristic: mesh.euler_characteristic(),
        total_volume: setup.metric.total_volume,
        max_metric_edge: max_metric_edge(mesh, &setup.metric),
        roundtrip_identical: identical,
    };
    println!(
        "mesh {}: V={} E={} F={} T={} chi={} volume={:.6} roundtrip {}",
        example_name(&cfg, common),
        rep.vertices,
        rep.edges,
        rep.faces,
        rep.tets,
        rep.euler_characteristic,
        rep.total_volume,
        if identical { "byte-identical" } else { "MISMATCH" }
    );
    write_out(&cfg.out_dir, "mesh.json", &to_json(&rep)?)?;
    Ok(if identical { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Verify {
            common,
            samples,
            flip_convention,
        } => cmd_verify(common, *samples, *flip_convention),
        Cmd::Spectrum { common } => cmd_spectrum(common),
        Cmd::Obstruction {
            common,
            directions,
            expect_regular,
        } => cmd_obstruction(common, *directions, *expect_regular),
        Cmd::Secondvar {
            common,
            beta,
            lambda,
        } => cmd_secondvar(common, beta, *lambda),
        Cmd::Mesh { common } => cmd_mesh(common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
