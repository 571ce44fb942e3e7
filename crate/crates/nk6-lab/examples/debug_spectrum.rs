use nk6_core::immersion::ExampleId;
use nk6_lab::spectrum::{deformation_space, setup_example, SpectrumConfig};

fn main() {
    let t0 = std::time::Instant::now();
    let refine: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let ex = std::env::args().nth(2).unwrap_or_else(|| "L0".into());
    let id = ExampleId::parse(&ex).unwrap();
    let setup = setup_example(id, refine, 1e-3).unwrap();
    println!(
        "setup {:?}: {} tets, {} edges, deck order {} [{:.1?}]",
        id,
        setup.mesh().tets.len(),
        setup.mesh().edges.len(),
        setup.hier.finest_deck().order(),
        t0.elapsed()
    );
    let cfg = SpectrumConfig::default();
    match deformation_space(&setup, &cfg) {
        Ok(basis) => {
            println!("dim T = {}", basis.dim_t);
            println!("curl eigenvalues: {:?}", basis.curl_eigenvalues.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
            println!("max residuals: coclosed {:.2e}, laplace {:.2e}, curl {:.2e}",
                basis.coclosed_residuals.iter().cloned().fold(0.0, f64::max),
                basis.laplace_residuals.iter().cloned().fold(0.0, f64::max),
                basis.curl_residuals.iter().cloned().fold(0.0, f64::max));
            println!("iterations {} [{:.1?}]", basis.solver_iterations, t0.elapsed());
        }
        Err(e) => println!("error: {e}"),
    }
}
