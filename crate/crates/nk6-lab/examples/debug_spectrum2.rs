use nk6_core::immersion::ExampleId;
use nk6_lab::spectrum::{deformation_space, setup_example, SpectrumConfig};

fn main() {
    let refine: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let ex = std::env::args().nth(2).unwrap_or_else(|| "L0".into());
    let wid: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let id = ExampleId::parse(&ex).unwrap();
    let t0 = std::time::Instant::now();
    let setup = setup_example(id, refine, 1e-3).unwrap();
    println!("mesh: {} tets {} edges [{:.1?}]", setup.mesh().tets.len(), setup.mesh().edges.len(), t0.elapsed());
    let mut cfg = SpectrumConfig::default();
    cfg.window_lo = 3.0 - wid;
    cfg.window_hi = 3.0 + wid;
    match deformation_space(&setup, &cfg) {
        Ok(basis) => {
            println!("dim T = {} [{:.1?}], iters {}", basis.dim_t, t0.elapsed(), basis.solver_iterations);
            println!("all curls: {:?}", basis.curl_eigenvalues.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
            println!("max residuals: coclosed {:.2e}, laplace {:.2e}, curl {:.2e}",
                basis.coclosed_residuals.iter().cloned().fold(0.0, f64::max),
                basis.laplace_residuals.iter().cloned().fold(0.0, f64::max),
                basis.curl_residuals.iter().cloned().fold(0.0, f64::max));
        }
        Err(e) => println!("error: {e}"),
    }
}
