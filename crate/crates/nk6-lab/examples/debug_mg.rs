use nk6_core::immersion::ExampleId;
use nk6_lab::eig::{edge_prolongation, MgPrec, Preconditioner};
use nk6_lab::sparse::{dot, norm};
use nk6_lab::spectrum::{assemble_s, setup_example};

fn main() {
    let refine: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let setup = setup_example(ExampleId::L0, refine, 1e-3).unwrap();
    let mesh = setup.mesh();
    let metric = &setup.metric;
    let t0 = std::time::Instant::now();
    let s = assemble_s(mesh, metric);
    let m1g = metric.m1.matmul(&mesh.d0);
    // penalty: scale columns by 1/sqrt(m0_lumped)
    let mut scaled = m1g.clone();
    for r in 0..scaled.nrows {
        let (st, en) = (scaled.indptr[r], scaled.indptr[r + 1]);
        for k in st..en {
            let c = scaled.indices[k] as usize;
            scaled.data[k] /= metric.m0_lumped[c].sqrt();
        }
    }
    let pen = scaled.matmul(&scaled.transpose());
    let b = s.add_scaled(&pen, 10.0).symmetrize();
    println!("assembled B: n={} nnz={} [{:.2?}]", b.nrows, b.nnz(), t0.elapsed());
    let grads: Vec<_> = setup.hier.levels.iter().map(|l| l.d0.clone()).collect();
    let mut prols = Vec::new();
    for l in 0..setup.hier.levels.len() - 1 {
        prols.push(edge_prolongation(
            &setup.hier.levels[l],
            &setup.hier.levels[l + 1],
            &setup.hier.links[l],
        ));
    }
    let t1 = std::time::Instant::now();
    let mg = MgPrec::new(b.clone(), grads, prols).unwrap();
    println!("MG built [{:.2?}]", t1.elapsed());
    // PCG with MG preconditioner on B x = rhs
    let n = b.nrows;
    let mut rng = nk6_core::rng::Rng::new(1);
    let rhs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z = vec![0.0; n];
    let t2 = std::time::Instant::now();
    mg.apply(&r, &mut z);
    println!("one V-cycle [{:.2?}]", t2.elapsed());
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let nr0 = norm(&rhs);
    let mut ax = vec![0.0; n];
    for it in 0..30 {
        b.mul_vec(&p, &mut ax);
        let alpha = rz / dot(&p, &ax);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        let rel = norm(&r) / nr0;
        if it % 5 == 0 || rel < 1e-10 {
            println!("pcg it {it}: rel resid {rel:.3e}");
        }
        if rel < 1e-10 {
            break;
        }
        mg.apply(&r, &mut z);
        let rz2 = dot(&r, &z);
        let beta = rz2 / rz;
        rz = rz2;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}
