use nk6_core::immersion::ExampleId;
use nk6_lab::eig::edge_prolongation;
use nk6_lab::spectrum::setup_example;

fn main() {
    let setup = setup_example(ExampleId::L0, 2, 1e-3).unwrap();
    let coarse = &setup.hier.levels[1];
    let fine = &setup.hier.levels[2];
    let link = &setup.hier.links[1];
    let p1 = edge_prolongation(coarse, fine, link);
    // vertex prolongation: identity on old vertices, 1/2-1/2 on midpoints
    let nvc = coarse.vertices.len();
    let mut coo = Vec::new();
    for v in 0..nvc {
        coo.push((v as u32, v as u32, 1.0));
    }
    for (ei, e) in coarse.edges.iter().enumerate() {
        coo.push(((nvc + ei) as u32, e[0] as u32, 0.5));
        coo.push(((nvc + ei) as u32, e[1] as u32, 0.5));
    }
    let p0 = nk6_lab::sparse::Csr::from_coo(fine.vertices.len(), nvc, coo);
    // commutativity: d0_fine * P0 == P1 * d0_coarse
    let lhs = fine.d0.matmul(&p0);
    let rhs = p1.matmul(&coarse.d0);
    let diff = lhs.add_scaled(&rhs, -1.0);
    let max = diff.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("commutativity defect: {max:.3e}");
    // energy comparison on a random coarse cochain (should be same order)
    let mut rng = nk6_core::rng::Rng::new(2);
    let xc: Vec<f64> = (0..coarse.edges.len()).map(|_| rng.normal()).collect();
    let xf = p1.apply(&xc);
    println!("norm xc {:.4}, norm Pxc {:.4}", nk6_lab::sparse::norm(&xc), nk6_lab::sparse::norm(&xf));
    // P of a coarse Whitney form evaluated via the coarse S vs fine S
    let s_c = nk6_lab::spectrum::assemble_s(coarse, &nk6_lab::metric::metric_from_immersion(coarse, setup.imm.as_ref(), 1e-3).unwrap());
    let s_f = nk6_lab::spectrum::assemble_s(fine, &setup.metric);
    let e_c = nk6_lab::sparse::dot(&xc, &s_c.apply(&xc));
    let e_f = nk6_lab::sparse::dot(&xf, &s_f.apply(&xf));
    println!("coarse energy {e_c:.5}, fine energy of P x {e_f:.5}");
}
