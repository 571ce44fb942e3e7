use nk6_lab::mesh::{cell16, cell16_antipodal_deck, MeshHierarchy};
use nk6_lab::metric::metric_from_immersion;
use nk6_core::immersion::GreatSphere;

fn main() {
    let imm = GreatSphere::new();
    for level in 0..3 {
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), level);
        let mesh = hier.finest();
        let data = metric_from_immersion(mesh, &imm, 1e-3).unwrap();
        // for each face: sum of or_T * induced sign over adjacent tets; 0 iff consistent
        let mut acc = vec![0.0f64; mesh.faces.len()];
        for (ti, _t) in mesh.tets.iter().enumerate() {
            let (cols, vals) = mesh.d2.row(ti);
            for (c, v) in cols.iter().zip(vals.iter()) {
                acc[*c as usize] += data.tets[ti].orient * v;
            }
        }
        let bad = acc.iter().filter(|v| v.abs() > 0.5).count();
        println!("level {level}: inconsistent faces {} / {}", bad, mesh.faces.len());
        let neg = data.tets.iter().filter(|t| t.orient < 0.0).count();
        println!("  tets with negative orient: {} / {}", neg, mesh.tets.len());
    }
}
