use nk6_lab::mesh::{cell16, cell16_antipodal_deck, MeshHierarchy, LOCAL_PAIRS};
use nk6_lab::metric::metric_from_immersion;
use nk6_core::immersion::GreatSphere;

fn main() {
    let imm = GreatSphere::new();
    let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), 0);
    let mesh = hier.finest();
    let data = metric_from_immersion(mesh, &imm, 1e-3).unwrap();
    let ea = mesh.edge_id(0, 1).unwrap();
    let eb = mesh.edge_id(0, 2).unwrap();
    let det_rows = |a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]| -> f64 {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
    };
    for (ti, t) in mesh.tets.iter().enumerate() {
        if !(t.contains(&0) && t.contains(&1) && t.contains(&2)) {
            continue;
        }
        let geo = &data.tets[ti];
        let mut cab = 0.0;
        let mut cba = 0.0;
        for (p, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
            for (q, &(k, l)) in LOCAL_PAIRS.iter().enumerate() {
                let gid_p = mesh.edge_id(t[i], t[j]).unwrap();
                let gid_q = mesh.edge_id(t[k], t[l]).unwrap();
                let d1 = det_rows(&geo.grad_lambda[i], &geo.grad_lambda[j], &geo.grad_lambda[l]);
                let d2 = det_rows(&geo.grad_lambda[i], &geo.grad_lambda[j], &geo.grad_lambda[k]);
                let val = 2.0 * geo.coord_vol6 / 24.0 * (d1 - d2);
                if gid_p == ea && gid_q == eb {
                    cab += val;
                }
                if gid_p == eb && gid_q == ea {
                    cba += val;
                }
                let _ = (p, q);
            }
        }
        println!("tet {ti} {:?}: orient {} contribution C[ab] {} C[ba] {}", t, geo.orient, cab, cba);
    }
}
