//! Tetrahedral meshes of the group covers: the 16-cell and 600-cell boundary
//! complexes on Sp(1), uniform red refinement with midpoint projection back
//! to the unit sphere, deck-group tracking through refinement, the flat T^3
//! reference mesh, and the NK6MESH file format.
//!
//! Refinement is deck-equivariant by construction: the interior diagonal of
//! each subdivided tet is chosen on a deck-orbit representative (shortest
//! diagonal, deterministic tie-break) and transported to the other orbit
//! members, so quotient examples keep an exact simplicial deck action at
//! every level.

use std::collections::HashMap;
use std::fmt::Write as _;

use nk6_core::quat::Quat;
use nk6_core::so3rep;

use crate::sparse::Csr;
use crate::LabError;

pub const LOCAL_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone)]
pub struct SimplicialComplex3 {
    /// vertex coordinates (unit quaternions for sphere meshes)
    pub vertices: Vec<[f64; 4]>,
    /// sorted vertex 4-tuples
    pub tets: Vec<[usize; 4]>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    edge_index: HashMap<[usize; 2], usize>,
    face_index: HashMap<[usize; 3], usize>,
    /// signed incidence: edges x vertices
    pub d0: Csr,
    /// faces x edges
    pub d1: Csr,
    /// tets x faces
    pub d2: Csr,
    /// unwrapped per-tet corner coordinates (periodic meshes); sphere meshes
    /// read corners from `vertices` directly
    pub corner_override: Option<Vec<[[f64; 4]; 4]>>,
}

impl SimplicialComplex3 {
    pub fn from_tets(vertices: Vec<[f64; 4]>, mut tets: Vec<[usize; 4]>) -> Self {
        for t in tets.iter_mut() {
            t.sort_unstable();
        }
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut face_index: HashMap<[usize; 3], usize> = HashMap::new();
        for t in &tets {
            for (a, b) in LOCAL_PAIRS {
                let e = [t[a], t[b]];
                if !edge_index.contains_key(&e) {
                    edge_index.insert(e, edges.len());
                    edges.push(e);
                }
            }
            for skip in 0..4 {
                let mut f = [0usize; 3];
                let mut n = 0;
                for (k, v) in t.iter().enumerate() {
                    if k != skip {
                        f[n] = *v;
                        n += 1;
                    }
                }
                if !face_index.contains_key(&f) {
                    face_index.insert(f, faces.len());
                    faces.push(f);
                }
            }
        }
        let nv = vertices.len();
        let ne = edges.len();
        let nf = faces.len();
        let mut coo0 = Vec::with_capacity(2 * ne);
        for (ei, e) in edges.iter().enumerate() {
            coo0.push((ei as u32, e[0] as u32, -1.0));
            coo0.push((ei as u32, e[1] as u32, 1.0));
        }
        let d0 = Csr::from_coo(ne, nv, coo0);
        let mut coo1 = Vec::with_capacity(3 * nf);
        for (fi, f) in faces.iter().enumerate() {
            let (i, j, k) = (f[0], f[1], f[2]);
            coo1.push((fi as u32, edge_index[&[j, k]] as u32, 1.0));
            coo1.push((fi as u32, edge_index[&[i, k]] as u32, -1.0));
            coo1.push((fi as u32, edge_index[&[i, j]] as u32, 1.0));
        }
        let d1 = Csr::from_coo(nf, ne, coo1);
        let mut coo2 = Vec::with_capacity(4 * tets.len());
        for (ti, t) in tets.iter().enumerate() {
            for skip in 0..4 {
                let mut f = [0usize; 3];
                let mut n = 0;
                for (k, v) in t.iter().enumerate() {
                    if k != skip {
                        f[n] = *v;
                        n += 1;
                    }
                }
                let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
                coo2.push((ti as u32, face_index[&f] as u32, sign));
            }
        }
        let d2 = Csr::from_coo(tets.len(), nf, coo2);
        SimplicialComplex3 {
            vertices,
            tets,
            edges,
            faces,
            edge_index,
            face_index,
            d0,
            d1,
            d2,
            corner_override: None,
        }
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edge_index.get(&key).copied()
    }

    /// Face id of a sorted vertex triple.
    pub fn face_id(&self, tri: &[usize; 3]) -> Option<usize> {
        self.face_index.get(tri).copied()
    }

    pub fn tet_id(&self, t: &[usize; 4]) -> Option<usize> {
        let mut s = *t;
        s.sort_unstable();
        self.tets.iter().position(|x| *x == s)
    }

    pub fn corner(&self, tet: usize, k: usize) -> [f64; 4] {
        if let Some(ov) = &self.corner_override {
            ov[tet][k]
        } else {
            self.vertices[self.tets[tet][k]]
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
            - self.tets.len() as i64
    }

    /// Every face of a closed 3-manifold mesh is shared by exactly two tets.
    pub fn is_closed(&self) -> bool {
        let mut count = vec![0usize; self.faces.len()];
        for r in 0..self.d2.nrows {
            let (cols, _) = self.d2.row(r);
            for c in cols {
                count[*c as usize] += 1;
            }
        }
        count.iter().all(|&c| c == 2)
    }

    /// d compositions vanish identically (exact integer cancellation).
    pub fn boundary_squared_is_zero(&self) -> bool {
        let m1 = self.d1.matmul(&self.d0);
        let m2 = self.d2.matmul(&self.d1);
        m1.data.iter().all(|v| *v == 0.0) && m2.data.iter().all(|v| *v == 0.0)
    }

    /// FNV-1a hash of the combinatorics and coordinates.
    pub fn hash(&self) -> String {
        let mut h = Fnv::new();
        h.write_usize(self.vertices.len());
        h.write_usize(self.tets.len());
        for v in &self.vertices {
            for c in v {
                h.write_u64(c.to_bits());
            }
        }
        for t in &self.tets {
            for v in t {
                h.write_usize(*v);
            }
        }
        format!("{:016x}", h.finish())
    }
}

pub struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    pub fn write_u8(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x100000001b3);
    }
    pub fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.write_u8(b);
        }
    }
    pub fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
    pub fn write_bytes(&mut self, bs: &[u8]) {
        for b in bs {
            self.write_u8(*b);
        }
    }
    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv {
    fn default() -> Self {
        Self::new()
    }
}

/// Vertex permutations of the deck group (identity included).
#[derive(Debug, Clone)]
pub struct DeckGroup {
    pub perms: Vec<Vec<usize>>,
}

impl DeckGroup {
    pub fn trivial(nv: usize) -> Self {
        DeckGroup {
            perms: vec![(0..nv).collect()],
        }
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }
}

/// Parent bookkeeping of one refinement step: for each coarse tet, its four
/// vertices and the six midpoint vertex ids (fine numbering), in the order
/// of `LOCAL_PAIRS`.
#[derive(Debug, Clone)]
pub struct RefineLink {
    pub tet_vertices: Vec<[usize; 4]>,
    pub tet_midpoints: Vec<[usize; 6]>,
}

/// The boundary complex of the 4-dimensional cross-polytope: 8 vertices,
/// 16 regular tets. Vertex k+4 is the antipode of vertex k.
pub fn cell16() -> SimplicialComplex3 {
    let mut vertices = Vec::with_capacity(8);
    for sign in [1.0, -1.0] {
        for k in 0..4 {
            let mut v = [0.0; 4];
            v[k] = sign;
            vertices.push(v);
        }
    }
    let mut tets = Vec::with_capacity(16);
    for mask in 0..16usize {
        let mut t = [0usize; 4];
        for (k, tv) in t.iter_mut().enumerate() {
            *tv = if mask & (1 << k) == 0 { k } else { k + 4 };
        }
        tets.push(t);
    }
    SimplicialComplex3::from_tets(vertices, tets)
}

pub fn cell16_antipodal_deck() -> DeckGroup {
    DeckGroup {
        perms: vec![
            (0..8).collect(),
            (0..8).map(|i| (i + 4) % 8).collect(),
        ],
    }
}

/// The 600-cell boundary complex on the binary icosahedral vertex set.
pub fn cell600() -> SimplicialComplex3 {
    let group = so3rep::binary_icosahedral();
    let vertices: Vec<[f64; 4]> = group.iter().map(|q| q.0).collect();
    let n = vertices.len();
    // neighbors: inner product cos(pi/5) = phi/2
    let phi_half = (1.0 + 5.0f64.sqrt()) / 4.0;
    let is_adj = |a: usize, b: usize| -> bool {
        let d: f64 = vertices[a].iter().zip(vertices[b].iter()).map(|(x, y)| x * y).sum();
        (d - phi_half).abs() < 1e-9
    };
    let mut tets = Vec::with_capacity(600);
    for a in 0..n {
        for b in (a + 1)..n {
            if !is_adj(a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if !(is_adj(a, c) && is_adj(b, c)) {
                    continue;
                }
                for d in (c + 1)..n {
                    if is_adj(a, d) && is_adj(b, d) && is_adj(c, d) {
                        tets.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    assert_eq!(tets.len(), 600, "600-cell enumeration");
    SimplicialComplex3::from_tets(vertices, tets)
}

/// Deck group of right multiplications by the given unit quaternions,
/// acting on a mesh whose vertex set is closed under them.
pub fn right_multiplication_deck(mesh: &SimplicialComplex3, elements: &[Quat]) -> Result<DeckGroup, LabError> {
    let locate = |q: &Quat| -> Option<usize> {
        mesh.vertices.iter().position(|v| {
            v.iter()
                .zip(q.0.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                < 1e-12
        })
    };
    let mut perms = Vec::with_capacity(elements.len());
    for h in elements {
        let mut perm = vec![usize::MAX; mesh.vertices.len()];
        for (vi, v) in mesh.vertices.iter().enumerate() {
            let q = Quat(*v).mul(h);
            let target = locate(&q).ok_or_else(|| {
                LabError::Mesh("deck element does not preserve the vertex set".into())
            })?;
            perm[vi] = target;
        }
        perms.push(perm);
    }
    Ok(DeckGroup { perms })
}

/// Uniform 1-to-8 subdivision with midpoints projected to the unit sphere.
/// The interior diagonal is the shortest one, chosen on deck-orbit
/// representatives and transported, so refinement commutes with the deck.
pub fn refine(
    mesh: &SimplicialComplex3,
    deck: &DeckGroup,
) -> (SimplicialComplex3, RefineLink, DeckGroup) {
    let nv = mesh.vertices.len();
    let mut vertices = mesh.vertices.clone();
    // midpoint of edge e gets id nv + e
    for e in &mesh.edges {
        let a = mesh.vertices[e[0]];
        let b = mesh.vertices[e[1]];
        let mut m = [0.0; 4];
        let mut n2 = 0.0;
        for k in 0..4 {
            m[k] = a[k] + b[k];
            n2 += m[k] * m[k];
        }
        let n = n2.sqrt();
        for mk in m.iter_mut() {
            *mk /= n;
        }
        vertices.push(m);
    }
    let midpoint_of = |i: usize, j: usize| -> usize {
        let key = if i < j { [i, j] } else { [j, i] };
        nv + mesh.edge_index[&key]
    };

    // extend deck permutations to midpoints
    let mut new_perms = Vec::with_capacity(deck.perms.len());
    for perm in &deck.perms {
        let mut np = vec![usize::MAX; vertices.len()];
        np[..nv].copy_from_slice(perm);
        for (ei, e) in mesh.edges.iter().enumerate() {
            np[nv + ei] = midpoint_of(perm[e[0]], perm[e[1]]);
        }
        new_perms.push(np);
    }
    let new_deck = DeckGroup { perms: new_perms };

    // tet orbits under the deck, with transporters
    let tet_lookup: HashMap<[usize; 4], usize> = mesh
        .tets
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, i))
        .collect();
    // for each tet: (representative tet, index of transporting deck element)
    let mut rep_of = vec![(usize::MAX, usize::MAX); mesh.tets.len()];
    for (ti, t) in mesh.tets.iter().enumerate() {
        let mut best = (ti, 0usize);
        for (gi, perm) in deck.perms.iter().enumerate() {
            let mut img = [perm[t[0]], perm[t[1]], perm[t[2]], perm[t[3]]];
            img.sort_unstable();
            let target = tet_lookup[&img];
            if target < best.0 {
                best = (target, gi);
            }
        }
        // best.1 maps ti -> rep? we need the transporter rep -> ti; find it
        rep_of[ti] = best;
    }
    // diagonal choice per representative (local pair indices into the
    // opposite-midpoint pairs): candidates (01,23), (02,13), (03,12)
    const DIAGS: [(usize, usize); 3] = [(0, 5), (1, 4), (2, 3)];
    let mut diag_choice = vec![usize::MAX; mesh.tets.len()];
    for (ti, t) in mesh.tets.iter().enumerate() {
        if rep_of[ti].0 != ti {
            continue;
        }
        let mids: Vec<usize> = LOCAL_PAIRS
            .iter()
            .map(|&(a, b)| midpoint_of(t[a], t[b]))
            .collect();
        let mut best = 0usize;
        let mut best_len = f64::INFINITY;
        for (k, &(p, q)) in DIAGS.iter().enumerate() {
            let a = vertices[mids[p]];
            let b = vertices[mids[q]];
            let len: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            if len < best_len - 1e-12 {
                best_len = len;
                best = k;
            }
        }
        diag_choice[ti] = best;
    }
    // transport to orbit members: find the transporter g with g(rep) = T
    for (ti, t) in mesh.tets.iter().enumerate() {
        if rep_of[ti].0 == ti && diag_choice[ti] != usize::MAX {
            continue;
        }
        let rep = rep_of[ti].0;
        let trep = mesh.tets[rep];
        let mut found = false;
        for perm in &deck.perms {
            let mut img = [perm[trep[0]], perm[trep[1]], perm[trep[2]], perm[trep[3]]];
            img.sort_unstable();
            if img == *t {
                // map the representative's diagonal midpoints through the perm
                let rep_mids: Vec<usize> = LOCAL_PAIRS
                    .iter()
                    .map(|&(a, b)| midpoint_of(trep[a], trep[b]))
                    .collect();
                let (p, q) = DIAGS[diag_choice[rep]];
                let img_a = new_deck.perms[deck.perms.iter().position(|pp| std::ptr::eq(pp, perm)).unwrap()][rep_mids[p]];
                let img_b = new_deck.perms[deck.perms.iter().position(|pp| std::ptr::eq(pp, perm)).unwrap()][rep_mids[q]];
                // identify which diagonal of T this is
                let t_mids: Vec<usize> = LOCAL_PAIRS
                    .iter()
                    .map(|&(a, b)| midpoint_of(t[a], t[b]))
                    .collect();
                for (k, &(p2, q2)) in DIAGS.iter().enumerate() {
                    let pair = [t_mids[p2], t_mids[q2]];
                    if (pair[0] == img_a && pair[1] == img_b) || (pair[0] == img_b && pair[1] == img_a) {
                        diag_choice[ti] = k;
                        found = true;
                        break;
                    }
                }
                if found {
                    break;
                }
            }
        }
        assert!(found || rep_of[ti].0 == ti, "diagonal transport failed");
    }

    // children
    let mut tets = Vec::with_capacity(8 * mesh.tets.len());
    let mut link_tets = Vec::with_capacity(mesh.tets.len());
    let mut link_mids = Vec::with_capacity(mesh.tets.len());
    for (ti, t) in mesh.tets.iter().enumerate() {
        let m: Vec<usize> = LOCAL_PAIRS
            .iter()
            .map(|&(a, b)| midpoint_of(t[a], t[b]))
            .collect();
        // corner tets
        tets.push([t[0], m[0], m[1], m[2]]);
        tets.push([t[1], m[0], m[3], m[4]]);
        tets.push([t[2], m[1], m[3], m[5]]);
        tets.push([t[3], m[2], m[4], m[5]]);
        // octahedron split along the chosen diagonal
        let (p, q) = DIAGS[diag_choice[ti]];
        let (da, db) = (m[p], m[q]);
        let ring: Vec<usize> = match diag_choice[ti] {
            // diagonal (m01, m23): equatorial cycle m02 m12 m13 m03
            0 => vec![m[1], m[3], m[4], m[2]],
            // diagonal (m02, m13): cycle m01 m12 m23 m03
            1 => vec![m[0], m[3], m[5], m[2]],
            // diagonal (m03, m12): cycle m01 m13 m23 m02
            _ => vec![m[0], m[4], m[5], m[1]],
        };
        for k in 0..4 {
            tets.push([da, db, ring[k], ring[(k + 1) % 4]]);
        }
        link_tets.push(*t);
        link_mids.push([m[0], m[1], m[2], m[3], m[4], m[5]]);
    }
    let fine = SimplicialComplex3::from_tets(vertices, tets);
    (
        fine,
        RefineLink {
            tet_vertices: link_tets,
            tet_midpoints: link_mids,
        },
        new_deck,
    )
}

/// Mesh hierarchy: the seed plus `level` uniform refinements, with deck
/// permutations carried along each level.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    pub levels: Vec<SimplicialComplex3>,
    pub links: Vec<RefineLink>,
    pub decks: Vec<DeckGroup>,
}

impl MeshHierarchy {
    pub fn build(seed: SimplicialComplex3, deck: DeckGroup, level: usize) -> Self {
        let mut levels = vec![seed];
        let mut decks = vec![deck];
        let mut links = Vec::new();
        for _ in 0..level {
            let (fine, link, newdeck) = refine(levels.last().unwrap(), decks.last().unwrap());
            levels.push(fine);
            links.push(link);
            decks.push(newdeck);
        }
        MeshHierarchy {
            levels,
            links,
            decks,
        }
    }

    pub fn finest(&self) -> &SimplicialComplex3 {
        self.levels.last().unwrap()
    }

    pub fn finest_deck(&self) -> &DeckGroup {
        self.decks.last().unwrap()
    }
}

/// Flat 3-torus reference mesh: n^3 vertices, Freudenthal 6-tet cubes,
/// periodic wrap, with unwrapped corner coordinates for the metric.
pub fn flat_torus(n: usize) -> SimplicialComplex3 {
    assert!(n >= 3, "periodic mesh needs n >= 3 to avoid duplicate edges");
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize, k: usize| -> usize { ((i % n) * n + (j % n)) * n + (k % n) };
    let mut vertices = vec![[0.0; 4]; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                vertices[idx(i, j, k)] = [i as f64 * h, j as f64 * h, k as f64 * h, 0.0];
            }
        }
    }
    // Freudenthal: 6 tets per cube along vertex orderings of path permutations
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    let mut corners: Vec<[[f64; 4]; 4]> = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for perm in PERMS {
                    let mut offs = [[0usize; 3]; 4];
                    for step in 0..3 {
                        offs[step + 1] = offs[step];
                        offs[step + 1][perm[step]] += 1;
                    }
                    let mut ids = [0usize; 4];
                    let mut pos = [[0.0; 4]; 4];
                    for (c, off) in offs.iter().enumerate() {
                        ids[c] = idx(i + off[0], j + off[1], k + off[2]);
                        pos[c] = [
                            (i + off[0]) as f64 * h,
                            (j + off[1]) as f64 * h,
                            (k + off[2]) as f64 * h,
                            0.0,
                        ];
                    }
                    // sort ids and carry coordinates along
                    let mut order = [0usize, 1, 2, 3];
                    order.sort_by_key(|&c| ids[c]);
                    let tet = [ids[order[0]], ids[order[1]], ids[order[2]], ids[order[3]]];
                    let pos_sorted = [pos[order[0]], pos[order[1]], pos[order[2]], pos[order[3]]];
                    tets.push(tet);
                    corners.push(pos_sorted);
                }
            }
        }
    }
    // from_tets re-sorts tets (already sorted) and keeps order
    let mut mesh = SimplicialComplex3::from_tets(vertices, tets);
    mesh.corner_override = Some(corners);
    mesh
}

/// NK6MESH 1 ASCII format: versioned header, vertex coordinates, tet indices.
/// Floats use shortest round-trip formatting, so write-read-write is
/// byte-identical.
pub fn write_nk6mesh(mesh: &SimplicialComplex3) -> String {
    let mut out = String::new();
    out.push_str("NK6MESH 1\n");
    let _ = writeln!(out, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {} {} {}", v[0], v[1], v[2], v[3]);
    }
    let _ = writeln!(out, "tets {}", mesh.tets.len());
    for t in &mesh.tets {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

pub fn read_nk6mesh(text: &str) -> Result<SimplicialComplex3, LabError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| LabError::Format("empty mesh file".into()))?;
    if header.trim() != "NK6MESH 1" {
        return Err(LabError::Format(format!("bad mesh header: {header:?}")));
    }
    let vline = lines.next().ok_or_else(|| LabError::Format("missing vertex count".into()))?;
    let nv: usize = vline
        .strip_prefix("vertices ")
        .ok_or_else(|| LabError::Format("missing 'vertices'".into()))?
        .trim()
        .parse()
        .map_err(|e| LabError::Format(format!("vertex count: {e}")))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| LabError::Format("truncated vertices".into()))?;
        let mut v = [0.0; 4];
        let mut it = line.split_whitespace();
        for c in v.iter_mut() {
            *c = it
                .next()
                .ok_or_else(|| LabError::Format("short vertex line".into()))?
                .parse()
                .map_err(|e| LabError::Format(format!("vertex coord: {e}")))?;
        }
        vertices.push(v);
    }
    let tline = lines.next().ok_or_else(|| LabError::Format("missing tet count".into()))?;
    let nt: usize = tline
        .strip_prefix("tets ")
        .ok_or_else(|| LabError::Format("missing 'tets'".into()))?
        .trim()
        .parse()
        .map_err(|e| LabError::Format(format!("tet count: {e}")))?;
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.next().ok_or_else(|| LabError::Format("truncated tets".into()))?;
        let mut t = [0usize; 4];
        let mut it = line.split_whitespace();
        for c in t.iter_mut() {
            *c = it
                .next()
                .ok_or_else(|| LabError::Format("short tet line".into()))?
                .parse()
                .map_err(|e| LabError::Format(format!("tet index: {e}")))?;
        }
        tets.push(t);
    }
    Ok(SimplicialComplex3::from_tets(vertices, tets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell16_counts_and_boundaries() {
        let m = cell16();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.tets.len(), 16);
        assert_eq!(m.edges.len(), 24);
        assert_eq!(m.faces.len(), 32);
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_closed());
        assert!(m.boundary_squared_is_zero());
    }

    #[test]
    fn cell600_counts() {
        let m = cell600();
        assert_eq!(m.vertices.len(), 120);
        assert_eq!(m.tets.len(), 600);
        assert_eq!(m.edges.len(), 720);
        assert_eq!(m.faces.len(), 1200);
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_closed());
    }

    #[test]
    fn refinement_preserves_invariants() {
        let mut mesh = cell16();
        let mut deck = cell16_antipodal_deck();
        for level in 0..3 {
            let (fine, link, newdeck) = refine(&mesh, &deck);
            assert_eq!(fine.tets.len(), 8 * mesh.tets.len(), "level {level}");
            assert_eq!(fine.euler_characteristic(), 0);
            assert!(fine.is_closed());
            assert!(fine.boundary_squared_is_zero());
            assert_eq!(link.tet_vertices.len(), mesh.tets.len());
            // deck perms remain mesh automorphisms: image of every tet is a tet
            let lookup: std::collections::HashMap<[usize; 4], usize> = fine
                .tets
                .iter()
                .enumerate()
                .map(|(i, t)| (*t, i))
                .collect();
            for perm in &newdeck.perms {
                for t in &fine.tets {
                    let mut img = [perm[t[0]], perm[t[1]], perm[t[2]], perm[t[3]]];
                    img.sort_unstable();
                    assert!(lookup.contains_key(&img), "deck broke the refined mesh");
                }
            }
            mesh = fine;
            deck = newdeck;
        }
    }

    #[test]
    fn cell600_deck_for_binary_tetrahedral_subgroup() {
        // the refinement stays equivariant for a nontrivial subgroup deck;
        // take the quaternion group Q8 inside 2I
        let mesh = cell600();
        let q8: Vec<Quat> = vec![
            Quat::new(1.0, 0.0, 0.0, 0.0),
            Quat::new(-1.0, 0.0, 0.0, 0.0),
            Quat::new(0.0, 1.0, 0.0, 0.0),
            Quat::new(0.0, -1.0, 0.0, 0.0),
            Quat::new(0.0, 0.0, 1.0, 0.0),
            Quat::new(0.0, 0.0, -1.0, 0.0),
            Quat::new(0.0, 0.0, 0.0, 1.0),
            Quat::new(0.0, 0.0, 0.0, -1.0),
        ];
        let deck = right_multiplication_deck(&mesh, &q8).unwrap();
        assert_eq!(deck.order(), 8);
        let (fine, _, newdeck) = refine(&mesh, &deck);
        let lookup: std::collections::HashMap<[usize; 4], usize> = fine
            .tets
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, i))
            .collect();
        for perm in &newdeck.perms {
            for t in fine.tets.iter().step_by(97) {
                let mut img = [perm[t[0]], perm[t[1]], perm[t[2]], perm[t[3]]];
                img.sort_unstable();
                assert!(lookup.contains_key(&img));
            }
        }
    }

    #[test]
    fn flat_torus_is_closed() {
        let m = flat_torus(3);
        assert_eq!(m.vertices.len(), 27);
        assert_eq!(m.tets.len(), 6 * 27);
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_closed());
        assert!(m.boundary_squared_is_zero());
    }

    #[test]
    fn nk6mesh_roundtrip_is_byte_identical() {
        let mesh = {
            let m = cell16();
            let d = cell16_antipodal_deck();
            refine(&m, &d).0
        };
        let text = write_nk6mesh(&mesh);
        let back = read_nk6mesh(&text).unwrap();
        let text2 = write_nk6mesh(&back);
        assert_eq!(text, text2);
        assert_eq!(mesh.hash(), back.hash());
    }
}
