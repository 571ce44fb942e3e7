//! Octonion arithmetic over R^8 with a fixed Cayley-Dickson convention,
//! plus the induced cross product and associative 3-form on Im O.
//!
//! The doubling convention is (a, b)(c, d) = (ac - conj(d) b, da + b conj(c)).
//! Every sign-sensitive constant downstream (which triples are associative,
//! the orientation of the calibration) follows from this single choice. The
//! basis multiplication table is generated at compile time by running the
//! doubling recursion on basis elements; `cayley_dickson_mul` re-runs the
//! same recursion on full coefficient vectors at runtime so tests can check
//! the table against an independent route.

use alloc::vec::Vec;

use crate::fp;
use crate::linalg;
use crate::rng::Rng;

/// Basis product e_i e_j = sign * e_k in dimension `n` (n = 1, 2, 4, 8),
/// computed by Cayley-Dickson recursion.
const fn cd_basis_mul(n: usize, i: usize, j: usize) -> (i8, usize) {
    if n == 1 {
        return (1, 0);
    }
    let half = n / 2;
    if i < half && j < half {
        cd_basis_mul(half, i, j)
    } else if i < half && j >= half {
        // (a, 0)(0, d) = (0, d a)
        let (s, k) = cd_basis_mul(half, j - half, i);
        (s, k + half)
    } else if i >= half && j < half {
        // (0, b)(c, 0) = (0, b conj(c))
        let (s, k) = cd_basis_mul(half, i - half, j);
        let cs = if j == 0 { 1 } else { -1 };
        (s * cs, k + half)
    } else {
        // (0, b)(0, d) = (-conj(d) b, 0)
        let (s, k) = cd_basis_mul(half, j - half, i - half);
        let cs = if j - half == 0 { 1 } else { -1 };
        (-s * cs, k)
    }
}

const fn build_mul_table() -> [[(i8, u8); 8]; 8] {
    let mut t = [[(0i8, 0u8); 8]; 8];
    let mut i = 0;
    while i < 8 {
        let mut j = 0;
        while j < 8 {
            let (s, k) = cd_basis_mul(8, i, j);
            t[i][j] = (s, k as u8);
            j += 1;
        }
        i += 1;
    }
    t
}

/// e_i e_j = MUL_TABLE[i][j].0 * e_{MUL_TABLE[i][j].1}
pub const MUL_TABLE: [[(i8, u8); 8]; 8] = build_mul_table();

/// Imaginary-part table for the cross product: for imaginary units
/// u_i = e_{i+1}, u_j = e_{j+1} the entry is (sign, k) with
/// u_i x u_j = sign * u_k, or sign = 0 when the product is real.
const fn build_cross_table() -> [[(i8, u8); 7]; 7] {
    let mut t = [[(0i8, 0u8); 7]; 7];
    let mut i = 0;
    while i < 7 {
        let mut j = 0;
        while j < 7 {
            let (s, k) = cd_basis_mul(8, i + 1, j + 1);
            if k == 0 {
                t[i][j] = (0, 0);
            } else {
                t[i][j] = (s, (k - 1) as u8);
            }
            j += 1;
        }
        i += 1;
    }
    t
}

pub const CROSS_TABLE: [[(i8, u8); 7]; 7] = build_cross_table();

/// Generic Cayley-Dickson product on coefficient slices of length 1, 2, 4 or 8.
/// This is the independent oracle route; the table above must agree with it.
pub fn cayley_dickson_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(n, y.len());
    if n == 1 {
        return alloc::vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let conj = |z: &[f64]| -> Vec<f64> {
        let mut out = z.to_vec();
        for v in out.iter_mut().skip(1) {
            *v = -*v;
        }
        out
    };
    let sub = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| u - v).collect() };
    let add = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| u + v).collect() };
    let first = sub(&cayley_dickson_mul(a, c), &cayley_dickson_mul(&conj(d), b));
    let second = add(&cayley_dickson_mul(d, a), &cayley_dickson_mul(b, &conj(c)));
    let mut out = first;
    out.extend(second);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Octonion(pub [f64; 8]);

impl Octonion {
    pub const ONE: Octonion = Octonion([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    pub fn zero() -> Self {
        Octonion([0.0; 8])
    }

    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 8];
        c[k] = 1.0;
        Octonion(c)
    }

    pub fn real(&self) -> f64 {
        self.0[0]
    }

    pub fn imag(&self) -> ImOctonion {
        let mut c = [0.0; 7];
        c.copy_from_slice(&self.0[1..]);
        ImOctonion(c)
    }

    pub fn from_parts(re: f64, im: &ImOctonion) -> Self {
        let mut c = [0.0; 8];
        c[0] = re;
        c[1..].copy_from_slice(&im.0);
        Octonion(c)
    }

    pub fn conj(&self) -> Self {
        let mut c = self.0;
        for v in c.iter_mut().skip(1) {
            *v = -*v;
        }
        Octonion(c)
    }

    pub fn dot(&self, o: &Octonion) -> f64 {
        self.0.iter().zip(o.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        fp::sqrt(self.dot(self))
    }

    pub fn add(&self, o: &Octonion) -> Self {
        let mut c = self.0;
        for (v, w) in c.iter_mut().zip(o.0.iter()) {
            *v += w;
        }
        Octonion(c)
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut c = self.0;
        for v in c.iter_mut() {
            *v *= t;
        }
        Octonion(c)
    }

    /// Octonion product with the fixed doubling convention.
    pub fn mul(&self, o: &Octonion) -> Self {
        let mut c = [0.0; 8];
        for i in 0..8 {
            let xi = self.0[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..8 {
                let (s, k) = MUL_TABLE[i][j];
                c[k as usize] += (s as f64) * xi * o.0[j];
            }
        }
        Octonion(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImOctonion(pub [f64; 7]);

impl ImOctonion {
    pub fn zero() -> Self {
        ImOctonion([0.0; 7])
    }

    /// Imaginary basis unit u_k = e_{k+1}, k = 0..7.
    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 7];
        c[k] = 1.0;
        ImOctonion(c)
    }

    pub fn embed(&self) -> Octonion {
        Octonion::from_parts(0.0, self)
    }

    pub fn dot(&self, o: &ImOctonion) -> f64 {
        self.0.iter().zip(o.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        fp::sqrt(self.dot(self))
    }

    pub fn add(&self, o: &ImOctonion) -> Self {
        let mut c = self.0;
        for (v, w) in c.iter_mut().zip(o.0.iter()) {
            *v += w;
        }
        ImOctonion(c)
    }

    pub fn sub(&self, o: &ImOctonion) -> Self {
        let mut c = self.0;
        for (v, w) in c.iter_mut().zip(o.0.iter()) {
            *v -= w;
        }
        ImOctonion(c)
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut c = self.0;
        for v in c.iter_mut() {
            *v *= t;
        }
        ImOctonion(c)
    }

    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm())
    }

    /// Cross product x y = Im(xy) on Im O.
    pub fn cross(&self, o: &ImOctonion) -> ImOctonion {
        let mut c = [0.0; 7];
        for i in 0..7 {
            let xi = self.0[i];
            if xi == 0.0 {
                continue;
            }
            let row = &CROSS_TABLE[i];
            for j in 0..7 {
                let (s, k) = row[j];
                if s != 0 {
                    c[k as usize] += (s as f64) * xi * o.0[j];
                }
            }
        }
        ImOctonion(c)
    }
}

/// The associative 3-form phi(x, y, z) = <x y, z> on Im O.
pub fn phi3(u: &ImOctonion, v: &ImOctonion, w: &ImOctonion) -> f64 {
    u.cross(v).dot(w)
}

/// A G2-adapted frame of a 7-dimensional cross product algebra: seven
/// orthonormal vectors f_1..f_7 whose pairwise products follow the same table
/// as the octonion basis e_1..e_7. Any two such frames are related by an
/// algebra isomorphism, which is how frames are used to build G2 elements.
pub fn cayley_frame<F>(cross: F, seed_a: &[f64], seed_b: &[f64], seed_c: &[f64]) -> Option<[Vec<f64>; 7]>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    let dim = seed_a.len();
    let dotv = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let normv = |x: &[f64]| -> f64 { fp::sqrt(dotv(x, x)) };
    let unit = |x: &[f64]| -> Option<Vec<f64>> {
        let n = normv(x);
        if n < 1e-9 {
            return None;
        }
        Some(x.iter().map(|v| v / n).collect())
    };
    let reject = |x: &[f64], us: &[&Vec<f64>]| -> Vec<f64> {
        let mut out = x.to_vec();
        for u in us {
            let d = dotv(&out, u);
            for (o, w) in out.iter_mut().zip(u.iter()) {
                *o -= d * w;
            }
        }
        out
    };
    let f1 = unit(seed_a)?;
    let f2 = unit(&reject(seed_b, &[&f1]))?;
    let f3 = cross(&f1, &f2);
    if (normv(&f3) - 1.0).abs() > 1e-8 {
        return None;
    }
    let f4 = unit(&reject(seed_c, &[&f1, &f2, &f3]))?;
    let f5 = cross(&f1, &f4);
    let f6 = cross(&f2, &f4);
    let f7 = cross(&f3, &f4);
    for f in [&f5, &f6, &f7] {
        if (normv(f) - 1.0).abs() > 1e-8 || f.len() != dim {
            return None;
        }
    }
    Some([f1, f2, f3, f4, f5, f6, f7])
}

/// A Haar-ish random G2 element as a 7x7 orthogonal matrix: the automorphism
/// mapping the standard basis to a randomly seeded Cayley frame.
pub fn random_g2(rng: &mut Rng) -> linalg::Mat {
    loop {
        let mut seeds = [[0.0f64; 7]; 3];
        for s in seeds.iter_mut() {
            rng.fill_normal(s);
        }
        let cross = |x: &[f64], y: &[f64]| -> Vec<f64> {
            let mut a = [0.0; 7];
            let mut b = [0.0; 7];
            a.copy_from_slice(x);
            b.copy_from_slice(y);
            ImOctonion(a).cross(&ImOctonion(b)).0.to_vec()
        };
        if let Some(frame) = cayley_frame(cross, &seeds[0], &seeds[1], &seeds[2]) {
            let mut m = linalg::Mat::zeros(7, 7);
            for (j, f) in frame.iter().enumerate() {
                for i in 0..7 {
                    m[(i, j)] = f[i];
                }
            }
            return m;
        }
    }
}

/// Random unit vector in R^7.
pub fn random_unit_im(rng: &mut Rng) -> ImOctonion {
    loop {
        let mut c = [0.0; 7];
        rng.fill_normal(&mut c);
        let v = ImOctonion(c);
        let n = v.norm();
        if n > 1e-6 {
            return v.scale(1.0 / n);
        }
    }
}

/// Random orthonormal triple in R^7 (Gram-Schmidt on gaussian samples).
pub fn random_orthonormal_triple(rng: &mut Rng) -> [ImOctonion; 3] {
    loop {
        let a = random_unit_im(rng);
        let mut b = random_unit_im(rng);
        b = b.sub(&a.scale(a.dot(&b)));
        let nb = b.norm();
        if nb < 1e-6 {
            continue;
        }
        b = b.scale(1.0 / nb);
        let mut c = random_unit_im(rng);
        c = c.sub(&a.scale(a.dot(&c)));
        c = c.sub(&b.scale(b.dot(&c)));
        let nc = c.norm();
        if nc < 1e-6 {
            continue;
        }
        c = c.scale(1.0 / nc);
        return [a, b, c];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oct_from(v: &[f64]) -> Octonion {
        let mut c = [0.0; 8];
        c.copy_from_slice(v);
        Octonion(c)
    }

    fn random_oct(rng: &mut Rng) -> Octonion {
        let mut c = [0.0; 8];
        rng.fill_normal(&mut c);
        Octonion(c)
    }

    #[test]
    fn table_matches_doubling_oracle_on_basis() {
        for i in 0..8 {
            let mut x = [0.0; 8];
            x[i] = 1.0;
            for j in 0..8 {
                let mut y = [0.0; 8];
                y[j] = 1.0;
                let via_oracle = cayley_dickson_mul(&x, &y);
                let via_table = oct_from(&x).mul(&oct_from(&y));
                for k in 0..8 {
                    assert_eq!(via_oracle[k], via_table.0[k], "e{i} e{j} component {k}");
                }
            }
        }
    }

    #[test]
    fn table_matches_doubling_oracle_on_random_inputs() {
        let mut rng = Rng::new(11);
        for _ in 0..200 {
            let x = random_oct(&mut rng);
            let y = random_oct(&mut rng);
            let via_oracle = cayley_dickson_mul(&x.0, &y.0);
            let via_table = x.mul(&y);
            for k in 0..8 {
                assert!((via_oracle[k] - via_table.0[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_and_fixed_signs() {
        let x = Octonion([0.3, -1.2, 0.4, 2.0, -0.7, 0.1, 0.9, -0.5]);
        assert_eq!(Octonion::ONE.mul(&x), x);
        assert_eq!(x.mul(&Octonion::ONE), x);
        // e1 e2 = e3 under this convention
        assert_eq!(Octonion::basis(1).mul(&Octonion::basis(2)), Octonion::basis(3));
        assert_eq!(
            ImOctonion::basis(0).cross(&ImOctonion::basis(1)),
            ImOctonion::basis(2)
        );
        assert!((phi3(&ImOctonion::basis(0), &ImOctonion::basis(1), &ImOctonion::basis(2)) - 1.0).abs() == 0.0);
    }

    #[test]
    fn norm_multiplicative() {
        let mut rng = Rng::new(3);
        for _ in 0..10_000 {
            let x = random_oct(&mut rng);
            let y = random_oct(&mut rng);
            let lhs = x.mul(&y).norm();
            let rhs = x.norm() * y.norm();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn conjugation_gives_norm_square() {
        let mut rng = Rng::new(5);
        for _ in 0..1000 {
            let x = random_oct(&mut rng);
            let p = x.mul(&x.conj());
            assert!((p.0[0] - x.dot(&x)).abs() < 1e-12 * (1.0 + x.dot(&x)));
            for k in 1..8 {
                assert!(p.0[k].abs() < 1e-12 * (1.0 + x.dot(&x)));
            }
        }
    }

    #[test]
    fn alternative_law() {
        let mut rng = Rng::new(17);
        for _ in 0..2000 {
            let x = random_oct(&mut rng);
            let y = random_oct(&mut rng);
            let lhs = x.mul(&x).mul(&y);
            let rhs = x.mul(&x.mul(&y));
            let scale = 1.0 + lhs.norm();
            for k in 0..8 {
                assert!((lhs.0[k] - rhs.0[k]).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn cross_is_alternating_and_orthogonal() {
        let mut rng = Rng::new(23);
        for _ in 0..2000 {
            let u = random_unit_im(&mut rng).scale(rng.range(0.1, 3.0));
            let v = random_unit_im(&mut rng).scale(rng.range(0.1, 3.0));
            assert!(u.cross(&u).norm() < 1e-13);
            let c = u.cross(&v);
            assert!(c.dot(&u).abs() < 1e-12 * (1.0 + c.norm()));
            assert!(c.dot(&v).abs() < 1e-12 * (1.0 + c.norm()));
            // Lagrange identity
            let lhs = c.dot(&c);
            let rhs = u.dot(&u) * v.dot(&v) - u.dot(&v) * u.dot(&v);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn cross_consistent_with_mul_decomposition() {
        // mul on imaginaries decomposes as -<u,v> + u x v
        let mut rng = Rng::new(29);
        for _ in 0..2000 {
            let u = random_unit_im(&mut rng).scale(rng.range(0.1, 2.0));
            let v = random_unit_im(&mut rng).scale(rng.range(0.1, 2.0));
            let m = u.embed().mul(&v.embed());
            assert!((m.real() + u.dot(&v)).abs() < 1e-13 * (1.0 + u.dot(&v).abs()));
            let im = m.imag();
            let c = u.cross(&v);
            for k in 0..7 {
                assert!((im.0[k] - c.0[k]).abs() < 1e-13 * (1.0 + c.norm()));
            }
        }
    }

    #[test]
    fn phi_alternating_and_comass_one() {
        let mut rng = Rng::new(31);
        let mut max_abs: f64 = 0.0;
        for _ in 0..100_000 {
            let [a, b, c] = random_orthonormal_triple(&mut rng);
            let val = phi3(&a, &b, &c);
            assert!(phi3(&a, &b, &a).abs() < 1e-12);
            assert!(val.abs() <= 1.0 + 1e-12);
            max_abs = max_abs.max(val.abs());
        }
        // values arbitrarily close to 1 are attained near associative triples;
        // with 1e5 samples the observed sup should already be close
        assert!(max_abs > 0.99, "observed comass sup {max_abs}");
        // exact equality on an associative triple
        assert!(
            (phi3(&ImOctonion::basis(0), &ImOctonion::basis(1), &ImOctonion::basis(2)) - 1.0).abs()
                < 1e-15
        );
    }

    #[test]
    fn random_g2_preserves_phi() {
        let mut rng = Rng::new(37);
        for _ in 0..10 {
            let g = random_g2(&mut rng);
            // orthogonality
            let gtg = g.transpose().matmul(&g);
            for i in 0..7 {
                for j in 0..7 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((gtg[(i, j)] - expect).abs() < 1e-12);
                }
            }
            for _ in 0..50 {
                let u = random_unit_im(&mut rng);
                let v = random_unit_im(&mut rng);
                let w = random_unit_im(&mut rng);
                let gu = ImOctonion(g.apply(&u.0).try_into().unwrap());
                let gv = ImOctonion(g.apply(&v.0).try_into().unwrap());
                let gw = ImOctonion(g.apply(&w.0).try_into().unwrap());
                assert!((phi3(&gu, &gv, &gw) - phi3(&u, &v, &w)).abs() < 1e-10);
            }
        }
    }
}
