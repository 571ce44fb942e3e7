//! Unit quaternions: Hamilton product, exp/log charts on Sp(1), and the
//! covering map onto SO(3).

use crate::fp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat(pub [f64; 4]);

impl Quat {
    pub const ONE: Quat = Quat([1.0, 0.0, 0.0, 0.0]);

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat([w, x, y, z])
    }

    pub fn from_imag(v: [f64; 3]) -> Self {
        Quat([0.0, v[0], v[1], v[2]])
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.0[0]
    }

    pub fn imag(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn conj(&self) -> Quat {
        Quat([self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }

    pub fn dot(&self, o: &Quat) -> f64 {
        self.0.iter().zip(o.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        fp::sqrt(self.dot(self))
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat([self.0[0] / n, self.0[1] / n, self.0[2] / n, self.0[3] / n])
    }

    pub fn scale(&self, c: f64) -> Quat {
        Quat([c * self.0[0], c * self.0[1], c * self.0[2], c * self.0[3]])
    }

    pub fn add(&self, o: &Quat) -> Quat {
        Quat([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }

    pub fn mul(&self, o: &Quat) -> Quat {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Quat([
            a * e - b * f - c * g - d * h,
            a * f + b * e + c * h - d * g,
            a * g - b * h + c * e + d * f,
            a * h + b * g - c * f + d * e,
        ])
    }

    /// exp of a pure-imaginary quaternion v (so exp(v) is a unit quaternion).
    pub fn exp_imag(v: [f64; 3]) -> Quat {
        let u = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let c = fp::cos_sqrt(u);
        let s = fp::sinc_sqrt(u);
        Quat([c, s * v[0], s * v[1], s * v[2]])
    }

    /// Principal log of a unit quaternion, returned as an imaginary 3-vector.
    pub fn log_imag(&self) -> [f64; 3] {
        let q = if self.w() < 0.0 { self.scale(-1.0) } else { *self };
        let im = q.imag();
        let s = fp::sqrt(im[0] * im[0] + im[1] * im[1] + im[2] * im[2]);
        if s < 1e-300 {
            return [0.0, 0.0, 0.0];
        }
        let ang = fp::atan2(s, q.w());
        let f = ang / s;
        [f * im[0], f * im[1], f * im[2]]
    }

    /// The rotation x -> q x q^-1 on imaginary quaternions, as a 3x3 matrix.
    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        let q = self.normalized();
        let (w, x, y, z) = (q.0[0], q.0[1], q.0[2], q.0[3]);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }
}

/// Basis quaternion e_a (a = 1, 2, 3 for i, j, k).
pub fn basis_imag(a: usize) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[a] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamilton_table() {
        let i = Quat::new(0.0, 1.0, 0.0, 0.0);
        let j = Quat::new(0.0, 0.0, 1.0, 0.0);
        let k = Quat::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(i.mul(&j), k);
        assert_eq!(j.mul(&k), i);
        assert_eq!(k.mul(&i), j);
        assert_eq!(i.mul(&i), Quat::new(-1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn exp_log_roundtrip() {
        let v = [0.3, -0.2, 0.7];
        let q = Quat::exp_imag(v);
        assert!((q.norm() - 1.0).abs() < 1e-14);
        let w = q.log_imag();
        for a in 0..3 {
            assert!((v[a] - w[a]).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_is_homomorphism() {
        let p = Quat::exp_imag([0.4, 0.1, -0.3]);
        let q = Quat::exp_imag([-0.2,0.9, 0.5]);
        let rp = p.rotation_matrix();
        let rq = q.rotation_matrix();
        let rpq = p.mul(&q).rotation_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += rp[i][k] * rq[k][j];
                }
                assert!((s - rpq[i][j]).abs() < 1e-13);
            }
        }
    }
}
