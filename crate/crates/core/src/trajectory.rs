use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalised mean spin `<J>/J`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector::new(1.0, 0.0, 0.0);
    pub const Y: BlochVector = BlochVector::new(0.0, 1.0, 0.0);
    pub const Z: BlochVector = BlochVector::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    /// Point on the unit sphere at polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        BlochVector::new(st * cp, st * sp, ct)
    }

    /// `(theta, phi)` of the direction, `phi` in `(-pi, pi]`.
    pub fn angles(&self) -> (f64, f64) {
        let r = self.norm();
        let theta = if r > 0.0 { (self.z / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
        (theta, self.y.atan2(self.x))
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &BlochVector) -> BlochVector {
        BlochVector::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> BlochVector {
        *self * (1.0 / self.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Great-circle angle between the directions of two vectors.
    pub fn angle_to(&self, o: &BlochVector) -> f64 {
        let c = self.cross(o).norm();
        let d = self.dot(o);
        c.atan2(d)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, k: f64) -> BlochVector {
        BlochVector::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Rotation of `v` by `angle` about the unit axis `axis` (right-handed).
pub fn rotate(v: BlochVector, axis: BlochVector, angle: f64) -> BlochVector {
    let (sn, cs) = angle.sin_cos();
    v * cs + axis.cross(&v) * sn + axis * (axis.dot(&v) * (1.0 - cs))
}

/// Time series of mean-spin directions on a uniform grid.
///
/// `czz` carries `<J_z^2>/J^2` when the producing engine knows it; `outcomes`
/// carries the measurement record, where `outcomes[k]` produced `points[k+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<BlochVector>,
    pub czz: Option<Vec<f64>>,
    pub outcomes: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, points: Vec<BlochVector>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::LengthMismatch { left: times.len(), right: points.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("trajectory times must be strictly increasing"));
        }
        Ok(Trajectory { times, points, czz: None, outcomes: None })
    }

    pub fn with_czz(mut self, czz: Vec<f64>) -> Result<Self> {
        if czz.len() != self.points.len() {
            return Err(Error::LengthMismatch { left: czz.len(), right: self.points.len() });
        }
        self.czz = Some(czz);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn last(&self) -> Option<BlochVector> {
        self.points.last().copied()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.z).collect()
    }

    /// `<J_z^2>/J^2` channel, falling back to the factorised `Z^2`.
    pub fn czz_or_factorized(&self) -> Vec<f64> {
        match &self.czz {
            Some(c) => c.clone(),
            None => self.points.iter().map(|p| p.z * p.z).collect(),
        }
    }

    /// CSV with header `t,X,Y,Z,czz,m`. The initial row has an empty `m`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,X,Y,Z,czz,m")?;
        let czz = self.czz_or_factorized();
        for (k, (t, p)) in self.times.iter().zip(&self.points).enumerate() {
            let m = match (&self.outcomes, k) {
                (Some(o), k) if k > 0 => o.get(k - 1).map(|v| format!("{v:.10e}")),
                _ => None,
            };
            writeln!(out, "{t:.6},{:.12},{:.12},{:.12},{:.12},{}", p.x, p.y, p.z, czz[k], m.unwrap_or_default())?;
        }
        Ok(())
    }
}
