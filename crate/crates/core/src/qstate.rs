//! Qubit states: parameterizations, 2x2 and 4x4 density matrices, features
//! and partial trace.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Tolerance for states built directly from a parameterization.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for states derived through maskers (accumulated rounding).
pub const DERIVED_TOL: f64 = 1e-10;

/// Angles `(x, y)` of the pure state `cos(x/2)|0> + e^{iy} sin(x/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureParams {
    x: f64,
    y: f64,
}

impl PureParams {
    /// `x` must lie in `[0, pi]`; `y` is reduced modulo `2 pi`.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("non-finite angles ({x}, {y})")));
        }
        if !(0.0..=PI).contains(&x) {
            return Err(Error::Domain(format!("polar angle x = {x} outside [0, pi]")));
        }
        Ok(Self {
            x,
            y: normalize_angle(y),
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Amplitudes on `|0>` and `|1>`.
    pub fn amplitudes(&self) -> [C64; 2] {
        let (s, c) = (self.x / 2.0).sin_cos();
        [C64::new(c, 0.0), C64::from_polar(s, self.y)]
    }

    /// Point on the unit Bloch sphere.
    pub fn bloch(&self) -> BlochVector {
        let (sx, cx) = self.x.sin_cos();
        let (sy, cy) = self.y.sin_cos();
        BlochVector {
            r: [sx * cy, sx * sy, cx],
        }
    }

    /// Inverse of [`PureParams::bloch`] for a (near) unit vector.
    pub fn from_bloch(r: &BlochVector) -> Self {
        let [r1, r2, r3] = r.r;
        let norm = r.norm();
        let x = (r3 / norm).clamp(-1.0, 1.0).acos();
        let y = normalize_angle(r2.atan2(r1));
        Self { x, y }
    }
}

/// Reduce an angle into `[0, 2 pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Bloch vector `(r1, r2, r3)` with `|r| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    r: [f64; 3],
}

impl BlochVector {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        let r = [r1, r2, r3];
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite Bloch vector {r:?}")));
        }
        let n2 = r1 * r1 + r2 * r2 + r3 * r3;
        if n2 > 1.0 + CONSTRUCTION_TOL {
            return Err(Error::Domain(format!(
                "Bloch vector {r:?} has squared norm {n2} > 1"
            )));
        }
        Ok(Self { r })
    }

    pub fn components(&self) -> [f64; 3] {
        self.r
    }

    pub fn norm(&self) -> f64 {
        self.r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64; 3]) -> f64 {
        self.r.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// The three real features `(Re rho00, Re rho10, Im rho10)` of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; 3]);

impl FeatureVector {
    pub fn new(f1: f64, f2: f64, f3: f64) -> Self {
        Self([f1, f2, f3])
    }

    pub fn as_array(&self) -> &[f64; 3] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: [[C64; 2]; 2],
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at `tol`.
    pub fn from_matrix(m: [[C64; 2]; 2], tol: f64) -> Result<Self> {
        let herm = (m[0][1] - m[1][0].conj()).norm().max(m[0][0].im.abs()).max(m[1][1].im.abs());
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m[0][0].re + m[1][1].re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let rho = Self { m };
        let [_, lo] = rho.eigenvalues();
        if lo < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(rho)
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    pub fn matrix(&self) -> &[[C64; 2]; 2] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    /// Eigenvalues from trace and determinant, largest first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let off = self.m[1][0].norm_sqr();
        let half_tr = (a + d) / 2.0;
        let disc = (((a - d) / 2.0).powi(2) + off).sqrt();
        [half_tr + disc, half_tr - disc]
    }

    /// Pauli expectations `(Tr rho s1, Tr rho s2, Tr rho s3)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let r10 = self.m[1][0];
        [2.0 * r10.re, 2.0 * r10.im, self.m[0][0].re - self.m[1][1].re]
    }

    /// Reconstructs the state from its features (lossless for qubits).
    pub fn from_features(f: &FeatureVector) -> Result<Self> {
        let [f1, f2, f3] = f.0;
        let lower = C64::new(f2, f3);
        Self::from_matrix(
            [
                [C64::new(f1, 0.0), lower.conj()],
                [lower, C64::new(1.0 - f1, 0.0)],
            ],
            CONSTRUCTION_TOL,
        )
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let mut max = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                max = max.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        max
    }
}

/// `|(x,y)><(x,y)|`.
pub fn pure_density(p: &PureParams) -> DensityMatrix {
    let a = p.amplitudes();
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i] * a[j].conj();
        }
    }
    // Diagonals of an outer product are real; drop the rounding residue.
    m[0][0].im = 0.0;
    m[1][1].im = 0.0;
    DensityMatrix { m }
}

/// `(I + r1 s1 + r2 s2 + r3 s3) / 2`.
pub fn mixed_density(r: &BlochVector) -> DensityMatrix {
    let [r1, r2, r3] = r.r;
    let lower = C64::new(r1 / 2.0, r2 / 2.0);
    DensityMatrix {
        m: [
            [C64::new((1.0 + r3) / 2.0, 0.0), lower.conj()],
            [lower, C64::new((1.0 - r3) / 2.0, 0.0)],
        ],
    }
}

/// First diagonal element and the real and imaginary parts of the element
/// below the diagonal.
pub fn features_of_density(rho: &DensityMatrix) -> FeatureVector {
    let r10 = rho.m[1][0];
    FeatureVector([rho.m[0][0].re, r10.re, r10.im])
}

/// Which subsystem of a two-qubit state to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Two-qubit density matrix in the basis `|00>, |01>, |10>, |11>`
/// (first label is subsystem A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitDensity {
    m: [[C64; 4]; 4],
}

impl TwoQubitDensity {
    pub fn from_matrix(m: [[C64; 4]; 4], tol: f64) -> Result<Self> {
        let mut herm = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                herm = herm.max((m[i][j] - m[j][i].conj()).norm());
            }
        }
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let s = Self { m };
        let tr = s.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let lo = s.eigenvalues()[3];
        if lo < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(s)
    }

    /// `|psi><psi|` for a normalized amplitude vector.
    pub fn from_pure(psi: &[C64; 4]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = psi[i] * psi[j].conj();
            }
        }
        Self { m }
    }

    /// `rho_a (x) rho_b`.
    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (ia, ib, ja, jb) in index_quads() {
            m[2 * ia + ib][2 * ja + jb] = a.m[ia][ja] * b.m[ib][jb];
        }
        Self { m }
    }

    pub(crate) fn from_raw(m: [[C64; 4]; 4]) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &[[C64; 4]; 4] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.m[i][i].re).sum()
    }

    /// Eigenvalues (largest first), via the real symmetric embedding
    /// `[[Re, -Im], [Im, Re]]` whose spectrum is each eigenvalue twice.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut emb = vec![0.0; 64];
        for i in 0..4 {
            for j in 0..4 {
                // Symmetrize to absorb rounding in the Hermitian part.
                let z = (self.m[i][j] + self.m[j][i].conj()) * 0.5;
                emb[i * 8 + j] = z.re;
                emb[(i + 4) * 8 + (j + 4)] = z.re;
                emb[i * 8 + (j + 4)] = -z.im;
                emb[(i + 4) * 8 + j] = z.im;
            }
        }
        let (vals, _) = symmetric_eigen(8, &emb);
        [vals[0], vals[2], vals[4], vals[6]]
    }

    /// Numerical rank: eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }
}

fn index_quads() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|k| ((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1))
}

/// Reduced state of the kept subsystem.
pub fn partial_trace(sigma: &TwoQubitDensity, keep: Subsystem) -> DensityMatrix {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = match keep {
                Subsystem::A => (0..2).map(|k| sigma.m[2 * i + k][2 * j + k]).sum(),
                Subsystem::B => (0..2).map(|k| sigma.m[2 * k + i][2 * k + j]).sum(),
            };
        }
    }
    DensityMatrix { m }
}
