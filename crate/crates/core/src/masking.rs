//! Maskable sets and their maskers.
//!
//! Pure states on a spherical circle of the Bloch sphere are masked by a
//! 1 -> 2 qubit isometry; mixed states on a planar disk of the Bloch ball are
//! masked by a two-qubit unitary acting on the state and a blank ancilla.
//! "Masked" means both one-qubit marginals of the output are the same for
//! every member of the set; [`verify_masking_invariance`] checks this
//! numerically.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, TAU};
use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::datagen::{sample_on_circle, sample_on_disk};
use crate::error::{Error, Result};
use crate::qstate::{
    normalize_angle, partial_trace, BlochVector, DensityMatrix, PureParams, Subsystem,
    TwoQubitDensity,
};

/// Default membership tolerance used when labeling generated data.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `cos(beta) cos(x) - sin(beta) sin(x) cos(y - phi)`.
pub fn h_value(beta: f64, phi: f64, x: f64, y: f64) -> f64 {
    beta.cos() * x.cos() - beta.sin() * x.sin() * (y - phi).cos()
}

/// Spherical circle through an anchor pure state: all `(x, y)` with
/// `h_value(beta, phi, x, y) == h_value(beta, phi, x0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSpec {
    anchor: PureParams,
    beta: f64,
    phi: f64,
    h0: f64,
}

impl CircleSpec {
    pub fn new(beta: f64, phi: f64, anchor: PureParams) -> Result<Self> {
        if !(0.0..PI).contains(&beta) {
            return Err(Error::Domain(format!("beta = {beta} outside [0, pi)")));
        }
        if !phi.is_finite() {
            return Err(Error::Domain("phi must be finite".into()));
        }
        let phi = normalize_angle(phi);
        let h0 = h_value(beta, phi, anchor.x(), anchor.y());
        Ok(Self {
            anchor,
            beta,
            phi,
            h0,
        })
    }

    pub fn anchor(&self) -> PureParams {
        self.anchor
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// Unit normal `m` of the plane `m . r = h0` cutting the Bloch sphere.
    pub fn plane_normal(&self) -> [f64; 3] {
        let (sb, cb) = self.beta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [-sb * cp, -sb * sp, cb]
    }
}

/// Planar disk through an anchor Bloch vector: all `r` in the ball with
/// `normal . r == c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSpec {
    anchor: BlochVector,
    alpha: f64,
    theta: f64,
    normal: [f64; 3],
    c: f64,
}

impl DiskSpec {
    /// `alpha` in `[0, pi]`; `theta` in `[0, 2 pi]` (closed), stored modulo `2 pi`.
    pub fn new(alpha: f64, theta: f64, anchor: BlochVector) -> Result<Self> {
        if !(0.0..=PI).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [0, pi]")));
        }
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} outside [0, 2 pi]")));
        }
        let theta = normalize_angle(theta);
        let (sa, ca) = alpha.sin_cos();
        let (st, ct) = theta.sin_cos();
        let normal = [sa * ct, sa * st, ca];
        let c = anchor.dot(&normal);
        Ok(Self {
            anchor,
            alpha,
            theta,
            normal,
            c,
        })
    }

    pub fn anchor(&self) -> BlochVector {
        self.anchor
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

pub fn circle_contains(spec: &CircleSpec, p: &PureParams, tol: f64) -> bool {
    (h_value(spec.beta, spec.phi, p.x(), p.y()) - spec.h0).abs() <= tol
}

pub fn disk_contains(spec: &DiskSpec, r: &BlochVector, tol: f64) -> bool {
    (r.dot(&spec.normal) - spec.c).abs() <= tol
}

/// Isometry from one qubit into two qubits, stored as the 4x2 matrix whose
/// columns are the images of `|0>` and `|1>` (ancilla slice elided).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureMasker {
    beta: f64,
    phi: f64,
    columns: [[C64; 4]; 2],
}

impl PureMasker {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Column `k` is the two-qubit image of `|k>`.
    pub fn column(&self, k: usize) -> &[C64; 4] {
        &self.columns[k]
    }

    /// Largest entry of `|M^dagger M - I_2|`.
    pub fn isometry_defect(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let ip: C64 = (0..4)
                    .map(|k| self.columns[i][k].conj() * self.columns[j][k])
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                max = max.max((ip - target).norm());
            }
        }
        max
    }
}

/// The pure-state masker for circles with parameters `(beta, phi)`.
///
/// Image of `|0>` is `|0>|u0> + |1>|u1>`, image of `|1>` is
/// `|0>|v0> + |1>|v1>`.
pub fn build_pure_masker(beta: f64, phi: f64) -> PureMasker {
    let k = FRAC_1_SQRT_2;
    let (sb, cb) = (beta / 2.0).sin_cos();
    let u0 = C64::from_polar(k * cb, phi + FRAC_PI_4);
    let u1 = C64::from_polar(k * sb, phi - FRAC_PI_4);
    let v0 = -C64::from_polar(k * sb, FRAC_PI_4);
    let v1 = C64::from_polar(k * cb, -FRAC_PI_4);
    PureMasker {
        beta,
        phi: normalize_angle(phi),
        columns: [[u0, u0, u1, -u1], [v0, v0, v1, -v1]],
    }
}

/// The 4x4 mixed-state masker acting on `rho (x) |b><b|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedMasker {
    alpha: f64,
    theta: f64,
    matrix: [[C64; 4]; 4],
    /// Basis index of the blank ancilla state on subsystem B.
    blank: usize,
}

impl MixedMasker {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> &[[C64; 4]; 4] {
        &self.matrix
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    /// Largest entry of `|V^dagger V - I_4|`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let ip: C64 = (0..4)
                    .map(|k| self.matrix[k][i].conj() * self.matrix[k][j])
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                max = max.max((ip - target).norm());
            }
        }
        max
    }
}

/// The disk masker with parameters `(alpha, theta)`; the blank ancilla is `|0>`.
pub fn build_mixed_masker(alpha: f64, theta: f64) -> MixedMasker {
    let (s, c) = (alpha / 2.0).sin_cos();
    let z = C64::new(0.0, 0.0);
    let re = |v: f64| C64::new(v, 0.0);
    let ph = C64::from_polar(1.0, -theta);
    MixedMasker {
        alpha,
        theta: normalize_angle(theta),
        matrix: [
            [re(c), z, ph * s, z],
            [z, re(c), z, ph * s],
            [z, re(s), z, -ph * c],
            [re(s), z, -ph * c, z],
        ],
        blank: 0,
    }
}

/// `|Psi><Psi|` with `|Psi> = M |(x, y)>`.
pub fn mask_pure(m: &PureMasker, p: &PureParams) -> TwoQubitDensity {
    let [a0, a1] = p.amplitudes();
    let mut psi = [C64::new(0.0, 0.0); 4];
    for (k, v) in psi.iter_mut().enumerate() {
        *v = m.columns[0][k] * a0 + m.columns[1][k] * a1;
    }
    TwoQubitDensity::from_pure(&psi)
}

/// `V (rho (x) |b><b|) V^dagger`.
pub fn mask_mixed(m: &MixedMasker, rho: &DensityMatrix) -> TwoQubitDensity {
    // rho (x) |b><b| is supported on basis indices 2a + b.
    let idx = [m.blank, 2 + m.blank];
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    acc += m.matrix[i][idx[a]] * rho.entry(a, b) * m.matrix[j][idx[b]].conj();
                }
            }
            *v = acc;
        }
    }
    TwoQubitDensity::from_raw(out)
}

/// A maskable set of either kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskableSet {
    Circle(CircleSpec),
    Disk(DiskSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Masker {
    Pure(PureMasker),
    Mixed(MixedMasker),
}

impl MaskableSet {
    /// The masker whose parameters match this set.
    pub fn masker(&self) -> Masker {
        match self {
            MaskableSet::Circle(c) => Masker::Pure(build_pure_masker(c.beta, c.phi)),
            MaskableSet::Disk(d) => Masker::Mixed(build_mixed_masker(d.alpha, d.theta)),
        }
    }
}

/// Outcome of [`verify_masking_invariance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingReport {
    pub max_marginal_deviation_a: f64,
    pub max_marginal_deviation_b: f64,
    pub pass: bool,
}

impl fmt::Display for MaskingReport {
    /// Key/value text record.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_marginal_deviation_A={:e}", self.max_marginal_deviation_a)?;
        writeln!(f, "max_marginal_deviation_B={:e}", self.max_marginal_deviation_b)?;
        writeln!(f, "pass={}", self.pass)
    }
}

fn angles_match(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d) <= 1e-12
}

/// Samples members of `set`, masks them and compares both marginals with
/// those of the first sample.
pub fn verify_masking_invariance<R: Rng + ?Sized>(
    set: &MaskableSet,
    masker: &Masker,
    n_samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<MaskingReport> {
    match (set, masker) {
        (MaskableSet::Circle(c), Masker::Pure(m)) => {
            if (c.beta - m.beta).abs() > 1e-12 || !angles_match(c.phi, m.phi) {
                return Err(Error::ParameterMismatch(format!(
                    "circle (beta={}, phi={}) vs masker (beta={}, phi={})",
                    c.beta, c.phi, m.beta, m.phi
                )));
            }
        }
        (MaskableSet::Disk(d), Masker::Mixed(m)) => {
            if (d.alpha - m.alpha).abs() > 1e-12 || !angles_match(d.theta, m.theta) {
                return Err(Error::ParameterMismatch(format!(
                    "disk (alpha={}, theta={}) vs masker (alpha={}, theta={})",
                    d.alpha, d.theta, m.alpha, m.theta
                )));
            }
        }
        _ => {}
    }
    let (dev_a, dev_b) = marginal_spread(set, masker, n_samples, rng)?;
    Ok(MaskingReport {
        max_marginal_deviation_a: dev_a,
        max_marginal_deviation_b: dev_b,
        pass: dev_a <= tol && dev_b <= tol,
    })
}

/// Largest deviation of each masked marginal from that of the first sample,
/// for any masker of the right kind (parameters are not checked).
pub fn marginal_spread<R: Rng + ?Sized>(
    set: &MaskableSet,
    masker: &Masker,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let states: Vec<TwoQubitDensity> = match (set, masker) {
        (MaskableSet::Circle(c), Masker::Pure(m)) => (0..n_samples)
            .map(|_| mask_pure(m, &sample_on_circle(c, rng)))
            .collect(),
        (MaskableSet::Disk(d), Masker::Mixed(m)) => (0..n_samples)
            .map(|_| {
                let r = sample_on_disk(d, rng);
                mask_mixed(m, &crate::qstate::mixed_density(&r))
            })
            .collect(),
        _ => {
            return Err(Error::ParameterMismatch(
                "circles need a pure masker and disks a mixed masker".into(),
            ))
        }
    };
    let ref_a = partial_trace(&states[0], Subsystem::A);
    let ref_b = partial_trace(&states[0], Subsystem::B);
    Ok(states[1..].iter().fold((0.0f64, 0.0f64), |(da, db), s| {
        (
            da.max(partial_trace(s, Subsystem::A).max_abs_diff(&ref_a)),
            db.max(partial_trace(s, Subsystem::B).max_abs_diff(&ref_b)),
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{named_set, NamedSet};
    use crate::qstate::{mixed_density, DERIVED_TOL};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn t1() -> CircleSpec {
        CircleSpec::new(0.0, 0.0, PureParams::new(FRAC_PI_3, FRAC_PI_4).unwrap()).unwrap()
    }

    fn mt1() -> DiskSpec {
        DiskSpec::new(FRAC_PI_3, FRAC_PI_3, BlochVector::new(0.25, 0.25, 0.25).unwrap()).unwrap()
    }

    #[test]
    fn h_value_examples() {
        assert_abs_diff_eq!(h_value(0.0, 0.0, FRAC_PI_3, 2.2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(h_value(FRAC_PI_2, 0.0, FRAC_PI_2, 0.0), -1.0, epsilon = 1e-15);
        let h = h_value(FRAC_PI_4, FRAC_PI_4, FRAC_PI_3, FRAC_PI_4);
        assert_abs_diff_eq!(h, -0.2588190451025207, epsilon = 1e-12);
    }

    #[test]
    fn circle_membership_examples() {
        let t1 = t1();
        assert!(circle_contains(&t1, &PureParams::new(FRAC_PI_3, 1.7).unwrap(), 1e-9));
        assert!(!circle_contains(&t1, &PureParams::new(FRAC_PI_2, 0.3).unwrap(), 1e-9));
        for name in [NamedSet::T1, NamedSet::T2, NamedSet::T3, NamedSet::T4] {
            let MaskableSet::Circle(c) = named_set(name) else { unreachable!() };
            assert!(circle_contains(&c, &c.anchor(), 1e-15));
            assert!((-1.0..=1.0).contains(&c.h0()));
        }
    }

    #[test]
    fn disk_membership_examples() {
        let mt1 = mt1();
        assert_abs_diff_eq!(mt1.c(), (3f64.sqrt() + 5.0) / 16.0, epsilon = 1e-15);
        assert!(disk_contains(&mt1, &mt1.anchor(), 1e-15));
        assert!(!disk_contains(&mt1, &BlochVector::new(0.0, 0.0, 0.0).unwrap(), 1e-9));
        let MaskableSet::Disk(mt2) = named_set(NamedSet::MT2) else { unreachable!() };
        assert_abs_diff_eq!(mt2.c(), 5.0 * 6f64.sqrt() / 24.0 - 0.1, epsilon = 1e-15);
        assert!(disk_contains(&mt2, &mt2.anchor(), 1e-15));
        let n = mt2.normal();
        assert_abs_diff_eq!(n.iter().map(|v| v * v).sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spec_domains() {
        let a = PureParams::new(1.0, 1.0).unwrap();
        assert!(CircleSpec::new(PI, 0.0, a).is_err());
        let r = BlochVector::new(0.1, 0.1, 0.1).unwrap();
        assert!(DiskSpec::new(PI + 0.1, 0.0, r).is_err());
        // Both theta endpoints accepted and identified.
        let d0 = DiskSpec::new(1.0, 0.0, r).unwrap();
        let d1 = DiskSpec::new(1.0, TAU, r).unwrap();
        assert_eq!(d0.theta(), d1.theta());
    }

    #[test]
    fn pure_masker_examples() {
        let m = build_pure_masker(0.0, 0.0);
        let k = C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4);
        let col = m.column(0);
        for (got, want) in col.iter().zip([k, k, C64::new(0.0, 0.0), C64::new(0.0, 0.0)]) {
            assert!((got - want).norm() < 1e-15);
        }
        let m = build_pure_masker(FRAC_PI_2, 0.0);
        for col in 0..2 {
            let c = m.column(col);
            let first: f64 = c[0].norm_sqr() + c[1].norm_sqr();
            let second: f64 = c[2].norm_sqr() + c[3].norm_sqr();
            assert_abs_diff_eq!(first, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(second, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn mixed_masker_examples() {
        let v = build_mixed_masker(0.0, 0.0);
        assert!(v.unitarity_defect() < 1e-15);
        for row in v.matrix() {
            let nonzero: Vec<_> = row.iter().filter(|z| z.norm() > 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert_abs_diff_eq!(nonzero[0].norm(), 1.0, epsilon = 1e-15);
        }
        let v = build_mixed_masker(FRAC_PI_2, 0.0);
        for z in v.matrix().iter().flatten().filter(|z| z.norm() > 0.0) {
            assert_abs_diff_eq!(z.norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn isometry_grid() {
        for i in 0..32 {
            for j in 0..32 {
                let beta = PI * i as f64 / 32.0;
                let phi = TAU * j as f64 / 32.0;
                assert!(build_pure_masker(beta, phi).isometry_defect() < 1e-12);
                let alpha = PI * i as f64 / 31.0;
                let theta = TAU * j as f64 / 31.0;
                assert!(build_mixed_masker(alpha, theta).unitarity_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn masked_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = build_pure_masker(1.0, 2.0);
        let v = build_mixed_masker(1.2, 0.4);
        for _ in 0..50 {
            let p = crate::datagen::sample_pure_uniform(&mut rng);
            let s = mask_pure(&m, &p);
            assert!(TwoQubitDensity::from_matrix(*s.matrix(), DERIVED_TOL).is_ok());
            assert_eq!(s.rank(1e-10), 1);

            let r = crate::datagen::sample_mixed_ball(&mut rng);
            let rho = mixed_density(&r);
            let s = mask_mixed(&v, &rho);
            assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-12);
            let ev = s.eigenvalues();
            let rev = rho.eigenvalues();
            assert_abs_diff_eq!(ev[0], rev[0], epsilon = 1e-10);
            assert_abs_diff_eq!(ev[1], rev[1], epsilon = 1e-10);
            assert_abs_diff_eq!(ev[2], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(ev[3], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn pair_on_same_circle_has_equal_marginals() {
        let t1 = t1();
        let m = build_pure_masker(0.0, 0.0);
        let a = mask_pure(&m, &PureParams::new(FRAC_PI_3, 0.1).unwrap());
        let b = mask_pure(&m, &PureParams::new(FRAC_PI_3, 4.0).unwrap());
        assert!(circle_contains(&t1, &PureParams::new(FRAC_PI_3, 4.0).unwrap(), 1e-12));
        for keep in [Subsystem::A, Subsystem::B] {
            assert!(partial_trace(&a, keep).max_abs_diff(&partial_trace(&b, keep)) < 1e-10);
        }
        // Off the circle the marginals change.
        let c = mask_pure(&m, &PureParams::new(1.4, 0.1).unwrap());
        assert!(partial_trace(&a, Subsystem::A).max_abs_diff(&partial_trace(&c, Subsystem::A)) > 1e-3);
    }

    #[test]
    fn verification_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let set = MaskableSet::Circle(t1());
        let report = verify_masking_invariance(&set, &set.masker(), 50, 1e-10, &mut rng).unwrap();
        assert!(report.pass, "{report}");

        let set = MaskableSet::Disk(mt1());
        let report = verify_masking_invariance(&set, &set.masker(), 50, 1e-10, &mut rng).unwrap();
        assert!(report.pass, "{report}");

        let wrong = Masker::Mixed(build_mixed_masker(FRAC_PI_4, FRAC_PI_3));
        assert!(matches!(
            verify_masking_invariance(&set, &wrong, 50, 1e-10, &mut rng),
            Err(Error::ParameterMismatch(_))
        ));
        let crossed = MaskableSet::Circle(t1()).masker();
        assert!(matches!(
            verify_masking_invariance(&set, &crossed, 50, 1e-10, &mut rng),
            Err(Error::ParameterMismatch(_))
        ));
        assert!(verify_masking_invariance(&set, &set.masker(), 1, 1e-10, &mut rng).is_err());
        assert!(verify_masking_invariance(&set, &set.masker(), 2, 1e-10, &mut rng).is_ok());
    }

    #[test]
    fn mismatched_masker_leaks() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let set = MaskableSet::Disk(mt1());
        let off = Masker::Mixed(build_mixed_masker(FRAC_PI_3 + 0.1, FRAC_PI_3));
        let (a, b) = marginal_spread(&set, &off, 50, &mut rng).unwrap();
        assert!(a.max(b) > 1e-4);
    }

    #[test]
    fn report_is_key_value() {
        let r = MaskingReport {
            max_marginal_deviation_a: 1e-16,
            max_marginal_deviation_b: 2e-16,
            pass: true,
        };
        let text = r.to_string();
        assert!(text.contains("max_marginal_deviation_A=1e-16"));
        assert!(text.contains("pass=true"));
    }
}
