//! Seeded generation of labeled qubit-state datasets.
//!
//! Positives are drawn uniformly on the maskable set (angle-uniform on a
//! circle, area-uniform on a disk). Negatives come from the ambient
//! distribution with rejection of anything the membership test accepts.
//! Pure-state ambient sampling is uniform in the angles `(x, y)`, not Haar.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::masking::{circle_contains, disk_contains, CircleSpec, DiskSpec, MEMBERSHIP_TOL};
use crate::qstate::{
    features_of_density, mixed_density, pure_density, BlochVector, FeatureVector, PureParams,
};

/// Cap on rejection attempts for a single negative sample.
pub const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;

const DEGENERATE_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelMode {
    /// Labels `0` (not maskable) and `1` (maskable).
    Binary,
    /// Labels `0..4`, one per disk.
    FourClass,
}

impl LabelMode {
    pub fn n_classes(self) -> usize {
        match self {
            LabelMode::Binary => 2,
            LabelMode::FourClass => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelMode::Binary => "binary",
            LabelMode::FourClass => "four_class",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    mode: LabelMode,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, mode: LabelMode) -> Result<Self> {
        if let Some(s) = samples
            .iter()
            .find(|s| s.label as usize >= mode.n_classes())
        {
            return Err(Error::LabelModeMismatch(format!(
                "label {} in a {} dataset",
                s.label,
                mode.as_str()
            )));
        }
        Ok(Self { samples, mode })
    }

    pub fn empty(mode: LabelMode) -> Self {
        Self {
            samples: Vec::new(),
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature count (always 3 for qubits).
    pub fn n_features(&self) -> usize {
        3
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn features(&self) -> Vec<FeatureVector> {
        self.samples.iter().map(|s| s.features).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.mode.n_classes()];
        for s in &self.samples {
            counts[s.label as usize] += 1;
        }
        counts
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
            mode: self.mode,
        }
    }
}

/// The set(s) a dataset is generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetSpec {
    Circle(CircleSpec),
    Disk(DiskSpec),
    /// Class `k` is drawn from disk `k`.
    FourDisks([DiskSpec; 4]),
}

impl SetSpec {
    pub fn label_mode(&self) -> LabelMode {
        match self {
            SetSpec::FourDisks(_) => LabelMode::FourClass,
            _ => LabelMode::Binary,
        }
    }
}

/// Everything needed to regenerate a dataset bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub set: SetSpec,
    /// Requested sample count per label (index = label).
    pub counts: Vec<usize>,
    pub seed: u64,
}

impl GenSpec {
    /// Binary spec with `pos` maskable and `neg` non-maskable states.
    pub fn binary(set: SetSpec, pos: usize, neg: usize, seed: u64) -> Self {
        Self {
            set,
            counts: vec![neg, pos],
            seed,
        }
    }

    /// Key/value metadata record (`key=value` per line).
    pub fn to_kv(&self) -> String {
        let mut kv: Vec<(String, String)> = Vec::new();
        match &self.set {
            SetSpec::Circle(c) => {
                kv.push(("set_type".into(), "circle".into()));
                kv.push(("beta".into(), format!("{:?}", c.beta())));
                kv.push(("phi".into(), format!("{:?}", c.phi())));
                kv.push(("anchor_x".into(), format!("{:?}", c.anchor().x())));
                kv.push(("anchor_y".into(), format!("{:?}", c.anchor().y())));
            }
            SetSpec::Disk(d) => {
                kv.push(("set_type".into(), "disk".into()));
                push_disk(&mut kv, "", d);
            }
            SetSpec::FourDisks(ds) => {
                kv.push(("set_type".into(), "four_disks".into()));
                for (k, d) in ds.iter().enumerate() {
                    push_disk(&mut kv, &format!("disk{k}_"), d);
                }
            }
        }
        let counts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        kv.push(("counts".into(), counts.join(",")));
        kv.push(("seed".into(), self.seed.to_string()));
        kv.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let get = |k: &str| -> Result<&str> {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::InvalidInput(format!("metadata missing key `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("metadata key `{k}`: {e}")))
        };
        let disk = |prefix: &str| -> Result<DiskSpec> {
            let r = BlochVector::new(
                num(&format!("{prefix}anchor_r1"))?,
                num(&format!("{prefix}anchor_r2"))?,
                num(&format!("{prefix}anchor_r3"))?,
            )?;
            DiskSpec::new(num(&format!("{prefix}alpha"))?, num(&format!("{prefix}theta"))?, r)
        };
        let set = match get("set_type")? {
            "circle" => SetSpec::Circle(CircleSpec::new(
                num("beta")?,
                num("phi")?,
                PureParams::new(num("anchor_x")?, num("anchor_y")?)?,
            )?),
            "disk" => SetSpec::Disk(disk("")?),
            "four_disks" => SetSpec::FourDisks([
                disk("disk0_")?,
                disk("disk1_")?,
                disk("disk2_")?,
                disk("disk3_")?,
            ]),
            other => return Err(Error::InvalidInput(format!("unknown set_type `{other}`"))),
        };
        let counts = get("counts")?
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidInput(format!("counts: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let seed = get("seed")?
            .parse::<u64>()
            .map_err(|e| Error::InvalidInput(format!("seed: {e}")))?;
        Ok(Self { set, counts, seed })
    }
}

fn push_disk(kv: &mut Vec<(String, String)>, prefix: &str, d: &DiskSpec) {
    let [r1, r2, r3] = d.anchor().components();
    kv.push((format!("{prefix}alpha"), format!("{:?}", d.alpha())));
    kv.push((format!("{prefix}theta"), format!("{:?}", d.theta())));
    kv.push((format!("{prefix}anchor_r1"), format!("{r1:?}")));
    kv.push((format!("{prefix}anchor_r2"), format!("{r2:?}")));
    kv.push((format!("{prefix}anchor_r3"), format!("{r3:?}")));
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
            line: i as u64 + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// `x` uniform on `[0, pi]`, `y` uniform on `[0, 2 pi)`.
pub fn sample_pure_uniform<R: Rng + ?Sized>(rng: &mut R) -> PureParams {
    let x = rng.gen_range(0.0..=PI);
    let y = rng.gen_range(0.0..TAU);
    PureParams::new(x, y).expect("sampled angles are in range")
}

/// Orthonormal `(u, v)` completing the unit vector `m` to a right-handed
/// frame. `u` is Gram-Schmidt of the coordinate axis least aligned with `m`.
pub fn plane_frame(m: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = (0..3)
        .min_by(|&i, &j| m[i].abs().total_cmp(&m[j].abs()).then(i.cmp(&j)))
        .unwrap();
    let mut u = [0.0; 3];
    u[axis] = 1.0;
    let d = m[axis];
    for k in 0..3 {
        u[k] -= d * m[k];
    }
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in u.iter_mut() {
        *v /= n;
    }
    let v = [
        m[1] * u[2] - m[2] * u[1],
        m[2] * u[0] - m[0] * u[2],
        m[0] * u[1] - m[1] * u[0],
    ];
    (u, v)
}

/// Uniform point on the circle `{r on the sphere : m . r = h0}`.
pub fn sample_on_circle<R: Rng + ?Sized>(spec: &CircleSpec, rng: &mut R) -> PureParams {
    let h0 = spec.h0();
    let rad2 = 1.0 - h0 * h0;
    if rad2 <= DEGENERATE_TOL {
        log::warn!("degenerate circle (h0 = {h0}); returning the anchor");
        return spec.anchor();
    }
    let m = spec.plane_normal();
    let (u, v) = plane_frame(&m);
    let s = rad2.sqrt();
    let t = rng.gen_range(0.0..TAU);
    let (st, ct) = t.sin_cos();
    let r: [f64; 3] = std::array::from_fn(|k| h0 * m[k] + s * (ct * u[k] + st * v[k]));
    let x = r[2].clamp(-1.0, 1.0).acos();
    let y = r[1].atan2(r[0]);
    PureParams::new(x, y).expect("x from acos is in [0, pi]")
}

/// Uniform point in the closed unit ball by rejection from the cube.
pub fn sample_mixed_ball<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    sample_mixed_ball_counted(rng).0
}

/// Like [`sample_mixed_ball`], also returning the number of cube draws used.
pub fn sample_mixed_ball_counted<R: Rng + ?Sized>(rng: &mut R) -> (BlochVector, usize) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let r: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        if r.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return (BlochVector::new(r[0], r[1], r[2]).unwrap(), attempts);
        }
    }
}

/// Area-uniform point on the disk `{r : normal . r = c, |r| <= 1}`.
pub fn sample_on_disk<R: Rng + ?Sized>(spec: &DiskSpec, rng: &mut R) -> BlochVector {
    let c = spec.c();
    let rad2 = 1.0 - c * c;
    if rad2 <= DEGENERATE_TOL {
        log::warn!("degenerate disk (c = {c}); returning the anchor");
        return spec.anchor();
    }
    let n = spec.normal();
    let (u, v) = plane_frame(&n);
    let radius = rad2.sqrt() * rng.gen::<f64>().sqrt();
    let t = rng.gen_range(0.0..TAU);
    let (st, ct) = t.sin_cos();
    let r: [f64; 3] = std::array::from_fn(|k| c * n[k] + radius * (ct * u[k] + st * v[k]));
    let norm2: f64 = r.iter().map(|x| x * x).sum();
    // Rounding can push rim points a hair outside the ball.
    let r = if norm2 > 1.0 {
        let s = norm2.sqrt();
        r.map(|x| x / s)
    } else {
        r
    };
    BlochVector::new(r[0], r[1], r[2]).unwrap()
}

fn pure_sample(p: &PureParams, label: u8) -> LabeledSample {
    LabeledSample {
        features: features_of_density(&pure_density(p)),
        label,
    }
}

fn mixed_sample(r: &BlochVector, label: u8) -> LabeledSample {
    LabeledSample {
        features: features_of_density(&mixed_density(r)),
        label,
    }
}

fn reject_until<T, R: Rng + ?Sized>(
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> T,
    mut accept: impl FnMut(&T) -> bool,
) -> Result<T> {
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let t = draw(rng);
        if accept(&t) {
            return Ok(t);
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_REJECTION_ATTEMPTS,
    })
}

/// Draws exactly `spec.counts[k]` samples of each label and shuffles them.
pub fn build_balanced_dataset(spec: &GenSpec) -> Result<Dataset> {
    let mode = spec.set.label_mode();
    if spec.counts.len() != mode.n_classes() {
        return Err(Error::InvalidInput(format!(
            "{} counts given for a {} set",
            spec.counts.len(),
            mode.as_str()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total: usize = spec.counts.iter().sum();
    let mut samples = Vec::with_capacity(total);

    match &spec.set {
        SetSpec::Circle(c) => {
            for _ in 0..spec.counts[1] {
                samples.push(pure_sample(&sample_on_circle(c, &mut rng), 1));
            }
            for _ in 0..spec.counts[0] {
                let p = reject_until(&mut rng, |r| sample_pure_uniform(r), |p| {
                    !circle_contains(c, p, MEMBERSHIP_TOL)
                })?;
                samples.push(pure_sample(&p, 0));
            }
        }
        SetSpec::Disk(d) => {
            for _ in 0..spec.counts[1] {
                samples.push(mixed_sample(&sample_on_disk(d, &mut rng), 1));
            }
            for _ in 0..spec.counts[0] {
                let r = reject_until(&mut rng, |r| sample_mixed_ball(r), |r| {
                    !disk_contains(d, r, MEMBERSHIP_TOL)
                })?;
                samples.push(mixed_sample(&r, 0));
            }
        }
        SetSpec::FourDisks(ds) => {
            for (k, d) in ds.iter().enumerate() {
                for _ in 0..spec.counts[k] {
                    samples.push(mixed_sample(&sample_on_disk(d, &mut rng), k as u8));
                }
            }
        }
    }
    samples.shuffle(&mut rng);
    Dataset::new(samples, mode)
}

const HEADER: [&str; 4] = ["f1", "f2", "f3", "label"];

/// Writes `f1,f2,f3,label` rows with 17 significant digits.
pub fn write_csv_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for s in data.samples() {
        let [f1, f2, f3] = s.features.0;
        w.write_record([
            format!("{f1:.16e}"),
            format!("{f2:.16e}"),
            format!("{f3:.16e}"),
            s.label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_from<R: Read>(reader: R, mode: LabelMode) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = r.records();
    match records.next() {
        Some(rec) => {
            let rec = rec?;
            if rec.iter().map(str::trim).ne(HEADER) {
                return Err(Error::Malformed {
                    line: 1,
                    message: format!("expected header `{}`", HEADER.join(",")),
                });
            }
        }
        None => {
            return Err(Error::Malformed {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    let mut samples = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 4 {
            return Err(Error::Malformed {
                line,
                message: format!("expected 4 fields, found {}", rec.len()),
            });
        }
        let mut f = [0.0; 3];
        for (k, slot) in f.iter_mut().enumerate() {
            *slot = rec[k].trim().parse::<f64>().map_err(|e| Error::Malformed {
                line,
                message: format!("field {}: {e}", HEADER[k]),
            })?;
        }
        let label = rec[3].trim().parse::<i64>().map_err(|e| Error::Malformed {
            line,
            message: format!("label: {e}"),
        })?;
        if label < 0 || label >= mode.n_classes() as i64 {
            return Err(Error::LabelOutOfRange { line, label });
        }
        samples.push(LabeledSample {
            features: FeatureVector(f),
            label: label as u8,
        });
    }
    Dataset::new(samples, mode)
}

pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    write_csv_to(BufWriter::new(file), data)
}

pub fn read_csv(path: impl AsRef<Path>, mode: LabelMode) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    read_csv_from(std::io::BufReader::new(file), mode)
}
