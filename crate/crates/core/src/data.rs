//! Datasets: embedding matrices, label vectors, pool bookkeeping, file formats
//! and a seeded Gaussian-blob generator.
//!
//! Binary layouts (all integers and floats little-endian, no padding):
//!
//! ```text
//! REFB  magic "REFB" | version u16 = 1 | N u64 | D u32 | N*D f32 (row-major)
//! REFL  magic "REFL" | version u16 = 1 | N u64 | K u32 | N u32
//! ```
//!
//! CSV fallbacks: embeddings are headerless rows of `D` comma-separated
//! decimals; labels are a single column with an optional `label` header.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{data_err, format_err, usage, Error, Result};

pub const EMBEDDINGS_MAGIC: &[u8; 4] = b"REFB";
pub const LABELS_MAGIC: &[u8; 4] = b"REFL";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 4;

/// N x D feature table, one row per instance, stored as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_instances: usize,
    n_dims: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(n_instances: usize, n_dims: usize, values: Vec<f32>) -> Result<Self> {
        if n_instances == 0 || n_dims == 0 {
            return Err(data_err!(
                "embedding matrix must be non-empty, got {n_instances}x{n_dims}"
            ));
        }
        if values.len() != n_instances * n_dims {
            return Err(data_err!(
                "expected {} values for {n_instances}x{n_dims}, got {}",
                n_instances * n_dims,
                values.len()
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(data_err!(
                "non-finite value at row {}, column {}",
                pos / n_dims,
                pos % n_dims
            ));
        }
        Ok(Self {
            n_instances,
            n_dims,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * n_dims);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_dims {
                return Err(data_err!("row {i} has {} columns, expected {n_dims}", r.len()));
            }
            values.extend(r.iter().map(|&v| v as f32));
        }
        Self::new(rows.len(), n_dims, values)
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| v as f64).collect()
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.row(i), self.row(j))
    }
}

pub(crate) fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Class indices in `[0, n_classes)`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<u32>,
    n_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(data_err!("number of classes must be at least 1"));
        }
        if labels.is_empty() {
            return Err(data_err!("label vector is empty"));
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= n_classes)
        {
            return Err(data_err!("label {l} at position {i} is outside [0, {n_classes})"));
        }
        Ok(Self { labels, n_classes })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// Fails with `DataError` when the lengths of labels and embeddings differ.
    pub fn check_pairs_with(&self, m: &EmbeddingMatrix) -> Result<()> {
        if self.labels.len() != m.n_instances() {
            return Err(data_err!(
                "{} labels for {} embedding rows",
                self.labels.len(),
                m.n_instances()
            ));
        }
        Ok(())
    }
}

/// Disjoint labeled / unlabeled index sets plus the cycle counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    labeled: BTreeSet<usize>,
    unlabeled: BTreeSet<usize>,
    cycle: usize,
}

impl PoolState {
    /// Pool over `universe` with `labeled` moved out of the unlabeled set.
    pub fn new(universe: &[usize], labeled: &[usize]) -> Result<Self> {
        let all: BTreeSet<usize> = universe.iter().copied().collect();
        let labeled: BTreeSet<usize> = labeled.iter().copied().collect();
        if let Some(i) = labeled.iter().find(|i| !all.contains(i)) {
            return Err(usage!("labeled index {i} is not part of the pool universe"));
        }
        let unlabeled = all.difference(&labeled).copied().collect();
        Ok(Self {
            labeled,
            unlabeled,
            cycle: 0,
        })
    }

    pub fn labeled(&self) -> Vec<usize> {
        self.labeled.iter().copied().collect()
    }

    pub fn unlabeled(&self) -> Vec<usize> {
        self.unlabeled.iter().copied().collect()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.labeled.contains(&i)
    }

    /// Move a batch from U to L and advance the cycle counter.
    pub fn acquire(&mut self, batch: &[usize]) -> Result<()> {
        if let Some(i) = batch.iter().find(|i| !self.unlabeled.contains(i)) {
            return Err(usage!("instance {i} is not in the unlabeled pool"));
        }
        for &i in batch {
            self.unlabeled.remove(&i);
            self.labeled.insert(i);
        }
        self.cycle += 1;
        Ok(())
    }
}

/// Parameters of the Gaussian-blob fixture generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub n_classes: usize,
    pub n_dims: usize,
    pub cluster_spread: f64,
    pub center_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.n_classes == 0 || self.n_dims == 0 {
            return Err(usage!("synthetic spec counts must all be at least 1"));
        }
        if !(self.cluster_spread > 0.0 && self.cluster_spread.is_finite()) {
            return Err(usage!("cluster_spread must be positive"));
        }
        if !(self.center_scale > 0.0 && self.center_scale.is_finite()) {
            return Err(usage!("center_scale must be positive"));
        }
        Ok(())
    }
}

/// `n_classes` isotropic blobs, class-major row order. Each center is a random
/// direction scaled to `center_scale`.
pub fn synth_gaussian(spec: &SyntheticSpec) -> Result<(EmbeddingMatrix, LabelVector)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.n_dims;
    let mut centers = Vec::with_capacity(spec.n_classes);
    for _ in 0..spec.n_classes {
        let mut c: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        c.iter_mut().for_each(|v| *v *= spec.center_scale / norm);
        centers.push(c);
    }
    let n = spec.n_per_class * spec.n_classes;
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..spec.n_per_class {
            for &c in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push((c + spec.cluster_spread * z) as f32);
            }
            labels.push(class as u32);
        }
    }
    Ok((
        EmbeddingMatrix::new(n, d, values)?,
        LabelVector::new(labels, spec.n_classes)?,
    ))
}

/// Rescale every row to unit L2 norm. Zero rows are rejected.
pub fn normalize_features(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let d = m.n_dims();
    let mut values = Vec::with_capacity(m.values.len());
    for i in 0..m.n_instances() {
        let row = m.row(i);
        let norm = row.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(data_err!("row {i} is all zeros and cannot be normalized"));
        }
        values.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
    }
    EmbeddingMatrix::new(m.n_instances(), d, values)
}

/// Seeded stratified holdout: from each class, `round(fraction * count)`
/// instances go to the test split. Returns `(train, test)`, both sorted.
pub fn stratified_split(
    labels: &LabelVector,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(usage!("test fraction must lie in (0, 1), got {test_fraction}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..labels.n_classes() as u32 {
        let mut members: Vec<usize> = (0..labels.len())
            .filter(|&i| labels.get(i) == class)
            .collect();
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    if test.is_empty() || train.is_empty() {
        return Err(usage!("stratified split produced an empty side"));
    }
    Ok((train, test))
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.values.len());
    out.extend_from_slice(EMBEDDINGS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n_instances as u64).to_le_bytes());
    out.extend_from_slice(&(m.n_dims as u32).to_le_bytes());
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_header(bytes: &[u8], magic: &[u8; 4]) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err!("file shorter than the {HEADER_LEN}-byte header"));
    }
    if &bytes[..4] != magic {
        return Err(format_err!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        ));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(format_err!("unsupported version {version}"));
    }
    let n = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let d = u32::from_le_bytes(bytes[14..18].try_into().unwrap());
    let n = usize::try_from(n).map_err(|_| format_err!("row count {n} overflows"))?;
    Ok((n, d as usize))
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let (n, d) = read_header(bytes, EMBEDDINGS_MAGIC)?;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| format_err!("header size {n}x{d} overflows"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(format_err!(
            "header declares {n}x{d} ({expected} payload bytes), found {}",
            payload.len()
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(n, d, values)
}

pub fn encode_labels(l: &LabelVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * l.len());
    out.extend_from_slice(LABELS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(l.len() as u64).to_le_bytes());
    out.extend_from_slice(&(l.n_classes as u32).to_le_bytes());
    for v in &l.labels {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode REFL. `n_classes` overrides the stored K when given.
pub fn decode_labels(bytes: &[u8], n_classes: Option<usize>) -> Result<LabelVector> {
    let (n, k) = read_header(bytes, LABELS_MAGIC)?;
    let payload = &bytes[HEADER_LEN..];
    if Some(payload.len()) != n.checked_mul(4) {
        return Err(format_err!(
            "header declares {n} labels, payload has {} bytes",
            payload.len()
        ));
    }
    let labels = payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    LabelVector::new(labels, n_classes.unwrap_or(k))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Load REFB (sniffed by magic) or the CSV fallback (`.csv` extension).
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = read(path)?;
    if is_csv(path) {
        let text = String::from_utf8(bytes).map_err(|_| format_err!("CSV is not UTF-8"))?;
        parse_embeddings_csv(&text)
    } else {
        decode_embeddings(&bytes)
    }
}

pub fn save_embeddings(path: impl AsRef<Path>, m: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut s = String::new();
        for i in 0..m.n_instances() {
            let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        write_atomic(path, s.as_bytes())
    } else {
        write_atomic(path, &encode_embeddings(m))
    }
}

pub fn parse_embeddings_csv(text: &str) -> Result<EmbeddingMatrix> {
    let mut values = Vec::new();
    let mut n = 0;
    let mut d = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f32> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f32>()
                    .map_err(|_| format_err!("line {}: cannot parse {t:?}", lineno + 1))
            })
            .collect::<Result<_>>()?;
        match d {
            None => d = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(format_err!(
                    "line {}: {} columns, expected {d}",
                    lineno + 1,
                    row.len()
                ))
            }
            _ => {}
        }
        values.extend(row);
        n += 1;
    }
    let d = d.ok_or_else(|| format_err!("embeddings CSV is empty"))?;
    EmbeddingMatrix::new(n, d, values)
}

/// Load labels from REFL or a single-column CSV with optional `label` header.
pub fn load_labels(path: impl AsRef<Path>, n_classes: usize) -> Result<LabelVector> {
    let path = path.as_ref();
    let bytes = read(path)?;
    if bytes.starts_with(LABELS_MAGIC) {
        return decode_labels(&bytes, Some(n_classes));
    }
    let text = String::from_utf8(bytes).map_err(|_| format_err!("labels CSV is not UTF-8"))?;
    parse_labels_csv(&text, n_classes)
}

pub fn parse_labels_csv(text: &str, n_classes: usize) -> Result<LabelVector> {
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || (lineno == 0 && t.eq_ignore_ascii_case("label")) {
            continue;
        }
        let v: i64 = t
            .parse()
            .map_err(|_| data_err!("line {}: {t:?} is not an integer label", lineno + 1))?;
        if v < 0 || v as u64 >= n_classes as u64 {
            return Err(data_err!(
                "line {}: label {v} is outside [0, {n_classes})",
                lineno + 1
            ));
        }
        labels.push(v as u32);
    }
    if labels.is_empty() {
        return Err(data_err!("labels file contains no labels"));
    }
    LabelVector::new(labels, n_classes)
}

pub fn save_labels(path: impl AsRef<Path>, l: &LabelVector) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut s = String::from("label\n");
        for v in &l.labels {
            s.push_str(&v.to_string());
            s.push('\n');
        }
        write_atomic(path, s.as_bytes())
    } else {
        write_atomic(path, &encode_labels(l))
    }
}

/// Sorted index list from a one-column CSV (optional `index` header).
pub fn load_indices(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = String::from_utf8(read(path)?).map_err(|_| format_err!("index file is not UTF-8"))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || (lineno == 0 && t.eq_ignore_ascii_case("index")) {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| format_err!("line {}: {t:?} is not an index", lineno + 1))?,
        );
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn save_indices(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let mut s = String::from("index\n");
    for i in indices {
        s.push_str(&i.to_string());
        s.push('\n');
    }
    write_atomic(path.as_ref(), s.as_bytes())
}
