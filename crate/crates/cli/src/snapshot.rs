//! Binary snapshots of a walk state.
//!
//! Little-endian layout:
//!
//! | field | type |
//! |---|---|
//! | magic `BWSNAP` + version | 8 bytes |
//! | particles, vertices, coin order | 3 x u32 |
//! | step | u64 |
//! | drop threshold, dimension tolerance | 2 x f64 |
//! | double coin factor | u8 |
//! | topology digest, coin digest | 2 x 32 bytes |
//! | norm constant of the last normalization | f64 |
//! | entry count | u64 |
//! | entries: chirality u32, rank u64, re f64, im f64 | 28 bytes each |
//! | SHA-256 of everything above | 32 bytes |
//!
//! Floats are stored as raw bits, so a resumed run continues bit for bit.

use std::fs;
use std::path::Path;

use bosewalk_core::{AmplitudeTable, CoinMatrix, Complex64, ConfigSpace, GraphSpec, Key, WalkSettings};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::graph_file::topology_digest;

const MAGIC: &[u8; 8] = b"BWSNAP\x00\x01";
const ENTRY_BYTES: usize = 4 + 8 + 8 + 8;

/// Everything a snapshot must agree on with the run that resumes it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub particles: u32,
    pub vertices: u32,
    pub coin_order: u32,
    pub step: u64,
    pub settings: WalkSettings,
    pub topology: [u8; 32],
    pub coin: [u8; 32],
}

impl SnapshotHeader {
    pub fn new(graph: &GraphSpec, coin: &CoinMatrix, particles: u32, settings: WalkSettings, step: u64) -> Self {
        Self {
            particles,
            vertices: graph.vertices() as u32,
            coin_order: coin.order() as u32,
            step,
            settings,
            topology: topology_digest(graph),
            coin: coin_digest(coin),
        }
    }

    /// Describes every field that differs from `expected`, ignoring the step.
    pub fn mismatches(&self, expected: &SnapshotHeader) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, same: bool, got: String, want: String| {
            if !same {
                out.push(format!("{name}: snapshot has {got}, config has {want}"));
            }
        };
        check("particles", self.particles == expected.particles, self.particles.to_string(), expected.particles.to_string());
        check("vertices", self.vertices == expected.vertices, self.vertices.to_string(), expected.vertices.to_string());
        check("coin order", self.coin_order == expected.coin_order, self.coin_order.to_string(), expected.coin_order.to_string());
        let (a, b) = (self.settings, expected.settings);
        check(
            "drop_threshold",
            a.drop_threshold.to_bits() == b.drop_threshold.to_bits(),
            a.drop_threshold.to_string(),
            b.drop_threshold.to_string(),
        );
        check(
            "dimension_tolerance",
            a.dimension_tolerance.to_bits() == b.dimension_tolerance.to_bits(),
            a.dimension_tolerance.to_string(),
            b.dimension_tolerance.to_string(),
        );
        check(
            "double_coin_factor",
            a.double_coin_factor == b.double_coin_factor,
            a.double_coin_factor.to_string(),
            b.double_coin_factor.to_string(),
        );
        check("graph", self.topology == expected.topology, hex(&self.topology), hex(&expected.topology));
        check("coin", self.coin == expected.coin, hex(&self.coin), hex(&expected.coin));
        out
    }
}

pub fn coin_digest(coin: &CoinMatrix) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((coin.order() as u64).to_le_bytes());
    for z in coin.rows() {
        hasher.update(z.re.to_bits().to_le_bytes());
        hasher.update(z.im.to_bits().to_le_bytes());
    }
    hasher.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode(header: &SnapshotHeader, table: &AmplitudeTable) -> Vec<u8> {
    let mut buf = Vec::with_capacity(200 + table.len() * ENTRY_BYTES);
    buf.extend_from_slice(MAGIC);
    for v in [header.particles, header.vertices, header.coin_order] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&header.step.to_le_bytes());
    buf.extend_from_slice(&header.settings.drop_threshold.to_bits().to_le_bytes());
    buf.extend_from_slice(&header.settings.dimension_tolerance.to_bits().to_le_bytes());
    buf.push(u8::from(header.settings.double_coin_factor));
    buf.extend_from_slice(&header.topology);
    buf.extend_from_slice(&header.coin);
    buf.extend_from_slice(&table.norm().to_bits().to_le_bytes());
    buf.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for (key, amp) in table.entries() {
        buf.extend_from_slice(&key.chirality.to_le_bytes());
        buf.extend_from_slice(&key.rank.to_le_bytes());
        buf.extend_from_slice(&amp.re.to_bits().to_le_bytes());
        buf.extend_from_slice(&amp.im.to_bits().to_le_bytes());
    }
    let digest: [u8; 32] = Sha256::digest(&buf).into();
    buf.extend_from_slice(&digest);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let (head, rest) = self.bytes.split_first_chunk::<N>()?;
        self.bytes = rest;
        Some(*head)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.u64().map(f64::from_bits)
    }
}

/// A decoded snapshot: header, the raw entries and the stored norm constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub norm: f64,
    pub entries: Vec<(Key, Complex64)>,
}

impl Snapshot {
    pub fn table(&self, space: &ConfigSpace) -> bosewalk_core::Result<AmplitudeTable> {
        AmplitudeTable::from_sorted_parts(space, self.header.coin_order as usize, self.entries.clone(), self.norm)
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Snapshot, String> {
    let body_len = bytes.len().checked_sub(32).ok_or("truncated")?;
    let (body, digest) = bytes.split_at(body_len);
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch".into());
    }
    let mut r = Reader { bytes: body };
    let short = || "truncated".to_string();
    if &r.take::<8>().ok_or_else(short)? != MAGIC {
        return Err("not a snapshot of this format".into());
    }
    let particles = r.u32().ok_or_else(short)?;
    let vertices = r.u32().ok_or_else(short)?;
    let coin_order = r.u32().ok_or_else(short)?;
    let step = r.u64().ok_or_else(short)?;
    let drop_threshold = r.f64().ok_or_else(short)?;
    let dimension_tolerance = r.f64().ok_or_else(short)?;
    let double_coin_factor = match r.take::<1>().ok_or_else(short)?[0] {
        0 => false,
        1 => true,
        other => return Err(format!("bad flag byte {other}")),
    };
    let topology = r.take::<32>().ok_or_else(short)?;
    let coin = r.take::<32>().ok_or_else(short)?;
    let norm = r.f64().ok_or_else(short)?;
    let count = r.u64().ok_or_else(short)?;
    if r.bytes.len() as u64 != count.saturating_mul(ENTRY_BYTES as u64) {
        return Err(format!("{count} entries declared, {} bytes of entries present", r.bytes.len()));
    }
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let chirality = r.u32().ok_or_else(short)?;
        let rank = r.u64().ok_or_else(short)?;
        let re = r.f64().ok_or_else(short)?;
        let im = r.f64().ok_or_else(short)?;
        entries.push((Key::new(chirality, rank), Complex64::new(re, im)));
    }
    if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err("entries are not sorted by key".into());
    }
    let settings = WalkSettings { drop_threshold, dimension_tolerance, double_coin_factor };
    Ok(Snapshot {
        header: SnapshotHeader { particles, vertices, coin_order, step, settings, topology, coin },
        norm,
        entries,
    })
}

pub fn write_snapshot(path: &Path, header: &SnapshotHeader, table: &AmplitudeTable) -> Result<()> {
    // write then rename, so a crash never leaves a partial snapshot behind
    let partial = path.with_extension("partial");
    fs::write(&partial, encode(header, table)).map_err(CliError::io(&partial))?;
    fs::rename(&partial, path).map_err(CliError::io(path))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    decode(&bytes).map_err(|message| CliError::Snapshot { path: path.to_owned(), message })
}
