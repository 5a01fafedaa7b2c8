//! `ICTB1` container files.
//!
//! Layout: the 6-byte magic `ICTB1\n`, the header length as a little-endian
//! `u64`, the UTF-8 JSON header (space-padded so the payload starts on an
//! 8-byte boundary), then the payload. Every object is one row-major
//! little-endian blob; `byte_offset` counts from the start of the payload.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path as FsPath, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cg::Weight;
use crate::error::{Result, StoreError};
use crate::group::{Group, Parity};
use crate::pathmat::{Basis, PathMatrix};
use crate::scheme::{Irrep, Path, Step};

pub const MAGIC: &[u8; 6] = b"ICTB1\n";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX: usize = MAGIC.len() + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    PathMatrix,
    ProjectorDense,
    BasisElement,
    MixShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    C128,
}

impl Dtype {
    pub fn for_group(group: Group) -> Dtype {
        if group == Group::SU2 {
            Dtype::C128
        } else {
            Dtype::F64
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::C128 => 16,
        }
    }
}

/// A path written as its result sequence (starting weight first) and bridges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRecord {
    pub term: usize,
    pub results: Vec<Weight>,
    pub bridges: Vec<Weight>,
    pub parity: Parity,
}

impl From<&Path> for PathRecord {
    fn from(p: &Path) -> Self {
        PathRecord {
            term: p.term_index,
            results: p.results(),
            bridges: p.bridges(),
            parity: p.parity,
        }
    }
}

impl PathRecord {
    pub fn to_path(&self) -> std::result::Result<Path, String> {
        if self.results.len() != self.bridges.len() + 1 {
            return Err(format!(
                "{} results for {} bridges",
                self.results.len(),
                self.bridges.len()
            ));
        }
        Ok(Path {
            term_index: self.term,
            start: self.results[0],
            steps: self
                .bridges
                .iter()
                .zip(&self.results[1..])
                .map(|(&bridge, &result)| Step { bridge, result })
                .collect(),
            parity: self.parity,
        })
    }
}

/// Header entry for one blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub name: String,
    pub kind: ObjectKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<PathRecord>,
    /// Input-side path of a basis element.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub in_path: Option<PathRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub irrep: Option<Irrep>,
    /// Which space a path matrix belongs to when a file holds two.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub space: Option<String>,
    pub shape: [usize; 2],
    pub dtype: Dtype,
    pub byte_offset: u64,
    pub byte_length: u64,
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub group: Group,
    pub space_spec: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out_space_spec: Option<String>,
    pub basis: Basis,
    pub objects: Vec<ObjectEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    F64(DMatrix<f64>),
    C128(DMatrix<Complex64>),
}

impl Data {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Data::F64(m) => m.shape(),
            Data::C128(m) => m.shape(),
        }
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Data::F64(_) => Dtype::F64,
            Data::C128(_) => Dtype::C128,
        }
    }

    /// Real part (exact for real-valued data).
    pub fn real(&self) -> DMatrix<f64> {
        match self {
            Data::F64(m) => m.clone(),
            Data::C128(m) => m.map(|z| z.re),
        }
    }

    pub fn max_imag(&self) -> f64 {
        match self {
            Data::F64(_) => 0.0,
            Data::C128(m) => m.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        }
    }

    /// Real data in the dtype the group stores.
    pub fn for_group(m: DMatrix<f64>, group: Group) -> Data {
        match Dtype::for_group(group) {
            Dtype::F64 => Data::F64(m),
            Dtype::C128 => Data::C128(m.map(|v| Complex64::new(v, 0.0))),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c * self.dtype().size());
        for i in 0..r {
            for j in 0..c {
                match self {
                    Data::F64(m) => out.extend_from_slice(&m[(i, j)].to_le_bytes()),
                    Data::C128(m) => {
                        out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                        out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    fn from_bytes(bytes: &[u8], dtype: Dtype, r: usize, c: usize) -> Data {
        let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        match dtype {
            Dtype::F64 => Data::F64(DMatrix::from_fn(r, c, |i, j| f(i * c + j))),
            Dtype::C128 => Data::C128(DMatrix::from_fn(r, c, |i, j| {
                let k = 2 * (i * c + j);
                Complex64::new(f(k), f(k + 1))
            })),
        }
    }
}

/// An object before it is laid out: header fields minus the layout ones.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredObject {
    pub name: String,
    pub kind: ObjectKind,
    pub path: Option<PathRecord>,
    pub in_path: Option<PathRecord>,
    pub irrep: Option<Irrep>,
    pub space: Option<String>,
    pub data: Data,
}

impl StoredObject {
    pub fn new(name: impl Into<String>, kind: ObjectKind, data: Data) -> Self {
        StoredObject {
            name: name.into(),
            kind,
            path: None,
            in_path: None,
            irrep: None,
            space: None,
            data,
        }
    }

    pub fn path_matrix(name: impl Into<String>, pm: &PathMatrix) -> Self {
        StoredObject {
            path: Some(PathRecord::from(&pm.path)),
            irrep: Some(pm.path.terminal_irrep()),
            ..StoredObject::new(
                name,
                ObjectKind::PathMatrix,
                Data::for_group(pm.matrix.clone(), pm.group),
            )
        }
    }

    /// Rebuilds a path matrix object.
    pub fn to_path_matrix(&self, group: Group, basis: Basis) -> std::result::Result<PathMatrix, String> {
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| format!("object `{}` has no path", self.name))?
            .to_path()?;
        Ok(PathMatrix {
            path,
            group,
            basis,
            matrix: self.data.real(),
            col_norm_applied: true,
        })
    }

    fn entry(&self, offset: u64, bytes: &[u8]) -> ObjectEntry {
        let (r, c) = self.data.shape();
        ObjectEntry {
            name: self.name.clone(),
            kind: self.kind,
            path: self.path.clone(),
            in_path: self.in_path.clone(),
            irrep: self.irrep,
            space: self.space.clone(),
            shape: [r, c],
            dtype: self.data.dtype(),
            byte_offset: offset,
            byte_length: bytes.len() as u64,
            crc32: crc32fast::hash(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub group: Group,
    pub space_spec: String,
    pub out_space_spec: Option<String>,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub meta: Metadata,
    pub objects: Vec<StoredObject>,
}

impl Container {
    pub fn get(&self, name: &str) -> Option<&StoredObject> {
        self.objects.iter().find(|o| o.name == name)
    }
}

fn io_err(path: &FsPath) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn layout(object: &str, reason: impl Into<String>) -> StoreError {
    StoreError::Layout {
        object: object.to_string(),
        reason: reason.into(),
    }
}

/// Shape and dtype rules for each kind.
fn check_object(entry: &ObjectEntry, group: Group) -> std::result::Result<(), StoreError> {
    let name = &entry.name;
    let [r, c] = entry.shape;
    if entry.dtype != Dtype::for_group(group) {
        return Err(layout(
            name,
            format!("dtype {:?} does not match group {group}", entry.dtype),
        ));
    }
    let expect_len = r
        .checked_mul(c)
        .and_then(|n| n.checked_mul(entry.dtype.size()))
        .ok_or_else(|| layout(name, "shape overflows"))?;
    if entry.byte_length != expect_len as u64 {
        return Err(layout(
            name,
            format!("byte_length {} does not match shape {r}x{c}", entry.byte_length),
        ));
    }
    let terminal = |p: &Option<PathRecord>| -> std::result::Result<Weight, StoreError> {
        let p = p.as_ref().ok_or_else(|| layout(name, "missing path"))?;
        p.to_path().map_err(|e| layout(name, e)).map(|p| p.terminal())
    };
    match entry.kind {
        ObjectKind::PathMatrix => {
            let l = terminal(&entry.path)?;
            if c != l.dim() {
                return Err(layout(
                    name,
                    format!("path matrix has {c} columns, terminal {l} needs {}", l.dim()),
                ));
            }
            if r < c {
                return Err(layout(name, "path matrix has fewer rows than columns"));
            }
        }
        ObjectKind::ProjectorDense => {
            terminal(&entry.path)?;
            if r != c {
                return Err(layout(name, "projector is not square"));
            }
        }
        ObjectKind::BasisElement => {
            let lo = terminal(&entry.path)?;
            let li = terminal(&entry.in_path)?;
            if lo != li {
                return Err(layout(name, "input and output paths end on different weights"));
            }
        }
        ObjectKind::MixShape => {
            if entry.irrep.is_none() {
                return Err(layout(name, "mix matrix without irrep"));
            }
        }
    }
    Ok(())
}

/// Streams objects into a container. Blobs go to a side file until
/// [`ContainerWriter::finish`] writes the header and copies them behind it.
pub struct ContainerWriter {
    path: PathBuf,
    tmp_path: PathBuf,
    tmp: BufWriter<File>,
    meta: Metadata,
    entries: Vec<ObjectEntry>,
    offset: u64,
}

impl ContainerWriter {
    pub fn create(path: impl AsRef<FsPath>, meta: Metadata) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".payload.tmp");
        let tmp_path = path.with_file_name(tmp_name);
        let tmp = File::create(&tmp_path).map_err(io_err(&tmp_path))?;
        Ok(ContainerWriter {
            path,
            tmp_path,
            tmp: BufWriter::new(tmp),
            meta,
            entries: Vec::new(),
            offset: 0,
        })
    }

    pub fn push(&mut self, obj: &StoredObject) -> Result<()> {
        let bytes = obj.data.to_bytes();
        let entry = obj.entry(self.offset, &bytes);
        check_object(&entry, self.meta.group)?;
        if self.entries.iter().any(|e| e.name == entry.name) {
            return Err(layout(&entry.name, "duplicate object name").into());
        }
        self.tmp.write_all(&bytes).map_err(io_err(&self.tmp_path))?;
        self.offset += bytes.len() as u64;
        self.entries.push(entry);
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.tmp.flush().map_err(io_err(&self.tmp_path))?;
        let header = encode_header(&self.meta, std::mem::take(&mut self.entries));
        let mut out = BufWriter::new(File::create(&self.path).map_err(io_err(&self.path))?);
        out.write_all(&header).map_err(io_err(&self.path))?;
        let mut payload = File::open(&self.tmp_path).map_err(io_err(&self.tmp_path))?;
        std::io::copy(&mut payload, &mut out).map_err(io_err(&self.path))?;
        out.flush().map_err(io_err(&self.path))?;
        std::fs::remove_file(&self.tmp_path).map_err(io_err(&self.tmp_path))?;
        Ok(())
    }
}

impl Drop for ContainerWriter {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.tmp_path);
    }
}

/// Magic, length and padded header.
fn encode_header(meta: &Metadata, objects: Vec<ObjectEntry>) -> Vec<u8> {
    let header = Header {
        format_version: FORMAT_VERSION,
        group: meta.group,
        space_spec: meta.space_spec.clone(),
        out_space_spec: meta.out_space_spec.clone(),
        basis: meta.basis,
        objects,
    };
    let mut json = serde_json::to_vec(&header).expect("header serializes");
    while !(PREFIX + json.len()).is_multiple_of(8) {
        json.push(b' ');
    }
    let mut out = Vec::with_capacity(PREFIX + json.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out
}

pub fn to_bytes(meta: &Metadata, objects: &[StoredObject]) -> Result<Vec<u8>> {
    let mut entries = Vec::with_capacity(objects.len());
    let mut payload = Vec::new();
    for obj in objects {
        let bytes = obj.data.to_bytes();
        let entry = obj.entry(payload.len() as u64, &bytes);
        check_object(&entry, meta.group)?;
        if entries.iter().any(|e: &ObjectEntry| e.name == entry.name) {
            return Err(layout(&entry.name, "duplicate object name").into());
        }
        payload.extend_from_slice(&bytes);
        entries.push(entry);
    }
    let mut out = encode_header(meta, entries);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn save(path: impl AsRef<FsPath>, meta: &Metadata, objects: &[StoredObject]) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(meta, objects)?;
    std::fs::write(path, bytes).map_err(io_err(path))?;
    Ok(())
}

pub fn load(path: impl AsRef<FsPath>) -> Result<Container> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    from_bytes(&bytes)
}

/// Header only; does not touch the payload.
pub fn read_header(bytes: &[u8]) -> std::result::Result<(Header, usize), StoreError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    if bytes.len() < PREFIX {
        return Err(StoreError::Header("file ends inside the header length".into()));
    }
    let len = u64::from_le_bytes(bytes[MAGIC.len()..PREFIX].try_into().unwrap());
    let end = usize::try_from(len)
        .ok()
        .and_then(|l| l.checked_add(PREFIX))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| StoreError::Header(format!("header length {len} exceeds the file")))?;
    if end % 8 != 0 {
        return Err(StoreError::Header(
            "payload does not start on an 8-byte boundary".into(),
        ));
    }
    let value: serde_json::Value =
        serde_json::from_slice(&bytes[PREFIX..end]).map_err(|e| StoreError::Header(e.to_string()))?;
    // Check the version before the rest of the schema so newer files fail clearly.
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| StoreError::Header("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(StoreError::UnsupportedVersion(version.min(u64::from(u32::MAX)) as u32));
    }
    let header: Header = serde_json::from_value(value).map_err(|e| StoreError::Header(e.to_string()))?;
    Ok((header, end))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Container> {
    let (header, start) = read_header(bytes)?;
    let payload = &bytes[start..];
    if header.basis == Basis::Cartesian && header.group == Group::SU2 {
        return Err(StoreError::Header("cartesian basis with su2".into()).into());
    }
    let mut objects = Vec::with_capacity(header.objects.len());
    let mut prev_end = 0u64;
    for (k, e) in header.objects.iter().enumerate() {
        if header.objects[..k].iter().any(|o| o.name == e.name) {
            return Err(layout(&e.name, "duplicate object name").into());
        }
        if e.byte_offset % 8 != 0 {
            return Err(layout(&e.name, format!("offset {} is not 8-byte aligned", e.byte_offset)).into());
        }
        if e.byte_offset < prev_end {
            return Err(layout(
                &e.name,
                format!(
                    "offset {} overlaps the previous object ending at {prev_end}",
                    e.byte_offset
                ),
            )
            .into());
        }
        check_object(e, header.group)?;
        let end = e
            .byte_offset
            .checked_add(e.byte_length)
            .ok_or_else(|| layout(&e.name, "extent overflows"))?;
        if end > payload.len() as u64 {
            return Err(StoreError::Truncated { object: e.name.clone() }.into());
        }
        let blob = &payload[e.byte_offset as usize..end as usize];
        let found = crc32fast::hash(blob);
        if found != e.crc32 {
            return Err(StoreError::Crc {
                object: e.name.clone(),
                expected: e.crc32,
                found,
            }
            .into());
        }
        prev_end = end;
        objects.push(StoredObject {
            name: e.name.clone(),
            kind: e.kind,
            path: e.path.clone(),
            in_path: e.in_path.clone(),
            irrep: e.irrep,
            space: e.space.clone(),
            data: Data::from_bytes(blob, e.dtype, e.shape[0], e.shape[1]),
        });
    }
    if prev_end != payload.len() as u64 {
        return Err(layout(
            "<payload>",
            format!("{} trailing bytes", payload.len() as u64 - prev_end),
        )
        .into());
    }
    Ok(Container {
        meta: Metadata {
            group: header.group,
            space_spec: header.space_spec,
            out_space_spec: header.out_space_spec,
            basis: header.basis,
        },
        objects,
    })
}
