//! `QRGF` binary grid files.
//!
//! Layout (little-endian): magic `QRGF`, `u32` version, `u32` n, `u32` k,
//! `n × u32` resolutions, then `f64` coefficients point-major. For forms the
//! `k` field is the degree and each point carries `C(n, k)` coefficients; for
//! maps it holds the channel count `m`.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{GridDomain, GridForm};
use crate::algebra::binomial;
use crate::error::{Error, Result};
use crate::maps::SampledMap;

pub const MAGIC: &[u8; 4] = b"QRGF";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct QrgfData {
    pub n: usize,
    pub k: usize,
    pub resolution: Vec<usize>,
    pub values: Vec<f64>,
}

impl QrgfData {
    pub fn points(&self) -> usize {
        self.resolution.iter().product()
    }
}

pub fn write<W: Write>(mut w: W, data: &QrgfData) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [VERSION, data.n as u32, data.k as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for r in &data.resolution {
        w.write_all(&(*r as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(data.values.len() * 8);
    for v in &data.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a file whose per-point record has `per_point(n, k)` values.
pub fn read<R: Read>(mut r: R, per_point: impl Fn(usize, usize) -> usize) -> Result<QrgfData> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected QRGF".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported QRGF version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let k = read_u32(&mut r)? as usize;
    if n == 0 || n > 8 {
        return Err(Error::Format(format!("unsupported dimension {n}")));
    }
    let resolution = (0..n).map(|_| read_u32(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let count = resolution.iter().product::<usize>() * per_point(n, k);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", count * 8, bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(QrgfData { n, k, resolution, values })
}

pub fn write_form<W: Write>(w: W, form: &GridForm) -> Result<()> {
    write(
        w,
        &QrgfData {
            n: form.dim(),
            k: form.degree(),
            resolution: form.domain().resolution().to_vec(),
            values: form.values().to_vec(),
        },
    )
}

/// Reads a form onto `domain`, whose resolution must match the file.
pub fn read_form<R: Read>(r: R, domain: &Arc<GridDomain>) -> Result<GridForm> {
    let data = read(r, binomial)?;
    if data.resolution != domain.resolution() {
        return Err(Error::Format(format!(
            "file resolution {:?} does not match grid {:?}",
            data.resolution,
            domain.resolution()
        )));
    }
    GridForm::from_values(domain, data.k, data.values)
}

pub fn write_map<W: Write>(w: W, map: &SampledMap) -> Result<()> {
    write(
        w,
        &QrgfData {
            n: map.domain().dim(),
            k: map.target_dim(),
            resolution: map.domain().resolution().to_vec(),
            values: map.values().to_vec(),
        },
    )
}

/// Reads a map onto `domain`; the torus flag is not stored in the file.
pub fn read_map<R: Read>(r: R, domain: &Arc<GridDomain>, torus: bool) -> Result<SampledMap> {
    let data = read(r, |_, m| m)?;
    if data.resolution != domain.resolution() {
        return Err(Error::Format(format!(
            "file resolution {:?} does not match grid {:?}",
            data.resolution,
            domain.resolution()
        )));
    }
    SampledMap::from_values(domain, data.k, torus, data.values)
}
