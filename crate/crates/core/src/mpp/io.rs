//! Binary region-table files. All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes  "CGRTABLE"
//! version      u16
//! fingerprint  32 bytes
//! n_gen        u32
//! n_load       u32
//! n_regions    u32
//! load buses   n_load × u32
//! domain       n_load × f64 lower, n_load × f64 upper
//! cost         n_gen × f64
//! intensities  n_gen × f64
//! capacity     f64 min, f64 max
//! fixed load   f64
//! per region:
//!   n_active   u32, then n_active × u32 row indices
//!   J          n_gen × n_load f64, row-major
//!   g          n_gen × f64
//!   n_rows     u32, then per row:
//!                facet tag u8 (0 canonical row, 1 domain upper, 2 domain lower)
//!                facet index u32
//!                coefficients n_load × f64, rhs f64
//!   center     n_load × f64, radius f64
//!   lmce       n_load × f64
//!   lmp        n_load × f64
//! checksum     32 bytes, SHA-256 of everything above
//! ```

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::case_io::{network_fingerprint, EnrichedNetwork};

use super::{AffineLaw, Facet, LoadDomain, MppError, Region, RegionPolytope, RegionTable};

pub const MAGIC: &[u8; 8] = b"CGRTABLE";
pub const TABLE_VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("table dimension fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.f64(*v);
        }
    }
}

pub fn write_table(table: &RegionTable) -> Vec<u8> {
    let (n_gen, n_load) = (table.n_gen(), table.n_load());
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(TABLE_VERSION);
    w.0.extend_from_slice(&table.fingerprint);
    w.u32(n_gen);
    w.u32(n_load);
    w.u32(table.regions.len());
    for &bus in &table.load_buses {
        w.u32(bus as usize);
    }
    w.f64s(&table.domain.lower);
    w.f64s(&table.domain.upper);
    w.f64s(&table.cost);
    w.f64s(&table.intensities);
    w.f64(table.capacity.0);
    w.f64(table.capacity.1);
    w.f64(table.fixed_load);
    for region in &table.regions {
        let law = &region.law;
        w.u32(law.active_set.len());
        for &j in &law.active_set {
            w.u32(j);
        }
        for r in 0..n_gen {
            for c in 0..n_load {
                w.f64(law.j[(r, c)]);
            }
        }
        w.f64s(law.g.iter());
        let p = &region.polytope;
        w.u32(p.n_rows());
        for r in 0..p.n_rows() {
            let (tag, index) = match p.facets[r] {
                Facet::Row(j) => (0, j),
                Facet::DomainUpper(i) => (1, i),
                Facet::DomainLower(i) => (2, i),
            };
            w.u8(tag);
            w.u32(index);
            for c in 0..n_load {
                w.f64(p.m[(r, c)]);
            }
            w.f64(p.k[r]);
        }
        w.f64s(p.center.iter());
        w.f64(p.radius);
        w.f64s(&region.lmce);
        w.f64s(&region.lmp);
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MppError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(MppError::Corrupt("unexpected end of table".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, MppError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, MppError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize, MppError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64, MppError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, MppError> {
        (0..n).map(|_| self.f64()).collect()
    }
    /// Guards allocations driven by counts read from the file.
    fn check_count(&self, count: usize, unit: usize) -> Result<(), MppError> {
        if count.saturating_mul(unit) > self.bytes.len() - self.pos {
            return Err(MppError::Corrupt(format!(
                "count {count} exceeds remaining data"
            )));
        }
        Ok(())
    }
}

pub fn read_table(bytes: &[u8]) -> Result<RegionTable, MppError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(MppError::Corrupt("not a region table (bad magic)".into()));
    }
    if bytes.len() < MAGIC.len() + 2 + 32 + 32 {
        return Err(MppError::Checksum);
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(MppError::Checksum);
    }
    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let version = r.u16()?;
    if version != TABLE_VERSION {
        return Err(MppError::TableVersion {
            found: version,
            expected: TABLE_VERSION,
        });
    }
    let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
    let n_gen = r.u32()?;
    let n_load = r.u32()?;
    let n_regions = r.u32()?;
    r.check_count(n_load, 4)?;
    let load_buses = (0..n_load)
        .map(|_| r.u32().map(|v| v as u32))
        .collect::<Result<Vec<_>, _>>()?;
    r.check_count(n_load, 16)?;
    let domain = LoadDomain {
        lower: r.f64s(n_load)?,
        upper: r.f64s(n_load)?,
    };
    r.check_count(n_gen, 16)?;
    let cost = r.f64s(n_gen)?;
    let intensities = r.f64s(n_gen)?;
    let capacity = (r.f64()?, r.f64()?);
    let fixed_load = r.f64()?;

    let mut regions = Vec::new();
    for _ in 0..n_regions {
        let n_active = r.u32()?;
        r.check_count(n_active, 4)?;
        let active_set = (0..n_active)
            .map(|_| r.u32())
            .collect::<Result<Vec<_>, _>>()?;
        r.check_count(n_gen * n_load, 8)?;
        let j_rows = r.f64s(n_gen * n_load)?;
        let j = DMatrix::from_row_slice(n_gen, n_load, &j_rows);
        let g = DVector::from_vec(r.f64s(n_gen)?);
        let n_rows = r.u32()?;
        r.check_count(n_rows, 5 + 8 * (n_load + 1))?;
        let mut m_rows = Vec::with_capacity(n_rows * n_load);
        let mut k = Vec::with_capacity(n_rows);
        let mut facets = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            let tag = r.u8()?;
            let index = r.u32()?;
            facets.push(match tag {
                0 => Facet::Row(index),
                1 => Facet::DomainUpper(index),
                2 => Facet::DomainLower(index),
                t => return Err(MppError::Corrupt(format!("unknown facet tag {t}"))),
            });
            m_rows.extend(r.f64s(n_load)?);
            k.push(r.f64()?);
        }
        let center = DVector::from_vec(r.f64s(n_load)?);
        let radius = r.f64()?;
        let lmce = r.f64s(n_load)?;
        let lmp = r.f64s(n_load)?;
        regions.push(Region {
            law: AffineLaw { active_set, j, g },
            polytope: RegionPolytope {
                m: DMatrix::from_row_slice(n_rows, n_load, &m_rows),
                k: DVector::from_vec(k),
                facets,
                center,
                radius,
            },
            lmce,
            lmp,
        });
    }
    if r.pos != body.len() {
        return Err(MppError::Corrupt(format!(
            "{} trailing bytes",
            body.len() - r.pos
        )));
    }
    Ok(RegionTable {
        fingerprint,
        load_buses,
        domain,
        cost,
        intensities,
        capacity,
        fixed_load,
        regions,
    })
}

pub fn save_table(table: &RegionTable, path: impl AsRef<Path>) -> Result<(), MppError> {
    fs::write(path, write_table(table))?;
    Ok(())
}

/// Reads a table without checking which network it belongs to.
pub fn load_table(path: impl AsRef<Path>) -> Result<RegionTable, MppError> {
    read_table(&fs::read(path)?)
}

/// Reads a table and rejects it unless it was built from `net`.
pub fn load_table_for(
    path: impl AsRef<Path>,
    net: &EnrichedNetwork,
) -> Result<RegionTable, MppError> {
    let table = load_table(path)?;
    check_fingerprint(&table, net)?;
    Ok(table)
}

pub fn check_fingerprint(table: &RegionTable, net: &EnrichedNetwork) -> Result<(), MppError> {
    let expected = network_fingerprint(net);
    if table.fingerprint != expected {
        return Err(MppError::StaleTable {
            table: hex(&table.fingerprint),
            network: hex(&expected),
        });
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
