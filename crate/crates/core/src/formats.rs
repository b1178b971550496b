//! Binary files for base colorings (`PHIF`) and materialized lifted colorings (`DSYC`).
//!
//! Both start with a 4-byte magic, a version byte and the bytes `N`, `r`, `k`.
//! Bit arrays are indexed by colex rank, least significant bit first within
//! each byte, and padded with zero bits to a whole byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::coloring::{PhiFamily, PhiTable, StepupConfig};
use crate::daisy::{ChiColoring, TableColoring};
use crate::error::{Error, Result};

pub const PHI_MAGIC: [u8; 4] = *b"PHIF";
pub const CHI_MAGIC: [u8; 4] = *b"DSYC";
pub const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub n: u8,
    pub r: u8,
    pub k: u8,
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn narrow(v: u32, what: &str) -> Result<u8> {
    u8::try_from(v).or_else(|_| bad(format!("{what} = {v} does not fit in a byte")))
}

fn write_header(w: &mut impl Write, magic: [u8; 4], h: Header) -> Result<()> {
    w.write_all(&magic)?;
    w.write_all(&[VERSION, h.n, h.r, h.k])?;
    Ok(())
}

fn read_header(rd: &mut impl Read, magic: [u8; 4]) -> Result<Header> {
    let mut buf = [0u8; 8];
    rd.read_exact(&mut buf).or_else(|_| bad("truncated header"))?;
    if buf[..4] != magic {
        return bad(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&buf[..4]),
            String::from_utf8_lossy(&magic)
        ));
    }
    if buf[4] != VERSION {
        return bad(format!("unsupported version {}", buf[4]));
    }
    Ok(Header { n: buf[5], r: buf[6], k: buf[7] })
}

fn write_bits(w: &mut impl Write, words: &[u64], len: u64) -> Result<()> {
    let nbytes = len.div_ceil(8) as usize;
    let mut out = Vec::with_capacity(nbytes);
    for word in words {
        out.extend_from_slice(&word.to_le_bytes());
    }
    out.truncate(nbytes);
    w.write_all(&out)?;
    Ok(())
}

fn read_bits(rd: &mut impl Read, len: u64) -> Result<Vec<u64>> {
    let nbytes = len.div_ceil(8) as usize;
    let mut raw = vec![0u8; nbytes];
    rd.read_exact(&mut raw).or_else(|_| bad(format!("truncated bit array, expected {nbytes} bytes")))?;
    if !len.is_multiple_of(8) && raw[nbytes - 1] >> (len % 8) != 0 {
        return bad("nonzero padding bits");
    }
    raw.resize(len.div_ceil(64) as usize * 8, 0);
    Ok(raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

fn expect_eof(rd: &mut impl Read) -> Result<()> {
    let mut extra = [0u8; 1];
    match rd.read(&mut extra)? {
        0 => Ok(()),
        _ => bad("trailing bytes after the bit arrays"),
    }
}

/// Writes an explicit family; seeded families are reproduced from their seed instead.
pub fn write_phi(w: &mut impl Write, phi: &PhiFamily) -> Result<()> {
    let h = Header { n: narrow(phi.n_levels(), "N")?, r: narrow(phi.r(), "r")?, k: narrow(phi.k(), "k")? };
    write_header(w, PHI_MAGIC, h)?;
    for t in phi.tables() {
        let Some(bits) = t.bits() else {
            return bad(format!("arity {} is seeded and has no explicit table", t.arity()));
        };
        write_bits(w, bits, PhiTable::table_len(t.n(), t.arity()))?;
    }
    Ok(())
}

pub fn read_phi(rd: &mut impl Read) -> Result<PhiFamily> {
    let h = read_header(rd, PHI_MAGIC)?;
    let (n, r, k) = (h.n as u32, h.r as u32, h.k as u32);
    if r < 2 || k + r - 1 > n {
        return bad(format!("header (N, r, k) = ({n}, {r}, {k}) has no arity range inside [N]"));
    }
    let mut tables = Vec::new();
    for i in r - 1..=k + r - 1 {
        let bits = read_bits(rd, PhiTable::table_len(n, i))?;
        tables.push(PhiTable::from_bits(n, i, bits).map_err(|e| Error::Format(e.to_string()))?);
    }
    expect_eof(rd)?;
    PhiFamily::new(n, r, k, tables).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_phi(path: &Path, phi: &PhiFamily) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_phi(&mut w, phi)?;
    w.flush()?;
    Ok(())
}

pub fn load_phi(path: &Path) -> Result<PhiFamily> {
    read_phi(&mut BufReader::new(File::open(path)?))
}

/// A lifted coloring of all `(k+r)`-subsets of `[2^N]`.
pub struct ChiFile {
    pub header: Header,
    pub table: TableColoring,
}

/// Evaluates χ on every edge of the ground set and builds the table in memory.
pub fn materialize_chi(cfg: &StepupConfig) -> Result<ChiFile> {
    let header = Header { n: narrow(cfg.params.n_bits(), "N")?, r: narrow(cfg.r, "r")?, k: narrow(cfg.k, "k")? };
    let chi = ChiColoring { cfg: cfg.clone() };
    Ok(ChiFile { header, table: TableColoring::from_coloring(&chi)? })
}

pub fn write_chi(w: &mut impl Write, f: &ChiFile) -> Result<()> {
    write_header(w, CHI_MAGIC, f.header)?;
    let len = TableColoring::edge_count(f.table.n(), (f.header.k + f.header.r) as usize)?;
    write_bits(w, f.table.bits(), len)
}

pub fn read_chi(rd: &mut impl Read) -> Result<ChiFile> {
    let header = read_header(rd, CHI_MAGIC)?;
    if header.n == 0 || header.n > 24 {
        return bad(format!("N = {} is out of range", header.n));
    }
    let ground = 1u32 << header.n;
    let u = (header.k + header.r) as usize;
    let len = TableColoring::edge_count(ground, u).map_err(|e| Error::Format(e.to_string()))?;
    let bits = read_bits(rd, len)?;
    expect_eof(rd)?;
    Ok(ChiFile { header, table: TableColoring::new(ground, u, bits)? })
}

pub fn save_chi(path: &Path, f: &ChiFile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_chi(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_chi(path: &Path) -> Result<ChiFile> {
    read_chi(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::daisy::EdgeColoring;
    use crate::tree::TreeParams;

    #[test]
    fn phi_round_trip() {
        let phi = PhiFamily::random(6, 4, 2, 11).unwrap();
        let mut buf = Vec::new();
        write_phi(&mut buf, &phi).unwrap();
        // header + C(6,3) + C(6,4) + C(6,5) bits = 20 + 15 + 6
        assert_eq!(buf.len(), 8 + 3 + 2 + 1);
        let back = read_phi(&mut buf.as_slice()).unwrap();
        for (a, b) in phi.tables().iter().zip(back.tables()) {
            assert_eq!(a.bits(), b.bits());
        }
    }

    #[test]
    fn phi_rejects_corruption() {
        let phi = PhiFamily::random(5, 4, 1, 3).unwrap();
        let mut buf = Vec::new();
        write_phi(&mut buf, &phi).unwrap();
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_phi(&mut bad_magic.as_slice()), Err(Error::Format(_))));
        let mut longer = buf.clone();
        longer.push(0);
        assert!(read_phi(&mut longer.as_slice()).is_err());
        assert!(read_phi(&mut &buf[..buf.len() - 1]).is_err());
        let mut version = buf.clone();
        version[4] = 9;
        assert!(read_phi(&mut version.as_slice()).is_err());
        // C(5,3) = 10 bits leave 6 padding bits in the second byte
        let mut pad = buf;
        pad[9] |= 0x80;
        assert!(read_phi(&mut pad.as_slice()).is_err());
    }

    #[test]
    fn chi_round_trip() {
        let phi = PhiFamily::random(4, 4, 1, 5).unwrap();
        let cfg = StepupConfig::new(TreeParams::new(4).unwrap(), 4, 1, Arc::new(phi)).unwrap();
        let f = materialize_chi(&cfg).unwrap();
        let mut buf = Vec::new();
        write_chi(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 8 + (4368usize).div_ceil(8));
        let back = read_chi(&mut buf.as_slice()).unwrap();
        assert_eq!(back.header, f.header);
        assert_eq!(back.table.bits(), f.table.bits());
        let chi = ChiColoring { cfg };
        for e in [[1u32, 2, 3, 4, 5], [2, 5, 9, 12, 16]] {
            assert_eq!(back.table.color(&e).unwrap(), chi.color(&e).unwrap());
        }
    }
}
