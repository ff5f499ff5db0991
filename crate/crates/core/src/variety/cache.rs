use crate::cache::{cache_dir, write_atomic, Reader};
use crate::Result;

const MAGIC: &[u8; 4] = b"EQLS";
const VERSION: u32 = 1;

fn path(hash: &str, p: u64) -> Option<std::path::PathBuf> {
    cache_dir().map(|d| d.join(format!("sol-{hash}-{p}.bin")))
}

pub(super) fn encode(hash: &str, p: u64, m: usize, n: usize, flat: &[u32]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(96 + 4 * flat.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(hash.as_bytes());
    buf.extend_from_slice(&p.to_le_bytes());
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&((flat.len() / m) as u64).to_le_bytes());
    for v in flat {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub(super) fn decode(buf: &[u8], hash: &str, p: u64, m: usize, n: usize) -> Option<Vec<u32>> {
    let mut r = Reader::new(buf);
    let ok = r.bytes(4).ok()? == MAGIC
        && r.u32().ok()? == VERSION
        && r.bytes(hash.len()).ok()? == hash.as_bytes()
        && r.u64().ok()? == p
        && r.u32().ok()? as usize == m
        && r.u32().ok()? as usize == n;
    if !ok {
        return None;
    }
    let count = r.u64().ok()? as usize;
    let flat = (0..count * m).map(|_| r.u32().ok()).collect::<Option<Vec<_>>>()?;
    r.is_empty().then_some(flat)
}

pub(super) fn load(hash: &str, p: u64, m: usize, n: usize) -> Option<Vec<u32>> {
    let buf = std::fs::read(path(hash, p)?).ok()?;
    decode(&buf, hash, p, m, n)
}

pub(super) fn store(hash: &str, p: u64, m: usize, n: usize, flat: &[u32]) -> Result<()> {
    match path(hash, p) {
        Some(path) => write_atomic(&path, &encode(hash, p, m, n, flat)),
        None => Ok(()),
    }
}
