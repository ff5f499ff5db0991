use std::collections::HashMap;
use std::path::PathBuf;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cache::{cache_dir, write_atomic, Reader};
use crate::field_poly::{CompiledSystem, PolySystem, PrimeModulus};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"EQVT";
const VERSION: u32 = 1;

/// The multiset of value vectors `(G_1(x), …, G_n(x))` over a point range,
/// stored as distinct vectors (sorted) with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueTable {
    p: u64,
    n: usize,
    entries: Vec<(Vec<u32>, u64)>,
    points: u64,
}

type Counts = HashMap<Box<[u32]>, u64>;

fn bump(map: &mut Counts, v: &[u32], by: u64) {
    match map.get_mut(v) {
        Some(c) => *c += by,
        None => {
            map.insert(v.into(), by);
        }
    }
}

fn merge(mut a: Counts, b: Counts) -> Counts {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (k, c) in b {
        bump(&mut a, &k, c);
    }
    a
}

impl ValueTable {
    fn from_counts(p: u64, n: usize, counts: Counts) -> Self {
        let mut entries: Vec<(Vec<u32>, u64)> =
            counts.into_iter().map(|(k, c)| (k.into_vec(), c)).collect();
        entries.sort_unstable();
        let points = entries.iter().map(|e| e.1).sum();
        ValueTable {
            p,
            n,
            entries,
            points,
        }
    }

    /// Table over explicit points.
    pub fn from_points(sys: &CompiledSystem, points: &[Vec<u64>]) -> Self {
        let n = sys.n();
        let counts = points
            .par_chunks(4096)
            .map(|chunk| {
                let mut map = Counts::new();
                let mut scratch = sys.scratch();
                let mut out = vec![0u64; n];
                let mut v = vec![0u32; n];
                for x in chunk {
                    sys.eval_into(x, &mut scratch, &mut out);
                    for (d, &s) in v.iter_mut().zip(&out) {
                        *d = s as u32;
                    }
                    bump(&mut map, &v, 1);
                }
                map
            })
            .reduce(Counts::new, merge);
        Self::from_counts(sys.modulus().get(), n, counts)
    }

    /// Table over the cube `{u + t : 0 <= t_j <= w}` (coordinates mod p).
    pub fn for_cube(sys: &CompiledSystem, u: &[u64], w: u64) -> Self {
        let p = sys.modulus().get();
        let m = sys.m();
        let n = sys.n();
        let side = w + 1;
        let counts = (0..side)
            .into_par_iter()
            .map(|t0| {
                let mut map = Counts::new();
                let mut scratch = sys.scratch();
                let mut out = vec![0u64; n];
                let mut v = vec![0u32; n];
                let mut t = vec![0u64; m];
                t[0] = t0;
                let mut x: Vec<u64> = (0..m).map(|j| (u[j] + t[j]) % p).collect();
                for _ in 0..side.pow(m as u32 - 1) {
                    sys.eval_into(&x, &mut scratch, &mut out);
                    for (d, &s) in v.iter_mut().zip(&out) {
                        *d = s as u32;
                    }
                    bump(&mut map, &v, 1);
                    for j in (1..m).rev() {
                        t[j] += 1;
                        if t[j] < side {
                            x[j] = (u[j] + t[j]) % p;
                            break;
                        }
                        t[j] = 0;
                        x[j] = u[j] % p;
                    }
                }
                map
            })
            .reduce(Counts::new, merge);
        Self::from_counts(p, n, counts)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of summed points (with multiplicity).
    pub fn points(&self) -> u64 {
        self.points
    }

    /// Distinct value vectors with their multiplicities, sorted.
    pub fn entries(&self) -> &[(Vec<u32>, u64)] {
        &self.entries
    }

    /// `N_t = #{x : Σ a_j G_j(x) ≡ t}` for `t < p`.
    pub fn histogram(&self, a: &[i64]) -> Vec<u64> {
        let p = PrimeModulus::new(self.p).expect("table modulus is prime");
        let a: Vec<u64> = a.iter().map(|&c| p.reduce_i64(c)).collect();
        let mut hist = vec![0u64; self.p as usize];
        for (v, c) in &self.entries {
            let mut t = 0u64;
            for (&aj, &vj) in a.iter().zip(v) {
                t = p.add(t, p.mul(aj, vj as u64));
            }
            hist[t as usize] += c;
        }
        hist
    }

    fn cache_path(system_hash: &str, p: u64, range_key: &str) -> Option<PathBuf> {
        let key = hex::encode(&Sha256::digest(range_key.as_bytes())[..8]);
        cache_dir().map(|d| d.join(format!("vt-{}-{p}-{key}.bin", &system_hash[..16])))
    }

    fn encode(&self, system_hash: &str, range_key: &str) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(system_hash.as_bytes());
        buf.extend_from_slice(&self.p.to_le_bytes());
        buf.extend_from_slice(&(self.n as u32).to_le_bytes());
        buf.extend_from_slice(&(range_key.len() as u32).to_le_bytes());
        buf.extend_from_slice(range_key.as_bytes());
        buf.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (v, c) in &self.entries {
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            buf.extend_from_slice(&c.to_le_bytes());
        }
        buf
    }

    fn decode(buf: &[u8], system_hash: &str, p: u64, range_key: &str) -> Result<Self> {
        let bad = |what: &str| Error::Io(format!("value-table cache: {what}"));
        let mut r = Reader::new(buf);
        if r.bytes(4)? != MAGIC || r.u32()? != VERSION {
            return Err(bad("bad header"));
        }
        if r.bytes(system_hash.len())? != system_hash.as_bytes() || r.u64()? != p {
            return Err(bad("key mismatch"));
        }
        let n = r.u32()? as usize;
        let klen = r.u32()? as usize;
        if r.bytes(klen)? != range_key.as_bytes() {
            return Err(bad("range mismatch"));
        }
        let len = r.u64()? as usize;
        let mut entries = Vec::with_capacity(len.min(1 << 20));
        for _ in 0..len {
            let v = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            entries.push((v, r.u64()?));
        }
        if !r.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let points = entries.iter().map(|e| e.1).sum();
        Ok(ValueTable {
            p,
            n,
            entries,
            points,
        })
    }

    /// Loads the table from the cache directory when present, otherwise
    /// builds and stores it. Unreadable cache files are rebuilt.
    pub fn cached<F>(system: &PolySystem, p: u64, range_key: &str, build: F) -> Result<Self>
    where
        F: FnOnce() -> Result<Self>,
    {
        let hash = system.hash_hex();
        let Some(path) = Self::cache_path(&hash, p, range_key) else {
            return build();
        };
        if let Ok(buf) = std::fs::read(&path) {
            if let Ok(t) = Self::decode(&buf, &hash, p, range_key) {
                return Ok(t);
            }
        }
        let table = build()?;
        write_atomic(&path, &table.encode(&hash, range_key))?;
        Ok(table)
    }
}
