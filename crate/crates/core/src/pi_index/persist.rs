//! Binary index files. All integers and floats are little-endian.
//!
//! PI file: `PIX1`, checksum u64, term count u32, each term as u32 length plus
//! UTF-8 bytes (sorted), then for each term a u32 posting count followed by
//! postings `{dewey len u32, components u32.., path_prob f64, marginal f64,
//! approx u8, part count u32, part values f64..}`.
//!
//! KI file: `KIX1` with the same header and Dewey-only postings.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{KiIndex, NodeTermProfile, Part, PiIndex, TermId, Vocabulary};
use crate::error::{Error, Result};
use crate::prxml::DeweyCode;

const PI_MAGIC: &[u8; 4] = b"PIX1";
const KI_MAGIC: &[u8; 4] = b"KIX1";

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_header(w: &mut impl Write, magic: &[u8; 4], checksum: u64, vocab: &Vocabulary) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&checksum.to_le_bytes())?;
    put_u32(w, vocab.len() as u32)?;
    for t in vocab.terms() {
        put_u32(w, t.len() as u32)?;
        w.write_all(t.as_bytes())?;
    }
    Ok(())
}

fn put_dewey(w: &mut impl Write, d: &DeweyCode) -> Result<()> {
    put_u32(w, d.components().len() as u32)?;
    for &c in d.components() {
        put_u32(w, c)?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::IndexFormat("truncated index file".into())
    } else {
        Error::Io(e)
    }
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(truncated)?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.bytes()?);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::IndexFormat(format!("probability {v} out of range")));
        }
        Ok(v)
    }

    /// Length prefix, sanity-checked so corrupt input cannot trigger huge
    /// allocations.
    fn len(&mut self) -> Result<usize> {
        let n = self.u32()? as usize;
        if n > 1 << 26 {
            return Err(Error::IndexFormat(format!("implausible length {n}")));
        }
        Ok(n)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<(u64, Vocabulary)> {
        let m: [u8; 4] = self.bytes()?;
        if &m != magic {
            return Err(Error::IndexFormat(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(magic)
            )));
        }
        let checksum = self.u64()?;
        let n = self.len()?;
        let mut terms = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            let len = self.len()?;
            let mut buf = vec![0u8; len];
            self.inner.read_exact(&mut buf).map_err(truncated)?;
            terms.push(
                String::from_utf8(buf).map_err(|_| Error::IndexFormat("term is not UTF-8".into()))?,
            );
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::IndexFormat("terms not sorted".into()));
        }
        Ok((checksum, Vocabulary::from_terms(terms)))
    }

    fn dewey(&mut self) -> Result<DeweyCode> {
        let n = self.len()?;
        let mut comps = Vec::with_capacity(n.min(256));
        for _ in 0..n {
            comps.push(self.u32()?);
        }
        if comps.contains(&0) {
            return Err(Error::IndexFormat(format!("bad Dewey code {comps:?}")));
        }
        Ok(DeweyCode::from_components(comps))
    }

    fn finish(&mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        match self.inner.read(&mut rest)? {
            0 => Ok(()),
            _ => Err(Error::IndexFormat("trailing bytes".into())),
        }
    }
}

pub fn save_pi(index: &PiIndex, w: &mut impl Write) -> Result<()> {
    put_header(w, PI_MAGIC, index.checksum, &index.vocab)?;
    for (k, list) in index.per_term.iter().enumerate() {
        let k = k as TermId;
        put_u32(w, list.len() as u32)?;
        for d in list {
            let p = &index.profiles[d];
            put_dewey(w, d)?;
            put_f64(w, p.path_prob)?;
            put_f64(w, p.marginals.get(k))?;
            w.write_all(&[p.approx as u8])?;
            put_u32(w, p.parts.len() as u32)?;
            for part in &p.parts {
                put_f64(w, part.get(k))?;
            }
        }
    }
    Ok(())
}

pub fn load_pi(r: impl Read) -> Result<PiIndex> {
    let mut r = Reader { inner: r };
    let (checksum, vocab) = r.header(PI_MAGIC)?;
    let mut profiles: BTreeMap<DeweyCode, NodeTermProfile> = BTreeMap::new();
    let mut per_term = Vec::with_capacity(vocab.len());
    for k in 0..vocab.len() as TermId {
        let n = r.len()?;
        let mut list = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let d = r.dewey()?;
            let path_prob = r.f64()?;
            let marginal = r.f64()?;
            let approx = match r.bytes::<1>()?[0] {
                0 => false,
                1 => true,
                b => return Err(Error::IndexFormat(format!("bad approx flag {b}"))),
            };
            let count = r.len()?;
            let mut values = Vec::with_capacity(count.min(1024));
            for _ in 0..count {
                values.push(r.f64()?);
            }
            let prof = profiles.entry(d.clone()).or_insert_with(|| NodeTermProfile {
                node: d.clone(),
                path_prob,
                parts: vec![Part::default(); count],
                marginals: Part::default(),
                approx,
            });
            if prof.parts.len() != count || prof.path_prob != path_prob || prof.approx != approx {
                return Err(Error::IndexFormat(format!("inconsistent postings for {d}")));
            }
            prof.marginals.set(k, marginal);
            for (part, v) in prof.parts.iter_mut().zip(values) {
                part.set(k, v);
            }
            if list.last().is_some_and(|prev: &DeweyCode| *prev >= d) {
                return Err(Error::IndexFormat("postings not in document order".into()));
            }
            list.push(d);
        }
        per_term.push(list);
    }
    r.finish()?;
    Ok(PiIndex {
        checksum,
        vocab,
        profiles,
        per_term,
    })
}

pub fn save_ki(index: &KiIndex, w: &mut impl Write) -> Result<()> {
    put_header(w, KI_MAGIC, index.checksum, &index.vocab)?;
    for list in &index.per_term {
        put_u32(w, list.len() as u32)?;
        for d in list {
            put_dewey(w, d)?;
        }
    }
    Ok(())
}

pub fn load_ki(r: impl Read) -> Result<KiIndex> {
    let mut r = Reader { inner: r };
    let (checksum, vocab) = r.header(KI_MAGIC)?;
    let mut per_term = Vec::with_capacity(vocab.len());
    for _ in 0..vocab.len() {
        let n = r.len()?;
        let mut list: Vec<DeweyCode> = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let d = r.dewey()?;
            if list.last().is_some_and(|prev| *prev >= d) {
                return Err(Error::IndexFormat("postings not in document order".into()));
            }
            list.push(d);
        }
        per_term.push(list);
    }
    r.finish()?;
    Ok(KiIndex {
        checksum,
        vocab,
        per_term,
    })
}
