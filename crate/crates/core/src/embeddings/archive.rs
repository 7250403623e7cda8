//! On-disk archive layout (all integers little-endian):
//!
//! ```text
//! magic "MICEEMB1" (8 bytes) | version u32 = 1 | dim u32 | entry count u32
//! provider tag: u16 length + UTF-8 bytes
//! per entry: id u16 length + UTF-8 bytes | token count u32 | T·dim f32, row-major
//! ```
//!
//! Archives are read and validated eagerly: magic, version, dimension,
//! duplicate ids, finiteness, truncation and trailing bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EmbeddingArchive, SentenceEmbedding};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MICEEMB1";
pub const VERSION: u32 = 1;

/// Exact byte size of the encoded archive.
pub fn archive_file_size(archive: &EmbeddingArchive) -> usize {
    let header = 8 + 4 + 4 + 4 + 2 + archive.provider_tag.len();
    let entries: usize = archive
        .entries()
        .iter()
        .map(|e| 2 + e.sentence_id.len() + 4 + e.values().len() * 4)
        .sum();
    header + entries
}

fn short_string(s: &str, what: &str) -> Result<u16> {
    u16::try_from(s.len()).map_err(|_| Error::invalid(format!("{what} longer than 65535 bytes")))
}

pub fn encode_archive(archive: &EmbeddingArchive) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(archive_file_size(archive));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(archive.dim() as u32).to_le_bytes());
    let count = u32::try_from(archive.len()).map_err(|_| Error::invalid("too many entries"))?;
    buf.extend_from_slice(&count.to_le_bytes());
    buf.extend_from_slice(&short_string(&archive.provider_tag, "provider tag")?.to_le_bytes());
    buf.extend_from_slice(archive.provider_tag.as_bytes());
    for e in archive.entries() {
        buf.extend_from_slice(&short_string(&e.sentence_id, "sentence id")?.to_le_bytes());
        buf.extend_from_slice(e.sentence_id.as_bytes());
        buf.extend_from_slice(&(e.tokens() as u32).to_le_bytes());
        for v in e.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_archive(archive: &EmbeddingArchive, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_archive(archive)?;
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::file(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::file(&tmp, e))?;
        f.sync_all().map_err(|e| Error::file(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::file(path, e))
}

pub fn open_archive(path: impl AsRef<Path>) -> Result<EmbeddingArchive> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_archive(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
}

pub fn decode_archive(bytes: &[u8]) -> Result<EmbeddingArchive> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8, "magic")? != MAGIC {
        return Err(Error::Format("bad magic, not an embedding archive".into()));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported archive version {version}")));
    }
    let dim = cur.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::Format("archive dimension is zero".into()));
    }
    let count = cur.u32("entry count")? as usize;
    let tag = cur.string("provider tag")?;
    let mut archive = EmbeddingArchive::new(dim, tag)?;
    for k in 0..count {
        let id = cur.string("sentence id")?;
        let tokens = cur.u32("token count")? as usize;
        let nbytes = tokens
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Format(format!("entry {k}: payload size overflows")))?;
        let raw = cur.take(nbytes, "vector payload")?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let entry = SentenceEmbedding::new(id, dim, values)
            .map_err(|e| Error::Format(format!("entry {k}: {e}")))?;
        archive
            .push(entry)
            .map_err(|e| Error::Format(format!("entry {k}: {e}")))?;
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last entry",
            bytes.len() - cur.pos
        )));
    }
    Ok(archive)
}
