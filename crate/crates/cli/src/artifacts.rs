//! In-memory artifacts that are written all at once after a command succeeds.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const META_MAGIC: &[u8; 8] = b"AGARMETA";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Stamps fingerprint and version into every artifact of one run.
pub struct Stamp<'a> {
    pub fingerprint: &'a str,
}

impl Stamp<'_> {
    fn meta(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("fingerprint".into(), Value::from(self.fingerprint));
        m.insert("tool_version".into(), Value::from(TOOL_VERSION));
        m
    }

    /// Pretty JSON with the stamp merged into the top-level object.
    pub fn json(&self, name: &str, body: Value) -> Artifact {
        let mut obj = match body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("data".into(), other);
                m
            }
        };
        obj.extend(self.meta());
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(obj)).expect("JSON values serialize");
        bytes.push(b'\n');
        Artifact {
            name: name.into(),
            bytes,
        }
    }

    /// CSV preceded by a `#` comment line carrying the stamp.
    pub fn csv(&self, name: &str, body: &str) -> Artifact {
        let mut s = format!("# agar {TOOL_VERSION} fingerprint={}\n", self.fingerprint);
        s.push_str(body);
        Artifact {
            name: name.into(),
            bytes: s.into_bytes(),
        }
    }

    /// Binary payload followed by `AGARMETA`, a u32 LE length and the stamp as JSON.
    pub fn binary(&self, name: &str, mut payload: Vec<u8>) -> Artifact {
        let meta = serde_json::to_vec(&Value::Object(self.meta())).expect("JSON values serialize");
        payload.extend_from_slice(META_MAGIC);
        payload.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        payload.extend_from_slice(&meta);
        Artifact {
            name: name.into(),
            bytes: payload,
        }
    }
}

/// Reads the stamp trailer back from a binary artifact.
pub fn binary_meta(bytes: &[u8]) -> Option<Value> {
    let pos = bytes.windows(8).rposition(|w| w == META_MAGIC)?;
    let len_bytes: [u8; 4] = bytes.get(pos + 8..pos + 12)?.try_into().ok()?;
    let len = u32::from_le_bytes(len_bytes) as usize;
    serde_json::from_slice(bytes.get(pos + 12..pos + 12 + len)?).ok()
}

/// Writes one file through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes every artifact into `dir`.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<()> {
    for a in artifacts {
        write_atomic(&dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamps_every_format() {
        let s = Stamp { fingerprint: "abc" };
        let j = s.json("a.json", serde_json::json!({"x": 1}));
        let v: Value = serde_json::from_slice(&j.bytes).unwrap();
        assert_eq!(v["fingerprint"], "abc");
        assert_eq!(v["tool_version"], TOOL_VERSION);
        let c = s.csv("a.csv", "h\n1\n");
        assert!(String::from_utf8(c.bytes).unwrap().starts_with("# agar "));
        let b = s.binary("a.bin", vec![1, 2, 3]);
        assert_eq!(&b.bytes[..3], &[1, 2, 3]);
        assert_eq!(binary_meta(&b.bytes).unwrap()["fingerprint"], "abc");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
