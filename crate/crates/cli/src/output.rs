use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// `#`-prefixed metadata lines placed before a CSV header.
pub fn metadata(seed: u64, hash: &str, extra: &[String]) -> String {
    let mut s = format!(
        "# tool: stepgp {}\n# seed: {seed}\n# config_hash: sha256:{hash}\n",
        env!("CARGO_PKG_VERSION")
    );
    for line in extra {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().ok_or_else(|| io::Error::other("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// One CSV record as a complete line.
pub fn csv_line<I, S>(fields: I) -> Vec<u8>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields).expect("in-memory csv write");
    w.into_inner().expect("in-memory csv flush")
}

/// Appends rows to a file in index order, whatever order they arrive in.
/// Each row goes out in a single `write_all` followed by a flush, so an
/// interrupted run leaves only whole rows behind.
pub struct OrderedRows {
    file: File,
    next: usize,
    pending: BTreeMap<usize, Vec<u8>>,
}

impl OrderedRows {
    pub fn create(path: &Path, preamble: &[u8]) -> io::Result<Self> {
        let mut file = OpenOptions::new().write(true).create(true).truncate(true).open(path)?;
        file.write_all(preamble)?;
        file.flush()?;
        Ok(OrderedRows {
            file,
            next: 0,
            pending: BTreeMap::new(),
        })
    }

    pub fn push(&mut self, index: usize, line: Vec<u8>) -> io::Result<()> {
        self.pending.insert(index, line);
        while let Some(line) = self.pending.remove(&self.next) {
            self.file.write_all(&line)?;
            self.file.flush()?;
            self.next += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> io::Result<()> {
        if !self.pending.is_empty() {
            return Err(io::Error::other(format!("{} rows never became writable", self.pending.len())));
        }
        self.file.sync_all()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_come_out_in_index_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut w = OrderedRows::create(&path, b"a,b\n").unwrap();
        w.push(2, csv_line(["5", "6"])).unwrap();
        w.push(0, csv_line(["1", "2"])).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        w.push(1, csv_line(["3", "4"])).unwrap();
        w.finish().unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,2\n3,4\n5,6\n");
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, b"one\n").unwrap();
        write_atomic(&path, b"two\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            config_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
