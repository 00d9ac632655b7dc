use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

/// A fresh, timestamped directory for one run. Reruns never share a directory.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    files: Vec<String>,
    started: DateTime<Utc>,
}

impl RunDir {
    pub fn create(base: &Path, command: &str) -> io::Result<Self> {
        fs::create_dir_all(base)?;
        let started = Utc::now();
        let stem = format!("{command}-{}", started.format("%Y%m%dT%H%M%S%.6fZ"));
        let mut n = 0;
        loop {
            let name = if n == 0 { stem.clone() } else { format!("{stem}-{n}") };
            let path = base.join(name);
            match fs::create_dir(&path) {
                Ok(()) => {
                    return Ok(Self {
                        path,
                        files: Vec::new(),
                        started,
                    })
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(e),
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn started(&self) -> DateTime<Utc> {
        self.started
    }

    /// Writes `name` through a temporary file and a rename.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> io::Result<()> {
        write_atomic(&self.path.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reruns_get_distinct_directories() {
        let base = tempfile::tempdir().unwrap();
        let mut a = RunDir::create(base.path(), "optimize").unwrap();
        let b = RunDir::create(base.path(), "optimize").unwrap();
        assert_ne!(a.path(), b.path());
        a.write("x.txt", b"1").unwrap();
        a.write("x.txt", b"2").unwrap();
        assert_eq!(fs::read(a.path().join("x.txt")).unwrap(), b"2");
        let leftovers: Vec<_> = fs::read_dir(a.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
