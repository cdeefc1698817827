//! Output directory with atomic file writes (temp file in the same
//! directory, then rename).

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use tempfile::NamedTempFile;

pub struct Output {
    dir: PathBuf,
    pub dump_fields: bool,
}

impl Output {
    pub fn create(dir: &Path, dump_fields: bool) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            dump_fields,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> anyhow::Result<PathBuf> {
        let target = self.path(name);
        let mut tmp = NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("writing {}", target.display()))?;
        tmp.write_all(contents)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target)
            .with_context(|| format!("renaming into {}", target.display()))?;
        Ok(target)
    }

    pub fn write_str(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        self.write(name, contents.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_replace_whole_files_and_leave_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let out = Output::create(&dir.path().join("nested/out"), false).unwrap();
        out.write_str("a.json", "first, longer contents").unwrap();
        let p = out.write_str("a.json", "second").unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "second");
        let names: Vec<_> = std::fs::read_dir(dir.path().join("nested/out"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.json")]);
    }
}
