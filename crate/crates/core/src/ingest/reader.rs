//! Streaming access to archive shards.
//!
//! A shard is a file of newline-delimited JSON, optionally gzip or bzip2
//! compressed, or a tar archive (itself optionally compressed) whose members
//! are such files. Directories are walked in sorted order. Lines are read one
//! at a time into a reused buffer.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use bzip2::read::MultiBzDecoder;
use flate2::read::MultiGzDecoder;

use crate::{Error, Result};

const GZIP_MAGIC: &[u8] = &[0x1f, 0x8b];
const BZIP2_MAGIC: &[u8] = b"BZh";

/// Expands files and directories into a sorted, de-duplicated shard list.
pub fn discover_shards(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut shards = Vec::new();
    for input in inputs {
        let meta = std::fs::metadata(input).map_err(|e| Error::io(input, e))?;
        if meta.is_dir() {
            let before = shards.len();
            for entry in walkdir::WalkDir::new(input).sort_by_file_name() {
                let entry = entry.map_err(|e| {
                    let path = e.path().unwrap_or(input).to_path_buf();
                    Error::io(path, io::Error::other(e.to_string()))
                })?;
                if entry.file_type().is_file() && !is_hidden(entry.path()) {
                    shards.push(entry.into_path());
                }
            }
            if shards.len() == before {
                return Err(Error::Config(format!(
                    "input directory {} contains no shards",
                    input.display()
                )));
            }
        } else {
            shards.push(input.clone());
        }
    }
    shards.sort();
    shards.dedup();
    Ok(shards)
}

fn is_hidden(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with('.'))
}

fn is_tar_name(name: &str) -> bool {
    [".tar", ".tar.gz", ".tgz", ".tar.bz2", ".tbz2", ".tbz"]
        .iter()
        .any(|ext| name.ends_with(ext))
}

/// Wraps a reader in the decompressor its leading bytes call for.
fn decompress<'a, R: BufRead + 'a>(mut reader: R) -> io::Result<Box<dyn BufRead + 'a>> {
    let head = reader.fill_buf()?;
    if head.starts_with(GZIP_MAGIC) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else if head.starts_with(BZIP2_MAGIC) {
        Ok(Box::new(BufReader::new(MultiBzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

fn for_each_line_in<R: BufRead>(
    mut reader: R,
    buf: &mut Vec<u8>,
    on_line: &mut dyn FnMut(&[u8]),
) -> io::Result<()> {
    loop {
        buf.clear();
        if reader.read_until(b'\n', buf)? == 0 {
            return Ok(());
        }
        let line = trim_line(buf);
        if !line.is_empty() {
            on_line(line);
        }
    }
}

fn trim_line(buf: &[u8]) -> &[u8] {
    let mut end = buf.len();
    while end > 0 && matches!(buf[end - 1], b'\n' | b'\r' | b' ' | b'\t') {
        end -= 1;
    }
    let mut start = 0;
    while start < end && matches!(buf[start], b' ' | b'\t') {
        start += 1;
    }
    &buf[start..end]
}

/// Calls `on_line` for every non-blank line of a shard. Lines delivered
/// before an I/O or decompression error stay delivered.
pub fn for_each_line(path: &Path, on_line: &mut dyn FnMut(&[u8])) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = decompress(BufReader::with_capacity(1 << 16, file)).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    let mut buf = Vec::with_capacity(8 << 10);
    if is_tar_name(&name) {
        let mut archive = tar::Archive::new(reader);
        let entries = archive.entries().map_err(|e| Error::io(path, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            if !entry.header().entry_type().is_file() {
                continue;
            }
            let member = decompress(BufReader::new(entry)).map_err(|e| Error::io(path, e))?;
            for_each_line_in(member, &mut buf, on_line).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    } else {
        for_each_line_in(reader, &mut buf, on_line).map_err(|e| Error::io(path, e))
    }
}

/// Reads a whole (possibly compressed) text file.
pub fn read_to_string(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = decompress(BufReader::new(file)).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn collect(path: &Path) -> Result<Vec<String>> {
        let mut lines = Vec::new();
        for_each_line(path, &mut |l| lines.push(String::from_utf8_lossy(l).into_owned()))?;
        Ok(lines)
    }

    #[test]
    fn plain_gzip_bzip2_and_tar() {
        let dir = tempfile::tempdir().unwrap();
        let body = "{\"a\":1}\n\n{\"b\":2}\r\n{\"c\":3}";

        let plain = dir.path().join("a.json");
        std::fs::write(&plain, body).unwrap();

        let gz = dir.path().join("b.json.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&gz).unwrap(), Default::default());
        enc.write_all(body.as_bytes()).unwrap();
        enc.finish().unwrap();

        let bz = dir.path().join("c.json.bz2");
        let mut enc = bzip2::write::BzEncoder::new(File::create(&bz).unwrap(), Default::default());
        enc.write_all(body.as_bytes()).unwrap();
        enc.finish().unwrap();

        let tarball = dir.path().join("d.tar");
        let mut builder = tar::Builder::new(File::create(&tarball).unwrap());
        builder.append_path_with_name(&gz, "x/00.json.gz").unwrap();
        builder.append_path_with_name(&plain, "x/01.json").unwrap();
        builder.finish().unwrap();
        drop(builder);

        let expected = vec!["{\"a\":1}", "{\"b\":2}", "{\"c\":3}"];
        assert_eq!(collect(&plain).unwrap(), expected);
        assert_eq!(collect(&gz).unwrap(), expected);
        assert_eq!(collect(&bz).unwrap(), expected);
        assert_eq!(collect(&tarball).unwrap().len(), 6);

        let shards = discover_shards(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(shards, vec![plain, gz, bz, tarball]);
    }

    #[test]
    fn corrupt_gzip_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json.gz");
        let mut bytes = vec![0x1f, 0x8b, 0x08, 0x00];
        bytes.extend_from_slice(&[0xde; 64]);
        std::fs::write(&path, bytes).unwrap();
        assert!(collect(&path).is_err());
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = discover_shards(&[dir.path().to_path_buf()]).unwrap_err();
        assert!(err.to_string().contains(&dir.path().display().to_string()));
    }
}
