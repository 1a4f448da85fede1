use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling of `path` and renames it into
/// place, so readers never see a truncated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Builds a CSV document in memory.
pub struct CsvDoc {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header.iter().map(AsRef::as_ref))?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, cells: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        Ok(self.writer.write_record(cells)?)
    }

    pub fn save(self, path: &Path) -> Result<()> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| Error::invalid(format!("cannot finish CSV: {e}")))?;
        write_atomic(path, &bytes)
    }
}

/// Matrix with a leading label column and one column per component.
pub fn write_matrix(
    path: &Path,
    label: &str,
    row_labels: &[String],
    col_labels: &[String],
    m: ArrayView2<'_, f64>,
) -> Result<()> {
    let mut header = vec![label.to_owned()];
    header.extend(col_labels.iter().cloned());
    let mut doc = CsvDoc::new(&header)?;
    for (name, row) in row_labels.iter().zip(m.rows()) {
        let mut cells = vec![name.clone()];
        cells.extend(row.iter().map(|v| v.to_string()));
        doc.row(cells)?;
    }
    doc.save(path)
}

/// One label per row; clusters are numbered from 1.
pub fn write_clusters(path: &Path, label: &str, row_labels: &[String], clusters: &[Option<usize>]) -> Result<()> {
    let mut doc = CsvDoc::new(&[label, "cluster"])?;
    for (name, c) in row_labels.iter().zip(clusters) {
        let cell = c.map_or_else(|| "unassigned".to_owned(), |k| (k + 1).to_string());
        doc.row([name.as_str(), cell.as_str()])?;
    }
    doc.save(path)
}
