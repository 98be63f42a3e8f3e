use std::fs::File;
use std::path::Path;

use crate::CliError;

/// Numeric CSV table with a header row; `#` lines are comments.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let malformed = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(malformed("missing header row".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| malformed(format!("row {} has a non-numeric or non-finite value", i + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(malformed("no data rows".into()));
    }
    Ok(Table { headers, rows })
}

/// Training data: every column but a final `y` column is an input.
pub fn read_training(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>), CliError> {
    let t = read_table(path)?;
    if t.headers.len() < 2 || t.headers.last().map(String::as_str) != Some("y") {
        return Err(CliError::Usage(format!(
            "{}: training data needs input columns followed by a 'y' column",
            path.display()
        )));
    }
    let d = t.headers.len() - 1;
    let x = t.rows.iter().map(|r| r[..d].to_vec()).collect();
    let y = t.rows.iter().map(|r| r[d]).collect();
    Ok((x, y))
}

/// Test inputs; a trailing `y` column, if present, is returned separately.
pub fn read_inputs(path: &Path) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>), CliError> {
    let t = read_table(path)?;
    if t.headers.last().map(String::as_str) == Some("y") {
        let d = t.headers.len() - 1;
        if d == 0 {
            return Err(CliError::Usage(format!("{}: no input columns", path.display())));
        }
        let x = t.rows.iter().map(|r| r[..d].to_vec()).collect();
        let y = t.rows.iter().map(|r| r[d]).collect();
        Ok((x, Some(y)))
    } else {
        Ok((t.rows, None))
    }
}
