//! Plain-text formats: grid files, flat key-value configs and trajectory directories.
//!
//! A grid file starts with a header line `nx ny nz h` followed by the values
//! in linear-index order, one line per `j_x` slice. Values are written with
//! the shortest representation that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec};

/// Field values on a grid together with the grid geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct GridText {
    pub shape: [usize; 3],
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridText {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(GridText {
            shape: grid.shape(),
            h: grid.spacing(),
            values,
        })
    }

    /// Grid matching the header; active axes are those with more than one point,
    /// at least one axis is always active.
    pub fn grid(&self, bc: Boundary) -> Result<GridSpec> {
        let mut qubits = Vec::new();
        for (axis, &n) in self.shape.iter().enumerate() {
            if !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("axis {axis} has {n} points, not a power of two")));
            }
            if n > 1 {
                qubits.push(n.trailing_zeros());
            }
        }
        if qubits.is_empty() {
            qubits.push(0);
        }
        GridSpec::uniform(&qubits, self.h, bc)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let [nx, ny, nz] = self.shape;
        writeln!(out, "{nx} {ny} {nz} {}", self.h)?;
        for row in self.values.chunks(ny * nz) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let mut header = [0usize; 3];
        for (k, slot) in header.iter_mut().enumerate() {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::Parse("grid file header is incomplete".into()))?;
            *slot = tok
                .parse()
                .map_err(|_| Error::Parse(format!("header field {k} {tok:?} is not a count")))?;
        }
        let h_tok = tokens
            .next()
            .ok_or_else(|| Error::Parse("grid file header lacks the spacing".into()))?;
        let h: f64 = h_tok
            .parse()
            .map_err(|_| Error::Parse(format!("spacing {h_tok:?} is not a number")))?;
        let values = tokens
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("{t:?} is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        let expected = header.iter().product::<usize>();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(GridText {
            shape: header,
            h,
            values,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        fs::write(path, buf).map_err(|e| Error::from(e).context(path.display().to_string()))
    }
}

/// Flat `key = value` pairs; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    Ok(map)
}

/// Header of a trajectory directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Trajectory directory layout: `manifest.txt`, `times.csv` and one grid
/// file per snapshot and field, named `<field>_<index>.grid`.
pub struct TrajectoryDir {
    pub root: PathBuf,
}

impl TrajectoryDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::from(e).context(root.display().to_string()))?;
        Ok(TrajectoryDir { root: root.to_path_buf() })
    }

    pub fn open(root: &Path) -> Result<Self> {
        if !root.join("times.csv").is_file() {
            return Err(Error::Config(format!(
                "{} is not a trajectory directory (times.csv missing)",
                root.display()
            )));
        }
        Ok(TrajectoryDir { root: root.to_path_buf() })
    }

    pub fn field_path(&self, field: &str, index: usize) -> PathBuf {
        self.root.join(format!("{field}_{index:05}.grid"))
    }

    pub fn write_manifest(&self, entries: &[(&str, String)]) -> Result<()> {
        let mut text = String::new();
        for (k, v) in entries {
            text.push_str(&format!("{k} = {v}\n"));
        }
        fs::write(self.root.join("manifest.txt"), text)?;
        Ok(())
    }

    pub fn read_manifest(&self) -> Result<Manifest> {
        let path = self.root.join("manifest.txt");
        let text = fs::read_to_string(&path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Ok(Manifest {
            entries: parse_key_values(&text)?,
        })
    }

    /// Writes `index,step,time` rows.
    pub fn write_times(&self, rows: &[(usize, f64)]) -> Result<()> {
        let mut text = String::from("index,step,time\n");
        for (i, (step, t)) in rows.iter().enumerate() {
            text.push_str(&format!("{i},{step},{t}\n"));
        }
        fs::write(self.root.join("times.csv"), text)?;
        Ok(())
    }

    pub fn read_times(&self) -> Result<Vec<(usize, f64)>> {
        let path = self.root.join("times.csv");
        let text = fs::read_to_string(&path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("times.csv line {}: malformed row {line:?}", lineno + 1));
            if parts.len() != 3 {
                return Err(bad());
            }
            let step = parts[1].parse().map_err(|_| bad())?;
            let t = parts[2].parse().map_err(|_| bad())?;
            rows.push((step, t));
        }
        Ok(rows)
    }

    /// `(time, values)` for every snapshot of `field`.
    pub fn read_field_series(&self, field: &str) -> Result<Vec<(f64, GridText)>> {
        self.read_times()?
            .into_iter()
            .enumerate()
            .map(|(i, (_, t))| Ok((t, GridText::read(&self.field_path(field, i))?)))
            .collect()
    }
}
