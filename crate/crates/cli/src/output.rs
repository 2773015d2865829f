//! On-disk artifacts: `series.csv`, BQD1 density snapshots and plain tables.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use bosemix_core::observables::{DensitySnapshot, ObservableRecord};
use bosemix_core::ObservableSeries;

pub const SERIES_HEADER: &str = "t,X_B,X_I,E_B,E_I,E_BI,S_VN,F_B,F_I";
pub const BQD_MAGIC: &[u8; 4] = b"BQD1";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn series_csv(series: &ObservableSeries) -> String {
    let mut s = String::with_capacity(64 + series.len() * 200);
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for r in &series.records {
        let cols = [
            fmt_f64(r.t),
            opt(r.x_b),
            opt(r.x_i),
            opt(r.e_b),
            fmt_f64(r.e_i),
            fmt_f64(r.e_bi),
            opt(r.s_vn),
            opt(r.f_b),
            opt(r.f_i),
        ];
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

pub fn write_series(path: &Path, series: &ObservableSeries) -> io::Result<()> {
    fs::write(path, series_csv(series))
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn parse_series(text: &str) -> io::Result<Vec<ObservableRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SERIES_HEADER => {}
        _ => return Err(bad("series.csv: missing or wrong header")),
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(format!("series.csv line {}: expected 9 fields", k + 2)));
        }
        let num = |s: &str| -> io::Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| bad(format!("series.csv line {}: bad number `{s}`", k + 2)))
            }
        };
        let req = |s: &str| -> io::Result<f64> {
            num(s)?.ok_or_else(|| bad(format!("series.csv line {}: missing required field", k + 2)))
        };
        out.push(ObservableRecord {
            t: req(f[0])?,
            x_b: num(f[1])?,
            x_i: num(f[2])?,
            e_b: num(f[3])?,
            e_i: req(f[4])?,
            e_bi: req(f[5])?,
            s_vn: num(f[6])?,
            f_b: num(f[7])?,
            f_i: num(f[8])?,
        });
    }
    Ok(out)
}

pub fn read_series(path: &Path) -> io::Result<Vec<ObservableRecord>> {
    parse_series(&fs::read_to_string(path)?)
}

/// Densities stored in a BQD1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshots {
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    /// `[time][species][point]`, row-major.
    pub densities: Vec<f64>,
    pub n_species: usize,
}

impl Snapshots {
    pub fn from_series(snaps: &[DensitySnapshot], nodes: Vec<f64>) -> Self {
        let n_species = snaps.first().map(|s| 1 + usize::from(s.bath.is_some())).unwrap_or(1);
        let mut densities = Vec::with_capacity(snaps.len() * n_species * nodes.len());
        for s in snaps {
            if let Some(b) = &s.bath {
                densities.extend_from_slice(b);
            }
            densities.extend_from_slice(&s.impurity);
        }
        Self {
            times: snaps.iter().map(|s| s.t).collect(),
            nodes,
            densities,
            n_species,
        }
    }

    pub fn density(&self, time: usize, species: usize) -> &[f64] {
        let n = self.nodes.len();
        let start = (time * self.n_species + species) * n;
        &self.densities[start..start + n]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(28 + 8 * (self.times.len() + self.nodes.len() + self.densities.len()));
        b.extend_from_slice(BQD_MAGIC);
        for n in [self.times.len(), self.nodes.len(), self.n_species] {
            b.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for x in self.times.iter().chain(&self.nodes).chain(&self.densities) {
            b.extend_from_slice(&x.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> io::Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BQD_MAGIC {
            return Err(bad("not a BQD1 file"));
        }
        let mut u = [0u64; 3];
        for v in &mut u {
            let mut w = [0u8; 8];
            r.read_exact(&mut w)?;
            *v = u64::from_le_bytes(w);
        }
        let (nt, np, ns) = (u[0] as usize, u[1] as usize, u[2] as usize);
        let total = nt
            .checked_add(np)
            .and_then(|a| nt.checked_mul(np).and_then(|b| b.checked_mul(ns)).and_then(|b| a.checked_add(b)))
            .ok_or_else(|| bad("BQD1 header counts overflow"))?;
        if r.len() != total * 8 {
            return Err(bad(format!("BQD1 payload has {} bytes, header implies {}", r.len(), total * 8)));
        }
        let vals: Vec<f64> = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight")))
            .collect();
        Ok(Self {
            times: vals[..nt].to_vec(),
            nodes: vals[nt..nt + np].to_vec(),
            densities: vals[nt + np..].to_vec(),
            n_species: ns,
        })
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Whitespace-separated table with a header row.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join("\t"));
        s.push('\n');
    }
    s
}
