//! The (benchmark, timestep, policy) → IPC dataset and its CSV form.
//!
//! CSV schema: header `benchmark,timestep,policy,ipc`, one row per cell,
//! rows sorted by benchmark (bytewise), timestep (numeric), then policy
//! (bytewise), LF line endings. IPC values are written with 9 significant
//! digits, rounded half-to-even.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::scalar::Scalar;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["benchmark", "timestep", "policy", "ipc"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestep {
    /// Index into [`IpcMatrix::benchmarks`].
    pub benchmark: usize,
    pub index: usize,
}

/// Dense, complete IPC matrix. Timesteps are ordered by (benchmark, index),
/// policies by id; each benchmark may have its own number of timesteps.
#[derive(Clone, Debug, PartialEq)]
pub struct IpcMatrix<F> {
    benchmarks: Vec<String>,
    timesteps: Vec<Timestep>,
    policies: Vec<String>,
    ipc: Vec<F>,
}

fn check_id(kind: &str, id: &str) -> Result<()> {
    if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
        return Err(Error::validation(format!(
            "{kind} id {id:?} must be non-empty and free of commas, quotes and newlines"
        )));
    }
    Ok(())
}

impl<F: Scalar> IpcMatrix<F> {
    /// Builds a matrix from individual cells, rejecting duplicates, missing
    /// cells and non-positive IPC values with an error naming the cell.
    pub fn from_cells<I, B, P>(cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (B, usize, P, F)>,
        B: Into<String>,
        P: Into<String>,
    {
        let mut map: BTreeMap<(String, usize, String), F> = BTreeMap::new();
        for (b, t, p, v) in cells {
            let (b, p) = (b.into(), p.into());
            check_id("benchmark", &b)?;
            check_id("policy", &p)?;
            if !(v > F::zero() && v.is_finite()) {
                return Err(Error::validation(format!(
                    "non-positive ipc {v} at cell ({b}, {t}, {p})"
                )));
            }
            let key = (b, t, p);
            if map.contains_key(&key) {
                return Err(Error::validation(format!(
                    "duplicate cell ({}, {}, {})",
                    key.0, key.1, key.2
                )));
            }
            map.insert(key, v);
        }
        if map.is_empty() {
            return Err(Error::validation("matrix has no cells"));
        }

        let benchmarks: Vec<String> = map
            .keys()
            .map(|k| k.0.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let policies: Vec<String> = map
            .keys()
            .map(|k| k.2.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut timesteps = Vec::new();
        let mut ipc = Vec::with_capacity(map.len());
        for (bi, b) in benchmarks.iter().enumerate() {
            let last = map
                .range((b.clone(), 0, String::new())..)
                .take_while(|(k, _)| &k.0 == b)
                .map(|(k, _)| k.1)
                .max()
                .unwrap();
            for t in 0..=last {
                timesteps.push(Timestep {
                    benchmark: bi,
                    index: t,
                });
                for p in &policies {
                    match map.get(&(b.clone(), t, p.clone())) {
                        Some(&v) => ipc.push(v),
                        None => {
                            return Err(Error::validation(format!("missing cell ({b}, {t}, {p})")))
                        }
                    }
                }
            }
        }
        Ok(IpcMatrix {
            benchmarks,
            timesteps,
            policies,
            ipc,
        })
    }

    pub fn benchmarks(&self) -> &[String] {
        &self.benchmarks
    }

    pub fn policies(&self) -> &[String] {
        &self.policies
    }

    pub fn timesteps(&self) -> &[Timestep] {
        &self.timesteps
    }

    pub fn num_timesteps(&self) -> usize {
        self.timesteps.len()
    }

    pub fn num_policies(&self) -> usize {
        self.policies.len()
    }

    pub fn policy_index(&self, id: &str) -> Option<usize> {
        self.policies.binary_search_by(|p| p.as_str().cmp(id)).ok()
    }

    pub(crate) fn require_policy(&self, id: &str) -> Result<usize> {
        self.policy_index(id)
            .ok_or_else(|| Error::validation(format!("policy '{id}' is not in the matrix")))
    }

    pub fn benchmark_of(&self, t: usize) -> &str {
        &self.benchmarks[self.timesteps[t].benchmark]
    }

    pub fn ipc(&self, t: usize, p: usize) -> F {
        self.ipc[t * self.policies.len() + p]
    }

    /// IPC of every policy at timestep `t`, in policy order.
    pub fn row(&self, t: usize) -> &[F] {
        let n = self.policies.len();
        &self.ipc[t * n..(t + 1) * n]
    }

    /// IPC of policy `p` at every timestep.
    pub fn column(&self, p: usize) -> Vec<F> {
        (0..self.num_timesteps()).map(|t| self.ipc(t, p)).collect()
    }

    /// All cells in CSV row order.
    pub fn cells(&self) -> impl Iterator<Item = (&str, usize, &str, F)> + '_ {
        self.timesteps.iter().enumerate().flat_map(move |(t, ts)| {
            self.policies.iter().enumerate().map(move |(p, id)| {
                (
                    self.benchmarks[ts.benchmark].as_str(),
                    ts.index,
                    id.as_str(),
                    self.ipc(t, p),
                )
            })
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("benchmark,timestep,policy,ipc\n");
        for (b, t, p, v) in self.cells() {
            out.push_str(&format!("{b},{t},{p},{}\n", format_sig9(v)));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::validation(format!("matrix CSV header: {e}")))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::validation(format!(
                "matrix CSV header must be '{}'",
                CSV_HEADER.join(",")
            )));
        }
        let mut cells = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::validation(format!("matrix CSV line {line}: {e}")))?;
            if rec.len() != 4 {
                return Err(Error::validation(format!(
                    "matrix CSV line {line}: expected 4 fields"
                )));
            }
            let t: usize = rec[1].parse().map_err(|_| {
                Error::validation(format!(
                    "matrix CSV line {line}: bad timestep '{}'",
                    &rec[1]
                ))
            })?;
            let v: F = rec[3].parse().map_err(|_| {
                Error::validation(format!("matrix CSV line {line}: bad ipc '{}'", &rec[3]))
            })?;
            cells.push((rec[0].to_string(), t, rec[2].to_string(), v));
        }
        Self::from_cells(cells)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }
}

/// Plain decimal rendering with 9 significant digits (round half to even),
/// trailing zeros removed.
pub fn format_sig9<F: Scalar>(v: F) -> String {
    format_significant(v, 9)
}

pub fn format_significant<F: Scalar>(v: F, digits: usize) -> String {
    assert!(digits >= 1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let ds: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut s = if exp >= 0 {
        let int_len = exp as usize + 1;
        if ds.len() <= int_len {
            format!("{ds}{}", "0".repeat(int_len - ds.len()))
        } else {
            format!("{}.{}", &ds[..int_len], &ds[int_len..])
        }
    } else {
        format!("0.{}{ds}", "0".repeat((-exp - 1) as usize))
    };
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    format!("{sign}{s}")
}
