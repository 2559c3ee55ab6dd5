//! Modal coefficients `a_{m,k}`, `b_{m,k}` and their CSV form (`m,k,a,b`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `m_max × k_max` tables of cosine (`a`) and sine (`b`) coefficients,
/// both indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoeffs {
    m_max: usize,
    k_max: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    m: usize,
    k: usize,
    a: f64,
    b: f64,
}

impl ModalCoeffs {
    pub fn zeros(m_max: usize, k_max: usize) -> Self {
        Self {
            m_max,
            k_max,
            a: vec![0.0; m_max * k_max],
            b: vec![0.0; m_max * k_max],
        }
    }

    /// Single temporal mode `m = 1`.
    pub fn from_vectors(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "a has {} entries but b has {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self {
            m_max: 1,
            k_max: a.len(),
            a,
            b,
        })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    fn idx(&self, m: usize, k: usize) -> usize {
        assert!(
            m >= 1 && m <= self.m_max && k >= 1 && k <= self.k_max,
            "({m}, {k}) out of range"
        );
        (m - 1) * self.k_max + (k - 1)
    }

    pub fn a(&self, m: usize, k: usize) -> f64 {
        self.a[self.idx(m, k)]
    }

    pub fn b(&self, m: usize, k: usize) -> f64 {
        self.b[self.idx(m, k)]
    }

    pub fn set(&mut self, m: usize, k: usize, a: f64, b: f64) {
        let i = self.idx(m, k);
        self.a[i] = a;
        self.b[i] = b;
    }

    pub fn a_row(&self, m: usize) -> &[f64] {
        &self.a[(m - 1) * self.k_max..m * self.k_max]
    }

    pub fn b_row(&self, m: usize) -> &[f64] {
        &self.b[(m - 1) * self.k_max..m * self.k_max]
    }

    /// Flattened `[a…, b…]` in row-major `(m, k)` order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn from_flat(m_max: usize, k_max: usize, x: &[f64]) -> Self {
        let n = m_max * k_max;
        assert_eq!(x.len(), 2 * n);
        Self {
            m_max,
            k_max,
            a: x[..n].to_vec(),
            b: x[n..].to_vec(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m_max: self.m_max,
            k_max: self.k_max,
            a: self.a.iter().map(|v| v * c).collect(),
            b: self.b.iter().map(|v| v * c).collect(),
        }
    }

    /// Shifts the forcing in time by `tau`: every `(a, b)` pair of mode `m` is
    /// rotated by the angle `ωmτ`.
    pub fn time_shifted(&self, omega: f64, tau: f64) -> Self {
        let mut out = self.clone();
        for m in 1..=self.m_max {
            let (sn, cs) = (omega * m as f64 * tau).sin_cos();
            for k in 1..=self.k_max {
                let (a, b) = (self.a(m, k), self.b(m, k));
                out.set(m, k, a * cs - b * sn, a * sn + b * cs);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["m", "k", "a", "b"])?;
        for m in 1..=self.m_max {
            for k in 1..=self.k_max {
                wr.write_record([
                    m.to_string(),
                    k.to_string(),
                    format!("{:.16e}", self.a(m, k)),
                    format!("{:.16e}", self.b(m, k)),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Reads `m,k,a,b` rows; missing `(m, k)` pairs are zero.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["m", "k", "a", "b"] {
            return Err(Error::Format(format!(
                "coefficient header must be m,k,a,b, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let rows: Vec<Row> = rd.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.is_empty() {
            return Err(Error::Format("coefficient file has no rows".into()));
        }
        if rows.iter().any(|r| r.m == 0 || r.k == 0) {
            return Err(Error::Format("coefficient indices start at 1".into()));
        }
        let m_max = rows.iter().map(|r| r.m).max().unwrap_or(0);
        let k_max = rows.iter().map(|r| r.k).max().unwrap_or(0);
        let mut out = Self::zeros(m_max, k_max);
        for r in rows {
            if !(r.a.is_finite() && r.b.is_finite()) {
                return Err(Error::Format(format!(
                    "non-finite coefficient at m={} k={}",
                    r.m, r.k
                )));
            }
            out.set(r.m, r.k, r.a, r.b);
        }
        Ok(out)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
