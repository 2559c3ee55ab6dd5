//! Time series of filament states with per-record diagnostics, and the CSV
//! layout `t,x0,y0,theta_1..theta_N,U,Wdot,force_res,torque_res,method`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::FilamentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Angle formulation with the force-projected velocity solve.
    A,
    /// Nodal formulation with explicit length constraints.
    B,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::A => "a",
            Method::B => "b",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" => Ok(Method::A),
            "b" => Ok(Method::B),
            other => Err(Error::Format(format!("unknown method tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Instantaneous swimming speed.
    pub speed: f64,
    /// Rate of work done on the fluid.
    pub work_rate: f64,
    pub force_residual: f64,
    pub torque_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub state: FilamentState,
    pub diag: Diagnostics,
}

impl Record {
    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn curvature(&self) -> Vec<f64> {
        self.state.recover_curvature()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    method: Method,
    n_segments: usize,
    records: Vec<Record>,
}

impl Trajectory {
    pub fn new(method: Method, n_segments: usize) -> Self {
        Self {
            method,
            n_segments,
            records: Vec::new(),
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        if record.state.n_segments() != self.n_segments {
            return Err(Error::InvalidInput(format!(
                "record has {} segments, trajectory has {}",
                record.state.n_segments(),
                self.n_segments
            )));
        }
        if let Some(last) = self.records.last() {
            if !(record.time() > last.time()) {
                return Err(Error::InvalidInput(format!(
                    "time stamps must increase: {} after {}",
                    record.time(),
                    last.time()
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(Record::time).collect()
    }

    /// Record whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&Record> {
        self.records
            .iter()
            .min_by(|a, b| (a.time() - t).abs().total_cmp(&(b.time() - t).abs()))
    }

    /// Linear interpolation of the nodes at time `t`.
    pub fn nodes_at(&self, t: f64) -> Result<Vec<[f64; 2]>> {
        let (first, last) = match (self.records.first(), self.records.last()) {
            (Some(f), Some(l)) => (f.time(), l.time()),
            _ => return Err(Error::InvalidInput("empty trajectory".into())),
        };
        let slack = 1e-9 * (1.0 + t.abs());
        if t < first - slack || t > last + slack {
            return Err(Error::WindowOutOfRange {
                start: t,
                end: t,
                first,
                last,
            });
        }
        let j = self.records.partition_point(|r| r.time() < t);
        if j == 0 {
            return Ok(self.records[0].state.nodes());
        }
        if j == self.records.len() {
            return Ok(self.records[j - 1].state.nodes());
        }
        let (r0, r1) = (&self.records[j - 1], &self.records[j]);
        let w = (t - r0.time()) / (r1.time() - r0.time());
        let (p, q) = (r0.state.nodes(), r1.state.nodes());
        Ok(p.iter()
            .zip(&q)
            .map(|(a, b)| [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
            .collect())
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string(), "x0".into(), "y0".into()];
        h.extend((1..=self.n_segments).map(|i| format!("theta_{i}")));
        h.extend(["U", "Wdot", "force_res", "torque_res", "method"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.header())?;
        let method = self.method.to_string();
        for r in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(self.n_segments + 8);
            let d = &r.diag;
            let nums = [r.state.time, r.state.x0[0], r.state.x0[1]]
                .into_iter()
                .chain(r.state.theta.iter().copied())
                .chain([d.speed, d.work_rate, d.force_residual, d.torque_residual]);
            row.extend(nums.map(fmt_f64));
            row.push(method.clone());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a trajectory; an empty file body yields `Method::A` with no records.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header.len() < 12 {
            return Err(Error::Format(format!(
                "trajectory header has only {} columns",
                header.len()
            )));
        }
        let n = header.len() - 8;
        let mut traj = Trajectory::new(Method::A, n);
        if header != traj.header() {
            return Err(Error::Format(
                "trajectory header does not match the expected layout".into(),
            ));
        }
        let mut method = None;
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {} has {} fields",
                    line + 1,
                    rec.len()
                )));
            }
            let vals = rec
                .iter()
                .take(header.len() - 1)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("row {}: {e}: {s:?}", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            let m: Method = rec[header.len() - 1].parse()?;
            if *method.get_or_insert(m) != m {
                return Err(Error::Format(format!(
                    "row {} switches method tag",
                    line + 1
                )));
            }
            let state = FilamentState::new([vals[1], vals[2]], vals[3..3 + n].to_vec(), vals[0])
                .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
            let tail = &vals[3 + n..];
            let diag = Diagnostics {
                speed: tail[0],
                work_rate: tail[1],
                force_residual: tail[2],
                torque_residual: tail[3],
            };
            traj.push(Record { state, diag })
                .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
        }
        traj.method = method.unwrap_or(Method::A);
        Ok(traj)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// 17 significant digits, enough for an exact double round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, n: usize) -> Record {
        let theta = (0..n).map(|i| (i as f64 * 0.37 + t).sin() / 3.0).collect();
        Record {
            state: FilamentState::new([t.cos() / 7.0, 1.0 / 3.0], theta, t).unwrap(),
            diag: Diagnostics {
                speed: -t / 11.0,
                work_rate: 0.1 + t,
                force_residual: 1e-17,
                torque_residual: 3e-5,
            },
        }
    }

    #[test]
    fn empty_round_trip() {
        let t = Trajectory::new(Method::B, 6);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1);
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.n_segments(), 6);
    }

    #[test]
    fn single_record_round_trip_is_exact() {
        let mut t = Trajectory::new(Method::B, 5);
        t.push(rec(0.1, 5)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(Trajectory::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_non_monotone_time_and_bad_rows() {
        let mut t = Trajectory::new(Method::A, 4);
        t.push(rec(1.0, 4)).unwrap();
        assert!(t.push(rec(1.0, 4)).is_err());
        assert!(t.push(rec(2.0, 5)).is_err());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap().to_string();
        let dup = format!("{text}{line}\n");
        assert!(Trajectory::read_csv(dup.as_bytes()).is_err());
        let bad = text.replace("theta_1", "phi_1");
        assert!(Trajectory::read_csv(bad.as_bytes()).is_err());
        let short = format!("{}\n1,2,3\n", text.lines().next().unwrap());
        assert!(Trajectory::read_csv(short.as_bytes()).is_err());
    }

    #[test]
    fn interpolates_nodes_between_records() {
        let mut t = Trajectory::new(Method::A, 4);
        let mut a = rec(0.0, 4);
        a.state.theta = vec![0.0; 4];
        a.state.x0 = [0.0, 0.0];
        let mut b = a.clone();
        b.state.time = 1.0;
        b.state.x0 = [1.0, 0.0];
        t.push(a).unwrap();
        t.push(b).unwrap();
        let mid = t.nodes_at(0.25).unwrap();
        assert!((mid[0][0] - 0.25).abs() < 1e-15);
        assert!(t.nodes_at(1.5).is_err());
    }
}
