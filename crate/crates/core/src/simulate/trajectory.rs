use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Uniformly sampled states, one row per time `t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    states: DMatrix<f64>,
    system_name: String,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, states: DMatrix<f64>, system_name: impl Into<String>) -> Result<Self> {
        if states.nrows() < 2 {
            return Err(Error::argument(format!(
                "a trajectory needs at least 2 samples, got {}",
                states.nrows()
            )));
        }
        if states.ncols() == 0 {
            return Err(Error::argument("a trajectory needs at least one state variable"));
        }
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::argument(format!("invalid time grid t0 = {t0}, dt = {dt}")));
        }
        if let Some(k) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::argument(format!(
                "non-finite state at row {}",
                k % states.nrows()
            )));
        }
        Ok(Trajectory {
            t0,
            dt,
            states,
            system_name: system_name.into(),
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        self.states.ncols()
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub(crate) fn states_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.states
    }

    pub fn system_name(&self) -> &str {
        &self.system_name
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn state(&self, k: usize) -> Vec<f64> {
        self.states.row(k).iter().copied().collect()
    }

    /// Root of the mean of squared entries.
    pub fn rms(&self) -> f64 {
        (self.states.norm_squared() / self.states.len() as f64).sqrt()
    }

    /// Largest Euclidean row norm.
    pub fn max_norm(&self) -> f64 {
        self.states
            .row_iter()
            .map(|r| r.norm())
            .fold(0.0, f64::max)
    }

    /// Splits into rows `[0, k)` and `[k, M)`.
    pub fn split_at(&self, k: usize) -> Result<(Trajectory, Trajectory)> {
        if k < 2 || self.len() - k.min(self.len()) < 2 {
            return Err(Error::argument(format!(
                "cannot split {} samples at {k} into two trajectories",
                self.len()
            )));
        }
        let head = self.states.rows(0, k).into_owned();
        let tail = self.states.rows(k, self.len() - k).into_owned();
        Ok((
            Trajectory::new(self.t0, self.dt, head, &self.system_name)?,
            Trajectory::new(self.time(k), self.dt, tail, &self.system_name)?,
        ))
    }

    /// Appends `other`'s rows; the time grid continues from `self`.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        if other.dimension() != self.dimension() || other.dt != self.dt {
            return Err(Error::argument("concatenated trajectories need equal dimension and dt"));
        }
        let (m, n, d) = (self.len(), other.len(), self.dimension());
        let mut states = DMatrix::zeros(m + n, d);
        states.rows_mut(0, m).copy_from(&self.states);
        states.rows_mut(m, n).copy_from(&other.states);
        Trajectory::new(self.t0, self.dt, states, &self.system_name)
    }
}

/// Writes `t,x1,...,xd` rows with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::argument(format!("csv write failed: {e}"));
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.dimension()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..traj.len() {
        let mut rec = vec![format!("{:.16e}", traj.time(k))];
        rec.extend(traj.states.row(k).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::argument(format!("csv write failed: {e}")))?;
    Ok(())
}

/// Reads a CSV written by [`write_trajectory_csv`]; the grid must be uniform.
pub fn read_trajectory_csv<R: Read>(reader: R, system_name: &str) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();
    let d = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=d).map(|i| format!("x{i}")))
        .collect();
    if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse("header", format!("expected `{}`", expected.join(","))));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse("rows", e.to_string()))?;
        if rec.len() != d + 1 {
            return Err(Error::parse("rows", format!("row {line} has {} fields", rec.len())));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse("rows", format!("row {line}: {e}")))
        };
        times.push(parse(&rec[0])?);
        for field in rec.iter().skip(1) {
            values.push(parse(field)?);
        }
    }
    let m = times.len();
    if m < 2 {
        return Err(Error::parse("rows", "at least 2 rows are required"));
    }
    let t0 = times[0];
    let dt = (times[m - 1] - t0) / (m - 1) as f64;
    for (k, &t) in times.iter().enumerate() {
        let expect = t0 + k as f64 * dt;
        if (t - expect).abs() > 1e-9 * dt.max(expect.abs()) {
            return Err(Error::parse("t", format!("non-uniform time grid at row {k}")));
        }
    }
    let states = DMatrix::from_row_slice(m, d, &values);
    Trajectory::new(t0, dt, states, system_name).map_err(|e| Error::parse("rows", e.to_string()))
}

pub fn save_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory_csv(traj, std::io::BufWriter::new(file))
}

pub fn load_trajectory_csv(path: impl AsRef<Path>, system_name: &str) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory_csv(std::io::BufReader::new(file), system_name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let states = DMatrix::from_fn(5, 2, |i, j| (i as f64 * 0.3 + j as f64).sin() / 3.0);
        Trajectory::new(0.25, 0.1, states, "demo").unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact_on_states() {
        let traj = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2\n"));
        let back = read_trajectory_csv(buf.as_slice(), "demo").unwrap();
        assert_eq!(back.states(), traj.states());
        assert_eq!(back.len(), 5);
        assert!((back.dt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_bad_header_and_grid() {
        assert!(read_trajectory_csv("time,a\n0,1\n1,2\n".as_bytes(), "x").is_err());
        assert!(read_trajectory_csv("t,x1\n0,1\n1,2\n3,4\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn validation() {
        assert!(Trajectory::new(0.0, 0.1, DMatrix::zeros(1, 3), "").is_err());
        assert!(Trajectory::new(0.0, 0.0, DMatrix::zeros(3, 3), "").is_err());
        let mut bad = DMatrix::zeros(3, 1);
        bad[(1, 0)] = f64::INFINITY;
        assert!(Trajectory::new(0.0, 1.0, bad, "").is_err());
    }

    #[test]
    fn split_and_concat_invert() {
        let traj = sample();
        let (a, b) = traj.split_at(2).unwrap();
        assert_eq!(b.t0(), traj.time(2));
        assert_eq!(a.concat(&b).unwrap(), traj);
        assert!(traj.split_at(4).is_err());
    }
}
