use std::io::{Read, Write};

use nalgebra::DVector;

use crate::{Error, Real, Result};

/// Column order of the CSV form.
pub const TRACE_HEADER: [&str; 17] = [
    "t", "q_r", "q_d", "e", "qf1", "qf2", "dqf1", "dqf2", "tau_slow", "tau_fast", "tau", "s", "s0", "rho_hat", "a_hat_0",
    "a_hat_1", "v_lyap",
];

/// One controller sample. Plant columns (`q_r`, `q_f`, `dq_f`) are true
/// values; `e`, `s`, `s0` are what the controller computed from its
/// measurements. Torques are physical and held over the following interval;
/// `a_hat`/`rho_hat` are the estimates used for that torque.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T: Real> {
    pub t: T,
    pub q_r: DVector<T>,
    pub q_d: DVector<T>,
    pub e: DVector<T>,
    pub q_f: DVector<T>,
    pub dq_f: DVector<T>,
    pub tau_slow: DVector<T>,
    pub tau_fast: DVector<T>,
    pub tau: DVector<T>,
    pub s: DVector<T>,
    pub s0: DVector<T>,
    pub rho_hat: DVector<T>,
    pub a_hat: DVector<T>,
    /// Lyapunov diagnostic; NaN when no probe was configured.
    pub v_lyap: T,
}

/// Uniformly sampled record of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceLog<T: Real> {
    pub rows: Vec<TraceRow<T>>,
}

impl<T: Real> TraceLog<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sample period, from the first two rows.
    pub fn dt(&self) -> Option<T> {
        (self.rows.len() >= 2).then(|| self.rows[1].t - self.rows[0].t)
    }

    pub fn column(&self, f: impl Fn(&TraceRow<T>) -> T) -> Vec<T> {
        self.rows.iter().map(f).collect()
    }

    /// Bitwise equality of every cell; any NaN equals any NaN.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                let fa = flatten(a);
                let fb = flatten(b);
                fa.len() == fb.len()
                    && fa.iter().zip(&fb).all(|(x, y)| {
                        let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
                        (x.is_nan() && y.is_nan()) || x.to_bits() == y.to_bits()
                    })
            })
    }

    /// Writes the fixed 17-column layout (one joint, two modes, two
    /// parameters) with shortest round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER).map_err(csv_err)?;
        for (k, row) in self.rows.iter().enumerate() {
            let cells = flatten(row);
            if cells.len() != TRACE_HEADER.len() || row.q_f.len() != 2 || row.a_hat.len() != 2 {
                return Err(Error::Trace(format!(
                    "row {k} does not fit the single-joint, two-mode, two-parameter CSV layout"
                )));
            }
            w.write_record(cells.iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Trace(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?;
        if header.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(Error::Trace(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let v = rec
                .iter()
                .map(|c| c.parse::<T>().map_err(|_| Error::Trace(format!("row {}: cannot parse `{c}`", k + 1))))
                .collect::<Result<Vec<T>>>()?;
            if v.len() != TRACE_HEADER.len() {
                return Err(Error::Trace(format!("row {}: expected {} fields", k + 1, TRACE_HEADER.len())));
            }
            let one = |i: usize| DVector::from_element(1, v[i]);
            let two = |i: usize| DVector::from_vec(vec![v[i], v[i + 1]]);
            rows.push(TraceRow {
                t: v[0],
                q_r: one(1),
                q_d: one(2),
                e: one(3),
                q_f: two(4),
                dq_f: two(6),
                tau_slow: one(8),
                tau_fast: one(9),
                tau: one(10),
                s: one(11),
                s0: one(12),
                rho_hat: one(13),
                a_hat: two(14),
                v_lyap: v[16],
            });
        }
        Ok(Self { rows })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Trace(e.to_string())
}

fn flatten<T: Real>(r: &TraceRow<T>) -> Vec<T> {
    let mut v = vec![r.t];
    for col in [&r.q_r, &r.q_d, &r.e, &r.q_f, &r.dq_f, &r.tau_slow, &r.tau_fast, &r.tau, &r.s, &r.s0, &r.rho_hat, &r.a_hat] {
        v.extend(col.iter().copied());
    }
    v.push(r.v_lyap);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(x: &[f64]) -> TraceRow<f64> {
        let one = |i: usize| DVector::from_element(1, x[i]);
        let two = |i: usize| DVector::from_vec(vec![x[i], x[i + 1]]);
        TraceRow {
            t: x[0],
            q_r: one(1),
            q_d: one(2),
            e: one(3),
            q_f: two(4),
            dq_f: two(6),
            tau_slow: one(8),
            tau_fast: one(9),
            tau: one(10),
            s: one(11),
            s0: one(12),
            rho_hat: one(13),
            a_hat: two(14),
            v_lyap: x[16],
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        TraceLog::<f64>::default().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,q_r,q_d,e,qf1,qf2,dqf1,dqf2,tau_slow,tau_fast,tau,s,s0,rho_hat,a_hat_0,a_hat_1,v_lyap\n"
        );
    }

    #[test]
    fn awkward_values_round_trip() {
        let mut vals: Vec<f64> = (0..17).map(|i| 0.1 * i as f64).collect();
        vals[3] = f64::MIN_POSITIVE;
        vals[4] = -1.0e-300;
        vals[5] = 1.0 / 3.0;
        vals[6] = 5e-324;
        vals[7] = f64::MAX;
        vals[8] = -0.0;
        vals[16] = f64::NAN;
        let log = TraceLog { rows: vec![row(&vals)] };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = TraceLog::<f64>::read_csv(buf.as_slice()).unwrap();
        assert!(log.bit_eq(&back));
        assert_eq!(back.rows[0].tau_slow[0].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn rejects_wrong_layout() {
        let mut r = row(&[0.0; 17]);
        r.q_f = DVector::zeros(3);
        let mut buf = Vec::new();
        assert!(TraceLog { rows: vec![r] }.write_csv(&mut buf).is_err());
        assert!(TraceLog::<f64>::read_csv("t,q\n0,1\n".as_bytes()).is_err());
        let bad = format!("{}\n{}\n", TRACE_HEADER.join(","), ["x"; 17].join(","));
        assert!(TraceLog::<f64>::read_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn single_precision_round_trip() {
        let r = TraceRow {
            t: 0.1f32,
            q_r: DVector::from_element(1, 1.0 / 3.0),
            q_d: DVector::from_element(1, 0.5),
            e: DVector::from_element(1, -1e-7),
            q_f: DVector::from_vec(vec![1e-30, 2.5]),
            dq_f: DVector::from_vec(vec![0.7, 0.9]),
            tau_slow: DVector::from_element(1, 3.0),
            tau_fast: DVector::from_element(1, 0.2),
            tau: DVector::from_element(1, 3.2),
            s: DVector::from_element(1, 0.0),
            s0: DVector::from_element(1, 0.0),
            rho_hat: DVector::from_element(1, 0.0),
            a_hat: DVector::from_vec(vec![0.006, 0.004]),
            v_lyap: 1.5,
        };
        let log = TraceLog { rows: vec![r] };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(TraceLog::<f32>::read_csv(buf.as_slice()).unwrap(), log);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in prop::collection::vec(prop::num::f64::ANY, 17 * 3)) {
            let log = TraceLog { rows: vals.chunks(17).map(row).collect() };
            let mut buf = Vec::new();
            log.write_csv(&mut buf).unwrap();
            let back = TraceLog::<f64>::read_csv(buf.as_slice()).unwrap();
            prop_assert!(log.bit_eq(&back));
        }
    }
}
