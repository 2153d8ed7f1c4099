//! Recorded counter traces.
//!
//! A trace is CSV with lines `timestamp_s,domain_id,energy_uj,max_range_uj`.
//! Rows sharing a timestamp form one sampling round. Rounds with a negative
//! timestamp are the idle baseline; rounds at or after 0 cover the process.
//! An optional header line and `#` comments are allowed.

use std::path::Path;

use super::{
    samples_from_rounds, CounterRound, DomainId, EnergyCounterReading, MeterError, PowerSample,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecording {
    pub baseline: Vec<CounterRound>,
    pub process: Vec<CounterRound>,
}

fn trace_err(line: usize, message: impl Into<String>) -> MeterError {
    MeterError::Trace {
        line,
        message: message.into(),
    }
}

impl TraceRecording {
    pub fn from_path(path: &Path) -> Result<Self, MeterError> {
        let text = std::fs::read_to_string(path).map_err(|source| MeterError::ReadFailure {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, MeterError> {
        let mut rounds: Vec<(f64, Vec<EnergyCounterReading>, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("timestamp") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(trace_err(
                    line_no,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            }
            let ts: f64 = fields[0]
                .parse()
                .ok()
                .filter(|t: &f64| t.is_finite())
                .ok_or_else(|| trace_err(line_no, format!("bad timestamp `{}`", fields[0])))?;
            if fields[1].is_empty() {
                return Err(trace_err(line_no, "empty domain id"));
            }
            let energy_uj: u64 = fields[2]
                .parse()
                .map_err(|_| trace_err(line_no, format!("bad energy `{}`", fields[2])))?;
            let max_range_uj: u64 = fields[3]
                .parse()
                .map_err(|_| trace_err(line_no, format!("bad max range `{}`", fields[3])))?;
            if energy_uj > max_range_uj {
                return Err(trace_err(line_no, "energy exceeds max range"));
            }
            let reading = EnergyCounterReading {
                domain: DomainId::new(fields[1]),
                energy_uj,
                max_range_uj,
                timestamp_s: ts,
            };
            match rounds.last_mut() {
                Some((t, readings, _)) if *t == ts => {
                    if readings.iter().any(|r| r.domain == reading.domain) {
                        return Err(trace_err(line_no, "domain repeated within one timestamp"));
                    }
                    readings.push(reading);
                }
                Some((t, _, _)) if ts < *t => {
                    return Err(trace_err(line_no, "timestamps must be increasing"));
                }
                _ => rounds.push((ts, vec![reading], line_no)),
            }
        }

        let mut baseline = Vec::new();
        let mut process = Vec::new();
        let mut expected: Option<Vec<DomainId>> = None;
        for (ts, mut readings, line_no) in rounds {
            readings.sort_by(|a, b| a.domain.cmp(&b.domain));
            let domains: Vec<DomainId> = readings.iter().map(|r| r.domain.clone()).collect();
            match &expected {
                None => expected = Some(domains),
                Some(e) if *e != domains => {
                    return Err(trace_err(
                        line_no,
                        "every timestamp must list the same set of domains",
                    ))
                }
                _ => {}
            }
            let round = CounterRound {
                readings,
                gpu_watts: None,
            };
            if ts < 0.0 {
                baseline.push(round);
            } else {
                process.push(round);
            }
        }
        Ok(TraceRecording { baseline, process })
    }

    pub fn baseline_samples(&self) -> Vec<PowerSample> {
        samples_from_rounds(&self.baseline)
    }

    pub fn process_samples(&self) -> Vec<PowerSample> {
        samples_from_rounds(&self.process)
    }

    /// Span of the process rounds in seconds.
    pub fn process_duration_s(&self) -> f64 {
        match (self.process.first(), self.process.last()) {
            (Some(a), Some(b)) => b.readings[0].timestamp_s - a.readings[0].timestamp_s,
            _ => 0.0,
        }
    }

    /// Serialize back to the trace CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp_s,domain_id,energy_uj,max_range_uj\n");
        for round in self.baseline.iter().chain(&self.process) {
            for r in &round.readings {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.timestamp_s, r.domain, r.energy_uj, r.max_range_uj
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_phases_and_groups_rounds() {
        let t = TraceRecording::parse(
            "timestamp_s,domain_id,energy_uj,max_range_uj\n\
             -1.0,pkg-0,0,1000000000\n\
             -0.5,pkg-0,1000000,1000000000\n\
             0.0,pkg-0,2000000,1000000000\n\
             0.0,pkg-1,0,1000000000\n\
             1.0,pkg-1,5000000,1000000000\n\
             1.0,pkg-0,7000000,1000000000\n",
        );
        assert!(t.is_err(), "domain sets differ between phases");

        let t = TraceRecording::parse(
            "# idle\n-1.0,pkg-0,0,1000000000\n-0.5,pkg-0,1000000,1000000000\n\
             0.0,pkg-0,2000000,1000000000\n1.0,pkg-0,7000000,1000000000\n2.0,pkg-0,12000000,1000000000\n",
        )
        .unwrap();
        assert_eq!(t.baseline.len(), 2);
        assert_eq!(t.process.len(), 3);
        assert_eq!(t.baseline_samples()[0].watts, 2.0);
        assert!(t.process_samples().iter().all(|s| s.watts == 5.0));
        assert_eq!(t.process_duration_s(), 2.0);
    }

    #[test]
    fn each_wrap_costs_one_sample() {
        let mut text = String::new();
        let max = 9_999_999u64;
        for i in 0..=10u64 {
            let e = (i * 2_000_000) % (max + 1);
            text.push_str(&format!("{}.0,pkg-0,{e},{max}\n", i));
        }
        let t = TraceRecording::parse(&text).unwrap();
        let samples = t.process_samples();
        assert_eq!(samples.len(), 10 - 2);
        assert!(samples.iter().all(|s| s.watts == 2.0));
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in [
            "0,pkg-0,1\n",
            "x,pkg-0,1,2\n",
            "0,pkg-0,5,2\n",
            "1,pkg-0,1,9\n0,pkg-0,2,9\n",
            "0,pkg-0,1,9\n0,pkg-0,2,9\n",
        ] {
            assert!(
                matches!(TraceRecording::parse(bad), Err(MeterError::Trace { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let text = "timestamp_s,domain_id,energy_uj,max_range_uj\n-0.5,pkg-0,1,99\n0,pkg-0,3,99\n0.25,pkg-0,7,99\n";
        let t = TraceRecording::parse(text).unwrap();
        assert_eq!(TraceRecording::parse(&t.to_csv()).unwrap(), t);
    }
}
