//! Text format for synthetic model descriptions.
//!
//! One `key=value` per line, `#` starts a comment:
//!
//! ```text
//! nt=256
//! nx=128
//! snr_db=10
//! event=plane,0.1,1.0,0.5,0.0          # t0 [s], amplitude, sx, sy [samples/trace]
//! event=quadratic,0.5,1.0,1e-4,1e-4    # t0, amplitude, kx, ky [1/m] [, sx, sy]
//! fault=64,6                           # first shifted trace, throw [samples]
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::synth::{EventShape, EventSpec, FaultSpec, SynthSpec};

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(s: &str, line: usize, key: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| bad(line, format!("bad value {:?} for {key}", s.trim())))
}

fn floats(fields: &[&str], line: usize, key: &str) -> Result<Vec<f64>> {
    fields.iter().map(|f| num::<f64>(f, line, key)).collect()
}

pub fn parse_synth_spec(text: &str) -> Result<SynthSpec> {
    let mut spec = SynthSpec::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected key=value, got {body:?}")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "nt" => spec.nt = num(value, line, key)?,
            "nx" => spec.nx = num(value, line, key)?,
            "ny" => spec.ny = num(value, line, key)?,
            "dt" => spec.dt = num(value, line, key)?,
            "dx" => spec.dx = num(value, line, key)?,
            "dy" => spec.dy = num(value, line, key)?,
            "f_peak" => spec.f_peak = num(value, line, key)?,
            "velocity" => spec.velocity = num(value, line, key)?,
            "seed" => spec.seed = num(value, line, key)?,
            "snr_db" => {
                spec.snr_db = match value {
                    "none" | "inf" | "clean" => None,
                    v => Some(num(v, line, key)?),
                }
            }
            "event" => {
                let fields: Vec<&str> = value.split(',').collect();
                let (shape, rest) = fields.split_first().expect("split yields one field");
                let v = floats(rest, line, key)?;
                let event = match (shape.trim(), v.len()) {
                    ("plane", 4) => EventSpec::plane(v[0], v[1], v[2], v[3]),
                    ("quadratic", 4) | ("quadratic", 6) => EventSpec {
                        shape: EventShape::Quadratic {
                            kx: v[2],
                            ky: v[3],
                            sx: v.get(4).copied().unwrap_or(0.0),
                            sy: v.get(5).copied().unwrap_or(0.0),
                        },
                        t0: v[0],
                        amplitude: v[1],
                    },
                    (s, n) => return Err(bad(line, format!("cannot read {s} event with {n} numbers"))),
                };
                spec.events.push(event);
            }
            "fault" => {
                let fields: Vec<&str> = value.split(',').collect();
                if fields.len() != 2 {
                    return Err(bad(line, "fault needs trace,throw"));
                }
                spec.faults.push(FaultSpec {
                    trace: num(fields[0], line, key)?,
                    throw: num(fields[1], line, key)?,
                });
            }
            _ => return Err(bad(line, format!("unknown key {key}"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

pub fn read_synth_spec(path: &Path) -> Result<SynthSpec> {
    parse_synth_spec(&std::fs::read_to_string(path)?)
}
