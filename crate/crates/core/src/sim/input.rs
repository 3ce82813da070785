use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Time-dependent input `u(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSignal {
    /// `10(sin(πt) + 1)`
    U1,
    /// `5t·e^{−t}`
    U2,
    /// `[5·10⁴ t³ e^{−λt}, 1]`: stimulus current plus the constant source channel.
    FhnI0 { rate: f64 },
    Constant(Vec<f64>),
    Zero(usize),
    /// Piecewise-linear table, held constant outside its range.
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

/// Stimulus decay rate of the FitzHugh-Nagumo benchmark input.
pub const FHN_STIMULUS_RATE: f64 = 15.0;

impl InputSignal {
    pub fn fhn() -> Self {
        InputSignal::FhnI0 { rate: FHN_STIMULUS_RATE }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::U1 | InputSignal::U2 => 1,
            InputSignal::FhnI0 { .. } => 2,
            InputSignal::Constant(v) => v.len(),
            InputSignal::Zero(m) => *m,
            InputSignal::Table { values, .. } => values.first().map_or(0, |v| v.len()),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            InputSignal::U1 => vec![10.0 * ((PI * t).sin() + 1.0)],
            InputSignal::U2 => vec![5.0 * t * (-t).exp()],
            InputSignal::FhnI0 { rate } => vec![5e4 * t.powi(3) * (-rate * t).exp(), 1.0],
            InputSignal::Constant(v) => v.clone(),
            InputSignal::Zero(m) => vec![0.0; *m],
            InputSignal::Table { times, values } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return values[0].clone();
                }
                if k == times.len() {
                    return values[k - 1].clone();
                }
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                values[k - 1].iter().zip(&values[k]).map(|(a, b)| a + w * (b - a)).collect()
            }
        }
    }

    pub fn table(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument("input table needs matching, nonempty columns".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("input table times must increase".into()));
        }
        let m = values[0].len();
        if values.iter().any(|v| v.len() != m) {
            return Err(Error::InvalidArgument("ragged input table".into()));
        }
        Ok(InputSignal::Table { times, values })
    }

    /// Reads `t, u_1, …, u_m` rows; a non-numeric first line is a header.
    pub fn load_table(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() >= 2 => {
                    times.push(v[0]);
                    values.push(v[1..].to_vec());
                }
                Err(_) if i == 0 => continue,
                _ => return Err(Error::Parse(format!("bad input table line: {line}"))),
            }
        }
        Self::table(times, values)
    }
}

impl FromStr for InputSignal {
    type Err = Error;

    /// `u1`, `u2`, `fhn` (rate 15), `fhn-i0` (rate 1), `fhn-i0:<rate>`,
    /// `zero:<m>`, `const:<v1>,<v2>,…`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "u1" => return Ok(InputSignal::U1),
            "u2" => return Ok(InputSignal::U2),
            "fhn" => return Ok(InputSignal::fhn()),
            "fhn-i0" => return Ok(InputSignal::FhnI0 { rate: 1.0 }),
            "zero" => return Ok(InputSignal::Zero(1)),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("fhn-i0:") {
            return rest
                .parse()
                .map(|rate| InputSignal::FhnI0 { rate })
                .map_err(|_| Error::Parse(format!("bad input tag {s}")));
        }
        if let Some(rest) = s.strip_prefix("zero:") {
            return rest
                .parse()
                .map(InputSignal::Zero)
                .map_err(|_| Error::Parse(format!("bad input tag {s}")));
        }
        if let Some(rest) = s.strip_prefix("const:") {
            let v: std::result::Result<Vec<f64>, _> = rest.split(',').map(|t| t.trim().parse()).collect();
            return v.map(InputSignal::Constant).map_err(|_| Error::Parse(format!("bad input tag {s}")));
        }
        Err(Error::Parse(format!("unknown input tag {s}")))
    }
}

impl fmt::Display for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSignal::U1 => write!(f, "u1"),
            InputSignal::U2 => write!(f, "u2"),
            InputSignal::FhnI0 { rate } if *rate == FHN_STIMULUS_RATE => write!(f, "fhn"),
            InputSignal::FhnI0 { rate } if *rate == 1.0 => write!(f, "fhn-i0"),
            InputSignal::FhnI0 { rate } => write!(f, "fhn-i0:{rate}"),
            InputSignal::Constant(v) => {
                write!(f, "const:{}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
            InputSignal::Zero(m) => write!(f, "zero:{m}"),
            InputSignal::Table { .. } => write!(f, "table"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        assert!((InputSignal::U1.eval(0.5)[0] - 20.0).abs() < 1e-12);
        assert!((InputSignal::U2.eval(1.0)[0] - 5.0 / std::f64::consts::E).abs() < 1e-12);
        let f = InputSignal::FhnI0 { rate: 1.0 }.eval(2.0);
        assert!((f[0] - 5e4 * 8.0 * (-2.0f64).exp()).abs() < 1e-8);
        assert_eq!(f[1], 1.0);
        let g = InputSignal::fhn().eval(0.2);
        assert!((g[0] - 5e4 * 0.008 * (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn table_interpolates() {
        let t = InputSignal::table(vec![0.0, 1.0, 3.0], vec![vec![0.0], vec![2.0], vec![0.0]]).unwrap();
        assert_eq!(t.eval(0.5), vec![1.0]);
        assert_eq!(t.eval(2.0), vec![1.0]);
        assert_eq!(t.eval(5.0), vec![0.0]);
        assert_eq!(t.eval(-1.0), vec![0.0]);
        assert!(InputSignal::table(vec![1.0, 0.0], vec![vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn tags_round_trip() {
        for s in ["u1", "u2", "fhn", "fhn-i0", "fhn-i0:3", "zero:2", "const:0.5,1"] {
            let sig: InputSignal = s.parse().unwrap();
            assert_eq!(sig.to_string(), s);
        }
        assert!("bogus".parse::<InputSignal>().is_err());
    }
}
