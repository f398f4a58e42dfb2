//! Parsing of list-valued flags.
//!
//! Lists are comma separated; each item is either a number or an inclusive
//! range `start:stop:step` (`start:stop` for integers, step 1).

use crystal_core::{Error, Result};

fn num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("invalid number '{s}'")))
}

pub fn floats(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|p| !p.trim().is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if !(step > 0.0) || b < a {
                    return Err(Error::Parse(format!("bad range '{item}'")));
                }
                let k = ((b - a) / step + 1e-9).floor() as usize;
                // Round to keep grid values free of accumulated noise.
                out.extend((0..=k).map(|i| round12(a + step * i as f64)));
            }
            _ => return Err(Error::Parse(format!("bad list item '{item}'"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("empty list '{s}'")));
    }
    Ok(out)
}

pub fn ints(s: &str) -> Result<Vec<u64>> {
    let int = |x: &str| x.trim().parse::<u64>().map_err(|_| Error::Parse(format!("invalid integer '{x}'")));
    let mut out = Vec::new();
    for item in s.split(',').filter(|p| !p.trim().is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(int(x)?),
            [a, b] => out.extend(int(a)?..=int(b)?),
            [a, b, step] => {
                let step = int(step)?;
                if step == 0 {
                    return Err(Error::Parse(format!("bad range '{item}'")));
                }
                out.extend((int(a)?..=int(b)?).step_by(step as usize));
            }
            _ => return Err(Error::Parse(format!("bad list item '{item}'"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("empty list '{s}'")));
    }
    Ok(out)
}

pub fn signed_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|x| x.trim().parse::<i64>().map_err(|_| Error::Parse(format!("invalid integer '{x}'"))))
        .collect()
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
