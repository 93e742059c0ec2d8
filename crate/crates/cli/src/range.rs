//! Value lists on the command line.
//!
//! Accepted forms: a single number, a comma list (`1,2,5`), an inclusive
//! linear range `start:stop:count`, or a log-spaced range `start:stop:logN`.
//! Every form must yield a non-empty, strictly increasing list.

use crate::CliError;

pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    let values = if text.contains(':') {
        parse_range(text)?
    } else {
        text.split(',')
            .map(parse_number)
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(invalid(text, "no values"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(text, "values must be strictly increasing"));
    }
    Ok(values)
}

fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(invalid(
            text,
            "expected start:stop:count or start:stop:logN",
        ));
    };
    let (start, stop) = (parse_number(start)?, parse_number(stop)?);
    let count = count.trim();
    let (log, count) = match count.strip_prefix("log") {
        Some(n) => (true, n),
        None => (false, count),
    };
    let n: usize = count
        .parse()
        .map_err(|_| invalid(text, "point count must be a positive integer"))?;
    if n == 0 {
        return Err(invalid(text, "point count must be a positive integer"));
    }
    if n == 1 {
        return if start == stop {
            Ok(vec![start])
        } else {
            Err(invalid(text, "a single point needs start == stop"))
        };
    }
    let step = |i: usize| i as f64 / (n - 1) as f64;
    if log {
        if !(start > 0.0 && stop > 0.0) {
            return Err(invalid(text, "log spacing needs positive bounds"));
        }
        let (a, b) = (start.log10(), stop.log10());
        Ok((0..n)
            .map(|i| match i {
                0 => start,
                i if i == n - 1 => stop,
                i => 10f64.powf(a + (b - a) * step(i)),
            })
            .collect())
    } else {
        Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * step(i)
                }
            })
            .collect())
    }
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Invalid(format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn invalid(text: &str, why: &str) -> CliError {
    CliError::Invalid(format!("bad value list `{text}`: {why}"))
}
