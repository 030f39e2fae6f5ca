//! Text format for parameter sets. Each tensor is two lines:
//!
//! ```text
//! tensor <name> <dim> <dim> ...
//! <value> <value> ...
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so reading restores them exactly.

use std::io::Write;

use super::params::Params;
use super::NeuralError;

pub fn write_params<P: Params, W: Write>(params: &P, out: &mut W) -> Result<(), NeuralError> {
    for (name, t) in params.tensors() {
        let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
        writeln!(out, "tensor {name} {}", dims.join(" "))?;
        let values: Vec<String> = t.data().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", values.join(" "))?;
    }
    Ok(())
}

/// Fills `params` from tensor blocks; names and shapes must match the existing layout.
/// `first_line` is the 1-based file line of `lines[0]`, used in error messages.
pub fn read_params<P: Params>(params: &mut P, lines: &[&str], first_line: usize) -> Result<(), NeuralError> {
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    let content: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (first_line + i, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if content.len() != 2 * expected.len() {
        return Err(NeuralError::Format {
            line: first_line,
            message: format!(
                "expected {} tensors, found {} non-empty lines",
                expected.len(),
                content.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(params.param_count());
    for ((name, shape), block) in expected.iter().zip(content.chunks(2)) {
        let (line, header) = block[0];
        let mut parts = header.split_whitespace();
        if parts.next() != Some("tensor") || parts.next() != Some(name.as_str()) {
            return Err(NeuralError::Format {
                line,
                message: format!("expected `tensor {name} ...`"),
            });
        }
        let dims: Vec<usize> = parts
            .map(|p| p.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| NeuralError::Format {
                line,
                message: format!("bad dimension: {e}"),
            })?;
        if &dims != shape {
            return Err(NeuralError::Format {
                line,
                message: format!("tensor {name}: shape {dims:?}, model expects {shape:?}"),
            });
        }
        let (line, data) = block[1];
        let before = values.len();
        for token in data.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| NeuralError::Format {
                line,
                message: format!("not a number: `{token}`"),
            })?;
            if !v.is_finite() {
                return Err(NeuralError::Format {
                    line,
                    message: "non-finite parameter".into(),
                });
            }
            values.push(v);
        }
        let n: usize = shape.iter().product();
        if values.len() - before != n {
            return Err(NeuralError::Format {
                line,
                message: format!("tensor {name}: {} values, expected {n}", values.len() - before),
            });
        }
    }
    params.set_flat(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{CnnLstmNet, CnnLstmShape};

    fn net(seed: u64) -> CnnLstmNet {
        CnnLstmNet::new(
            CnnLstmShape {
                lookback: 24,
                filters: 2,
                kernel: 3,
                pool: 2,
                units: 3,
                dense: 4,
                horizon: 24,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let original = net(1);
        let mut buf = Vec::new();
        write_params(&original, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mut restored = net(2);
        read_params(&mut restored, &lines, 1).unwrap();
        assert_eq!(restored.flatten(), original.flatten());
    }

    #[test]
    fn shape_and_name_errors() {
        let mut buf = Vec::new();
        write_params(&net(1), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad = text.replacen("tensor conv.w 2 1 3", "tensor conv.w 3 1 3", 1);
        let lines: Vec<&str> = bad.lines().collect();
        let err = read_params(&mut net(2), &lines, 4).unwrap_err();
        assert!(matches!(err, NeuralError::Format { line: 4, .. }), "{err}");
        let lines: Vec<&str> = text.lines().take(3).collect();
        assert!(read_params(&mut net(2), &lines, 1).is_err());
    }
}
