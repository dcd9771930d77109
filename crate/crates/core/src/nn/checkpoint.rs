//! Plain-text checkpoints for layer stacks.
//!
//! ```text
//! layers=2
//! layer in=4 out=3 activation=sigmoid
//! w 0.1 -0.2 0.3 0.05
//! w ...            (one line per output unit)
//! b 0 0 0
//! layer in=3 out=1 activation=sigmoid
//! ...
//! ```
//!
//! Floats use Rust's shortest round-trip notation, so reading a checkpoint
//! and writing it back reproduces the original bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::{Activation, Layer};

fn bad(msg: impl Into<String>) -> Error {
    Error::Invalid(format!("checkpoint: {}", msg.into()))
}

fn push_values(out: &mut String, tag: char, values: &[f64]) {
    out.push(tag);
    for v in values {
        write!(out, " {v}").unwrap();
    }
    out.push('\n');
}

pub fn write_layers(out: &mut String, layers: &[Layer]) {
    writeln!(out, "layers={}", layers.len()).unwrap();
    for l in layers {
        writeln!(
            out,
            "layer in={} out={} activation={}",
            l.in_dim, l.out_dim, l.activation
        )
        .unwrap();
        for row in l.weights.chunks(l.in_dim) {
            push_values(out, 'w', row);
        }
        push_values(out, 'b', &l.bias);
    }
}

/// `key=value` tokens of a header line.
pub fn header_fields(line: &str) -> Vec<(&str, &str)> {
    line.split_whitespace()
        .filter_map(|t| t.split_once('='))
        .collect()
}

pub fn field<'a>(fields: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| bad(format!("missing {key}=")))
}

pub fn parse_field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let v = field(fields, key)?;
    v.parse()
        .map_err(|e: T::Err| bad(format!("bad {key}={v}: {e}")))
}

fn values(line: &str, tag: &str, expect: usize) -> Result<Vec<f64>> {
    let mut toks = line.split(' ');
    if toks.next() != Some(tag) {
        return Err(bad(format!("expected a `{tag}` line, found {line:?}")));
    }
    let vals: Vec<f64> = toks
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| bad(format!("bad value {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != expect {
        return Err(bad(format!(
            "`{tag}` line has {} values, expected {expect}",
            vals.len()
        )));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("checkpoint parameter".into()));
    }
    Ok(vals)
}

/// Reads the layer section produced by [`write_layers`].
pub fn read_layers<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Vec<Layer>> {
    let head = lines.next().ok_or_else(|| bad("missing layers= line"))?;
    let count: usize = parse_field(&header_fields(head), "layers")?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let spec = lines.next().ok_or_else(|| bad("truncated"))?;
        if !spec.starts_with("layer ") {
            return Err(bad(format!("expected a layer header, found {spec:?}")));
        }
        let f = header_fields(spec);
        let in_dim: usize = parse_field(&f, "in")?;
        let out_dim: usize = parse_field(&f, "out")?;
        let activation: Activation = field(&f, "activation")?.parse()?;
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..out_dim {
            let line = lines.next().ok_or_else(|| bad("truncated weights"))?;
            weights.extend(values(line, "w", in_dim)?);
        }
        let line = lines.next().ok_or_else(|| bad("truncated bias"))?;
        let bias = values(line, "b", out_dim)?;
        layers.push(Layer {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        });
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseParams;
    use crate::seed;

    #[test]
    fn write_read_write_is_identical() {
        let mut rng = seed::rng(9);
        let mut net = DenseParams::new(
            &[5, 4, 1],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap();
        net.layers[0].bias[1] = -0.0;
        net.layers[1].bias[0] = 1e-300;
        let mut a = String::new();
        write_layers(&mut a, &net.layers);
        let back = read_layers(&mut a.lines()).unwrap();
        assert_eq!(back, net.layers);
        let mut b = String::new();
        write_layers(&mut b, &back);
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_checkpoint_fails() {
        let mut rng = seed::rng(1);
        let net = DenseParams::new(&[2, 1], &[Activation::Sigmoid], &mut rng).unwrap();
        let mut text = String::new();
        write_layers(&mut text, &net.layers);
        let cut: Vec<&str> = text.lines().take(3).collect();
        assert!(read_layers(&mut cut.into_iter()).is_err());
    }
}
