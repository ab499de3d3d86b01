//! Plain-text checkpoint for a backbone and adapter.
//!
//! ```text
//! acl-checkpoint 1
//! config input_dim 32
//! config embed_dim 16
//! config hidden 64,64
//! config activation tanh
//! config adapter_rank 8
//! tensor backbone.0.weight 64 32
//! <64*32 comma-separated values, row-major>
//! tensor backbone.0.bias 64 1
//! ...
//! tensor adapter.down 8 16
//! tensor adapter.up 16 8
//! ```
//!
//! Every `tensor NAME ROWS COLS` header is followed by exactly one line of
//! values. Values use the shortest representation that round-trips, so
//! save/load is bit-exact.

use std::io::{BufRead, Write};

use super::{init_model, AdapterModule, Backbone, ModelConfig};
use crate::error::{Error, Result};
use crate::numerics::{RngState, Scalar};

const MAGIC: &str = "acl-checkpoint 1";

pub fn write_checkpoint<T: Scalar, W: Write>(
    out: &mut W,
    config: &ModelConfig,
    backbone: &Backbone<T>,
    adapter: &AdapterModule<T>,
) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "config input_dim {}", config.input_dim)?;
    writeln!(out, "config embed_dim {}", config.embed_dim)?;
    let hidden: Vec<String> = config.hidden.iter().map(usize::to_string).collect();
    writeln!(out, "config hidden {}", hidden.join(","))?;
    writeln!(out, "config activation {}", config.activation.name())?;
    writeln!(out, "config adapter_rank {}", config.adapter_rank)?;
    let mut tensor = |name: String, rows: usize, cols: usize, data: &[T]| -> Result<()> {
        writeln!(out, "tensor {name} {rows} {cols}")?;
        let vals: Vec<String> = data.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", vals.join(","))?;
        Ok(())
    };
    for (i, l) in backbone.layers.iter().enumerate() {
        tensor(format!("backbone.{i}.weight"), l.weight.rows, l.weight.cols, &l.weight.data)?;
        tensor(format!("backbone.{i}.bias"), l.bias.len(), 1, &l.bias)?;
    }
    tensor("adapter.down".into(), adapter.down.rows, adapter.down.cols, &adapter.down.data)?;
    tensor("adapter.up".into(), adapter.up.rows, adapter.up.cols, &adapter.up.data)?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(
    input: R,
) -> Result<(ModelConfig, Backbone<T>, AdapterModule<T>)> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse {
                line: 0,
                message: "unexpected end of checkpoint".into(),
            }),
        }
    };
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (n, magic) = next()?;
    if magic.trim() != MAGIC {
        return Err(parse_err(n, format!("bad header `{magic}`")));
    }
    let mut cfg = ModelConfig::default();
    for key in ["input_dim", "embed_dim", "hidden", "activation", "adapter_rank"] {
        let (n, l) = next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some("config") || parts.next() != Some(key) {
            return Err(parse_err(n, format!("expected `config {key}`")));
        }
        let val = parts.next().unwrap_or("");
        let bad = |_| parse_err(n, format!("bad value for {key}: `{val}`"));
        match key {
            "input_dim" => cfg.input_dim = val.parse().map_err(bad)?,
            "embed_dim" => cfg.embed_dim = val.parse().map_err(bad)?,
            "adapter_rank" => cfg.adapter_rank = val.parse().map_err(bad)?,
            "hidden" => {
                cfg.hidden = val
                    .split(',')
                    .map(|s| s.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(bad)?
            }
            _ => cfg.activation = val.parse().map_err(|e: String| parse_err(n, e))?,
        }
    }
    cfg.validate()?;

    // Shapes come from a template built from the config.
    let (mut backbone, mut adapter) = init_model::<T>(&cfg, &mut RngState::new(0));
    let mut targets: Vec<(String, usize, usize, &mut Vec<T>)> = Vec::new();
    for (i, l) in backbone.layers.iter_mut().enumerate() {
        targets.push((format!("backbone.{i}.weight"), l.weight.rows, l.weight.cols, &mut l.weight.data));
        let len = l.bias.len();
        targets.push((format!("backbone.{i}.bias"), len, 1, &mut l.bias));
    }
    targets.push(("adapter.down".into(), adapter.down.rows, adapter.down.cols, &mut adapter.down.data));
    targets.push(("adapter.up".into(), adapter.up.rows, adapter.up.cols, &mut adapter.up.data));

    for (name, rows, cols, buf) in targets {
        let (n, header) = next()?;
        let want = format!("tensor {name} {rows} {cols}");
        if header.trim() != want {
            return Err(parse_err(n, format!("expected `{want}`, found `{header}`")));
        }
        let (n, values) = next()?;
        let parsed: Vec<T> = values
            .split(',')
            .map(|s| s.trim().parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(n, format!("unparseable value in {name}")))?;
        if parsed.len() != rows * cols {
            return Err(parse_err(
                n,
                format!("{name}: expected {} values, found {}", rows * cols, parsed.len()),
            ));
        }
        if parsed.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(n, format!("{name}: non-finite value")));
        }
        *buf = parsed;
    }
    Ok((cfg, backbone, adapter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;
    use crate::model::Activation;

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = ModelConfig {
            input_dim: 5,
            embed_dim: 3,
            hidden: vec![4, 6],
            activation: Activation::Relu,
            adapter_rank: 2,
        };
        let (b, mut a) = init_model::<f64>(&cfg, &mut RngState::new(9));
        a.up.data.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * i as f64 + 1e-17);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &cfg, &b, &a).unwrap();
        let (cfg2, b2, a2) = read_checkpoint::<f64, _>(Cursor::new(buf)).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(b, b2);
        assert_eq!(a, a2);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let cfg = ModelConfig {
            input_dim: 2,
            embed_dim: 2,
            hidden: vec![2],
            activation: Activation::Tanh,
            adapter_rank: 1,
        };
        let (b, a) = init_model::<f64>(&cfg, &mut RngState::new(1));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &cfg, &b, &a).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            read_checkpoint::<f64, _>(Cursor::new(cut)),
            Err(Error::Parse { .. })
        ));
        assert!(read_checkpoint::<f64, _>(Cursor::new("nope\n")).is_err());
    }
}
