//! Model persistence.
//!
//! Text container: `# key=value` descriptor lines, then one `tensor` line
//! per parameter block with space-separated values. Values use Rust's
//! shortest round-trip float formatting, so parameters reload bit for bit.

use super::{Architecture, Conv1d, Conv2d, Dense, HeadKind, MiGNetModel, Tensor};
use crate::error::{PipeError, Result};
use sha2::{Digest, Sha256};
use std::path::Path;

const MODEL_SCHEMA: &str = "impact-pipe-model/1";

pub fn save_model(model: &MiGNetModel, path: &Path) -> Result<()> {
    let body = model_to_string(model);
    std::fs::write(path, body).map_err(|e| PipeError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MiGNetModel> {
    let body = std::fs::read_to_string(path).map_err(|e| PipeError::io(path, e))?;
    model_from_str(&body, path)
}

/// Stable short identifier: hash of the serialized parameters.
pub fn model_fingerprint(model: &MiGNetModel) -> String {
    let mut h = Sha256::new();
    h.update(model_to_string(model).as_bytes());
    let hex = format!("{:x}", h.finalize());
    format!("mignet-{}", &hex[..12])
}

pub fn model_to_string(model: &MiGNetModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("# schema={MODEL_SCHEMA}\n"));
    out.push_str("# kind=mignet\n");
    out.push_str(&format!("# version={}\n", crate::VERSION));
    out.push_str(&format!("# seed={}\n", model.init_seed));
    out.push_str(&format!("# rows={}\n", model.n_rows));
    out.push_str(&format!("# cols={}\n", model.n_cols));
    out.push_str(&format!("# head={}\n", model.arch.head.as_str()));
    out.push_str(&format!(
        "# conv1d={}\n",
        Architecture::format_stage(&model.arch.conv1d)
    ));
    out.push_str(&format!(
        "# conv2d={}\n",
        Architecture::format_stage(&model.arch.conv2d)
    ));
    let mut dump = |name: String, shape: &[usize], data: &[f64]| {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("tensor {name} {}\n", dims.join(" ")));
        let vals: Vec<String> = data.iter().map(|v| format!("{v}")).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    };
    for (i, l) in model.conv1d.iter().enumerate() {
        dump(format!("conv1d.{i}.w"), l.w.shape(), l.w.as_slice());
        dump(format!("conv1d.{i}.b"), &[l.b.len()], &l.b);
    }
    for (i, l) in model.conv2d.iter().enumerate() {
        dump(format!("conv2d.{i}.w"), l.w.shape(), l.w.as_slice());
        dump(format!("conv2d.{i}.b"), &[l.b.len()], &l.b);
    }
    dump("dense.w".into(), model.dense.w.shape(), model.dense.w.as_slice());
    dump("dense.b".into(), &[model.dense.b.len()], &model.dense.b);
    out
}

pub fn model_from_str(body: &str, path: &Path) -> Result<MiGNetModel> {
    let mut lines = body.lines().peekable();
    let mut header = std::collections::BTreeMap::new();
    while let Some(line) = lines.peek() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.to_string(), v.to_string());
            }
            lines.next();
        } else {
            break;
        }
    }
    let get = |k: &str| -> Result<&String> {
        header.get(k).ok_or_else(|| PipeError::Format {
            path: path.into(),
            what: format!("missing descriptor '{k}'"),
        })
    };
    if get("schema")? != MODEL_SCHEMA {
        return Err(PipeError::Format {
            path: path.into(),
            what: format!("unsupported schema '{}'", get("schema")?),
        });
    }
    if get("kind")? != "mignet" {
        return Err(PipeError::Format {
            path: path.into(),
            what: format!("model kind '{}' is not mignet", get("kind")?),
        });
    }
    let bad = |what: String| PipeError::Format {
        path: path.into(),
        what,
    };
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|_| bad("unparseable seed".into()))?;
    let n_rows: usize = get("rows")?
        .parse()
        .map_err(|_| bad("unparseable rows".into()))?;
    let n_cols: usize = get("cols")?
        .parse()
        .map_err(|_| bad("unparseable cols".into()))?;
    let arch = Architecture {
        conv1d: Architecture::parse_stage(get("conv1d")?)
            .map_err(|e| bad(e.to_string()))?,
        conv2d: Architecture::parse_stage(get("conv2d")?)
            .map_err(|e| bad(e.to_string()))?,
        head: HeadKind::parse(get("head")?).map_err(|e| bad(e.to_string()))?,
    };
    arch.validate().map_err(|e| bad(e.to_string()))?;
    if n_rows != 6 {
        return Err(bad(format!("expected 6 input rows, found {n_rows}")));
    }

    let mut read_tensor = |expect_name: &str| -> Result<Tensor> {
        let decl = lines.next().ok_or_else(|| PipeError::Format {
            path: path.into(),
            what: format!("missing tensor '{expect_name}'"),
        })?;
        let mut parts = decl.split_whitespace();
        if parts.next() != Some("tensor") {
            return Err(PipeError::Format {
                path: path.into(),
                what: format!("expected tensor declaration, found '{decl}'"),
            });
        }
        let name = parts.next().unwrap_or("");
        if name != expect_name {
            return Err(PipeError::Format {
                path: path.into(),
                what: format!("expected tensor '{expect_name}', found '{name}'"),
            });
        }
        let shape: Vec<usize> = parts
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| PipeError::Format {
                path: path.into(),
                what: format!("bad dimensions for tensor '{name}'"),
            })?;
        let values_line = lines.next().ok_or_else(|| PipeError::Format {
            path: path.into(),
            what: format!("missing values for tensor '{name}'"),
        })?;
        let data: Vec<f64> = values_line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| PipeError::Format {
                path: path.into(),
                what: format!("unparseable value in tensor '{name}'"),
            })?;
        Tensor::from_vec(&shape, data).map_err(|e| PipeError::Format {
            path: path.into(),
            what: format!("tensor '{name}': {e}"),
        })
    };

    let mut conv1d = Vec::new();
    let mut in_ch = 1;
    for (i, &(f, k)) in arch.conv1d.iter().enumerate() {
        let w = read_tensor(&format!("conv1d.{i}.w"))?;
        let b = read_tensor(&format!("conv1d.{i}.b"))?;
        if w.shape() != [f, in_ch, k] || b.numel() != f {
            return Err(bad(format!(
                "conv1d layer {i} tensors disagree with the descriptor"
            )));
        }
        conv1d.push(Conv1d {
            in_ch,
            out_ch: f,
            kernel: k,
            w,
            b: b.as_slice().to_vec(),
        });
        in_ch = f;
    }
    let mut conv2d = Vec::new();
    let mut c = in_ch;
    for (i, &(f, k)) in arch.conv2d.iter().enumerate() {
        let w = read_tensor(&format!("conv2d.{i}.w"))?;
        let b = read_tensor(&format!("conv2d.{i}.b"))?;
        if w.shape() != [f, c, k, k] || b.numel() != f {
            return Err(bad(format!(
                "conv2d layer {i} tensors disagree with the descriptor"
            )));
        }
        conv2d.push(Conv2d {
            in_ch: c,
            out_ch: f,
            kernel: k,
            w,
            b: b.as_slice().to_vec(),
        });
        c = f;
    }
    let dense_in = match arch.head {
        HeadKind::Gap => c,
        HeadKind::Flatten => c * n_rows * n_cols,
    };
    let w = read_tensor("dense.w")?;
    let b = read_tensor("dense.b")?;
    if w.shape() != [2, dense_in] || b.numel() != 2 {
        return Err(bad("dense tensors disagree with the descriptor".into()));
    }
    let model = MiGNetModel {
        arch,
        n_rows,
        n_cols,
        conv1d,
        conv2d,
        dense: Dense {
            in_dim: dense_in,
            out_dim: 2,
            w,
            b: b.as_slice().to_vec(),
        },
        init_seed: seed,
        stamp: 0,
    };
    Ok(model)
}
