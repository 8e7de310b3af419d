//! Baseline classifier persistence: selection mask, standardization stats,
//! kernel settings, and support vectors in one text container. Floats use
//! shortest round-trip formatting so reloads are bit-exact.

use super::features::Standardizer;
use super::smo::{Kernel, SvmModel};
use super::SvmClassifier;
use crate::error::{PipeError, Result};
use sha2::{Digest, Sha256};
use std::path::Path;

const SVM_SCHEMA: &str = "impact-pipe-model/1";

pub fn save_svm(clf: &SvmClassifier, path: &Path) -> Result<()> {
    std::fs::write(path, svm_to_string(clf)).map_err(|e| PipeError::io(path, e))
}

pub fn load_svm(path: &Path) -> Result<SvmClassifier> {
    let body = std::fs::read_to_string(path).map_err(|e| PipeError::io(path, e))?;
    svm_from_str(&body, path)
}

pub fn svm_fingerprint(clf: &SvmClassifier) -> String {
    let mut h = Sha256::new();
    h.update(svm_to_string(clf).as_bytes());
    let hex = format!("{:x}", h.finalize());
    format!("svm-{}", &hex[..12])
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_usizes(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn svm_to_string(clf: &SvmClassifier) -> String {
    let m = &clf.model;
    let mut out = String::new();
    out.push_str(&format!("# schema={SVM_SCHEMA}\n"));
    out.push_str("# kind=svm\n");
    out.push_str(&format!("# version={}\n", crate::VERSION));
    out.push_str(&format!("# seed={}\n", clf.seed));
    match m.kernel {
        Kernel::Linear => out.push_str("# kernel=linear\n"),
        Kernel::Rbf { gamma } => out.push_str(&format!("# kernel=rbf {gamma}\n")),
        Kernel::RbfAuto => out.push_str("# kernel=rbf_auto\n"),
    }
    out.push_str(&format!("# c={}\n", m.c));
    out.push_str(&format!("# bias={}\n", m.bias));
    out.push_str(&format!("# dual_objective={}\n", m.dual_objective));
    out.push_str(&format!("# train_accuracy={}\n", m.train_accuracy));
    out.push_str(&format!("# degenerate={}\n", m.degenerate));
    out.push_str(&format!("mask {}\n", join_usizes(&clf.mask)));
    out.push_str(&format!("mean {}\n", join_floats(&clf.standardizer.mean)));
    out.push_str(&format!("sd {}\n", join_floats(&clf.standardizer.sd)));
    out.push_str(&format!("support {}\n", m.support_vectors.len()));
    for (sv, coef) in m.support_vectors.iter().zip(m.dual_coefs.iter()) {
        out.push_str(&format!("sv {coef} {}\n", join_floats(sv)));
    }
    out
}

pub fn svm_from_str(body: &str, path: &Path) -> Result<SvmClassifier> {
    let bad = |what: String| PipeError::Format {
        path: path.into(),
        what,
    };
    let mut header = std::collections::BTreeMap::new();
    let mut lines = body.lines().peekable();
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
    let get = |k: &str| -> Result<String> {
        header
            .get(k)
            .cloned()
            .ok_or_else(|| PipeError::Format {
                path: path.into(),
                what: format!("missing descriptor '{k}'"),
            })
    };
    if get("schema")? != SVM_SCHEMA {
        return Err(bad(format!("unsupported schema '{}'", get("schema")?)));
    }
    if get("kind")? != "svm" {
        return Err(bad(format!("model kind '{}' is not svm", get("kind")?)));
    }
    let seed: u64 = get("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
    let kernel = match get("kernel")?.as_str() {
        "linear" => Kernel::Linear,
        "rbf_auto" => Kernel::RbfAuto,
        s if s.starts_with("rbf ") => {
            let gamma: f64 = s[4..].parse().map_err(|_| bad("bad gamma".into()))?;
            Kernel::Rbf { gamma }
        }
        other => return Err(bad(format!("unknown kernel '{other}'"))),
    };
    let parse_f = |k: &str| -> Result<f64> {
        get(k)?.parse().map_err(|_| bad(format!("bad {k}")))
    };
    let c = parse_f("c")?;
    let bias = parse_f("bias")?;
    let dual_objective = parse_f("dual_objective")?;
    let train_accuracy = parse_f("train_accuracy")?;
    let degenerate = get("degenerate")? == "true";

    let mut expect = |tag: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| PipeError::Format {
            path: path.into(),
            what: format!("missing '{tag}' block"),
        })?;
        line.strip_prefix(tag)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| PipeError::Format {
                path: path.into(),
                what: format!("expected '{tag} ...', found '{line}'"),
            })
    };
    let parse_usizes = |s: &str| -> Result<Vec<usize>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| bad(format!("bad index '{t}'"))))
            .collect()
    };
    let parse_floats = |s: &str| -> Result<Vec<f64>> {
        s.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad value '{t}'"))))
            .collect()
    };
    let mask = parse_usizes(&expect("mask")?)?;
    let mean = parse_floats(&expect("mean")?)?;
    let sd = parse_floats(&expect("sd")?)?;
    if mean.len() != mask.len() || sd.len() != mask.len() {
        return Err(bad("standardizer width disagrees with the mask".into()));
    }
    let n_sv: usize = expect("support")?
        .parse()
        .map_err(|_| bad("bad support count".into()))?;
    let mut support_vectors = Vec::with_capacity(n_sv);
    let mut dual_coefs = Vec::with_capacity(n_sv);
    for _ in 0..n_sv {
        let row = expect("sv")?;
        let vals = parse_floats(&row)?;
        if vals.len() != mask.len() + 1 {
            return Err(bad(format!(
                "support vector row has {} values, expected {}",
                vals.len(),
                mask.len() + 1
            )));
        }
        dual_coefs.push(vals[0]);
        support_vectors.push(vals[1..].to_vec());
    }
    Ok(SvmClassifier {
        mask,
        standardizer: Standardizer { mean, sd },
        model: SvmModel {
            kernel,
            c,
            support_vectors,
            dual_coefs,
            bias,
            dual_objective,
            degenerate,
            train_accuracy,
        },
        selection_trace: Vec::new(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::smo::train_svm;

    fn toy_classifier() -> SvmClassifier {
        let x = vec![
            vec![-1.2, 0.3],
            vec![-0.8, -0.1],
            vec![1.1, 0.2],
            vec![0.9, -0.4],
        ];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let model = train_svm(&x, &y, Kernel::Rbf { gamma: 0.5 }, 2.0).unwrap();
        SvmClassifier {
            mask: vec![0, 36],
            standardizer: Standardizer {
                mean: vec![0.25, -0.5],
                sd: vec![1.5, 2.0],
            },
            model,
            selection_trace: Vec::new(),
            seed: 9,
        }
    }

    #[test]
    fn svm_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let clf = toy_classifier();
        let path = dir.path().join("svm.txt");
        save_svm(&clf, &path).unwrap();
        let back = load_svm(&path).unwrap();
        assert_eq!(back.mask, clf.mask);
        assert_eq!(back.standardizer, clf.standardizer);
        assert_eq!(back.model.bias.to_bits(), clf.model.bias.to_bits());
        for (a, b) in clf
            .model
            .support_vectors
            .iter()
            .flatten()
            .zip(back.model.support_vectors.iter().flatten())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(svm_fingerprint(&clf), svm_fingerprint(&back));
    }

    #[test]
    fn corrupt_svm_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let clf = toy_classifier();
        let path = dir.path().join("svm.txt");
        save_svm(&clf, &path).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        // Claim more support vectors than the file carries.
        let n_sv = clf.model.support_vectors.len();
        let mangled = body.replace(
            &format!("support {n_sv}"),
            &format!("support {}", n_sv + 5),
        );
        assert_ne!(body, mangled);
        std::fs::write(&path, mangled).unwrap();
        assert!(matches!(load_svm(&path), Err(PipeError::Format { .. })));

        // Drop a required descriptor line.
        let headless = body.replace("# kind=svm\n", "");
        std::fs::write(&path, headless).unwrap();
        assert!(matches!(load_svm(&path), Err(PipeError::Format { .. })));
    }
}
