//! The on-disk event format.
//!
//! One file per triggered event: eight `# key=value` header lines, a
//! 4-column linear block on the 1000 Hz grid, a blank line, and a 4-column
//! angular block on the 8000 Hz grid. Numeric cells carry 9 significant
//! digits with `.` as the decimal separator and `\n` line endings, so a
//! given event always serializes to the same bytes.

use crate::error::{PipeError, Result};
use crate::kinematics::{ChannelSeries, KinematicEvent, Unit};
use crate::sim::TriggerConfig;
use std::path::Path;

pub const SCHEMA: &str = "impact-pipe/1";
const LIN_HEADER: &str = "t_ms,lin_x_g,lin_y_g,lin_z_g";
const ANG_HEADER: &str = "t_ms,ang_x_dps,ang_y_dps,ang_z_dps";

/// Formats a value with 9 significant digits, in plain decimal notation for
/// moderate magnitudes and scientific notation outside that range.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=12).contains(&exp) {
        return format!("{v:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Formats integral values without a fractional part (rates, counts) and
/// everything else through [`fmt_sig9`].
pub fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_sig9(v)
    }
}

fn check_event_id(id: &str) -> Result<()> {
    if id.is_empty()
        || !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
    {
        return Err(PipeError::InvalidParameter(format!(
            "event id '{id}' must be non-empty and use only [A-Za-z0-9._-]"
        )));
    }
    Ok(())
}

/// Serializes a validated event to the documented byte-exact layout.
pub fn write_event_string(event: &KinematicEvent) -> Result<String> {
    event.validate()?;
    check_event_id(&event.event_id)?;
    let tc = &event.trigger_config;
    let mut out = String::with_capacity(64 * 1024);
    out.push_str(&format!("# schema={SCHEMA}\n"));
    out.push_str(&format!("# event_id={}\n", event.event_id));
    out.push_str(&format!("# device_id={}\n", event.device_id));
    out.push_str(&format!("# trigger_time={}\n", event.trigger_time));
    out.push_str(&format!("# threshold_g={}\n", fmt_num(tc.threshold_g)));
    out.push_str(&format!("# lin_rate_hz={}\n", fmt_num(tc.lin_rate_hz)));
    out.push_str(&format!("# ang_rate_hz={}\n", fmt_num(tc.ang_rate_hz)));
    out.push_str(&format!("# worn={}\n", event.worn_flag));

    let write_block = |out: &mut String, header: &str, chans: &[ChannelSeries; 3]| {
        out.push_str(header);
        out.push('\n');
        let n = chans[0].samples.len();
        let dt = chans[0].dt_ms();
        let t0 = chans[0].t0_offset_ms;
        for i in 0..n {
            let t = t0 + i as f64 * dt;
            out.push_str(&fmt_sig9(t));
            for c in chans {
                out.push(',');
                out.push_str(&fmt_sig9(c.samples[i]));
            }
            out.push('\n');
        }
    };
    write_block(&mut out, LIN_HEADER, &event.lin_acc);
    out.push('\n');
    write_block(&mut out, ANG_HEADER, &event.ang_vel);
    Ok(out)
}

/// Writes the event to a file.
pub fn write_event_file(event: &KinematicEvent, path: &Path) -> Result<()> {
    let body = write_event_string(event)?;
    std::fs::write(path, body).map_err(|e| PipeError::io(path, e))
}

/// Parses and validates an event file.
pub fn parse_event_file(path: &Path) -> Result<KinematicEvent> {
    let body = std::fs::read_to_string(path).map_err(|e| PipeError::io(path, e))?;
    parse_event_str(&body, path)
}

struct HeaderFields {
    event_id: String,
    device_id: String,
    trigger_time: String,
    threshold_g: f64,
    lin_rate_hz: f64,
    ang_rate_hz: f64,
    worn: bool,
}

/// Parses the in-memory form; `path` is used only for error reporting.
pub fn parse_event_str(body: &str, path: &Path) -> Result<KinematicEvent> {
    let mut lines = body.lines();
    let header = parse_header(&mut lines, path)?;

    let (lin_t, lin) = parse_block(&mut lines, LIN_HEADER, "linear", path)?;
    let (ang_t, ang) = parse_block(&mut lines, ANG_HEADER, "angular", path)?;
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(PipeError::Structure {
            path: path.into(),
            what: format!("unexpected trailing content: '{extra}'"),
        });
    }

    let lin_grid = check_grid(&lin_t, header.lin_rate_hz, "linear", path)?;
    let ang_grid = check_grid(&ang_t, header.ang_rate_hz, "angular", path)?;
    if (lin_grid - ang_grid).abs() > 1e-6 {
        return Err(PipeError::Structure {
            path: path.into(),
            what: format!(
                "linear block starts at {lin_grid} ms but angular block starts at {ang_grid} ms"
            ),
        });
    }
    let ratio = header.ang_rate_hz / header.lin_rate_hz;
    if (ang_t.len() as f64 - lin_t.len() as f64 * ratio).abs() > 1e-9 {
        return Err(PipeError::Structure {
            path: path.into(),
            what: format!(
                "{} angular rows do not cover the {} linear rows at a rate ratio of {ratio}",
                ang_t.len(),
                lin_t.len()
            ),
        });
    }

    let pre_ms = -lin_grid;
    let window_ms = lin_t.len() as f64 * 1000.0 / header.lin_rate_hz;
    let trigger_config = TriggerConfig {
        threshold_g: header.threshold_g,
        pre_ms,
        post_ms: window_ms - pre_ms,
        lin_rate_hz: header.lin_rate_hz,
        ang_rate_hz: header.ang_rate_hz,
        magnitude_trigger: false,
    };

    let mk = |cols: Vec<f64>, rate: f64, unit: Unit| -> Result<ChannelSeries> {
        ChannelSeries::new(cols, rate, unit, lin_grid)
    };
    let [lx, ly, lz] = lin;
    let [ax, ay, az] = ang;
    let event = KinematicEvent {
        event_id: header.event_id,
        device_id: header.device_id,
        trigger_time: header.trigger_time,
        lin_acc: [
            mk(lx, header.lin_rate_hz, Unit::G)?,
            mk(ly, header.lin_rate_hz, Unit::G)?,
            mk(lz, header.lin_rate_hz, Unit::G)?,
        ],
        ang_vel: [
            mk(ax, header.ang_rate_hz, Unit::DegPerS)?,
            mk(ay, header.ang_rate_hz, Unit::DegPerS)?,
            mk(az, header.ang_rate_hz, Unit::DegPerS)?,
        ],
        trigger_config,
        worn_flag: header.worn,
    };
    event.validate().map_err(|e| PipeError::Structure {
        path: path.into(),
        what: e.to_string(),
    })?;
    Ok(event)
}

fn parse_header<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    path: &Path,
) -> Result<HeaderFields> {
    let mut take = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| PipeError::Schema {
            path: path.into(),
            what: format!("header line '# {key}=...'"),
        })?;
        let prefix = format!("# {key}=");
        line.strip_prefix(&prefix)
            .map(str::to_string)
            .ok_or_else(|| PipeError::Schema {
                path: path.into(),
                what: format!("header line '# {key}=...' (found '{line}')"),
            })
    };
    let schema = take("schema")?;
    if schema != SCHEMA {
        return Err(PipeError::Schema {
            path: path.into(),
            what: format!("supported schema (found '{schema}', expected '{SCHEMA}')"),
        });
    }
    let event_id = take("event_id")?;
    let device_id = take("device_id")?;
    let trigger_time = take("trigger_time")?;
    let threshold_g = parse_header_num(&take("threshold_g")?, "threshold_g", path)?;
    let lin_rate_hz = parse_header_num(&take("lin_rate_hz")?, "lin_rate_hz", path)?;
    let ang_rate_hz = parse_header_num(&take("ang_rate_hz")?, "ang_rate_hz", path)?;
    let worn = match take("worn")?.as_str() {
        "true" => true,
        "false" => false,
        other => {
            return Err(PipeError::Schema {
                path: path.into(),
                what: format!("worn=true|false (found '{other}')"),
            })
        }
    };
    check_event_id(&event_id).map_err(|_| PipeError::Schema {
        path: path.into(),
        what: format!("well-formed event_id (found '{event_id}')"),
    })?;
    Ok(HeaderFields {
        event_id,
        device_id,
        trigger_time,
        threshold_g,
        lin_rate_hz,
        ang_rate_hz,
        worn,
    })
}

fn parse_header_num(text: &str, key: &str, path: &Path) -> Result<f64> {
    let v: f64 = text.parse().map_err(|_| PipeError::Schema {
        path: path.into(),
        what: format!("numeric {key} (found '{text}')"),
    })?;
    if !v.is_finite() {
        return Err(PipeError::Schema {
            path: path.into(),
            what: format!("finite {key} (found '{text}')"),
        });
    }
    Ok(v)
}

/// Parses one column block: a fixed header then rows of `t,x,y,z` until a
/// blank line or end of input. Returns the time column and the three data
/// columns.
fn parse_block<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    expected_header: &str,
    block: &str,
    path: &Path,
) -> Result<(Vec<f64>, [Vec<f64>; 3])> {
    let header = lines.next().ok_or_else(|| PipeError::Schema {
        path: path.into(),
        what: format!("{block} block header '{expected_header}'"),
    })?;
    if header != expected_header {
        // Name the first column that differs so the error is actionable.
        let want: Vec<&str> = expected_header.split(',').collect();
        let got: Vec<&str> = header.split(',').collect();
        let missing = want
            .iter()
            .find(|c| !got.contains(c))
            .copied()
            .unwrap_or(expected_header);
        return Err(PipeError::Schema {
            path: path.into(),
            what: format!("column '{missing}' in {block} block header (found '{header}')"),
        });
    }
    let mut t = Vec::new();
    let mut cols: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (row_idx, line) in lines.by_ref().enumerate() {
        if line.trim().is_empty() {
            break;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(PipeError::Structure {
                path: path.into(),
                what: format!(
                    "{block} row {} has {} fields, expected 4",
                    row_idx + 1,
                    fields.len()
                ),
            });
        }
        let mut parsed = [0.0; 4];
        for (j, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| PipeError::Data {
                path: path.into(),
                row: row_idx + 1,
                what: format!("unparseable {block} value '{field}'"),
            })?;
            if !v.is_finite() {
                return Err(PipeError::Data {
                    path: path.into(),
                    row: row_idx + 1,
                    what: format!("non-finite {block} value '{field}'"),
                });
            }
            parsed[j] = v;
        }
        t.push(parsed[0]);
        for j in 0..3 {
            cols[j].push(parsed[j + 1]);
        }
    }
    if t.is_empty() {
        return Err(PipeError::Structure {
            path: path.into(),
            what: format!("{block} block has no rows"),
        });
    }
    Ok((t, cols))
}

/// Verifies the time column is a uniform grid at the stated rate and
/// returns its start value.
fn check_grid(t: &[f64], rate_hz: f64, block: &str, path: &Path) -> Result<f64> {
    let dt = 1000.0 / rate_hz;
    let t0 = t[0];
    for (i, &v) in t.iter().enumerate() {
        let expect = t0 + i as f64 * dt;
        if (v - expect).abs() > 1e-6 {
            return Err(PipeError::Structure {
                path: path.into(),
                what: format!(
                    "{block} time column leaves the {rate_hz} Hz grid at row {} ({v} vs {expect})",
                    i + 1
                ),
            });
        }
    }
    Ok(t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{gen_dataset, TriggerConfig};

    fn sample_event() -> KinematicEvent {
        gen_dataset(1, 0, 5, &TriggerConfig::default())
            .unwrap()
            .remove(0)
            .0
    }

    #[test]
    fn fmt_sig9_shapes() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.0), "0");
        assert_eq!(fmt_sig9(400.0), "400.000000");
        assert_eq!(fmt_sig9(-50.0), "-50.0000000");
        assert_eq!(fmt_sig9(-49.875), "-49.8750000");
        assert_eq!(fmt_sig9(0.5), "0.500000000");
        assert_eq!(fmt_sig9(1.0e-7), "1.00000000e-7");
        assert_eq!(fmt_num(8000.0), "8000");
        assert_eq!(fmt_num(10.5), "10.5000000");
    }

    #[test]
    fn round_trip_preserves_event_within_formatting() {
        let e = sample_event();
        let text = write_event_string(&e).unwrap();
        let back = parse_event_str(&text, Path::new("mem")).unwrap();
        assert_eq!(back.event_id, e.event_id);
        assert_eq!(back.worn_flag, e.worn_flag);
        assert_eq!(back.trigger_config.pre_ms, e.trigger_config.pre_ms);
        for (a, b) in e.lin_acc.iter().zip(back.lin_acc.iter()) {
            for (x, y) in a.samples.iter().zip(b.samples.iter()) {
                let tol = 5e-9 * x.abs().max(1e-12);
                assert!((x - y).abs() <= tol, "lin {x} vs {y}");
            }
        }
        // A second write of the parsed event is byte-identical: formatting
        // is idempotent after the first rounding.
        let text2 = write_event_string(&back).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn write_is_deterministic() {
        let e = sample_event();
        assert_eq!(
            write_event_string(&e).unwrap(),
            write_event_string(&e).unwrap()
        );
    }

    #[test]
    fn short_linear_block_is_structural_error() {
        let e = sample_event();
        let text = write_event_string(&e).unwrap();
        // Drop one linear data row (line 10 is the first data row).
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(12);
        let mangled = lines.join("\n");
        match parse_event_str(&mangled, Path::new("mem")) {
            Err(PipeError::Structure { .. }) => {}
            other => panic!("expected structural error, got {other:?}"),
        }
    }

    #[test]
    fn nan_cell_is_data_error_with_row() {
        let e = sample_event();
        let text = write_event_string(&e).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        // Replace the second data cell of linear data row 12 (header is 8
        // comment lines + 1 column header, so row 12 is line index 8+1+11).
        let target = 8 + 1 + 11;
        let mut fields: Vec<&str> = lines[target].split(',').collect();
        fields[1] = "NaN";
        lines[target] = fields.join(",");
        let mangled = lines.join("\n");
        match parse_event_str(&mangled, Path::new("mem")) {
            Err(PipeError::Data { row, .. }) => assert_eq!(row, 12),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error_naming_it() {
        let e = sample_event();
        let text = write_event_string(&e).unwrap();
        let mangled = text.replace("t_ms,lin_x_g,lin_y_g,lin_z_g", "t_ms,lin_x_g,lin_z_g");
        match parse_event_str(&mangled, Path::new("mem")) {
            Err(PipeError::Schema { what, .. }) => {
                assert!(what.contains("lin_y_g"), "error did not name column: {what}")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let e = sample_event();
        let text = write_event_string(&e).unwrap();
        let mangled = text.replace("# schema=impact-pipe/1", "# schema=impact-pipe/9");
        assert!(matches!(
            parse_event_str(&mangled, Path::new("mem")),
            Err(PipeError::Schema { .. })
        ));
    }

    #[test]
    fn file_round_trip_and_missing_file_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = sample_event();
        let path = dir.path().join("ev.csv");
        write_event_file(&e, &path).unwrap();
        let back = parse_event_file(&path).unwrap();
        assert_eq!(back.event_id, e.event_id);
        assert!(matches!(
            parse_event_file(&dir.path().join("absent.csv")),
            Err(PipeError::Io { .. })
        ));
        assert!(matches!(
            write_event_file(&e, Path::new("")),
            Err(PipeError::Io { .. })
        ));
    }
}
