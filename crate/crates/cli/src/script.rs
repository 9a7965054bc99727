//! Environment strategies named on the command line, and environment
//! scripts: one JSON object per line mapping locations to values.

use std::fs;
use std::path::Path;

use ealgebra::explorer::EnvStrategy;
use ealgebra::{EnvDelta, GlobalState, Value};

use crate::Error;

pub fn strategy(words: &[String], s: &GlobalState) -> Result<EnvStrategy, Error> {
    match words {
        [m] if m == "none" => Ok(EnvStrategy::None),
        [m] if m == "free" => Ok(EnvStrategy::Free),
        [m] if m == "unconstrained" => Ok(EnvStrategy::Unconstrained),
        [m, file] if m == "script" => Ok(EnvStrategy::Scripted(read_script(Path::new(file), s)?)),
        _ => Err(Error::Usage(format!(
            "--env expects none, free, unconstrained or script FILE, got `{}`",
            words.join(" ")
        ))),
    }
}

pub fn value(s: &GlobalState, text: &str) -> Option<Value> {
    let text = text.trim();
    match text {
        "undef" => Some(Value::Undef),
        "true" => Some(Value::TRUE),
        "false" => Some(Value::FALSE),
        _ => text
            .parse::<i64>()
            .ok()
            .map(Value::Int)
            .or_else(|| s.element(text).cloned()),
    }
}

fn location(s: &GlobalState, text: &str) -> Option<(String, Vec<Value>)> {
    let text = text.trim();
    let Some((f, rest)) = text.split_once('(') else {
        return Some((text.to_string(), Vec::new()));
    };
    let inner = rest.strip_suffix(')')?;
    let args = inner.split(',').map(|a| value(s, a)).collect::<Option<Vec<_>>>()?;
    Some((f.trim().to_string(), args))
}

pub fn parse_script(text: &str, s: &GlobalState) -> Result<Vec<EnvDelta>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let at = |msg: String| format!("line {}: {msg}", i + 1);
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let mut d = EnvDelta::none();
        for (k, v) in obj {
            let (f, args) = location(s, &k).ok_or_else(|| at(format!("bad location `{k}`")))?;
            let shown = match &v {
                serde_json::Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            let v = value(s, &shown).ok_or_else(|| at(format!("unknown value `{shown}`")))?;
            d = d.set(&f, args, v);
        }
        out.push(d);
    }
    Ok(out)
}

fn read_script(path: &Path, s: &GlobalState) -> Result<Vec<EnvDelta>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(path.display().to_string(), e))?;
    parse_script(&text, s).map_err(|m| Error::Usage(format!("{}: {m}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ealgebra::ringbuffer::{build_rea, RingParams};

    #[test]
    fn script_lines_become_deltas() {
        let s = build_rea(RingParams::new(2, 2)).initial;
        let d = parse_script("{\"InputDatum\": \"d1\", \"InSendBit\": 1}\n\n{}\n", &s).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(
            d[0],
            EnvDelta::none()
                .set("InputDatum", vec![], Value::datum("d1"))
                .set("InSendBit", vec![], Value::Int(1))
        );
        assert!(d[1].is_empty());
        assert!(parse_script("{\"InputDatum\": \"d9\"}", &s).unwrap_err().contains("d9"));
    }

    #[test]
    fn locations_with_arguments() {
        let s = build_rea(RingParams::new(2, 2)).initial;
        assert_eq!(location(&s, "Buffer(1)"), Some(("Buffer".into(), vec![Value::Int(1)])));
        assert_eq!(location(&s, "Buffer(1"), None);
    }
}
