//! Inline constructors for states and spectra used on the command line.
//!
//! States: `two-level:E=1`, `uniform-cycle:N=4,eps1=1`, `eigenstate:E=0`,
//! `big-delta:E=1,eps=1,n=10`, `interval-weighted:N=100,c=0.5[,scale=1]`,
//! `sample:N=16,eps1=1,E=4,seed=3`, `file:path.json`.
//!
//! Spectra: `harmonic:N=9,eps1=0.25`, `power-law:N=12,c=0.5[,scale=1]`,
//! `list:0,0.7,1.3`, `file:path.json` or a bare path.

use std::collections::BTreeMap;
use std::fs;
use std::str::FromStr;

use qsl_core::{PureState, Spectrum};

use crate::CliError;

fn params(body: &str) -> Result<BTreeMap<String, String>, CliError> {
    body.split(',')
        .filter(|kv| !kv.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    let raw = map
        .get(key)
        .ok_or_else(|| CliError::Usage(format!("missing parameter `{key}`")))?;
    raw.parse()
        .map_err(|_| CliError::Usage(format!("cannot parse `{key}={raw}`")))
}

fn get_or<T: FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, CliError> {
    if map.contains_key(key) {
        get(map, key)
    } else {
        Ok(default)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

pub fn parse_state(spec: &str) -> Result<PureState, CliError> {
    let (kind, body) = spec.split_once(':').unwrap_or((spec, ""));
    if kind == "file" {
        return read_json(body);
    }
    let p = params(body)?;
    let state = match kind {
        "two-level" => PureState::two_level(get(&p, "E")?)?,
        "uniform-cycle" => PureState::uniform_cycle(get(&p, "N")?, get_or(&p, "eps1", 1.0)?)?,
        "eigenstate" => {
            let e: f64 = get(&p, "E")?;
            if e < 0.0 {
                return Err(CliError::Usage("eigenstate energy must be >= 0".into()));
            }
            if e == 0.0 {
                PureState::eigenstate(Spectrum::from_list(&[0.0])?, 0)?
            } else {
                PureState::eigenstate(Spectrum::from_list(&[0.0, e])?, 1)?
            }
        }
        "big-delta" => PureState::big_delta(get(&p, "E")?, get(&p, "eps")?, get(&p, "n")?)?,
        "interval-weighted" => {
            let n: usize = get(&p, "N")?;
            let spectrum = Spectrum::power_law(n + 1, get(&p, "c")?, get_or(&p, "scale", 1.0)?)?;
            PureState::interval_weighted(&spectrum, n)?
        }
        "sample" => {
            let spectrum = Spectrum::harmonic(get(&p, "N")?, get_or(&p, "eps1", 1.0)?)?;
            PureState::sample_fixed_energy(&spectrum, get(&p, "E")?, get_or(&p, "seed", 0)?)?
        }
        _ => return Err(CliError::Usage(format!("unknown state constructor `{kind}`"))),
    };
    Ok(state)
}

pub fn parse_spectrum(spec: &str) -> Result<Spectrum, CliError> {
    let Some((kind, body)) = spec.split_once(':') else {
        return read_json(spec);
    };
    let spectrum = match kind {
        "file" => return read_json(body),
        "list" => {
            let values = body
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("bad level list: {e}")))?;
            Spectrum::from_list(&values)?
        }
        "harmonic" => {
            let p = params(body)?;
            Spectrum::harmonic(get(&p, "N")?, get(&p, "eps1")?)?
        }
        "power-law" => {
            let p = params(body)?;
            Spectrum::power_law(get(&p, "N")?, get(&p, "c")?, get_or(&p, "scale", 1.0)?)?
        }
        _ => return Err(CliError::Usage(format!("unknown spectrum constructor `{kind}`"))),
    };
    Ok(spectrum)
}
