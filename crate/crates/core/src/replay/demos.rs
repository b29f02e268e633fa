//! Line-delimited demonstration files.
//!
//! ```text
//! c2fq-demos v1
//! {"obs":[...],"action":[...],"reward":0.0,"done":false,"next_obs":[...]}
//! {"obs":[...],"action":[...],"reward":1.0,"done":true,"next_obs":[...]}
//!
//! {"obs":[...], ...}
//! ```
//!
//! One transition per line, a blank line between episodes. Floats are written
//! in shortest round-trip form, so save/load is exact.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Episode, Transition};
use crate::error::{Error, Result};

pub const DEMO_HEADER: &str = "c2fq-demos v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    obs: Vec<f64>,
    action: Vec<f64>,
    reward: f64,
    done: bool,
    next_obs: Vec<f64>,
}

pub fn write_demos(mut out: impl Write, episodes: &[Episode]) -> Result<()> {
    let io = |e| Error::io("<demo stream>", e);
    writeln!(out, "{DEMO_HEADER}").map_err(io)?;
    for (i, ep) in episodes.iter().enumerate() {
        if ep.is_empty() {
            return Err(Error::Config(format!("episode {i} is empty and cannot be stored")));
        }
        if i > 0 {
            writeln!(out).map_err(io)?;
        }
        for t in &ep.transitions {
            if !t.reward.is_finite() {
                return Err(Error::Config(format!("episode {i} has a non-finite reward")));
            }
            let rec = Record {
                obs: t.obs.clone(),
                action: t.action.clone(),
                reward: t.reward,
                done: t.done,
                next_obs: t.next_obs.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn save_demos(path: impl AsRef<Path>, episodes: &[Episode]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_demos(&mut buf, episodes)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_demos(input: impl Read, origin: &Path) -> Result<Vec<Episode>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(input).lines();
    match lines.next() {
        Some(Ok(h)) if h == DEMO_HEADER => {}
        Some(Ok(h)) => return Err(parse_err(1, format!("expected header `{DEMO_HEADER}`, found `{h}`"))),
        Some(Err(e)) => return Err(Error::io(origin, e)),
        None => return Err(parse_err(1, "missing header".into())),
    }
    let mut episodes = Vec::new();
    let mut current: Vec<Transition> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            if !current.is_empty() {
                episodes.push(Episode::new(std::mem::take(&mut current)));
            }
            continue;
        }
        if current.last().is_some_and(|t| t.done) {
            return Err(parse_err(lineno, "transition after a terminal step in the same episode".into()));
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        current.push(Transition {
            obs: rec.obs,
            action: rec.action,
            reward: rec.reward,
            next_obs: rec.next_obs,
            done: rec.done,
            is_demo: true,
        });
    }
    if !current.is_empty() {
        episodes.push(Episode::new(current));
    }
    Ok(episodes)
}

pub fn load_demos(path: impl AsRef<Path>) -> Result<Vec<Episode>> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    read_demos(file, &path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(seed: usize, len: usize) -> Episode {
        Episode::new(
            (0..len)
                .map(|i| Transition {
                    obs: vec![0.1 * (seed + i) as f64, -1.0 / 3.0],
                    action: vec![(seed as f64).sin(), 1e-17],
                    reward: if i + 1 == len { 1.0 } else { 0.0 },
                    next_obs: vec![0.1 * (seed + i + 1) as f64, 2.5e300],
                    done: i + 1 == len,
                    is_demo: true,
                })
                .collect(),
        )
    }

    #[test]
    fn round_trip_is_exact() {
        let episodes: Vec<Episode> = (0..10).map(|s| ep(s, 1 + s % 4)).collect();
        let mut bytes = Vec::new();
        write_demos(&mut bytes, &episodes).unwrap();
        let back = read_demos(bytes.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, episodes);
        let mut again = Vec::new();
        write_demos(&mut again, &back).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn header_only_is_zero_episodes() {
        let back = read_demos(format!("{DEMO_HEADER}\n").as_bytes(), Path::new("mem")).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn corrupt_line_is_reported() {
        let mut bytes = Vec::new();
        write_demos(&mut bytes, &[ep(0, 3)]).unwrap();
        let mut text = String::from_utf8(bytes).unwrap();
        text = text.replacen("\"reward\"", "\"rewrd\"", 2);
        let err = read_demos(text.as_bytes(), Path::new("demos.jsonl")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        assert!(read_demos("c2fq-demos v9\n".as_bytes(), Path::new("x")).is_err());
    }

    #[test]
    fn empty_episodes_are_rejected() {
        assert!(write_demos(Vec::new(), &[Episode::default()]).is_err());
    }
}
