//! Experiment configuration: defaults, a flat `key = value` file format and
//! the merge of file values with command-line overrides.
//!
//! Keys use snake_case in files; the matching command-line flag is the
//! kebab-case form (`chunks_per_side` / `--chunks-per-side`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matching::DEFAULT_EXHAUSTIVE_CAP;
use crate::pipeline::{Deployment, Scheme, Sweep};
use crate::video_io::{self, Gop, SyntheticKind};

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "input",
    "synthetic",
    "synthetic_seed",
    "width",
    "height",
    "gop",
    "frames",
    "chunks_per_side",
    "beta",
    "snr",
    "schemes",
    "eta",
    "seeds",
    "out",
    "clamp_pixels",
    "near_radii",
    "far_radii",
    "users_per_zone",
    "p_chunk",
    "distance_unit_m",
    "exhaustive_cap",
];

/// Where frames come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Headerless 8-bit luma file.
    File(PathBuf),
    Synthetic { kind: SyntheticKind, seed: u64, frames: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub source: Source,
    pub width: usize,
    pub height: usize,
    pub gop_size: usize,
    pub chunks_per_side: usize,
    pub betas: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub eta: f64,
    pub near_radii: (f64, f64),
    pub far_radii: (f64, f64),
    pub users_per_zone: usize,
    pub seeds: Vec<u64>,
    pub p_chunk: f64,
    pub distance_unit_m: f64,
    pub exhaustive_cap: usize,
    pub clamp_pixels: bool,
    /// `None` writes to standard output.
    pub out: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let d = Deployment::default();
        let s = Sweep::default();
        Self {
            source: Source::Synthetic {
                kind: SyntheticKind::MovingPattern,
                seed: 1,
                frames: 4,
            },
            width: 352,
            height: 288,
            gop_size: 4,
            chunks_per_side: s.chunks_per_side,
            betas: s.betas,
            snr_db: s.snr_db,
            schemes: s.schemes,
            eta: d.eta,
            near_radii: d.near_radii,
            far_radii: d.far_radii,
            users_per_zone: d.users_per_zone,
            seeds: s.seeds,
            p_chunk: s.p_chunk,
            distance_unit_m: d.distance_unit_m,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            clamp_pixels: false,
            out: None,
        }
    }
}

/// Parses the flat file format: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::config(key, "unknown key"));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::config(key, "given more than once"));
        }
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::config(key, "list is empty"));
    }
    Ok(items)
}

/// Parses `1,4,7..=9,20..22` into `[1, 4, 7, 8, 9, 20, 21]`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..=") {
            let (a, b): (u64, u64) = (parse_one("seeds", a)?, parse_one("seeds", b)?);
            seeds.extend(a..=b);
        } else if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (parse_one("seeds", a)?, parse_one("seeds", b)?);
            seeds.extend(a..b);
        } else {
            seeds.push(parse_one("seeds", part)?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::config("seeds", "no seeds given"));
    }
    Ok(seeds)
}

fn parse_range(key: &str, v: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>(key, v)?.as_slice() {
        &[lo, hi] => Ok((lo, hi)),
        _ => Err(Error::config(key, "expected `inner,outer`")),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

fn require(key: &str, ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, msg))
    }
}

impl Config {
    /// Applies `overrides` on top of `file` on top of the defaults.
    pub fn resolve(file: &BTreeMap<String, String>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut merged = file.clone();
        for (k, v) in overrides {
            merged.insert(k.clone(), v.clone());
        }
        Self::from_map(&merged)
    }

    /// Builds a validated config from string values.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(k.clone(), "unknown key"));
        }
        let mut c = Config::default();
        let get = |k: &str| map.get(k).map(String::as_str);

        if let Some(v) = get("width") {
            c.width = parse_one("width", v)?;
        }
        if let Some(v) = get("height") {
            c.height = parse_one("height", v)?;
        }
        if let Some(v) = get("gop") {
            c.gop_size = parse_one("gop", v)?;
        }
        if let Some(v) = get("chunks_per_side") {
            c.chunks_per_side = parse_one("chunks_per_side", v)?;
        }
        if let Some(v) = get("beta") {
            c.betas = parse_list("beta", v)?;
        }
        if let Some(v) = get("snr") {
            c.snr_db = parse_list("snr", v)?;
        }
        if let Some(v) = get("schemes") {
            c.schemes = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<Scheme>().map_err(|e| Error::config("schemes", e.to_string())))
                .collect::<Result<_>>()?;
            require("schemes", !c.schemes.is_empty(), "list is empty")?;
        }
        if let Some(v) = get("eta") {
            c.eta = parse_one("eta", v)?;
        }
        if let Some(v) = get("near_radii") {
            c.near_radii = parse_range("near_radii", v)?;
        }
        if let Some(v) = get("far_radii") {
            c.far_radii = parse_range("far_radii", v)?;
        }
        if let Some(v) = get("users_per_zone") {
            c.users_per_zone = parse_one("users_per_zone", v)?;
        }
        if let Some(v) = get("seeds") {
            c.seeds = parse_seeds(v)?;
        }
        if let Some(v) = get("p_chunk") {
            c.p_chunk = parse_one("p_chunk", v)?;
        }
        if let Some(v) = get("distance_unit_m") {
            c.distance_unit_m = parse_one("distance_unit_m", v)?;
        }
        if let Some(v) = get("exhaustive_cap") {
            c.exhaustive_cap = parse_one("exhaustive_cap", v)?;
        }
        if let Some(v) = get("clamp_pixels") {
            c.clamp_pixels = parse_bool("clamp_pixels", v)?;
        }
        if let Some(v) = get("out") {
            c.out = (v != "-").then(|| PathBuf::from(v));
        }

        let synthetic_only = ["synthetic", "synthetic_seed", "frames"];
        match get("input") {
            Some(path) => {
                if let Some(k) = synthetic_only.iter().find(|k| map.contains_key(**k)) {
                    return Err(Error::config(*k, "cannot be combined with `input`"));
                }
                c.source = Source::File(PathBuf::from(path));
            }
            None => {
                let Source::Synthetic { mut kind, mut seed, .. } = c.source else {
                    unreachable!("default source is synthetic")
                };
                if let Some(v) = get("synthetic") {
                    kind = v.parse().map_err(|e: Error| Error::config("synthetic", e.to_string()))?;
                }
                if let Some(v) = get("synthetic_seed") {
                    seed = parse_one("synthetic_seed", v)?;
                }
                let frames = match get("frames") {
                    Some(v) => parse_one("frames", v)?,
                    None => c.gop_size,
                };
                c.source = Source::Synthetic { kind, seed, frames };
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require("width", self.width > 0, "must be positive")?;
        require("height", self.height > 0, "must be positive")?;
        require("gop", self.gop_size > 0, "must be at least 1")?;
        require("chunks_per_side", self.chunks_per_side > 0, "must be at least 1")?;
        require(
            "chunks_per_side",
            self.width % self.chunks_per_side == 0 && self.height % self.chunks_per_side == 0,
            &format!("must divide the frame size {}x{}", self.width, self.height),
        )?;
        require(
            "beta",
            self.betas.iter().all(|b| *b > 0.0 && *b <= 1.0),
            "every value must lie in (0, 1]",
        )?;
        require("snr", self.snr_db.iter().all(|s| s.is_finite()), "values must be finite")?;
        require("eta", self.eta > 0.0 && self.eta.is_finite(), "must be positive")?;
        for (key, (lo, hi)) in [("near_radii", self.near_radii), ("far_radii", self.far_radii)] {
            require(key, lo >= 0.0 && hi >= lo && hi.is_finite(), "need 0 <= inner <= outer")?;
        }
        require("users_per_zone", self.users_per_zone > 0, "must be at least 1")?;
        require("p_chunk", self.p_chunk > 0.0 && self.p_chunk.is_finite(), "must be positive")?;
        require(
            "distance_unit_m",
            self.distance_unit_m > 0.0 && self.distance_unit_m.is_finite(),
            "must be positive",
        )?;
        if let Source::Synthetic { frames, .. } = self.source {
            require("frames", frames >= self.gop_size, "must be at least one GOP")?;
        }
        Ok(())
    }

    pub fn deployment(&self) -> Deployment {
        Deployment {
            near_radii: self.near_radii,
            far_radii: self.far_radii,
            users_per_zone: self.users_per_zone,
            eta: self.eta,
            distance_unit_m: self.distance_unit_m,
        }
    }

    pub fn sweep(&self) -> Sweep {
        Sweep {
            schemes: self.schemes.clone(),
            snr_db: self.snr_db.clone(),
            betas: self.betas.clone(),
            seeds: self.seeds.clone(),
            chunks_per_side: self.chunks_per_side,
            p_chunk: self.p_chunk,
            deployment: self.deployment(),
            clamp_pixels: self.clamp_pixels,
            exhaustive_cap: self.exhaustive_cap,
        }
    }

    /// Loads or generates the configured video.
    pub fn load_video(&self) -> Result<Vec<Gop>> {
        let gops = match &self.source {
            Source::File(path) => video_io::load_raw_video(path, self.width, self.height, self.gop_size)?,
            Source::Synthetic { kind, seed, frames } => {
                video_io::synthetic_video(*kind, self.width, self.height, *frames, self.gop_size, *seed)?
            }
        };
        if gops.is_empty() {
            return Err(Error::input("the video holds no complete GOP"));
        }
        Ok(gops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = Config::from_map(&BTreeMap::new()).unwrap();
        assert_eq!(c.betas, vec![0.5]);
        assert_eq!(c.gop_size, 4);
        assert_eq!(c.chunks_per_side, 8);
        assert_eq!(c.eta, 2.0);
        assert_eq!(c.near_radii, (100.0, 500.0));
        assert_eq!(c.far_radii, (500.0, 900.0));
        assert_eq!(c.users_per_zone, 5);
        assert_eq!((c.width, c.height), (352, 288));
        assert!(matches!(c.source, Source::Synthetic { kind: SyntheticKind::MovingPattern, .. }));
    }

    #[test]
    fn beta_is_range_checked() {
        for bad in ["0", "-0.5", "1.5", "x"] {
            match Config::from_map(&map(&[("beta", bad)])).unwrap_err() {
                Error::Config { key, .. } => assert_eq!(key, "beta"),
                e => panic!("unexpected {e}"),
            }
        }
        assert_eq!(Config::from_map(&map(&[("beta", "0.25")])).unwrap().betas, vec![0.25]);
    }

    #[test]
    fn flags_override_file_values() {
        let file = parse_config_text("beta = 0.25\n# comment\nsnr = 5, 10 \n\neta=3").unwrap();
        let c = Config::resolve(&file, &map(&[("beta", "1.0")])).unwrap();
        assert_eq!(c.betas, vec![1.0]);
        assert_eq!(c.snr_db, vec![5.0, 10.0]);
        assert_eq!(c.eta, 3.0);
    }

    #[test]
    fn unknown_and_malformed_keys_are_named() {
        let Error::Config { key, .. } = parse_config_text("bogus = 1").unwrap_err() else { panic!() };
        assert_eq!(key, "bogus");
        let Error::Config { key, .. } = parse_config_text("beta").unwrap_err() else { panic!() };
        assert_eq!(key, "line 1");
        let Error::Config { key, .. } = Config::from_map(&map(&[("schemes", "softcast,ofdm")])).unwrap_err() else {
            panic!()
        };
        assert_eq!(key, "schemes");
        let Error::Config { key, .. } = Config::from_map(&map(&[("chunks_per_side", "7")])).unwrap_err() else {
            panic!()
        };
        assert_eq!(key, "chunks_per_side");
        let Error::Config { key, .. } =
            Config::from_map(&map(&[("input", "a.y"), ("synthetic", "gradient")])).unwrap_err()
        else {
            panic!()
        };
        assert_eq!(key, "synthetic");
    }

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("1,4,7..=9,20..22").unwrap(), vec![1, 4, 7, 8, 9, 20, 21]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("a..3").is_err());
    }

    #[test]
    fn synthetic_frames_default_to_one_gop() {
        let c = Config::from_map(&map(&[("gop", "8")])).unwrap();
        assert!(matches!(c.source, Source::Synthetic { frames: 8, .. }));
        let c = Config::from_map(&map(&[("frames", "12"), ("synthetic", "constant:40")])).unwrap();
        assert_eq!(c.load_video().unwrap().len(), 3);
        assert!(Config::from_map(&map(&[("frames", "2")])).is_err());
    }
}
