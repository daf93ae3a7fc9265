//! Plain `key = value` study configuration files. Blank lines and text after
//! `#` are ignored.
//!
//! ```text
//! dimension = 1
//! degree = 2
//! form = stiffness          # mass | stiffness | adr
//! perturbation = single-node
//! point = 0.25
//! fraction = 0.25
//! u = sin
//! n0 = 8
//! levels = 6
//! norms = H1 L2
//! eta = inf
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forms::BilinearFormSpec;
use crate::function::FunctionSpec;
use crate::mesh::Diagonal;
use crate::norms::NormSpec;
use crate::study::{Perturbation, StudyConfig};
use crate::theory::{Delta, RateInputs};

pub const KEYS: &[&str] = &[
    "dimension",
    "degree",
    "form",
    "kappa",
    "velocity",
    "perturbation",
    "point",
    "fraction",
    "u",
    "n0",
    "levels",
    "norms",
    "gamma",
    "eta",
    "delta",
    "mu",
    "nu",
    "q",
    "diagonal",
];

struct Entry {
    line: usize,
    value: String,
}

struct Entries(HashMap<String, Entry>);

impl Entries {
    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.0.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|e| e.value.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| self.err(key, "missing required key"))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("`{v}` is not a valid number"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            Some("inf") | Some("infinity") | Some("∞") => Ok(Some(f64::INFINITY)),
            _ => self.number(key),
        }
    }

    fn point(&self, key: &str) -> Result<Option<[f64; 2]>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| self.err(key, format!("`{s}` is not a valid number")))
        };
        match parts.as_slice() {
            [x] => Ok(Some([parse(x)?, 0.0])),
            [x, y] => Ok(Some([parse(x)?, parse(y)?])),
            _ => Err(self.err(key, "expected `x` or `x, y`")),
        }
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            key: content.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Parse {
                line,
                key,
                message: "unknown key".into(),
            });
        }
        if map.contains_key(&key) {
            return Err(Error::Parse {
                line,
                key,
                message: "key given twice".into(),
            });
        }
        map.insert(
            key,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    Ok(Entries(map))
}

/// Parses a configuration file's contents into a study configuration.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let e = tokenize(text)?;
    let dimension: usize = e.number("dimension")?.ok_or_else(|| e.err("dimension", "missing required key"))?;
    if !(1..=2).contains(&dimension) {
        return Err(e.err("dimension", "must be 1 or 2"));
    }
    let degree: usize = e.number("degree")?.ok_or_else(|| e.err("degree", "missing required key"))?;
    if !(1..=2).contains(&degree) {
        return Err(e.err("degree", "must be 1 or 2"));
    }

    let form = match e.required("form")?.to_ascii_lowercase().as_str() {
        "mass" => BilinearFormSpec::Mass,
        "stiffness" => BilinearFormSpec::Stiffness,
        "adr" => {
            let kappa = e.real("kappa")?.unwrap_or(1.0);
            if !(kappa >= 0.0) || !kappa.is_finite() {
                return Err(e.err("kappa", "must be a nonnegative number"));
            }
            let v = e.point("velocity")?.unwrap_or([0.0, 0.0]);
            BilinearFormSpec::adr(kappa, move |_| v)
        }
        other => return Err(e.err("form", format!("unknown form `{other}`"))),
    };

    let fraction = e.real("fraction")?.unwrap_or(0.25);
    if !fraction.is_finite() {
        return Err(e.err("fraction", "must be finite"));
    }
    let perturbation = match e.raw("perturbation").unwrap_or("none").to_ascii_lowercase().as_str() {
        "none" => Perturbation::None,
        "single-node" => {
            let default = if dimension == 1 { [0.25, 0.0] } else { [0.25, 0.25] };
            Perturbation::SingleNode {
                point: e.point("point")?.unwrap_or(default),
                fraction,
            }
        }
        "boundary-band" => Perturbation::BoundaryBand { fraction },
        "shifted-second-node" => Perturbation::ShiftedSecondNode { fraction },
        other => return Err(e.err("perturbation", format!("unknown perturbation `{other}`"))),
    };

    let u_name = e.raw("u").unwrap_or("sin");
    let u = FunctionSpec::by_name(u_name, dimension).map_err(|err| e.err("u", err.to_string()))?;

    let mut cfg = StudyConfig::new(dimension, degree, form, u);
    cfg.perturbation = perturbation;
    if let Some(n0) = e.number("n0")? {
        cfg.n0 = n0;
    }
    if let Some(levels) = e.number("levels")? {
        cfg.levels = levels;
    }
    if cfg.levels < 2 {
        return Err(e.err("levels", "at least two levels are needed"));
    }
    if cfg.n0 < 2 {
        return Err(e.err("n0", "must be at least 2"));
    }
    if let Some(list) = e.raw("norms") {
        cfg.norms = list
            .split(|c: char| c.is_whitespace() || c == ';')
            .filter(|s| !s.is_empty())
            .map(NormSpec::parse)
            .collect::<Result<_>>()
            .map_err(|err| e.err("norms", err.to_string()))?;
        if cfg.norms.is_empty() {
            return Err(e.err("norms", "no norms listed"));
        }
    }
    if let Some(d) = e.raw("diagonal") {
        cfg.diagonal = match d.to_ascii_lowercase().as_str() {
            "forward" => Diagonal::Forward,
            "backward" => Diagonal::Backward,
            other => return Err(e.err("diagonal", format!("unknown diagonal `{other}`"))),
        };
    }

    let delta = match e.real("delta")? {
        None => Delta::Infinite,
        Some(d) if d.is_infinite() => Delta::Infinite,
        Some(d) if d >= 0.0 => Delta::Finite(d),
        Some(_) => return Err(e.err("delta", "must be nonnegative")),
    };
    if !delta.is_infinite() {
        cfg.form_plus = Some(BilinearFormSpec::mass_perturbed(cfg.form.clone(), delta));
    }
    let rates = RateInputs {
        gamma: e.real("gamma")?.unwrap_or(cfg.perturbation.nominal_gamma(dimension)),
        eta: e.real("eta")?.unwrap_or(f64::INFINITY),
        delta,
        mu: e.number("mu")?.unwrap_or(0),
        nu: e.number("nu")?.unwrap_or(0),
        s: cfg.form.order(),
        r: degree + 1,
        log_factor: false,
        q: e.real("q")?,
    };
    rates.validate().map_err(|err| {
        let key = ["gamma", "eta", "delta", "mu", "nu", "q"]
            .into_iter()
            .find(|k| err.to_string().contains(k))
            .unwrap_or("gamma");
        e.err(key, err.to_string())
    })?;
    rates
        .check_q_embedding(dimension)
        .map_err(|err| e.err("q", err.to_string()))?;
    cfg.rate_inputs = Some(rates);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<StudyConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let cfg = parse_config(
            "# elliptic projection\n\
             dimension = 1\n\
             degree = 2\n\
             form = stiffness\n\
             perturbation = single-node   # node nearest 1/4\n\
             point = 0.25\n\
             fraction = 0.25\n\
             u = sin\n\
             n0 = 8\n\
             levels = 6\n\
             norms = H1 L2\n\
             gamma = 1\n\
             eta = inf\n",
        )
        .unwrap();
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.norms, vec![NormSpec::h1(), NormSpec::l2()]);
        assert_eq!(
            cfg.perturbation,
            Perturbation::SingleNode {
                point: [0.25, 0.0],
                fraction: 0.25
            }
        );
        let r = cfg.rate_inputs.unwrap();
        assert_eq!((r.gamma, r.s, r.r), (1.0, 1, 3));
        assert!(r.eta.is_infinite());
    }

    fn parse_err(text: &str) -> (usize, String) {
        match parse_config(text) {
            Err(Error::Parse { line, key, .. }) => (line, key),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_key_and_line() {
        let base = "dimension = 1\ndegree = 1\nform = mass\n";
        assert_eq!(parse_err(&format!("{base}levels = 1\n")), (4, "levels".into()));
        assert_eq!(parse_err(&format!("{base}\ncolour = red\n")), (5, "colour".into()));
        assert_eq!(parse_err(&format!("{base}n0 = x\n")), (4, "n0".into()));
        assert_eq!(parse_err("dimension = 3\n"), (1, "dimension".into()));
        assert_eq!(parse_err("dimension = 1\nform = mass\n"), (0, "degree".into()));
        assert_eq!(parse_err(&format!("{base}form = mass\n")), (4, "form".into()));
        assert_eq!(parse_err(&format!("{base}norms = L7\n")), (4, "norms".into()));
        assert_eq!(parse_err(&format!("{base}eta = 1\n")), (4, "eta".into()));
        assert_eq!(parse_err("just text\n"), (1, "just text".into()));
    }

    #[test]
    fn adr_and_delta() {
        let cfg = parse_config(
            "dimension = 2\ndegree = 1\nform = adr\nkappa = 2\nvelocity = 1, 0.5\ndelta = 1\nperturbation = boundary-band\n",
        )
        .unwrap();
        assert!(cfg.form_plus.is_some());
        let r = cfg.rate_inputs.unwrap();
        assert_eq!(r.gamma, 1.0);
        assert_eq!(r.delta, Delta::Finite(1.0));
    }
}
