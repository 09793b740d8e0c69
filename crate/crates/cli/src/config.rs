use std::path::Path;

use piezo_lab_core::{BeamParameters, Preset};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Violation};

/// Fully resolved experiment configuration. Every key is optional in the
/// file; missing keys take the defaults below and the resolved value is
/// echoed into each output's metadata block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub params: BeamParameters,
    pub n_elements: usize,
    /// `None` selects `h / (2 c_max)`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub record_every: usize,
    pub initial_condition: Preset,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
    pub fit_band: [f64; 2],
    pub n_list: Vec<usize>,
    pub window: [f64; 2],
    pub identity_lambda: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: BeamParameters::default(),
            n_elements: 100,
            dt: None,
            t_end: 50.0,
            record_every: 1,
            initial_condition: Preset::GaussianVelocity,
            lambda_min: 1.0,
            lambda_max: 60.0,
            lambda_points: 600,
            fit_band: [10.0, 60.0],
            n_list: vec![50, 100, 200, 400],
            window: [10.0, 200.0],
            identity_lambda: 5.0,
            seed: 0,
        }
    }
}

struct Reader<'a> {
    violations: &'a mut Vec<Violation>,
}

impl Reader<'_> {
    fn bad(&mut self, key: &str, message: impl Into<String>) {
        self.violations.push(Violation::new(key, message));
    }

    fn float(&mut self, key: &str, v: &Value, slot: &mut f64) {
        match v.as_f64() {
            Some(x) => *slot = x,
            None => self.bad(key, "expected a number"),
        }
    }

    fn count(&mut self, key: &str, v: &Value, slot: &mut usize) {
        match v.as_u64().and_then(|x| usize::try_from(x).ok()) {
            Some(x) => *slot = x,
            None => self.bad(key, "expected a non-negative integer"),
        }
    }

    fn pair(&mut self, key: &str, v: &Value, slot: &mut [f64; 2]) {
        match v
            .as_array()
            .map(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
        {
            Some(Some(a)) if a.len() == 2 => *slot = [a[0], a[1]],
            _ => self.bad(key, "expected an array of two numbers"),
        }
    }
}

/// Parses a config document, collecting every unknown key, type error and
/// constraint violation before failing.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config(vec![Violation::new("", format!("malformed JSON: {e}"))]))?;
    let Value::Object(obj) = root else {
        return Err(CliError::config(vec![Violation::new(
            "",
            "config must be a JSON object",
        )]));
    };
    from_map(&obj)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config(vec![Violation::new(
            "",
            format!("cannot read {}: {e}", path.display()),
        )])
    })?;
    parse_config(&text)
}

fn from_map(obj: &Map<String, Value>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    let mut violations = Vec::new();
    let mut r = Reader {
        violations: &mut violations,
    };
    if obj.contains_key("L") && obj.contains_key("length") {
        r.bad("length", "duplicate of \"L\"");
    }
    for (key, v) in obj {
        let p = &mut cfg.params;
        match key.as_str() {
            "rho" => r.float(key, v, &mut p.rho),
            "mu" => r.float(key, v, &mut p.mu),
            "alpha1" => r.float(key, v, &mut p.alpha1),
            "beta" => r.float(key, v, &mut p.beta),
            "gamma" => r.float(key, v, &mut p.gamma),
            "xi1" => r.float(key, v, &mut p.xi1),
            "xi2" => r.float(key, v, &mut p.xi2),
            "m1" => r.float(key, v, &mut p.m1),
            "m2" => r.float(key, v, &mut p.m2),
            "L" | "length" => r.float(key, v, &mut p.length),
            "n_elements" => r.count(key, v, &mut cfg.n_elements),
            "dt" => {
                if v.is_null() {
                    cfg.dt = None;
                } else {
                    let mut dt = 0.0;
                    r.float(key, v, &mut dt);
                    cfg.dt = Some(dt);
                }
            }
            "t_end" => r.float(key, v, &mut cfg.t_end),
            "record_every" => r.count(key, v, &mut cfg.record_every),
            "initial_condition" => match v.as_str().map(str::parse::<Preset>) {
                Some(Ok(preset)) => cfg.initial_condition = preset,
                _ => {
                    let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                    r.bad(key, format!("expected one of {}", names.join(", ")));
                }
            },
            "lambda_min" => r.float(key, v, &mut cfg.lambda_min),
            "lambda_max" => r.float(key, v, &mut cfg.lambda_max),
            "lambda_points" => r.count(key, v, &mut cfg.lambda_points),
            "fit_band" => r.pair(key, v, &mut cfg.fit_band),
            "window" => r.pair(key, v, &mut cfg.window),
            "n_list" => match v.as_array().map(|a| {
                a.iter()
                    .map(|x| x.as_u64().and_then(|x| usize::try_from(x).ok()))
                    .collect::<Option<Vec<_>>>()
            }) {
                Some(Some(list)) => cfg.n_list = list,
                _ => r.bad(key, "expected an array of non-negative integers"),
            },
            "identity_lambda" => r.float(key, v, &mut cfg.identity_lambda),
            "seed" => match v.as_u64() {
                Some(s) => cfg.seed = s,
                None => r.bad(key, "expected a non-negative integer"),
            },
            _ => r.bad(key, "unknown key"),
        }
    }
    // Keys with a type error kept their defaults; do not report them twice.
    for v in cfg.violations() {
        if !violations.iter().any(|w| w.key == v.key) {
            violations.push(v);
        }
    }
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::config(violations))
    }
}

impl ExperimentConfig {
    /// Every constraint violated by the resolved values.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Err(piezo_lab_core::Error::InvalidParameters(list)) = self.params.validate() {
            for msg in list {
                let key = msg.split_whitespace().next().unwrap_or("").to_string();
                out.push(Violation::new(&key, msg));
            }
        }
        let mut bad = |key: &str, msg: &str| out.push(Violation::new(key, msg));
        if self.n_elements < 2 {
            bad("n_elements", "n_elements must be ≥ 2");
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                bad("dt", "dt must be > 0");
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            bad("t_end", "t_end must be > 0");
        }
        if self.record_every == 0 {
            bad("record_every", "record_every must be ≥ 1");
        }
        if !(self.lambda_min.is_finite() && self.lambda_min > 0.0) {
            bad("lambda_min", "lambda_min must be > 0");
        }
        if !(self.lambda_max.is_finite() && self.lambda_max > self.lambda_min) {
            bad("lambda_max", "lambda_max must exceed lambda_min");
        }
        if self.lambda_points < 2 {
            bad("lambda_points", "lambda_points must be ≥ 2");
        }
        for (key, [lo, hi]) in [("fit_band", self.fit_band), ("window", self.window)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
                bad(key, &format!("{key} must satisfy 0 < lo < hi"));
            }
        }
        if self.n_list.is_empty()
            || self.n_list.iter().any(|&n| n < 2)
            || self.n_list.windows(2).any(|w| w[1] <= w[0])
        {
            bad(
                "n_list",
                "n_list must be a non-empty increasing list of integers ≥ 2",
            );
        }
        if !(self.identity_lambda.is_finite() && self.identity_lambda >= 0.0) {
            bad("identity_lambda", "identity_lambda must be ≥ 0");
        }
        out
    }

    /// Warnings for allowed but degenerate parameter values.
    pub fn warnings(&self) -> Vec<String> {
        self.params.validate().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(err: CliError) -> Vec<String> {
        match err {
            CliError::Config(v) => v.into_iter().map(|v| v.key).collect(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config(r#"{"n_elements": 100, "t_end": 50}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.params, BeamParameters::default());
    }

    #[test]
    fn empty_object_is_default() {
        assert_eq!(parse_config("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn negative_density_names_rho() {
        assert_eq!(keys(parse_config(r#"{"rho": -1}"#).unwrap_err()), ["rho"]);
    }

    #[test]
    fn unknown_key_is_named() {
        assert_eq!(
            keys(parse_config(r#"{"rho_typo": 1}"#).unwrap_err()),
            ["rho_typo"]
        );
    }

    #[test]
    fn every_offending_key_is_listed() {
        let err =
            parse_config(r#"{"rho_typo": 1, "mu": "x", "window": [1], "zzz": 0, "beta": -1}"#)
                .unwrap_err();
        let mut k = keys(err);
        k.sort();
        assert_eq!(k, ["beta", "mu", "rho_typo", "window", "zzz"]);

        let err =
            parse_config(r#"{"rho": 0, "beta": -2, "xi1": -1, "n_elements": 1, "window": [5, 2]}"#)
                .unwrap_err();
        let mut k = keys(err);
        k.sort();
        assert_eq!(k, ["beta", "n_elements", "rho", "window", "xi1"]);
    }

    #[test]
    fn length_alias_and_explicit_dt() {
        let cfg = parse_config(r#"{"length": 2.0, "dt": 0.01, "initial_condition": "mode_mix"}"#)
            .unwrap();
        assert_eq!(cfg.params.length, 2.0);
        assert_eq!(cfg.dt, Some(0.01));
        assert_eq!(cfg.initial_condition, Preset::ModeMix);
        assert!(parse_config(r#"{"initial_condition": "nope"}"#).is_err());
        assert!(parse_config(r#"{"dt": 0}"#).is_err());
    }

    #[test]
    fn non_object_documents_rejected() {
        assert!(parse_config("[1, 2]").is_err());
        assert!(parse_config("{").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig {
            n_list: vec![10, 20],
            seed: 9,
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
