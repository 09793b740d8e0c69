use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Every float is written as `{:.16e}`: 17 significant digits, the same
/// bytes on every run.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Wraps a serde_json formatter, replacing its float output.
struct Fixed<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Fixed<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed(CompactFormatter));
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Descriptive identifiers of the formulas a command evaluates.
pub fn formulas(command: &str) -> BTreeMap<&'static str, &'static str> {
    const ENERGY: (&str, &str) = (
        "energy",
        "E = 1/2 int(rho Phi^2 + alpha1 V_x^2 + mu Theta^2 + beta (gamma V_x - P_x)^2) dx + m1 u^2/2 + m2 eta^2/2",
    );
    const DISCRETE: (&str, &str) = (
        "discretization",
        "piecewise-linear elements on a uniform mesh, clamped node eliminated, tip masses and feedback gains on the last node",
    );
    const GENERATOR: (&str, &str) = (
        "generator",
        "A = [[0, I], [-M^-1 K, -M^-1 D]] with energy weight W = blockdiag(K, M)",
    );
    const CUTOFF: (&str, &str) = ("frequency_cutoff", "|Im z| <= 0.5 (pi / h) c_min");
    let mut m = BTreeMap::new();
    let mut add = |pairs: &[(&'static str, &'static str)]| {
        for (k, v) in pairs {
            m.insert(*k, *v);
        }
    };
    add(&[DISCRETE]);
    match command {
        "simulate" => add(&[
            ENERGY,
            ("integrator", "implicit midpoint"),
            (
                "energy_balance",
                "E(k+1) - E(k) = -dt (xi1 u_mid^2 + xi2 eta_mid^2)",
            ),
        ]),
        "spectrum" | "abscissa-trend" => add(&[
            GENERATOR,
            CUTOFF,
            (
                "spectral_abscissa",
                "max Re z over the spectrum of R A R^-1, W = R^T R",
            ),
            (
                "branch_fit",
                "least squares of log(-Re z) against log(Im z) over eigenvalues in band",
            ),
        ]),
        "resolvent" => add(&[
            GENERATOR,
            CUTOFF,
            (
                "resolvent_norm",
                "||(i lambda - A)^-1||_W = 1 / sigma_min(i lambda - R A R^-1)",
            ),
            (
                "growth_fit",
                "least squares of log norm against log lambda over refined local maxima",
            ),
        ]),
        "decay" => add(&[
            ENERGY,
            ("integrator", "implicit midpoint"),
            (
                "decay_fit",
                "least squares of log E against log t over the window, log-time weighted",
            ),
            ("tail_guard", "t1 <= 1 / (2 |spectral abscissa|)"),
        ]),
        "multiplier-check" => add(&[
            ENERGY,
            ("integrator", "implicit midpoint"),
            (
                "multiplier",
                "|int (q(b) I(b) - q(a) I(a)) dt - q' int E1 dt| <= M (E1(T) + E1(0)), q(x) = x/L",
            ),
            (
                "multiplier_constant",
                "M = 2 max|q| max{rho, (1 + 2 gamma^2)/alpha1, mu, 2/beta}",
            ),
        ]),
        "resolvent-identity" => add(&[
            GENERATOR,
            (
                "resolvent_identity",
                "I_V + I_P - N^2 + R1 + R2 = 0 with q(x) = x",
            ),
            ("resolvent_estimate", "N^2 <= C (I_V + I_P + ||F||^2)"),
            (
                "boundary_dissipation",
                "xi1 |u|^2 + xi2 |eta|^2 <= ||U||_W ||F||_W",
            ),
        ]),
        "static-solve" => add(&[
            GENERATOR,
            ("static_problem", "A U = F: v = f_q, K q = -load - D f_q"),
        ]),
        "verify" => add(&[
            ENERGY,
            GENERATOR,
            ("integrator", "implicit midpoint"),
            ("dissipativity", "Re <A x, x>_W = -xi1 u^2 - xi2 eta^2"),
        ]),
        _ => {}
    }
    m
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
    pub warnings: Vec<String>,
    pub formulas: BTreeMap<&'static str, &'static str>,
}

impl<'a> Metadata<'a> {
    pub fn new(command: &'a str, config: &'a ExperimentConfig) -> Self {
        Self {
            artifact: "piezo-lab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            warnings: config.warnings(),
            formulas: formulas(command),
        }
    }
}

/// `{"metadata": ..., <fields of body>}` as pretty JSON.
pub fn json_report<T: Serialize>(meta: &Metadata, body: &T) -> String {
    let mut v = serde_json::Map::new();
    v.insert(
        "metadata".into(),
        serde_json::to_value(meta).expect("metadata serializes"),
    );
    match serde_json::to_value(body).expect("report serializes") {
        Value::Object(fields) => v.extend(fields),
        other => {
            v.insert("report".into(), other);
        }
    }
    // Values went through serde_json::Value, which keeps f64 bit-exact.
    to_json_pretty(&Value::Object(v))
}

/// CSV text: one `# {json}` metadata line, the header, then rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(meta: &Metadata, extra: Option<&Value>, header: &[&str]) -> Self {
        let mut m = serde_json::to_value(meta).expect("metadata serializes");
        if let (Value::Object(map), Some(Value::Object(more))) = (&mut m, extra) {
            map.extend(more.clone());
        }
        let mut text = format!("# {}\n", to_json_line(&m));
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Writes to `out`, or stdout when no path was given.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

/// Splits a CSV produced by [`Csv`] into metadata, header and numeric rows.
pub fn read_csv(text: &str) -> Result<(Option<Value>, Vec<String>, Vec<Vec<f64>>), String> {
    let mut meta = None;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if meta.is_none() {
                meta = serde_json::from_str(rest.trim()).ok();
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match &header {
            None => header = Some(line.split(',').map(|s| s.trim().to_string()).collect()),
            Some(h) => {
                let row = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format!("line {}: {e}", i + 1))?;
                if row.len() != h.len() {
                    return Err(format!(
                        "line {}: expected {} columns, found {}",
                        i + 1,
                        h.len(),
                        row.len()
                    ));
                }
                rows.push(row);
            }
        }
    }
    let header = header.ok_or("missing CSV header")?;
    Ok((meta, header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(
            to_json_line(&json!({"a": 0.5, "b": [1, 2.25]})),
            r#"{"a":5.0000000000000000e-1,"b":[1,2.2500000000000000e0]}"#
        );
    }

    #[test]
    fn formatted_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
            let v: Value = serde_json::from_str(&to_json_line(&x)).unwrap();
            assert_eq!(v.as_f64().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ExperimentConfig::default();
        let meta = Metadata::new("simulate", &cfg);
        let mut csv = Csv::new(&meta, Some(&json!({"dt": 0.25})), &["a", "b"]);
        csv.row(&[fmt_f64(1.0), fmt_f64(0.1)]);
        let text = csv.finish();
        assert!(text.starts_with("# {"));
        let (m, h, rows) = read_csv(&text).unwrap();
        let m = m.unwrap();
        assert_eq!(m["command"], "simulate");
        assert_eq!(m["dt"].as_f64(), Some(0.25));
        assert_eq!(m["config"]["n_elements"], 100);
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, vec![vec![1.0, 0.1]]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_csv("a,b\n1,2\n3\n").is_err());
        assert!(read_csv("# {}\n").is_err());
    }

    #[test]
    fn formula_ids_have_no_blank_entries() {
        for cmd in [
            "simulate",
            "spectrum",
            "resolvent",
            "abscissa-trend",
            "decay",
            "multiplier-check",
            "resolvent-identity",
            "static-solve",
            "verify",
        ] {
            let f = formulas(cmd);
            assert!(f.len() >= 2, "{cmd}");
            assert!(f.values().all(|v| !v.is_empty()));
        }
    }
}
