//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::CliError;

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// Integer at least `min`.
    Int(u64),
    /// Finite real in `[lo, hi]`, endpoints excluded where flagged.
    Real {
        lo: f64,
        hi: f64,
        open_lo: bool,
        open_hi: bool,
    },
    /// Real at least 1, or `inf`.
    NormIndex,
    Choice(&'static [&'static str]),
    /// Comma-separated integers at least 1.
    Ints,
    /// Comma-separated finite reals.
    Reals,
    /// Points separated by `;`, coordinates by `,`.
    Points,
    /// `+`/`-` string or comma-separated ±1.
    Signs,
    Text,
}

const POS: Kind = Kind::Real {
    lo: 0.0,
    hi: f64::MAX,
    open_lo: true,
    open_hi: false,
};
const NONNEG: Kind = Kind::Real {
    lo: 0.0,
    hi: f64::MAX,
    open_lo: false,
    open_hi: false,
};
const ANY: Kind = Kind::Real {
    lo: f64::MIN,
    hi: f64::MAX,
    open_lo: false,
    open_hi: false,
};
const CLASSIFIERS: &[&str] = &["lp", "sieve", "constant0", "constant1", "bayes"];

const KEYS: &[(&str, Kind)] = &[
    ("seed", Kind::Int(0)),
    (
        "oracle.kind",
        Kind::Choice(&["parabola", "corridor", "hypercube", "hypercube_schedule"]),
    ),
    ("oracle.d", Kind::Int(1)),
    ("oracle.coef", POS),
    ("oracle.radius", POS),
    (
        "oracle.t0",
        Kind::Real {
            lo: 0.0,
            hi: 0.5,
            open_lo: true,
            open_hi: true,
        },
    ),
    (
        "oracle.gap",
        Kind::Real {
            lo: 0.0,
            hi: 2.0,
            open_lo: true,
            open_hi: true,
        },
    ),
    ("oracle.q", Kind::Int(1)),
    ("oracle.m", Kind::Int(1)),
    (
        "oracle.w",
        Kind::Real {
            lo: 0.0,
            hi: 1.0,
            open_lo: true,
            open_hi: false,
        },
    ),
    ("oracle.beta", POS),
    ("oracle.lip", POS),
    ("oracle.alpha", NONNEG),
    ("oracle.mode", Kind::Choice(&["strong", "mild"])),
    ("oracle.sigma", Kind::Signs),
    ("oracle.c_phi", POS),
    ("oracle.c_q", POS),
    ("oracle.c_w", POS),
    ("oracle.c_m", POS),
    ("synth.n", Kind::Int(1)),
    ("lp.beta", POS),
    ("lp.kernel", Kind::Choice(&["gaussian", "uniform"])),
    ("lp.kernel_radius", POS),
    ("lp.h", POS),
    ("lp.h_c", POS),
    ("lp.h_exponent", NONNEG),
    ("sieve.alpha", NONNEG),
    ("sieve.rho", POS),
    ("sieve.p", Kind::NormIndex),
    ("sieve.c_eps", POS),
    ("sieve.beta", POS),
    ("sieve.lip", POS),
    ("sieve.d", Kind::Int(1)),
    ("sieve.lo", ANY),
    ("sieve.hi", ANY),
    ("sieve.epsilon", POS),
    ("sieve.k", Kind::Int(1)),
    ("sieve.tau", POS),
    ("sieve.budget", Kind::Int(1)),
    ("sieve.n", Kind::Int(1)),
    ("fit.data", Kind::Text),
    ("fit.classifier", Kind::Choice(&["lp", "sieve"])),
    ("fit.grid_lo", ANY),
    ("fit.grid_hi", ANY),
    ("fit.grid_points", Kind::Int(1)),
    ("sweep.classifier", Kind::Choice(CLASSIFIERS)),
    ("sweep.n_grid", Kind::Ints),
    ("sweep.replicates", Kind::Int(1)),
    ("sweep.mc", Kind::Int(1)),
    (
        "sweep.theory",
        Kind::Choice(&["strong", "mild", "sieve_inf", "sieve_p"]),
    ),
    (
        "probe.kind",
        Kind::Choice(&["concentration", "exponential", "assouad"]),
    ),
    ("probe.classifier", Kind::Choice(CLASSIFIERS)),
    ("probe.x", Kind::Points),
    ("probe.delta", Kind::Reals),
    ("probe.n_grid", Kind::Ints),
    ("probe.n", Kind::Int(3)),
    ("probe.reps", Kind::Int(1)),
    ("probe.mc", Kind::Int(1)),
    ("out.name", Kind::Text),
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

fn parse_real(v: &str) -> Option<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn check(key: &str, value: &str) -> Result<(), CliError> {
    let kind = kind_of(key).ok_or_else(|| CliError::Usage(format!("unknown key `{key}`")))?;
    let bad = |what: &str| {
        Err(CliError::Usage(format!(
            "key `{key}`: `{value}` is not {what}"
        )))
    };
    match kind {
        Kind::Int(min) => match value.parse::<u64>() {
            Ok(v) if v >= min => Ok(()),
            _ => bad(&format!("an integer ≥ {min}")),
        },
        Kind::Real {
            lo,
            hi,
            open_lo,
            open_hi,
        } => match parse_real(value) {
            Some(v) if (v > lo || (!open_lo && v == lo)) && (v < hi || (!open_hi && v == hi)) => {
                Ok(())
            }
            _ => bad(&format!(
                "a real in {}{lo}, {hi}{}",
                if open_lo { "(" } else { "[" },
                if open_hi { ")" } else { "]" }
            )),
        },
        Kind::NormIndex => match value {
            "inf" => Ok(()),
            _ => match parse_real(value) {
                Some(v) if v >= 1.0 => Ok(()),
                _ => bad("a real ≥ 1 or `inf`"),
            },
        },
        Kind::Choice(options) => {
            if options.contains(&value) {
                Ok(())
            } else {
                bad(&format!("one of {}", options.join(", ")))
            }
        }
        Kind::Ints => match parse_ints(value) {
            Some(v) if !v.is_empty() && v.iter().all(|&x| x >= 1) => Ok(()),
            _ => bad("a comma-separated list of positive integers"),
        },
        Kind::Reals => match parse_reals(value) {
            Some(v) if !v.is_empty() => Ok(()),
            _ => bad("a comma-separated list of reals"),
        },
        Kind::Points => match parse_points(value) {
            Some(p) if !p.is_empty() && p.iter().all(|q| q.len() == p[0].len()) => Ok(()),
            _ => bad("a `;`-separated list of points of equal dimension"),
        },
        Kind::Signs => match parse_signs(value) {
            Some(s) if !s.is_empty() => Ok(()),
            _ => bad("a sign pattern such as `+-+` or `1,-1,1`"),
        },
        Kind::Text => {
            if value.is_empty() {
                bad("a nonempty string")
            } else {
                Ok(())
            }
        }
    }
}

pub(crate) fn parse_ints(v: &str) -> Option<Vec<usize>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

pub(crate) fn parse_reals(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| parse_real(s.trim())).collect()
}

pub(crate) fn parse_points(v: &str) -> Option<Vec<Vec<f64>>> {
    v.split(';').map(|p| parse_reals(p)).collect()
}

pub(crate) fn parse_signs(v: &str) -> Option<Vec<i8>> {
    if v.chars().all(|c| c == '+' || c == '-') {
        return Some(v.chars().map(|c| if c == '+' { 1 } else { -1 }).collect());
    }
    v.split(',')
        .map(|s| match s.trim() {
            "1" | "+1" => Some(1),
            "-1" => Some(-1),
            _ => None,
        })
        .collect()
}

/// Merged configuration: file entries overridden by `--set` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses the file format: `key = value` per line, `#` starts a
    /// comment, blank lines ignored, each key at most once.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", i + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if cfg.entries.contains_key(k) {
                return Err(CliError::Usage(format!(
                    "config line {}: key `{k}` given twice",
                    i + 1
                )));
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets or replaces one key after validating it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        check(key, value)?;
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{pair}`")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(kind_of(key).is_some(), "undeclared key {key}");
        self.entries.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("missing required key `{key}`")))
    }

    // values were validated on insertion, so the parses below cannot fail

    pub fn usize_req(&self, key: &str) -> Result<usize, CliError> {
        Ok(self.require(key)?.parse().expect("validated"))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> usize {
        self.get(key)
            .map_or(default, |v| v.parse().expect("validated"))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> u64 {
        self.get(key)
            .map_or(default, |v| v.parse().expect("validated"))
    }

    pub fn f64_req(&self, key: &str) -> Result<f64, CliError> {
        Ok(self.require(key)?.parse().expect("validated"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> f64 {
        self.get(key)
            .map_or(default, |v| v.parse().expect("validated"))
    }

    pub fn f64_opt(&self, key: &str) -> Option<f64> {
        self.get(key).map(|v| v.parse().expect("validated"))
    }

    /// `sieve.p`-style value: a real or `inf`.
    pub fn norm_index_or(&self, key: &str, default: f64) -> f64 {
        match self.get(key) {
            None => default,
            Some("inf") => f64::INFINITY,
            Some(v) => v.parse().expect("validated"),
        }
    }

    pub fn ints_req(&self, key: &str) -> Result<Vec<usize>, CliError> {
        Ok(parse_ints(self.require(key)?).expect("validated"))
    }

    pub fn reals_req(&self, key: &str) -> Result<Vec<f64>, CliError> {
        Ok(parse_reals(self.require(key)?).expect("validated"))
    }

    pub fn points_req(&self, key: &str) -> Result<Vec<Vec<f64>>, CliError> {
        Ok(parse_points(self.require(key)?).expect("validated"))
    }

    pub fn signs_opt(&self, key: &str) -> Option<Vec<i8>> {
        self.get(key).map(|v| parse_signs(v).expect("validated"))
    }

    /// Canonical `key=value` lines, sorted by key.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// SHA-256 of the command name and the canonical form, in hex.
    pub fn hash(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(self.canonical().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut cfg =
            RunConfig::parse("# comment\noracle.kind = parabola  # trailing\n\nsynth.n=100\n")
                .unwrap();
        assert_eq!(cfg.get("oracle.kind"), Some("parabola"));
        assert_eq!(cfg.usize_req("synth.n").unwrap(), 100);
        cfg.apply_override("synth.n=7").unwrap();
        assert_eq!(cfg.usize_req("synth.n").unwrap(), 7);
        assert_eq!(cfg.canonical(), "oracle.kind=parabola\nsynth.n=7\n");
    }

    #[test]
    fn rejects_unknown_duplicate_and_out_of_range() {
        assert!(
            matches!(RunConfig::parse("oracle.colour = red"), Err(CliError::Usage(m)) if m.contains("oracle.colour"))
        );
        assert!(RunConfig::parse("synth.n = 1\nsynth.n = 2").is_err());
        assert!(RunConfig::parse("oracle.t0 = 0.5").is_err());
        assert!(RunConfig::parse("oracle.t0 = 0").is_err());
        assert!(RunConfig::parse("synth.n = 0").is_err());
        assert!(RunConfig::parse("sieve.p = 0.5").is_err());
        assert!(RunConfig::parse("sieve.p = inf").is_ok());
        assert!(RunConfig::parse("lp.h = nan").is_err());
        assert!(RunConfig::parse("sweep.n_grid = 10,x").is_err());
        assert!(RunConfig::parse("probe.x = 0.1,0.2;0.3").is_err());
        assert!(RunConfig::parse("just text").is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_signs("+-+"), Some(vec![1, -1, 1]));
        assert_eq!(parse_signs("1,-1"), Some(vec![1, -1]));
        assert_eq!(
            parse_points("0,1;2,3"),
            Some(vec![vec![0.0, 1.0], vec![2.0, 3.0]])
        );
    }

    #[test]
    fn hash_depends_on_command_and_entries() {
        let a = RunConfig::parse("synth.n = 5").unwrap();
        let b = RunConfig::parse("synth.n = 6").unwrap();
        assert_ne!(a.hash("synth"), b.hash("synth"));
        assert_ne!(a.hash("synth"), a.hash("sweep"));
        assert_eq!(a.hash("synth").len(), 64);
        assert_eq!(
            a.hash("synth"),
            RunConfig::parse("synth.n=5").unwrap().hash("synth")
        );
    }
}
