//! Plain-text `key = value` configuration with `[section]` headers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use agar_core::codec::{Estimator, ExternalCompressor, JointCode, MixtureModelClass};
use agar_core::contrast::ContrastConfig;
use agar_core::worlds::{RegulatorKind, ThermostatParams, WorldSpec};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Contrast,
    Enumerate,
    Ctm,
    Synergy,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Estimate,
        Command::Contrast,
        Command::Enumerate,
        Command::Ctm,
        Command::Synergy,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Contrast => "contrast",
            Command::Enumerate => "enumerate",
            Command::Ctm => "ctm",
            Command::Synergy => "synergy",
            Command::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Text,
    UInt,
    Float,
    Choice(&'static [&'static str]),
    Seeds,
}

/// Keys that never change results and stay out of the fingerprint.
const UNFINGERPRINTED: [&str; 2] = ["out", "threads"];

const KEYS: &[(&str, Kind, &str)] = &[
    ("command", Kind::Choice(&["", "simulate", "estimate", "contrast", "enumerate", "ctm", "synergy", "verify"]), ""),
    ("out", Kind::Text, "out"),
    ("threads", Kind::UInt, "0"),
    ("N", Kind::UInt, "4096"),
    ("seeds", Kind::Seeds, "1..20"),
    ("world", Kind::Choice(&["thermostat", "latch", "xor", "lfsr", "constant"]), "thermostat"),
    ("world.dt", Kind::Float, "1.0"),
    ("world.tau", Kind::Float, "50.0"),
    ("world.outdoor_temp", Kind::Float, "15.0"),
    ("world.heater_gain", Kind::Float, "0.15"),
    ("world.setpoint", Kind::Float, "20.0"),
    ("world.initial_temp", Kind::Float, "20.0"),
    ("world.readout_bits", Kind::UInt, "6"),
    ("world.error_span", Kind::Float, "8.0"),
    ("world.outdoor_amplitude", Kind::Float, "2.0"),
    ("world.outdoor_period", Kind::Float, "200.0"),
    ("world.disturbance_std", Kind::Float, "0.05"),
    ("world.seed", Kind::UInt, "0"),
    ("world.watch_length", Kind::UInt, "4"),
    ("world.z_seed", Kind::UInt, "0"),
    ("world.lfsr_width", Kind::UInt, "16"),
    ("world.lfsr_taps", Kind::Text, "16,14,13,11"),
    ("world.lfsr_init", Kind::UInt, "1"),
    ("world.symbol", Kind::UInt, "0"),
    ("regulator", Kind::Choice(&["null", "constant", "bangbang", "pi", "random", "tabular"]), "null"),
    ("regulator.symbol", Kind::UInt, "1"),
    ("regulator.deadband", Kind::Float, "0.5"),
    ("regulator.kp", Kind::Float, "2.0"),
    ("regulator.ki", Kind::Float, "0.1"),
    ("regulator.quant", Kind::Float, "0.25"),
    ("regulator.seed", Kind::UInt, "0"),
    ("regulator.table", Kind::Text, "0:0,0:0"),
    ("estimator", Kind::Choice(&["lz78", "lzw", "mixture", "bdm", "external"]), "lz78"),
    ("estimator.max_order", Kind::UInt, "12"),
    ("estimator.block_length", Kind::UInt, "8"),
    ("estimator.max_program_bits", Kind::UInt, "20"),
    ("estimator.step_budget", Kind::UInt, "10000"),
    ("estimator.command", Kind::Text, ""),
    ("estimator.version", Kind::Text, ""),
    ("contrast.verdict_threshold", Kind::Float, "8.0"),
    ("contrast.permutation_iterations", Kind::UInt, "10000"),
    ("contrast.permutation_seed", Kind::UInt, "0"),
    ("enumerate.max_len", Kind::UInt, "16"),
    ("enumerate.steps", Kind::UInt, "10000"),
    ("synergy.n", Kind::UInt, "16384"),
    ("synergy.joint", Kind::Choice(&["interleaved", "concatenation"]), "interleaved"),
    ("verify.max_len", Kind::UInt, "16"),
    ("verify.steps", Kind::UInt, "10000"),
    ("verify.second_max_len", Kind::UInt, "18"),
    ("verify.counting_n", Kind::UInt, "8"),
    ("verify.chance_n", Kind::UInt, "10"),
    ("verify.chance_z_seed", Kind::UInt, "0"),
    ("verify.multiplicity_c", Kind::Float, "1.0"),
    ("verify.multiplicity_c_prime", Kind::Float, "4.0"),
    ("verify.gar_code_bits", Kind::UInt, "10"),
    ("verify.gar_horizon", Kind::UInt, "8"),
    ("verify.gar_index_len", Kind::UInt, "18"),
    ("estimate.input", Kind::Text, ""),
];

fn key_info(key: &str) -> Option<(Kind, &'static str)> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|&(_, kind, d)| (kind, d))
}

/// The closest known key, if any is reasonably close.
pub fn nearest_key(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .map(|(k, _, _)| (strsim::damerau_levenshtein(key, k), *k))
        .filter(|&(d, k)| d <= 3.max(k.len() / 3))
        .min()
        .map(|(_, k)| k)
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Flag(flag) => write!(f, "{flag}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.origin, self.message)
    }
}

fn unknown_key(key: &str, origin: Origin) -> ConfigError {
    let message = match nearest_key(key) {
        Some(k) => format!("unknown key `{key}` (did you mean `{k}`?)"),
        None => format!("unknown key `{key}`"),
    };
    ConfigError { origin, message }
}

/// Raw key/value pairs with their origins, before validation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    /// Parses config text; `path` only labels error messages.
    pub fn parse_text(text: &str, path: &str) -> (RawConfig, Vec<ConfigError>) {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_owned(),
                line: i + 1,
            };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => section = name.trim().to_owned(),
                    _ => errors.push(ConfigError {
                        origin,
                        message: format!("malformed section header `{line}`"),
                    }),
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(ConfigError {
                    origin,
                    message: format!("expected `key = value`, got `{line}`"),
                });
                continue;
            };
            let k = k.trim();
            let key = if section.is_empty() {
                k.to_owned()
            } else {
                format!("{section}.{k}")
            };
            if key_info(&key).is_none() {
                errors.push(unknown_key(&key, origin));
                continue;
            }
            let v = v.trim().trim_matches('"').to_owned();
            if let Some((_, prev)) = raw.values.get(&key) {
                errors.push(ConfigError {
                    origin,
                    message: format!("duplicate key `{key}` (first set at {prev})"),
                });
                continue;
            }
            raw.values.insert(key, (v, origin));
        }
        (raw, errors)
    }

    /// Sets a value from a command-line flag, replacing any file value.
    pub fn set(&mut self, key: &str, value: &str, flag: &str) -> Result<(), ConfigError> {
        if key_info(key).is_none() {
            return Err(unknown_key(key, Origin::Flag(flag.to_owned())));
        }
        self.values
            .insert(key.to_owned(), (value.to_owned(), Origin::Flag(flag.to_owned())));
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let flag = format!("--set {assignment}");
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(ConfigError {
                origin: Origin::Flag(flag),
                message: "expected section.key=value".into(),
            });
        };
        self.set(k.trim(), v.trim(), &flag)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Lz78,
    Lzw,
    Mixture { max_order: u8 },
    Bdm { block_length: usize, max_program_bits: u32, step_budget: u64 },
    External { command: String, version: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub max_len: u32,
    pub steps: u64,
    pub second_max_len: u32,
    pub counting_n: usize,
    pub chance_n: usize,
    pub chance_z_seed: u64,
    pub multiplicity_c: f64,
    pub multiplicity_c_prime: f64,
    pub gar_code_bits: u32,
    pub gar_horizon: usize,
    pub gar_index_len: u32,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub world: WorldSpec,
    pub regulator: RegulatorKind,
    pub horizon: usize,
    pub estimator: EstimatorSpec,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub verdict_threshold: f64,
    pub permutation_iterations: u64,
    pub permutation_seed: u64,
    pub enumerate_max_len: u32,
    pub enumerate_steps: u64,
    pub synergy_n: usize,
    pub synergy_joint: JointCode,
    pub verify: VerifySettings,
    pub estimate_input: Option<PathBuf>,
    /// SHA-256 over every resolved value except output paths and threads.
    pub fingerprint: String,
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range start `{a}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range end `{b}`"))?;
        if b < a {
            return Err(format!("empty seed range {a}..{b}"));
        }
        if b - a >= 1_000_000 {
            return Err("seed range longer than 10^6".into());
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad seed `{p}`")))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err("no seeds".into());
    }
    Ok(seeds)
}

struct Resolver<'a> {
    raw: &'a RawConfig,
    errors: Vec<ConfigError>,
}

impl Resolver<'_> {
    fn value(&self, key: &str) -> (String, Origin) {
        match self.raw.values.get(key) {
            Some((v, o)) => (v.clone(), o.clone()),
            None => {
                let (_, d) = key_info(key).expect("resolver keys are catalogued");
                (d.to_owned(), Origin::Default)
            }
        }
    }

    fn fail(&mut self, origin: Origin, message: String) {
        self.errors.push(ConfigError { origin, message });
    }

    fn text(&mut self, key: &str) -> String {
        self.value(key).0
    }

    fn num<T: std::str::FromStr + Default>(&mut self, key: &str) -> T {
        let (v, o) = self.value(key);
        match v.parse::<T>() {
            Ok(n) => n,
            Err(_) => {
                let what = match key_info(key).map(|s| s.0) {
                    Some(Kind::Float) => "a number",
                    _ => "a non-negative integer",
                };
                self.fail(o, format!("`{key}` must be {what}, got `{v}`"));
                T::default()
            }
        }
    }

    fn float(&mut self, key: &str) -> f64 {
        let (v, o) = self.value(key);
        let x: f64 = self.num(key);
        if !x.is_finite() && !v.is_empty() {
            self.fail(o, format!("`{key}` must be finite"));
        }
        x
    }

    fn choice(&mut self, key: &str) -> String {
        let (v, o) = self.value(key);
        if let Some((Kind::Choice(opts), _)) = key_info(key) {
            if !opts.contains(&v.as_str()) {
                let valid: Vec<&str> = opts.iter().copied().filter(|s| !s.is_empty()).collect();
                self.fail(o, format!("`{key}` must be one of {}, got `{v}`", valid.join(", ")));
            }
        }
        v
    }

    fn check(&mut self, key: &str, ok: bool, message: &str) {
        if !ok {
            let (_, o) = self.value(key);
            self.fail(o, format!("`{key}` {message}"));
        }
    }
}

fn fingerprint_of(raw: &RawConfig, command: Command) -> String {
    let mut h = Sha256::new();
    h.update(format!("command={}\n", command.name()));
    for (k, _, d) in KEYS {
        if *k == "command" || UNFINGERPRINTED.contains(k) {
            continue;
        }
        let v = raw.get(k).unwrap_or(d);
        h.update(format!("{k}={v}\n"));
    }
    hex::encode(h.finalize())
}

impl ExperimentConfig {
    /// Validates every value, collecting all problems instead of stopping at the first.
    pub fn resolve(raw: &RawConfig, command: Command) -> Result<Self, Vec<ConfigError>> {
        let mut r = Resolver {
            raw,
            errors: Vec::new(),
        };
        let cfg_command = r.choice("command");
        if !cfg_command.is_empty() && cfg_command != command.name() {
            let (_, o) = r.value("command");
            r.fail(o, format!("config is for `{cfg_command}`, not `{}`", command.name()));
        }
        let before = r.errors.len();
        let horizon: usize = r.num("N");
        if r.errors.len() == before {
            r.check("N", horizon >= 1, "must be at least 1");
        }
        let (seeds_text, seeds_origin) = r.value("seeds");
        let seeds = parse_seeds(&seeds_text).unwrap_or_else(|e| {
            r.fail(seeds_origin, format!("`seeds`: {e}"));
            vec![1]
        });

        let world = match r.choice("world").as_str() {
            "latch" => WorldSpec::Latch {
                watch_length: r.num("world.watch_length"),
                z_seed: r.num("world.z_seed"),
            },
            "xor" => WorldSpec::Xor { z_seed: r.num("world.z_seed") },
            "lfsr" => {
                let (taps_text, o) = r.value("world.lfsr_taps");
                let taps = taps_text
                    .split(',')
                    .map(|t| t.trim().parse::<u32>())
                    .collect::<Result<Vec<_>, _>>()
                    .unwrap_or_else(|_| {
                        r.fail(o, format!("`world.lfsr_taps` must be a comma list, got `{taps_text}`"));
                        Vec::new()
                    });
                WorldSpec::Lfsr {
                    width: r.num("world.lfsr_width"),
                    taps,
                    init: r.num("world.lfsr_init"),
                }
            }
            "constant" => WorldSpec::Constant { symbol: r.num("world.symbol") },
            _ => WorldSpec::Thermostat(ThermostatParams {
                dt: r.float("world.dt"),
                tau: r.float("world.tau"),
                outdoor_temp: r.float("world.outdoor_temp"),
                heater_gain: r.float("world.heater_gain"),
                setpoint: r.float("world.setpoint"),
                initial_temp: r.float("world.initial_temp"),
                readout_bits: r.num("world.readout_bits"),
                error_span: r.float("world.error_span"),
                outdoor_amplitude: r.float("world.outdoor_amplitude"),
                outdoor_period: r.float("world.outdoor_period"),
                disturbance_std: r.float("world.disturbance_std"),
                seed: r.num("world.seed"),
            }),
        };
        if let WorldSpec::Thermostat(p) = &world {
            if r.errors.is_empty() {
                if let Err(e) = p.validate() {
                    let (_, o) = r.value("world");
                    r.fail(o, format!("thermostat: {e}"));
                }
            }
        }
        if let WorldSpec::Latch { watch_length, .. } = &world {
            let ok = *watch_length >= 1 && *watch_length <= horizon;
            r.check("world.watch_length", ok, "must be in [1, N]");
        }

        let regulator = match r.choice("regulator").as_str() {
            "constant" => RegulatorKind::Constant { symbol: r.num("regulator.symbol") },
            "bangbang" => RegulatorKind::BangBang { deadband: r.float("regulator.deadband") },
            "pi" => RegulatorKind::Pi {
                kp: r.float("regulator.kp"),
                ki: r.float("regulator.ki"),
                quant: r.float("regulator.quant"),
            },
            "random" => RegulatorKind::Random { seed: r.num("regulator.seed") },
            "tabular" => RegulatorKind::Tabular { table: r.text("regulator.table") },
            _ => RegulatorKind::Null,
        };

        let estimator = match r.choice("estimator").as_str() {
            "lzw" => EstimatorSpec::Lzw,
            "mixture" => {
                let d: u8 = r.num("estimator.max_order");
                r.check("estimator.max_order", d <= 12, "must be at most 12");
                EstimatorSpec::Mixture { max_order: d }
            }
            "bdm" => EstimatorSpec::Bdm {
                block_length: r.num("estimator.block_length"),
                max_program_bits: r.num("estimator.max_program_bits"),
                step_budget: r.num("estimator.step_budget"),
            },
            "external" => {
                let command = r.text("estimator.command");
                r.check("estimator.command", !command.trim().is_empty(), "must be set for the external estimator");
                EstimatorSpec::External {
                    command,
                    version: r.text("estimator.version"),
                }
            }
            _ => EstimatorSpec::Lz78,
        };
        let block: usize = r.num("estimator.block_length");
        r.check("estimator.block_length", (1..=12).contains(&block), "must be in [1, 12]");

        let verdict_threshold = r.float("contrast.verdict_threshold");
        let permutation_iterations: u64 = r.num("contrast.permutation_iterations");
        r.check("contrast.permutation_iterations", permutation_iterations >= 1, "must be at least 1");
        let synergy_joint = match r.choice("synergy.joint").as_str() {
            "concatenation" => JointCode::Concatenation,
            _ => JointCode::Interleaved,
        };
        let input = r.text("estimate.input");
        let verify = VerifySettings {
            max_len: r.num("verify.max_len"),
            steps: r.num("verify.steps"),
            second_max_len: r.num("verify.second_max_len"),
            counting_n: r.num("verify.counting_n"),
            chance_n: r.num("verify.chance_n"),
            chance_z_seed: r.num("verify.chance_z_seed"),
            multiplicity_c: r.float("verify.multiplicity_c"),
            multiplicity_c_prime: r.float("verify.multiplicity_c_prime"),
            gar_code_bits: r.num("verify.gar_code_bits"),
            gar_horizon: r.num("verify.gar_horizon"),
            gar_index_len: r.num("verify.gar_index_len"),
        };
        r.check("verify.chance_n", (1..=20).contains(&verify.chance_n), "must be in [1, 20]");
        let cfg = ExperimentConfig {
            command,
            world,
            regulator,
            horizon,
            estimator,
            seeds,
            out_dir: PathBuf::from(r.text("out")),
            threads: r.num("threads"),
            verdict_threshold,
            permutation_iterations,
            permutation_seed: r.num("contrast.permutation_seed"),
            enumerate_max_len: r.num("enumerate.max_len"),
            enumerate_steps: r.num("enumerate.steps"),
            synergy_n: r.num("synergy.n"),
            synergy_joint,
            verify,
            estimate_input: (!input.is_empty()).then(|| PathBuf::from(input)),
            fingerprint: fingerprint_of(raw, command),
        };
        if r.errors.is_empty() {
            Ok(cfg)
        } else {
            Err(r.errors)
        }
    }

    /// The contrast pipeline's view of this config.
    pub fn contrast_config(&self, estimator: Estimator) -> ContrastConfig {
        let mut c = ContrastConfig::new(
            self.world.clone(),
            self.regulator.clone(),
            self.horizon,
            estimator,
            self.seeds.clone(),
        );
        c.permutation_iterations = self.permutation_iterations;
        c.permutation_seed = self.permutation_seed;
        c.verdict_threshold_bits = self.verdict_threshold;
        c
    }
}

impl EstimatorSpec {
    /// Builds the estimator; BDM tables come from `table` so callers can cache them.
    pub fn build<F>(&self, table: F) -> agar_core::Result<Estimator>
    where
        F: FnOnce(usize, u32, u64) -> agar_core::Result<agar_core::ctm::CtmTable>,
    {
        Ok(match self {
            EstimatorSpec::Lz78 => Estimator::Lz78,
            EstimatorSpec::Lzw => Estimator::Lzw,
            EstimatorSpec::Mixture { max_order } => {
                Estimator::Mixture(MixtureModelClass::new(*max_order)?)
            }
            EstimatorSpec::Bdm {
                block_length,
                max_program_bits,
                step_budget,
            } => Estimator::Bdm(std::sync::Arc::new(table(
                *block_length,
                *max_program_bits,
                *step_budget,
            )?)),
            EstimatorSpec::External { command, version } => Estimator::External(ExternalCompressor {
                command: command.clone(),
                version: version.clone(),
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "world = thermostat\nregulator = bangbang\nN = 4096\nestimator = lz78\nseeds = 1..20\n";

    #[test]
    fn minimal_contrast_config() {
        let (raw, errs) = RawConfig::parse_text(MINIMAL, "c.cfg");
        assert!(errs.is_empty());
        let a = ExperimentConfig::resolve(&raw, Command::Contrast).unwrap();
        let b = ExperimentConfig::resolve(&raw, Command::Contrast).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(a.seeds.len(), 20);
        assert_eq!(a.horizon, 4096);
        assert_eq!(a.regulator, RegulatorKind::BangBang { deadband: 0.5 });
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let (_, errs) = RawConfig::parse_text("wrold = latch\n", "c.cfg");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].to_string().contains("`wrold`"));
        assert!(errs[0].to_string().contains("`world`"));
        assert!(errs[0].to_string().starts_with("c.cfg:1"));
        let (_, errs) = RawConfig::parse_text("[regulator]\ndeadbnd = 1\n", "c.cfg");
        assert!(errs[0].message.contains("regulator.deadband"));
    }

    #[test]
    fn all_errors_are_reported() {
        let text = "N = many\nfoo = 1\n[world]\ndt = fast\nbogus line\n[estimator]\nmax_order = 40\n";
        let (raw, errs) = RawConfig::parse_text(text, "c.cfg");
        assert_eq!(errs.len(), 2);
        let errs = ExperimentConfig::resolve(&raw, Command::Contrast).unwrap_err();
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert!(lines.iter().any(|l| l.starts_with("c.cfg:1") && l.contains("`N`")), "{lines:?}");
        assert!(lines.iter().any(|l| l.starts_with("c.cfg:4")), "{lines:?}");
    }

    #[test]
    fn flag_override_changes_fingerprint() {
        let (raw, _) = RawConfig::parse_text(MINIMAL, "c.cfg");
        let base = ExperimentConfig::resolve(&raw, Command::Contrast).unwrap();
        let mut over = raw.clone();
        over.set("N", "2048", "--horizon").unwrap();
        let o = ExperimentConfig::resolve(&over, Command::Contrast).unwrap();
        assert_eq!(o.horizon, 2048);
        assert_ne!(o.fingerprint, base.fingerprint);
        let mut t = raw.clone();
        t.set("threads", "8", "--threads").unwrap();
        t.set("out", "elsewhere", "--out").unwrap();
        assert_eq!(ExperimentConfig::resolve(&t, Command::Contrast).unwrap().fingerprint, base.fingerprint);
        assert_ne!(
            ExperimentConfig::resolve(&raw, Command::Simulate).unwrap().fingerprint,
            base.fingerprint
        );
    }

    #[test]
    fn command_mismatch_and_seed_syntax() {
        let (raw, _) = RawConfig::parse_text("command = verify\n", "c.cfg");
        assert!(ExperimentConfig::resolve(&raw, Command::Contrast).is_err());
        assert!(ExperimentConfig::resolve(&raw, Command::Verify).is_ok());
        assert_eq!(parse_seeds("3..5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seeds("7, 2").unwrap(), vec![7, 2]);
        assert!(parse_seeds("5..3").is_err());
        assert!(parse_seeds("x").is_err());
        let mut raw = RawConfig::default();
        assert!(raw.set_assignment("world.tau=10").is_ok());
        assert!(raw.set_assignment("world.tua=10").unwrap_err().message.contains("world.tau"));
        assert!(raw.set_assignment("novalue").is_err());
    }
}
