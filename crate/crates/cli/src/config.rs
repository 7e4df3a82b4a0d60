//! Flat key = value run configuration.
//!
//! Unknown keys are hard errors; all physical invariants are re-checked at
//! load time. `#` starts a comment.

use ep_core::solver::{InnerOrdering, PerturbationAmplitudes, SolverConfig};
use ep_core::BackgroundParams;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: BackgroundParams,
    pub n1: usize,
    pub n2: usize,
    /// Background ODE step count; defaults to n1 so grid columns coincide
    /// with background nodes.
    pub bg_steps: Option<usize>,
    pub amplitudes: PerturbationAmplitudes,
    pub solver: SolverConfig,
    pub out_dir: Option<String>,
    pub seed: u64,
    pub sweep_amplitudes: Vec<f64>,
    pub sweep_channel: SweepChannel,
    /// Dump the assembled coupled operator in Matrix Market format.
    pub dump_system: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepChannel {
    All,
    Potential,
    Pressure,
    Entropy,
    Bernoulli,
    Charge,
}

impl SweepChannel {
    pub fn amplitudes(&self, a: f64) -> PerturbationAmplitudes {
        let mut amps = PerturbationAmplitudes::default();
        match self {
            SweepChannel::All => amps = PerturbationAmplitudes::uniform(a),
            SweepChannel::Potential => amps.potential = a,
            SweepChannel::Pressure => amps.pressure = a,
            SweepChannel::Entropy => amps.entropy = a,
            SweepChannel::Bernoulli => amps.bernoulli = a,
            SweepChannel::Charge => amps.charge = a,
        }
        amps
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepChannel::All => "all",
            SweepChannel::Potential => "phi",
            SweepChannel::Pressure => "p",
            SweepChannel::Entropy => "S",
            SweepChannel::Bernoulli => "B",
            SweepChannel::Charge => "b",
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl Default for RunConfig {
    fn default() -> Self {
        let mut params = BackgroundParams::uniform_fixture();
        params.gamma = 1.4;
        params.e0 = 0.1;
        RunConfig {
            params,
            n1: 128,
            n2: 64,
            bg_steps: None,
            amplitudes: PerturbationAmplitudes::default(),
            solver: SolverConfig::default(),
            out_dir: None,
            seed: 0x5eed,
            sweep_amplitudes: Vec::new(),
            sweep_channel: SweepChannel::All,
            dump_system: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
            })?;
            if map.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError(format!("duplicate key {:?}", key.trim())));
            }
        }

        let mut take_f64 = |cfg_field: &mut f64, key: &str| -> Result<(), ConfigError> {
            if let Some(v) = map.remove(key) {
                *cfg_field = v
                    .parse()
                    .map_err(|_| ConfigError(format!("{key}: not a number: {v:?}")))?;
            }
            Ok(())
        };
        take_f64(&mut cfg.params.j0, "j0")?;
        take_f64(&mut cfg.params.s0, "s0")?;
        take_f64(&mut cfg.params.b0, "b0")?;
        take_f64(&mut cfg.params.rho0, "rho0")?;
        take_f64(&mut cfg.params.e0, "e0")?;
        take_f64(&mut cfg.params.length, "length")?;
        take_f64(&mut cfg.params.gamma, "gamma")?;
        take_f64(&mut cfg.params.p_hat, "p_hat")?;
        take_f64(&mut cfg.params.c_v, "c_v")?;
        take_f64(&mut cfg.amplitudes.potential, "a_phi")?;
        take_f64(&mut cfg.amplitudes.pressure, "a_p")?;
        take_f64(&mut cfg.amplitudes.entropy, "a_S")?;
        take_f64(&mut cfg.amplitudes.bernoulli, "a_B")?;
        take_f64(&mut cfg.amplitudes.charge, "a_b")?;
        take_f64(&mut cfg.solver.tol_outer, "tol_outer")?;
        take_f64(&mut cfg.solver.tol_inner, "tol_inner")?;
        take_f64(&mut cfg.solver.tol_linear, "tol_linear")?;
        take_f64(&mut cfg.solver.damping, "damping")?;
        take_f64(&mut cfg.solver.growth_guard, "growth_guard")?;

        let parse_usize = |v: &str, key: &str| -> Result<usize, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError(format!("{key}: not a positive integer: {v:?}")))
        };
        if let Some(v) = map.remove("n1") {
            cfg.n1 = parse_usize(&v, "n1")?;
        }
        if let Some(v) = map.remove("n2") {
            cfg.n2 = parse_usize(&v, "n2")?;
        }
        if let Some(v) = map.remove("bg_steps") {
            cfg.bg_steps = Some(parse_usize(&v, "bg_steps")?);
        }
        if let Some(v) = map.remove("max_outer") {
            cfg.solver.max_outer = parse_usize(&v, "max_outer")?;
        }
        if let Some(v) = map.remove("max_inner") {
            cfg.solver.max_inner = parse_usize(&v, "max_inner")?;
        }
        if let Some(v) = map.remove("max_linear") {
            cfg.solver.max_linear = parse_usize(&v, "max_linear")?;
        }
        if let Some(v) = map.remove("coercivity_pairs") {
            cfg.solver.coercivity_pairs = parse_usize(&v, "coercivity_pairs")?;
        }
        if let Some(v) = map.remove("seed") {
            cfg.seed = v
                .parse()
                .map_err(|_| ConfigError(format!("seed: not an integer: {v:?}")))?;
            cfg.solver.coercivity_seed = cfg.seed;
        }
        if let Some(v) = map.remove("inner_ordering") {
            cfg.solver.ordering = match v.as_str() {
                "stream_first" => InnerOrdering::StreamFirst,
                "jacobi" => InnerOrdering::Jacobi,
                other => {
                    return Err(ConfigError(format!(
                        "inner_ordering: expected stream_first or jacobi, got {other:?}"
                    )))
                }
            };
        }
        if let Some(v) = map.remove("out_dir") {
            cfg.out_dir = Some(v);
        }
        if let Some(v) = map.remove("sweep_amplitudes") {
            cfg.sweep_amplitudes = v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| ConfigError(format!("sweep_amplitudes: bad entry {s:?}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = map.remove("sweep_channel") {
            cfg.sweep_channel = match v.as_str() {
                "all" => SweepChannel::All,
                "phi" => SweepChannel::Potential,
                "p" => SweepChannel::Pressure,
                "S" => SweepChannel::Entropy,
                "B" => SweepChannel::Bernoulli,
                "b" => SweepChannel::Charge,
                other => {
                    return Err(ConfigError(format!(
                        "sweep_channel: expected all|phi|p|S|B|b, got {other:?}"
                    )))
                }
            };
        }
        if let Some(v) = map.remove("dump_system") {
            cfg.dump_system = match v.as_str() {
                "true" | "1" => true,
                "false" | "0" => false,
                other => return Err(ConfigError(format!("dump_system: expected bool, got {other:?}"))),
            };
        }
        if let Some((key, _)) = map.into_iter().next() {
            return Err(ConfigError(format!("unknown key {key:?}")));
        }

        cfg.params
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if cfg.n1 < 8 || cfg.n2 < 8 {
            return Err(ConfigError(format!(
                "grid must be at least 8x8, got {}x{}",
                cfg.n1, cfg.n2
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn bg_steps(&self) -> usize {
        self.bg_steps.unwrap_or(self.n1)
    }
}
