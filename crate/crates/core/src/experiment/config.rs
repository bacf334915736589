use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::cost::Kernel;
use crate::error::{invalid, Error, Result};
use crate::safety::PenaltyMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    FrozenLake,
    SyntheticLinear,
    HardInstance,
    Alternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Agent {
    /// Rectified penalty floored by the episode index.
    LsviAe,
    /// No penalty.
    Lsvi,
    /// Virtual-queue penalty.
    LsviPrimal,
}

impl Agent {
    pub fn penalty_mode(self) -> PenaltyMode {
        match self {
            Agent::LsviAe => PenaltyMode::Rectified,
            Agent::Lsvi => PenaltyMode::Off,
            Agent::LsviPrimal => PenaltyMode::VirtualQueue,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostModelKind {
    Linear,
    Gp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    SquaredExponential,
}

macro_rules! names {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(Self::$variant => $name),+ }
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(invalid(format!(
                        "unknown {} {other:?}; expected one of: {}",
                        stringify!($ty),
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}

names!(EnvKind {
    FrozenLake => "frozen_lake",
    SyntheticLinear => "synthetic_linear",
    HardInstance => "hard_instance",
    Alternating => "alternating",
});
names!(Agent { LsviAe => "lsvi_ae", Lsvi => "lsvi", LsviPrimal => "lsvi_primal" });
names!(CostModelKind { Linear => "linear", Gp => "gp" });
names!(KernelKind { Linear => "linear", SquaredExponential => "sqexp" });

/// One experiment cell. Serializes to `key = value` lines and back without
/// loss.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    /// ASCII grid for Frozen Lake; the built-in 10×10 map when absent.
    pub map: Option<PathBuf>,
    /// Feature dimension for the synthetic and hard instances.
    pub dim: usize,
    pub num_states: usize,
    pub num_actions: usize,
    /// Cost-noise standard deviation for the synthetic instance.
    pub noise: f64,
    /// Reward of the safe action in the alternating instance.
    pub safe_reward: f64,
    pub agent: Agent,
    pub episodes: usize,
    pub horizon: usize,
    pub p: f64,
    pub lambda: f64,
    /// Constant `c` in the bonus scale `β = c·d·H·√ι`.
    pub c_beta: f64,
    /// Bonus scale used instead of the schedule when set.
    pub beta_override: Option<f64>,
    pub cost_model: CostModelKind,
    pub kernel: KernelKind,
    pub lengthscale: f64,
    /// Cost-confidence multiplier used instead of the closed form when set.
    pub cost_beta_override: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::FrozenLake,
            map: None,
            dim: 8,
            num_states: 10,
            num_actions: 4,
            noise: 0.1,
            safe_reward: 0.5,
            agent: Agent::LsviAe,
            episodes: 1000,
            horizon: 15,
            p: 0.1,
            lambda: 1.0,
            c_beta: 1.0,
            beta_override: None,
            cost_model: CostModelKind::Linear,
            kernel: KernelKind::SquaredExponential,
            lengthscale: 1.0,
            cost_beta_override: None,
            seed: 0,
            out: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(format!("bad value {value:?} for {key}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "none" {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

fn show_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl ExperimentConfig {
    pub fn kernel(&self) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::SquaredExponential => Kernel::SquaredExponential {
                lengthscale: self.lengthscale,
            },
        }
    }

    /// Sets one key from its string form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "env" => self.env = value.parse()?,
            "map" => self.map = (value != "none").then(|| PathBuf::from(value)),
            "dim" => self.dim = parse_num(key, value)?,
            "num_states" => self.num_states = parse_num(key, value)?,
            "num_actions" => self.num_actions = parse_num(key, value)?,
            "noise" => self.noise = parse_num(key, value)?,
            "safe_reward" => self.safe_reward = parse_num(key, value)?,
            "agent" => self.agent = value.parse()?,
            "episodes" => self.episodes = parse_num(key, value)?,
            "horizon" => self.horizon = parse_num(key, value)?,
            "p" => self.p = parse_num(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "c_beta" => self.c_beta = parse_num(key, value)?,
            "beta_override" => self.beta_override = parse_opt(key, value)?,
            "cost_model" => self.cost_model = value.parse()?,
            "kernel" => self.kernel = value.parse()?,
            "lengthscale" => self.lengthscale = parse_num(key, value)?,
            "cost_beta_override" => self.cost_beta_override = parse_opt(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = (value != "none").then(|| PathBuf::from(value)),
            other => return Err(invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            config.set(key.trim(), value).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(config)
    }

    pub fn to_kv(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string());
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("env", self.env.name().into());
        put("map", path(&self.map));
        put("dim", self.dim.to_string());
        put("num_states", self.num_states.to_string());
        put("num_actions", self.num_actions.to_string());
        put("noise", self.noise.to_string());
        put("safe_reward", self.safe_reward.to_string());
        put("agent", self.agent.name().into());
        put("episodes", self.episodes.to_string());
        put("horizon", self.horizon.to_string());
        put("p", self.p.to_string());
        put("lambda", self.lambda.to_string());
        put("c_beta", self.c_beta.to_string());
        put("beta_override", show_opt(&self.beta_override));
        put("cost_model", self.cost_model.name().into());
        put("kernel", self.kernel.name().into());
        put("lengthscale", self.lengthscale.to_string());
        put("cost_beta_override", show_opt(&self.cost_beta_override));
        put("seed", self.seed.to_string());
        put("out", path(&self.out));
        s
    }

    /// Checks every parameter before any work starts.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        if self.episodes == 0 || self.horizon == 0 {
            return Err(invalid("episodes and horizon must be at least 1"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(invalid(format!("p must lie in (0, 1), got {}", self.p)));
        }
        positive("lambda", self.lambda)?;
        positive("c_beta", self.c_beta)?;
        positive("lengthscale", self.lengthscale)?;
        for (name, v) in [
            ("beta_override", self.beta_override),
            ("cost_beta_override", self.cost_beta_override),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid(format!("{name} must be nonnegative, got {v}")));
                }
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(invalid(format!("noise must be nonnegative, got {}", self.noise)));
        }
        Ok(())
    }
}
