//! Versioned plain-text policy checkpoints. Floats are written as the hex
//! of their IEEE-754 bits so a save/load round trip is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context};
use uavnet_core::neural::ActionBound;
use uavnet_core::{Activation, ActorNet, Mlp, Normalizer, Policy};

const MAGIC: &str = "uavnet-policy";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub policy: Policy,
    /// Global episode index at which the snapshot was taken.
    pub episode: usize,
    pub smoothed_reward: f64,
    pub scenario: String,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> anyhow::Result<f64> {
    let bits = u64::from_str_radix(s, 16).with_context(|| format!("bad float field {s:?}"))?;
    Ok(f64::from_bits(bits))
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let p = &self.policy;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = writeln!(s, "scenario {}", self.scenario.replace(char::is_whitespace, "_"));
        let _ = writeln!(s, "episode {}", self.episode);
        let _ = writeln!(s, "smoothed {}", hex(self.smoothed_reward));
        let _ = writeln!(s, "normalizer {}", p.normalizer.len());
        for (lo, hi) in p.normalizer.lo.iter().zip(&p.normalizer.hi) {
            let _ = writeln!(s, "{} {}", hex(*lo), hex(*hi));
        }
        let _ = writeln!(s, "bounds {}", p.actor.bounds.len());
        for b in &p.actor.bounds {
            let _ = writeln!(s, "{} {} {}", hex(b.low), hex(b.high), hex(b.max));
        }
        let m = &p.actor.mlp;
        let sizes: Vec<String> = m.sizes().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "layers {}", sizes.join(" "));
        let acts: Vec<&str> = m.activations().iter().map(|a| a.name()).collect();
        let _ = writeln!(s, "activations {}", acts.join(" "));
        let _ = writeln!(s, "params {}", m.param_count());
        for v in m.params() {
            let _ = writeln!(s, "{}", hex(*v));
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> anyhow::Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| anyhow!("checkpoint truncated before {what}"));
        let header = next("header")?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| anyhow!("not a policy checkpoint"))?;
        ensure!(version == VERSION.to_string(), "unsupported checkpoint version {version}");
        let field = |line: &str, key: &str| -> anyhow::Result<String> {
            line.strip_prefix(key)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| anyhow!("expected `{key}`, found {line:?}"))
        };
        let scenario = field(next("scenario")?, "scenario")?;
        let episode: usize = field(next("episode")?, "episode")?.parse()?;
        let smoothed_reward = unhex(&field(next("smoothed")?, "smoothed")?)?;
        let n: usize = field(next("normalizer")?, "normalizer")?.parse()?;
        let mut bounds = Vec::with_capacity(n);
        for _ in 0..n {
            let parts: Vec<&str> = next("normalizer row")?.split_whitespace().collect();
            ensure!(parts.len() == 2, "normalizer row needs two fields");
            bounds.push((unhex(parts[0])?, unhex(parts[1])?));
        }
        let normalizer = Normalizer::new(&bounds);
        let k: usize = field(next("bounds")?, "bounds")?.parse()?;
        let mut action_bounds = Vec::with_capacity(k);
        for _ in 0..k {
            let parts: Vec<&str> = next("bound row")?.split_whitespace().collect();
            ensure!(parts.len() == 3, "bound row needs three fields");
            action_bounds.push(ActionBound { low: unhex(parts[0])?, high: unhex(parts[1])?, max: unhex(parts[2])? });
        }
        let sizes = field(next("layers")?, "layers")?
            .split_whitespace()
            .map(|v| v.parse::<usize>().map_err(anyhow::Error::from))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let activations = field(next("activations")?, "activations")?
            .split_whitespace()
            .map(|a| Activation::from_name(a).ok_or_else(|| anyhow!("unknown activation {a:?}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let count: usize = field(next("params")?, "params")?.parse()?;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            params.push(unhex(next("parameter")?)?);
        }
        if next("end")? != "end" {
            bail!("parameter count does not match the stored values");
        }
        let mlp = Mlp::from_parts(sizes, activations, params)?;
        ensure!(mlp.input_len() == normalizer.len(), "normalizer length differs from network input");
        let actor = ActorNet::from_mlp(mlp, action_bounds)?;
        Ok(Self { policy: Policy { actor, normalizer }, episode, smoothed_reward, scenario })
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("in {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use uavnet_core::ddpg::fleet_action_bounds;
    use uavnet_core::rng_from_seed;

    fn sample() -> Checkpoint {
        let actor = ActorNet::new(7, &[5, 4], fleet_action_bounds(2, 1.0), &mut rng_from_seed(3)).unwrap();
        let normalizer = Normalizer::new(&[(0.0, 6.0); 7]);
        Checkpoint { policy: Policy { actor, normalizer }, episode: 12, smoothed_reward: 0.1 + 0.2, scenario: "toy".into() }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), c.to_text());
    }

    #[test]
    fn rejects_truncation_and_garbage() {
        let text = sample().to_text();
        let cut: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(Checkpoint::from_text(&cut).is_err());
        assert!(Checkpoint::from_text("hello").is_err());
        assert!(Checkpoint::from_text(&text.replace("uavnet-policy 1", "uavnet-policy 9")).is_err());
    }
}
