//! Episode logs: the per-agent node sequences of one shift.

use crate::terrain::NodeId;

use super::EnvError;

/// Record of one finished episode. Routes have `horizon + 1` entries per
/// agent, the start position included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeLog {
    pub seed: u64,
    /// Fingerprint of the environment config and graph the episode ran on.
    pub config_hash: u64,
    /// One node sequence per agent.
    pub routes: Vec<Vec<NodeId>>,
}

impl EpisodeLog {
    pub fn num_agents(&self) -> usize {
        self.routes.len()
    }

    /// Steps taken, i.e. route length minus the start entry.
    pub fn horizon(&self) -> usize {
        self.routes.first().map_or(0, |r| r.len().saturating_sub(1))
    }

    /// Text form:
    ///
    /// ```text
    /// seed 42
    /// config_hash 00000a1b2c3d4e5f
    /// agents 2
    /// steps 50
    /// route 0 7 8 9 ...
    /// route 1 3 2 2 ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("config_hash {:016x}\n", self.config_hash));
        out.push_str(&format!("agents {}\n", self.num_agents()));
        out.push_str(&format!("steps {}\n", self.horizon()));
        for (agent, route) in self.routes.iter().enumerate() {
            out.push_str(&format!("route {}", agent));
            for node in route {
                out.push_str(&format!(" {}", node));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EnvError> {
        let bad = |msg: String| EnvError::InvalidConfig(format!("episode log: {msg}"));
        let mut seed = None;
        let mut config_hash = None;
        let mut agents = None;
        let mut steps = None;
        let mut routes: Vec<Vec<NodeId>> = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("seed") => {
                    let v = parts.next().ok_or_else(|| bad("missing seed value".into()))?;
                    seed = Some(v.parse().map_err(|_| bad(format!("bad seed `{v}`")))?);
                }
                Some("config_hash") => {
                    let v =
                        parts.next().ok_or_else(|| bad("missing config_hash value".into()))?;
                    config_hash = Some(
                        u64::from_str_radix(v, 16)
                            .map_err(|_| bad(format!("bad config_hash `{v}`")))?,
                    );
                }
                Some("agents") => {
                    let v = parts.next().ok_or_else(|| bad("missing agents value".into()))?;
                    agents = Some(v.parse::<usize>().map_err(|_| bad(format!("bad agents `{v}`")))?);
                }
                Some("steps") => {
                    let v = parts.next().ok_or_else(|| bad("missing steps value".into()))?;
                    steps = Some(v.parse::<usize>().map_err(|_| bad(format!("bad steps `{v}`")))?);
                }
                Some("route") => {
                    let idx: usize = parts
                        .next()
                        .ok_or_else(|| bad("missing route index".into()))?
                        .parse()
                        .map_err(|_| bad("bad route index".into()))?;
                    if idx != routes.len() {
                        return Err(bad(format!(
                            "route {idx} out of order (expected {})",
                            routes.len()
                        )));
                    }
                    let route: Result<Vec<NodeId>, _> =
                        parts.map(|t| t.parse::<NodeId>()).collect();
                    routes.push(route.map_err(|_| bad(format!("bad node id in route {idx}")))?);
                }
                Some(other) => return Err(bad(format!("unknown field `{other}`"))),
                None => {}
            }
        }
        let log = EpisodeLog {
            seed: seed.ok_or_else(|| bad("missing seed".into()))?,
            config_hash: config_hash.ok_or_else(|| bad("missing config_hash".into()))?,
            routes,
        };
        if agents != Some(log.num_agents()) {
            return Err(bad("agents field disagrees with route count".into()));
        }
        if steps != Some(log.horizon()) || log.routes.iter().any(|r| r.len() != steps.unwrap() + 1)
        {
            return Err(bad("steps field disagrees with route lengths".into()));
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EpisodeLog {
        EpisodeLog {
            seed: 42,
            config_hash: 0xdead_beef,
            routes: vec![vec![7, 8, 9], vec![3, 2, 2]],
        }
    }

    #[test]
    fn text_round_trip() {
        let log = sample();
        assert_eq!(EpisodeLog::from_text(&log.to_text()).unwrap(), log);
    }

    #[test]
    fn inconsistent_steps_rejected() {
        let mut text = sample().to_text();
        text = text.replace("steps 2", "steps 3");
        assert!(EpisodeLog::from_text(&text).is_err());
    }

    #[test]
    fn unknown_field_rejected() {
        let text = format!("{}bogus 1\n", sample().to_text());
        assert!(EpisodeLog::from_text(&text).is_err());
    }
}
