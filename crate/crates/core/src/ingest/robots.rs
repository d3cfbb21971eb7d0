//! Minimal robots.txt evaluation: `User-agent`, `Allow` and `Disallow` with
//! prefix matching. The longest matching rule wins; `Allow` wins ties.

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotsRules {
    rules: Vec<(bool, String)>,
}

impl RobotsRules {
    pub fn allow_all() -> Self {
        Self::default()
    }

    /// Keeps the groups addressed to `agent` (case-insensitive substring) or,
    /// if none exist, to `*`.
    pub fn parse(body: &str, agent: &str) -> Self {
        let agent = agent.to_lowercase();
        let mut groups: Vec<(Vec<String>, Vec<(bool, String)>)> = Vec::new();
        let mut in_agents = false;
        for line in body.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else { continue };
            let (key, value) = (key.trim().to_lowercase(), value.trim().to_string());
            match key.as_str() {
                "user-agent" => {
                    if !in_agents {
                        groups.push((Vec::new(), Vec::new()));
                        in_agents = true;
                    }
                    if let Some(g) = groups.last_mut() {
                        g.0.push(value.to_lowercase());
                    }
                }
                "allow" | "disallow" => {
                    in_agents = false;
                    if let Some(g) = groups.last_mut() {
                        // an empty Disallow allows everything
                        if !value.is_empty() {
                            g.1.push((key == "allow", value));
                        }
                    }
                }
                _ => in_agents = false,
            }
        }
        let specific: Vec<_> = groups
            .iter()
            .filter(|(agents, _)| agents.iter().any(|a| a != "*" && agent.contains(a.as_str())))
            .collect();
        let chosen = if specific.is_empty() {
            groups.iter().filter(|(agents, _)| agents.iter().any(|a| a == "*")).collect()
        } else {
            specific
        };
        RobotsRules {
            rules: chosen.into_iter().flat_map(|(_, r)| r.iter().cloned()).collect(),
        }
    }

    pub fn allows(&self, path: &str) -> bool {
        let mut best: Option<(usize, bool)> = None;
        for (allow, prefix) in &self.rules {
            if path.starts_with(prefix.as_str()) {
                let len = prefix.len();
                best = match best {
                    Some((l, a)) if l > len || (l == len && a) => Some((l, a)),
                    _ => Some((len, *allow)),
                };
            }
        }
        best.is_none_or(|(_, allow)| allow)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wildcard_group() {
        let r = RobotsRules::parse("User-agent: *\nDisallow: /private\nAllow: /private/ok\n", "statelaw");
        assert!(r.allows("/codes/tn"));
        assert!(!r.allows("/private/x"));
        assert!(r.allows("/private/ok/1"));
    }

    #[test]
    fn specific_agent_overrides_wildcard() {
        let body = "User-agent: *\nDisallow: /\n\nUser-agent: statelaw\nDisallow:\n";
        assert!(RobotsRules::parse(body, "statelaw/0.1").allows("/anything"));
        assert!(!RobotsRules::parse(body, "otherbot").allows("/anything"));
    }

    #[test]
    fn empty_file_allows() {
        assert!(RobotsRules::parse("", "x").allows("/"));
    }
}
