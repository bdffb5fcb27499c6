// SPDX-License-Identifier: Apache-2.0
//! Declarative router/link description, loaded from TOML.

use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::eigrp::EigrpConfig;
use crate::prefix::InterfaceAddress;
use crate::time::SimTime;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown router `{0}`")]
    UnknownRouter(String),
    #[error("router `{router}` has no interface `{iface}`")]
    UnknownInterface { router: String, iface: String },
    #[error("endpoint `{0}` must look like ROUTER.GATE")]
    BadEndpoint(String),
    #[error("unknown channel type `{0}`")]
    UnknownChannel(String),
    #[error("interface `{0}` is attached to more than one link")]
    InterfaceReused(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("too many {0}")]
    TooMany(&'static str),
}

fn default_bandwidth() -> u32 {
    10_000
}
fn default_delay() -> u32 {
    100
}
fn default_channel() -> String {
    "Eth10M".into()
}

fn de_iface_addr<'de, D: Deserializer<'de>>(d: D) -> Result<InterfaceAddress, D::Error> {
    let s = String::deserialize(d)?;
    InterfaceAddress::from_str(&s).map_err(serde::de::Error::custom)
}

fn ser_iface_addr<S: serde::Serializer>(a: &InterfaceAddress, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    pub name: String,
    #[serde(deserialize_with = "de_iface_addr", serialize_with = "ser_iface_addr")]
    pub address: InterfaceAddress,
    /// Kilobits per second.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: u32,
    /// Tens of microseconds.
    #[serde(default = "default_delay")]
    pub delay: u32,
    /// Overrides the router's `networks` matching.
    #[serde(default)]
    pub eigrp: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterConfig {
    pub name: String,
    #[serde(default)]
    pub start: SimTime,
    #[serde(rename = "interface", default)]
    pub interfaces: Vec<InterfaceConfig>,
    pub eigrp: EigrpConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkState {
    #[default]
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: String,
    pub b: String,
    #[serde(default = "default_channel")]
    pub channel: String,
    #[serde(default)]
    pub propagation: SimTime,
    #[serde(default)]
    pub state: LinkState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(rename = "router", default)]
    pub routers: Vec<RouterConfig>,
    #[serde(rename = "link", default)]
    pub links: Vec<LinkConfig>,
}

/// Bits per second of a named channel. Accepts dotted module paths and uses
/// the last segment, e.g. `inet.node.ethernet.Eth10M`.
pub fn channel_bandwidth(channel: &str) -> Result<u64, TopologyError> {
    let name = channel.rsplit('.').next().unwrap_or(channel);
    match name {
        "Eth10M" => Ok(10_000_000),
        "Eth100M" => Ok(100_000_000),
        "Eth1G" => Ok(1_000_000_000),
        "Eth10G" => Ok(10_000_000_000),
        _ => Err(TopologyError::UnknownChannel(channel.to_string())),
    }
}

/// Splits `R1.ethg[0]` into router and gate.
pub fn split_endpoint(s: &str) -> Result<(&str, &str), TopologyError> {
    s.split_once('.').filter(|(r, g)| !r.is_empty() && !g.is_empty()).ok_or_else(|| TopologyError::BadEndpoint(s.into()))
}

impl TopologyConfig {
    pub fn from_toml(s: &str) -> Result<Self, TopologyError> {
        let t: TopologyConfig = toml::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("topology serializes")
    }

    pub fn router_index(&self, name: &str) -> Result<usize, TopologyError> {
        self.routers.iter().position(|r| r.name == name).ok_or_else(|| TopologyError::UnknownRouter(name.into()))
    }

    pub fn endpoint(&self, s: &str) -> Result<(usize, usize), TopologyError> {
        let (r, g) = split_endpoint(s)?;
        self.resolve(r, g)
    }

    pub fn resolve(&self, router: &str, gate: &str) -> Result<(usize, usize), TopologyError> {
        let ri = self.router_index(router)?;
        let ii = self.routers[ri].interfaces.iter().position(|i| i.name == gate).ok_or_else(|| {
            TopologyError::UnknownInterface { router: router.into(), iface: gate.into() }
        })?;
        Ok((ri, ii))
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        // Router and interface indices end up in MAC addresses.
        if self.routers.len() > 255 {
            return Err(TopologyError::TooMany("routers"));
        }
        let mut names = std::collections::BTreeSet::new();
        for r in &self.routers {
            if !names.insert(r.name.as_str()) {
                return Err(TopologyError::Duplicate(r.name.clone()));
            }
            if r.interfaces.len() > 255 {
                return Err(TopologyError::TooMany("interfaces"));
            }
            let mut ifn = std::collections::BTreeSet::new();
            for i in &r.interfaces {
                if !ifn.insert(i.name.as_str()) {
                    return Err(TopologyError::Duplicate(format!("{}.{}", r.name, i.name)));
                }
            }
        }
        let mut used = std::collections::BTreeSet::new();
        for l in &self.links {
            channel_bandwidth(&l.channel)?;
            for e in [&l.a, &l.b] {
                let ep = self.endpoint(e)?;
                if !used.insert(ep) {
                    return Err(TopologyError::InterfaceReused(e.clone()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[[router]]
name = "A"
start = "1"
eigrp = { as = 1 }
[[router.interface]]
name = "eth0"
address = "10.0.0.1/30"

[[router]]
name = "B"
eigrp = { as = 1, hello_interval = 2 }
[[router.interface]]
name = "eth0"
address = "10.0.0.2/30"
delay = 50

[[link]]
a = "A.eth0"
b = "B.eth0"
channel = "inet.node.ethernet.Eth100M"
state = "down"
"#;

    #[test]
    fn parses_with_defaults() {
        let t = TopologyConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(t.routers[0].start, SimTime::from_secs(1));
        assert_eq!(t.routers[0].interfaces[0].bandwidth, 10_000);
        assert_eq!(t.routers[1].interfaces[0].delay, 50);
        assert_eq!(t.routers[1].eigrp.hello_interval, 2);
        assert_eq!(t.routers[1].eigrp.hold_time, 15);
        assert_eq!(t.links[0].state, LinkState::Down);
        assert_eq!(t.endpoint("B.eth0").unwrap(), (1, 0));
        let again = TopologyConfig::from_toml(&t.to_toml()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn channel_profiles() {
        assert_eq!(channel_bandwidth("inet.node.ethernet.Eth10M").unwrap(), 10_000_000);
        assert_eq!(channel_bandwidth("Eth1G").unwrap(), 1_000_000_000);
        assert!(channel_bandwidth("Wifi").is_err());
    }

    #[test]
    fn rejects_bad_references() {
        let bad = SAMPLE.replace("b = \"B.eth0\"", "b = \"C.eth0\"");
        assert!(matches!(TopologyConfig::from_toml(&bad), Err(TopologyError::UnknownRouter(_))));
        let bad = SAMPLE.replace("b = \"B.eth0\"", "b = \"A.eth0\"");
        assert!(matches!(TopologyConfig::from_toml(&bad), Err(TopologyError::InterfaceReused(_))));
    }
}
