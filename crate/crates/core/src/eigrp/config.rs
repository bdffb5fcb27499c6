// SPDX-License-Identifier: Apache-2.0
//! Per-router EIGRP process configuration.

use serde::{Deserialize, Serialize};

use crate::codec::KValues;
use crate::prefix::{InterfaceAddress, Ipv4Prefix};

fn default_hello() -> u16 {
    5
}
fn default_hold() -> u16 {
    15
}
fn default_retransmit_limit() -> u32 {
    16
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigrpConfig {
    #[serde(rename = "as")]
    pub as_number: u16,
    #[serde(default)]
    pub k_values: KValues,
    #[serde(default = "default_hello")]
    pub hello_interval: u16,
    #[serde(default = "default_hold")]
    pub hold_time: u16,
    #[serde(default = "default_retransmit_limit")]
    pub retransmit_limit: u32,
    /// `network` statements: interfaces whose address falls in one of these
    /// prefixes run EIGRP. Empty means every interface.
    #[serde(default)]
    pub networks: Vec<Ipv4Prefix>,
    #[serde(default)]
    pub auth_magic: Option<String>,
}

impl EigrpConfig {
    pub fn new(as_number: u16) -> Self {
        EigrpConfig {
            as_number,
            k_values: KValues::default(),
            hello_interval: default_hello(),
            hold_time: default_hold(),
            retransmit_limit: default_retransmit_limit(),
            networks: Vec::new(),
            auth_magic: None,
        }
    }

    pub fn enables(&self, addr: &InterfaceAddress) -> bool {
        self.networks.is_empty() || self.networks.iter().any(|n| n.contains(addr.address))
    }
}

/// Interface as seen by the protocol instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceSpec {
    pub name: String,
    pub address: InterfaceAddress,
    pub bandwidth_kbps: u32,
    pub delay_tens_us: u32,
    pub eigrp_enabled: bool,
}
