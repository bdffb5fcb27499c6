// SPDX-License-Identifier: Apache-2.0
//! Deterministic EIGRP simulator with trace export and a comparison harness.

pub mod cli;
pub mod codec;
pub mod eigrp;
pub mod experiment;
pub mod frame;
pub mod harness;
pub mod manifest;
pub mod pcap;
pub mod prefix;
pub mod sim;
pub mod tables;
pub mod time;
