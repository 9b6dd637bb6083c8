//! Built-in scenarios. The command line accepts a template name wherever a
//! scenario file is expected.

use super::ScenarioConfig;

const TEMPLATES: &[(&str, &str)] = &[
    ("double_incentive_line3", include_str!("../../templates/double_incentive_line3.toml")),
    ("double_incentive_withholding", include_str!("../../templates/double_incentive_withholding.toml")),
    ("all_or_nothing_broadcast", include_str!("../../templates/all_or_nothing_broadcast.toml")),
    ("contract_pull", include_str!("../../templates/contract_pull.toml")),
    ("competing_multicast", include_str!("../../templates/competing_multicast.toml")),
    ("cache_repeat", include_str!("../../templates/cache_repeat.toml")),
    ("isp_vs_edge", include_str!("../../templates/isp_vs_edge.toml")),
    ("cracker_race_sweep", include_str!("../../templates/cracker_race_sweep.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    TEMPLATES.iter().map(|(n, _)| *n)
}

/// The TOML text of a template.
pub fn get(name: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Option<ScenarioConfig> {
    get(name).map(|t| ScenarioConfig::from_toml(t).expect("built-in templates parse"))
}
