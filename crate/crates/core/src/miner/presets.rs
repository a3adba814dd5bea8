// SPDX-License-Identifier: Apache-2.0

//! Built-in extractor presets for the two reference project layouts.

use super::{ExtractorConfig, ExtractorMode};

/// `MyFeature featuregate.Feature = "MyFeature"`
pub const KUBERNETES_CURRENT_PATTERN: &str =
    r#"^\s*([A-Za-z_][A-Za-z0-9_]*)\s+featuregate\.Feature\s*=\s*"[A-Za-z0-9_]+""#;

/// `MyFeature utilfeature.Feature = "MyFeature"`, the pre-2019 spelling.
pub const KUBERNETES_LEGACY_PATTERN: &str =
    r#"^\s*([A-Za-z_][A-Za-z0-9_]*)\s+utilfeature\.Feature\s*=\s*"[A-Za-z0-9_]+""#;

pub const KUBERNETES_FEATURES_FILE: &str = "pkg/features/kube_features.go";

pub const GITLAB_FLAGS_DIR: &str = "config/feature_flags/**";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    KubernetesGates,
    GitlabFlags,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::KubernetesGates, Preset::GitlabFlags];

    pub fn name(self) -> &'static str {
        match self {
            Preset::KubernetesGates => "kubernetes-gates",
            Preset::GitlabFlags => "gitlab-flags",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn extractor(self) -> ExtractorConfig {
        match self {
            Preset::KubernetesGates => ExtractorConfig {
                mode: ExtractorMode::Declaration,
                watch_paths: vec![KUBERNETES_FEATURES_FILE.to_string()],
                declaration_patterns: vec![
                    KUBERNETES_CURRENT_PATTERN.to_string(),
                    KUBERNETES_LEGACY_PATTERN.to_string(),
                ],
                file_name_filter: String::new(),
                branch: "master".to_string(),
            },
            Preset::GitlabFlags => ExtractorConfig {
                mode: ExtractorMode::FileLifecycle,
                watch_paths: vec![GITLAB_FLAGS_DIR.to_string()],
                declaration_patterns: Vec::new(),
                file_name_filter: "*.yml".to_string(),
                branch: "master".to_string(),
            },
        }
    }

    /// Full run-configuration preset in the documented TOML format.
    pub fn config_toml(self) -> &'static str {
        match self {
            Preset::KubernetesGates => include_str!("../../data/kubernetes-gates.toml"),
            Preset::GitlabFlags => include_str!("../../data/gitlab-flags.toml"),
        }
    }
}
