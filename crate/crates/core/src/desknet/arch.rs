//! Trainable-parameter counts for backbone + enhancement + linear classifier.

use serde::{Deserialize, Serialize};

use super::model::{Variant, C1, C2, CLASSES, FEAT_SIDE};

/// Convolutional layers of ResNet18 (everything except the final `fc`).
pub const RESNET18_BACKBONE: u64 = 11_176_512;
/// conv1 (8·9 + 8) + conv2 (16·8·9 + 16)
pub const DESK_BACKBONE: u64 = (C1 * 9 + C1 + C2 * C1 * 9 + C2) as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub backbone_params: u64,
    /// Feature maps reaching the enhancement step.
    pub k: usize,
    /// Spatial side of each map.
    pub n: usize,
    pub classes: usize,
    pub variant: Variant,
}

impl ArchitectureSpec {
    /// `512 × 4 × 4` features, two classes.
    pub fn resnet18(variant: Variant) -> Self {
        Self {
            backbone_params: RESNET18_BACKBONE,
            k: 512,
            n: 4,
            classes: 2,
            variant,
        }
    }

    pub fn desk(variant: Variant) -> Self {
        Self {
            backbone_params: DESK_BACKBONE,
            k: C2,
            n: FEAT_SIDE,
            classes: CLASSES,
            variant,
        }
    }
}

/// Enhancement is parameter-free, so variants differ only through the
/// classifier input width.
pub fn count_parameters(spec: &ArchitectureSpec) -> u64 {
    let width = spec.variant.classifier_width(spec.k, spec.n) as u64;
    let classes = spec.classes as u64;
    spec.backbone_params + width * classes + classes
}
