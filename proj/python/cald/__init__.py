# SPDX-License-Identifier: Apache-2.0
"""Active-learning sample selection for object detectors (C++ core)."""

from ._core import (  # noqa: F401
    AugmentationSpec,
    AugmentedView,
    BoundingBox,
    ConsistencyRecord,
    DataError,
    ImageSize,
    PredictionRecord,
    beta_search,
    image_information,
    iou,
    js_divergence,
    labeled_pool_distribution,
    map_box,
    match_prediction,
    mutual_information,
    normalize,
    pair_consistency,
    score_files,
    select_by_mutual_information,
    simulate,
    softmax,
    stage_one,
    unlabeled_image_distribution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
