#pragma once

#include "derainkit/scene_io.hpp"

namespace derainkit {

/// Per-pixel, per-channel median across the stack's frames. For an even
/// frame count the median is the midpoint of the two central order
/// statistics.
Image temporal_median(const SceneStack& stack);

/// Per-pixel, per-channel arithmetic mean across the stack's frames.
Image temporal_mean(const SceneStack& stack);

}  // namespace derainkit
