#pragma once

#include <filesystem>

#include "derainkit/scene_io.hpp"

namespace derainkit {

/// Source of per-frame restored images. `identity` passes the rainy frames
/// through unchanged; `from_directory` loads externally restored frames that
/// must match the rainy stack in count and dimensions.
enum class ProviderKind { identity, from_directory };

ProviderKind provider_kind_from_string(const std::string& name);
std::string to_string(ProviderKind kind);

SceneStack provide_restored(const SceneStack& rainy, ProviderKind kind,
                            const std::filesystem::path& restored_dir = {});

}  // namespace derainkit
