#include "derainkit/provider.hpp"

namespace derainkit {

ProviderKind provider_kind_from_string(const std::string& name) {
    if (name == "identity") return ProviderKind::identity;
    if (name == "from-directory" || name == "from_directory") return ProviderKind::from_directory;
    throw Error("unknown restored-frames provider: " + name);
}

std::string to_string(ProviderKind kind) {
    return kind == ProviderKind::identity ? "identity" : "from-directory";
}

SceneStack provide_restored(const SceneStack& rainy, ProviderKind kind,
                            const std::filesystem::path& restored_dir) {
    if (rainy.frames.empty()) throw Error("provide_restored: empty rainy stack");
    if (kind == ProviderKind::identity) return rainy;

    if (restored_dir.empty())
        throw Error("provide_restored: from-directory provider needs a restored-frames directory");
    SceneStack restored = load_scene(restored_dir);
    restored.scene_id = rainy.scene_id;
    if (restored.frame_count() != rainy.frame_count())
        throw Error("restored frame count mismatch for scene " + rainy.scene_id + ": " +
                    std::to_string(restored.frame_count()) + " restored vs " +
                    std::to_string(rainy.frame_count()) + " rainy (" + restored_dir.string() + ")");
    if (!restored.frames.front().same_size(rainy.frames.front()))
        throw Error("restored frame dimensions mismatch for scene " + rainy.scene_id + " (" +
                    restored_dir.string() + ")");
    return restored;
}

}  // namespace derainkit
