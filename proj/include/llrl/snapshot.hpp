#pragma once

#include <filesystem>

#include "llrl/kb.hpp"

namespace llrl {

inline constexpr int kSnapshotVersion = 1;

// Lossless JSON round-trip of L, A, b, M, eta1, eta2, h and every task
// record; matrices carry explicit row/column counts with row-major data.
void save_snapshot(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_snapshot(const std::filesystem::path& path);

}  // namespace llrl
