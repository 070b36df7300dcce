#pragma once

#include <string>

#include "pfnbench/model.hpp"

namespace pfnbench {

// Checkpoint container format, all integers little-endian:
//
//   magic "PFN1"
//   u32 format version (1)
//   u32 x8 config: d_model, n_layers, n_heads, d_ff, max_features,
//                  max_classes, max_train_tokens, max_query_tokens
//   u64 x3 fingerprint: prior_hash, seed, steps
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rows, u32 cols, f32 data
//   u64 FNV-1a checksum of every preceding byte
//
// Serialization is deterministic: tensors are written in the model's fixed
// iteration order, so save -> load -> save is byte-identical.

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Checksum of the serialized form; used by determinism tests and manifests.
std::uint64_t checkpoint_digest(const Checkpoint& ckpt);

}  // namespace pfnbench
