#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "orsnn/net/network.hpp"

namespace orsnn {

/// Container layout, text header then binary payload:
///
///   ORSNN-CKPT 1
///   arch <architecture string>
///   arch_digest <16 hex digits, FNV-1a of the arch string>
///   join OR | topology OR-SEW | attention T/a | attention_options 4 16 7
///   lif <tau> <threshold> <reset> <alpha> <detach_reset 0/1>
///   steps <T> | input <C> <H> <W> | seed <s> | epoch <e>
///   pruned <block,block,...> or -
///   tensors <count>
///   payload_digest <16 hex digits, FNV-1a of the payload bytes>
///   config_bytes <k>
///   <k bytes of experiment config text>
///   <payload>
///
/// Payload: per parameter, then per buffer, in graph order:
///   u32 name length, name bytes, u64 element count, count x f32 (LE).
struct CheckpointMeta {
    std::size_t epoch = 0;  // last completed epoch, 0 for an untrained net
    std::string config;     // experiment config text, may be empty
};

struct LoadedCheckpoint {
    std::unique_ptr<Network<float>> net;
    CheckpointMeta meta;
};

std::uint64_t fnv1a(std::string_view bytes);

std::string encode_checkpoint(Network<float>& net, const CheckpointMeta& meta = {});
/// BadMagic, VersionMismatch, ArchMismatch (edited architecture or tensor
/// set), CorruptPayload (digest or framing), Truncated (short header).
LoadedCheckpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(Network<float>& net, const std::string& path, const CheckpointMeta& meta = {});
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace orsnn
