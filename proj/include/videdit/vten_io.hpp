#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "videdit/tensor.hpp"

namespace videdit {

/// Rank-agnostic tensor used for parameter bundles and file I/O.
struct NTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> v;

    std::size_t size() const { return v.size(); }
};

/// Binary tensor file format ".vten":
///   magic "VTEN" | u32 version = 1 | u32 ndim | ndim x u32 dims | f32 payload
/// All integers and floats little-endian, payload row-major.
void write_vten(const std::string& path, const NTensor& t);
NTensor read_vten(const std::string& path);

void write_video_vten(const std::string& path, const VideoLatent& v);
VideoLatent read_video_vten(const std::string& path);

NTensor to_ntensor(const VideoLatent& v);
VideoLatent to_video(const NTensor& t);

}  // namespace videdit
