#pragma once

// A trained detector: encoder parameters, hypersphere center, the feature
// scaler fitted on the training split, and the run configuration it was
// trained with.
//
// Checkpoint layout (all integers and floats little-endian):
//
//   magic        8 bytes   "RTGNSVDD"
//   version      u32       kCheckpointVersion
//   dims         u32 x 5   memory_dim, time_dim, embed_dim, feature_dim, neighbors
//   hidden_dim   u32
//   head         u32       0 = svdd, 1 = gaussian
//   sigma_floor  f64
//   time_decades f64
//   memory_grad  u32
//   blocks       u32 count, then per block:
//                  name (u32 length + bytes), rows u32, cols u32,
//                  rows*cols f64 values
//   config echo  u32 length + UTF-8 text
//
// Blocks are the encoder parameters in EncoderParams::all() order followed by
// "center", "scaler.mean" and "scaler.std".

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rtgn/data.hpp"
#include "rtgn/encoder.hpp"

namespace rtgn {

inline constexpr char kCheckpointMagic[8] = {'R', 'T', 'G', 'N', 'S', 'V', 'D', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Model {
    encoder::EncoderParams params;
    diff::Parameter center;  // dim 2p, excluded from weight decay
    data::Scaler scaler;
    std::string config_echo;

    Model(const encoder::EncoderConfig& config, encoder::HeadKind head);

    encoder::HeadKind head() const { return params.head; }
    std::size_t event_dim() const { return 2 * params.config.embed_dim; }
    bool has_center() const { return center_set; }
    void set_center(std::vector<double> c);

    // Encoder parameters plus the center.
    std::vector<diff::Parameter*> trainable();

    bool center_set = false;
};

Model make_model(const encoder::EncoderConfig& config, encoder::HeadKind head, std::uint64_t seed);

void save_checkpoint(std::ostream& os, const Model& model);
Model load_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace rtgn
