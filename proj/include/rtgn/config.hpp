#pragma once

// Run configuration read from an INI-style file:
//
//   # comment
//   [train]
//   epochs = 30
//
// Sections: [run] [synth] [split] [encoder] [train] [noise] [eval]. Unknown
// sections or keys are errors. Every key and its default is listed by
// RunConfig::to_ini() on a default-constructed config.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rtgn/data.hpp"
#include "rtgn/encoder.hpp"
#include "rtgn/eval.hpp"
#include "rtgn/heads.hpp"

namespace rtgn {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed = 0;
    encoder::HeadKind head = encoder::HeadKind::Gaussian;
    data::SynthConfig synth;
    data::SplitSpec split;
    encoder::EncoderConfig encoder;  // feature_dim 0 = take it from the data
    heads::TrainConfig train;
    eval::ExperimentPlan eval;       // noise variance lives in [noise]

    // Pushes the run seed into the per-module configs.
    void apply_seed(std::uint64_t s);

    std::string to_ini() const;
    void validate() const;
};

RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace rtgn
