#pragma once

#include <map>
#include <string>

#include "situ3d/nn/graph.hpp"

namespace situ3d::nn {

// Checkpoint file: a text manifest ("situ3d-checkpoint v1", meta lines,
// one "tensor <name> <rows> <cols> f64" line per parameter, "DATA"), then
// the raw little-endian doubles in manifest order, row-major.
void save_checkpoint(const std::string& path, const ParameterSet& params,
                     const std::map<std::string, std::string>& meta = {});

// Loads into an existing ParameterSet; names and shapes must match exactly.
std::map<std::string, std::string> load_checkpoint(const std::string& path,
                                                   ParameterSet& params);

/// Peek at the manifest meta entries without loading tensors.
std::map<std::string, std::string> read_checkpoint_meta(const std::string& path);

} // namespace situ3d::nn
