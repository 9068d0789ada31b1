#pragma once

#include <filesystem>

#include "adgnn/data.hpp"
#include "adgnn/model.hpp"

namespace adgnn {

// Versioned JSON container for a trained model: every tensor, the full
// train/diffusion configuration, and the split used, so evaluation can
// reproduce the training-time numbers exactly.
struct Checkpoint {
  TrainConfig cfg;
  DiffusionParams dp;
  SplitSpec split;
  bool split_from_file = false;  // splits.json was used instead of make_split
  LaplacianMode mode = LaplacianMode::paper_degree;
  ModelParams<double> params;  // f32 weights widen losslessly
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws DataError naming the offending tensor when shapes cannot serve
// the given dataset.
void validate_checkpoint(const Checkpoint& ckpt, const Dataset& dataset);

const char* head_name(Head head);
const char* precision_name(Precision precision);
const char* global_mode_name(GlobalMode mode);
const char* laplacian_mode_name(LaplacianMode mode);
Head parse_head(const std::string& name);
Precision parse_precision(const std::string& name);
GlobalMode parse_global_mode(const std::string& name);
LaplacianMode parse_laplacian_mode(const std::string& name);

}  // namespace adgnn
