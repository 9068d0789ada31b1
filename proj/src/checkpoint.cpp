#include "adgnn/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace adgnn {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json tensor_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Matrix tensor_from_json(const json& j, const char* name) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw DataError(std::string("checkpoint: malformed tensor '") + name + "'");
  Matrix m(j["rows"].get<Index>(), j["cols"].get<Index>());
  const auto data = j["data"].get<std::vector<double>>();
  if (data.size() != m.size())
    throw DataError(std::string("checkpoint: tensor '") + name + "' size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

const char* head_name(Head head) {
  return head == Head::hadamard ? "hadamard" : "mlp";
}

const char* precision_name(Precision precision) {
  return precision == Precision::f32 ? "f32" : "f64";
}

const char* global_mode_name(GlobalMode mode) {
  return mode == GlobalMode::dense ? "dense" : "neumann";
}

const char* laplacian_mode_name(LaplacianMode mode) {
  return mode == LaplacianMode::paper_degree ? "paper" : "identity";
}

Head parse_head(const std::string& name) {
  if (name == "hadamard") return Head::hadamard;
  if (name == "mlp") return Head::mlp;
  throw ConfigError("unknown head '" + name + "' (expected hadamard or mlp)");
}

Precision parse_precision(const std::string& name) {
  if (name == "f32") return Precision::f32;
  if (name == "f64") return Precision::f64;
  throw ConfigError("unknown precision '" + name + "' (expected f32 or f64)");
}

GlobalMode parse_global_mode(const std::string& name) {
  if (name == "dense") return GlobalMode::dense;
  if (name == "neumann") return GlobalMode::neumann;
  throw ConfigError("unknown global mode '" + name + "' (expected dense or neumann)");
}

LaplacianMode parse_laplacian_mode(const std::string& name) {
  if (name == "paper") return LaplacianMode::paper_degree;
  if (name == "identity") return LaplacianMode::identity_degree;
  throw ConfigError("unknown laplacian mode '" + name + "' (expected paper or identity)");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json j;
  j["format"] = "adgnn-checkpoint";
  j["version"] = kFormatVersion;
  j["train"] = {{"hidden_dim", ckpt.cfg.hidden_dim},
                {"learning_rate", ckpt.cfg.learning_rate},
                {"weight_decay", ckpt.cfg.weight_decay},
                {"max_epochs", ckpt.cfg.max_epochs},
                {"patience", ckpt.cfg.patience},
                {"dropout", ckpt.cfg.dropout},
                {"head", head_name(ckpt.cfg.head)},
                {"seed", ckpt.cfg.seed},
                {"precision", precision_name(ckpt.cfg.precision)},
                {"global_mode", global_mode_name(ckpt.cfg.global_mode)}};
  j["diffusion"] = {{"alpha", ckpt.dp.alpha}, {"beta", ckpt.dp.beta},
                    {"gamma", ckpt.dp.gamma}, {"delta", ckpt.dp.delta},
                    {"K", ckpt.dp.K},         {"tau", ckpt.dp.tau},
                    {"T", ckpt.dp.T}};
  j["split"] = {{"train_frac", ckpt.split.train_frac},
                {"valid_frac", ckpt.split.valid_frac},
                {"test_frac", ckpt.split.test_frac},
                {"per_class", ckpt.split.per_class},
                {"seed", ckpt.split.seed},
                {"from_file", ckpt.split_from_file}};
  j["laplacian_mode"] = laplacian_mode_name(ckpt.mode);
  json tensors;
  auto params = ckpt.params;  // all_tensors is non-const
  for (const auto& [name, tensor] : params.all_tensors())
    tensors[name] = tensor_to_json(*tensor);
  j["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "adgnn-checkpoint")
    throw DataError("checkpoint " + path.string() + ": unrecognized format");
  if (j.value("version", -1) != kFormatVersion)
    throw DataError("checkpoint " + path.string() + ": unsupported version");

  Checkpoint ckpt;
  const json& t = j.at("train");
  ckpt.cfg.hidden_dim = t.at("hidden_dim").get<Index>();
  ckpt.cfg.learning_rate = t.at("learning_rate").get<double>();
  ckpt.cfg.weight_decay = t.at("weight_decay").get<double>();
  ckpt.cfg.max_epochs = t.at("max_epochs").get<Index>();
  ckpt.cfg.patience = t.at("patience").get<Index>();
  ckpt.cfg.dropout = t.at("dropout").get<double>();
  ckpt.cfg.head = parse_head(t.at("head").get<std::string>());
  ckpt.cfg.seed = t.at("seed").get<std::uint64_t>();
  ckpt.cfg.precision = parse_precision(t.at("precision").get<std::string>());
  ckpt.cfg.global_mode = parse_global_mode(t.at("global_mode").get<std::string>());

  const json& d = j.at("diffusion");
  ckpt.dp.alpha = d.at("alpha").get<double>();
  ckpt.dp.beta = d.at("beta").get<double>();
  ckpt.dp.gamma = d.at("gamma").get<double>();
  ckpt.dp.delta = d.at("delta").get<double>();
  ckpt.dp.K = d.at("K").get<Index>();
  ckpt.dp.tau = d.at("tau").get<double>();
  ckpt.dp.T = d.at("T").get<Index>();

  const json& s = j.at("split");
  ckpt.split.train_frac = s.at("train_frac").get<double>();
  ckpt.split.valid_frac = s.at("valid_frac").get<double>();
  ckpt.split.test_frac = s.at("test_frac").get<double>();
  ckpt.split.per_class = s.at("per_class").get<bool>();
  ckpt.split.seed = s.at("seed").get<std::uint64_t>();
  ckpt.split_from_file = s.at("from_file").get<bool>();
  ckpt.mode = parse_laplacian_mode(j.at("laplacian_mode").get<std::string>());

  const json& tensors = j.at("tensors");
  for (const auto& [name, tensor] : ckpt.params.all_tensors()) {
    if (!tensors.contains(name))
      throw DataError(std::string("checkpoint: missing tensor '") + name + "'");
    *tensor = tensor_from_json(tensors.at(name), name);
  }
  // Rebuild empty gradient buffers at the right shapes.
  auto& p = ckpt.params;
  p.g_ego_weight = Matrix(p.ego_weight.rows(), p.ego_weight.cols());
  p.g_ego_bias = Matrix(p.ego_bias.rows(), p.ego_bias.cols());
  p.g_gate_weight = Matrix(p.gate_weight.rows(), p.gate_weight.cols());
  p.g_out_weight = Matrix(p.out_weight.rows(), p.out_weight.cols());
  p.g_out_bias = Matrix(p.out_bias.rows(), p.out_bias.cols());
  p.g_hidden_weight = Matrix(p.hidden_weight.rows(), p.hidden_weight.cols());
  p.g_hidden_bias = Matrix(p.hidden_bias.rows(), p.hidden_bias.cols());
  return ckpt;
}

void validate_checkpoint(const Checkpoint& ckpt, const Dataset& dataset) {
  const auto& p = ckpt.params;
  if (p.ego_weight.rows() != dataset.meta.feature_dim)
    throw DataError("checkpoint tensor ego_weight expects feature dimension " +
                    std::to_string(p.ego_weight.rows()) + " but dataset has " +
                    std::to_string(dataset.meta.feature_dim));
  if (p.out_weight.cols() != dataset.meta.num_classes)
    throw DataError("checkpoint tensor out_weight expects " +
                    std::to_string(p.out_weight.cols()) + " classes but dataset has " +
                    std::to_string(dataset.meta.num_classes));
  if (p.ego_weight.cols() != ckpt.cfg.hidden_dim ||
      p.out_weight.rows() != 3 * ckpt.cfg.hidden_dim)
    throw DataError("checkpoint tensor shapes disagree with hidden_dim");
}

}  // namespace adgnn
