#include "pcpa/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pcpa {

using json = nlohmann::ordered_json;

namespace {
constexpr const char* kFormat = "pcpa-checkpoint";
constexpr int kVersion = 1;

json hyper_json(const HyperParams& h) {
  json j;
  j["alpha"] = h.alpha;
  j["beta"] = h.beta;
  j["input_dim"] = h.input_dim;
  j["hidden_dim"] = h.hidden_dim;
  j["dropout"] = h.dropout;
  j["batch_size"] = h.batch_size;
  j["epochs"] = h.epochs;
  j["seed"] = h.seed;
  j["vocab_cap"] = h.vocab_cap;
  j["lr"] = h.lr;
  j["adam_beta1"] = h.adam_beta1;
  j["adam_beta2"] = h.adam_beta2;
  j["adam_eps"] = h.adam_eps;
  j["grad_clip"] = h.grad_clip;
  j["constrained"] = h.constrained;
  j["use_separators"] = h.use_separators;
  j["shared_separator"] = h.shared_separator;
  j["param_share"] = h.param_share;
  j["ipi_mask_noncallouts"] = h.ipi_mask_noncallouts;
  return j;
}

HyperParams hyper_from(const json& j) {
  HyperParams h;
  h.alpha = j.at("alpha").get<double>();
  h.beta = j.at("beta").get<double>();
  h.input_dim = j.at("input_dim").get<int>();
  h.hidden_dim = j.at("hidden_dim").get<int>();
  h.dropout = j.at("dropout").get<double>();
  h.batch_size = j.at("batch_size").get<int>();
  h.epochs = j.at("epochs").get<int>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.vocab_cap = j.at("vocab_cap").get<std::size_t>();
  h.lr = j.at("lr").get<double>();
  h.adam_beta1 = j.at("adam_beta1").get<double>();
  h.adam_beta2 = j.at("adam_beta2").get<double>();
  h.adam_eps = j.at("adam_eps").get<double>();
  h.grad_clip = j.at("grad_clip").get<double>();
  h.constrained = j.at("constrained").get<bool>();
  h.use_separators = j.at("use_separators").get<bool>();
  h.shared_separator = j.at("shared_separator").get<bool>();
  h.param_share = j.at("param_share").get<bool>();
  h.ipi_mask_noncallouts = j.at("ipi_mask_noncallouts").get<bool>();
  return h;
}
}  // namespace

std::string hyper_to_json(const HyperParams& hyper) { return hyper_json(hyper).dump(); }

HyperParams hyper_from_json(const std::string& text) {
  return hyper_from(json::parse(text));
}

void save_checkpoint(const std::string& path, const PcpaModel& model) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["hyper"] = hyper_json(model.hyper());
  j["vocab"] = json::parse(model.vocab().to_json());
  json params = json::object();
  for (const auto& name : model.params().names()) {
    const Param& p = model.params().get(name);
    json entry;
    entry["shape"] = p.value.shape();
    entry["data"] = std::vector<double>(p.value.data(), p.value.data() + p.value.size());
    params[name] = std::move(entry);
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

PcpaModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": parse error: " + e.what());
  }
  if (!j.contains("format") || j.at("format").get<std::string>() != kFormat) {
    throw std::runtime_error("checkpoint " + path + ": not a " + kFormat + " file");
  }
  if (j.at("version").get<int>() != kVersion) {
    throw std::runtime_error("checkpoint " + path + ": unsupported version");
  }
  HyperParams hyper = hyper_from(j.at("hyper"));
  Vocabulary vocab = Vocabulary::from_json(j.at("vocab").dump());
  PcpaModel model(hyper, std::move(vocab));
  model.init_params(0);  // shapes only; values come from the file

  const json& params = j.at("params");
  std::vector<std::string> expected = model.params().names();
  if (params.size() != expected.size()) {
    throw std::runtime_error("checkpoint " + path + ": parameter set mismatch");
  }
  for (const std::string& name : expected) {
    if (!params.contains(name)) {
      throw std::runtime_error("checkpoint " + path + ": missing parameter " + name);
    }
    const json& entry = params.at(name);
    Tensor t(entry.at("shape").get<std::vector<std::size_t>>(),
             entry.at("data").get<std::vector<double>>());
    Param& p = model.params().get(name);
    if (!p.value.same_shape(t)) {
      throw std::runtime_error("checkpoint " + path + ": shape mismatch for " + name);
    }
    p.value = std::move(t);
  }
  return model;
}

}  // namespace pcpa
