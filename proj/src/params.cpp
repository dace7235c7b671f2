#include "genlab/params.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace genlab {

std::size_t ParamStore::add(std::string name, Tensor init) {
  for (const auto& n : names_) {
    if (n == name) throw std::invalid_argument("duplicate parameter name: " + name);
  }
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw std::out_of_range("no parameter named " + name);
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

BoundParams bind(ad::Tape& tape, const ParamStore& store, bool requires_grad) {
  BoundParams b;
  b.vars.reserve(store.size());
  for (const auto& v : store.values()) {
    b.vars.push_back(requires_grad ? tape.variable(v) : tape.constant(v));
  }
  return b;
}

std::vector<Tensor> collect_gradients(const ad::Tape& tape, const BoundParams& bound) {
  std::vector<Tensor> grads;
  grads.reserve(bound.vars.size());
  for (const auto& v : bound.vars) grads.push_back(tape.grad(v));
  return grads;
}

nlohmann::json params_to_json(const ParamStore& store, const nlohmann::json& header) {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    params.push_back({{"name", store.name(i)},
                      {"shape", store.value(i).shape()},
                      {"data", store.value(i).values()}});
  }
  return {{"format", "genlab-params"},
          {"version", kCheckpointVersion},
          {"header", header.is_null() ? nlohmann::json::object() : header},
          {"params", std::move(params)}};
}

ParamStore params_from_json(const nlohmann::json& j, nlohmann::json* header) {
  if (!j.is_object() || j.value("format", "") != "genlab-params") {
    throw std::runtime_error("not a genlab parameter checkpoint");
  }
  if (j.value("version", -1) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  ParamStore store;
  for (const auto& rec : j.at("params")) {
    auto shape = rec.at("shape").get<Tensor::Shape>();
    auto data = rec.at("data").get<std::vector<double>>();
    store.add(rec.at("name").get<std::string>(), Tensor(std::move(shape), std::move(data)));
  }
  if (header) *header = j.value("header", nlohmann::json::object());
  return store;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace genlab
