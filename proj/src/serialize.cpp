#include "embedlab/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "embedlab/errors.hpp"

namespace embedlab {

namespace {

void require_key(const Json& j, const char* key, const char* what) {
  if (!j.contains(key))
    fail("ParseError", std::string(what) + " is missing required key \"" + key + "\"");
}

std::size_t get_count(const Json& j, const char* key, const char* what) {
  require_key(j, key, what);
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
    fail("ParseError", std::string(what) + " key \"" + key + "\" must be an integer");
  auto v = j[key].get<long long>();
  if (v < 0) fail("ParseError", std::string(what) + " key \"" + key + "\" must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array()) fail("ParseError", std::string(what) + " must be an array of rows");
  Matrix m(j.size(), j.empty() ? 0 : j[0].size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    const Json& row = j[i];
    if (!row.is_array() || row.size() != m.cols)
      fail("ParseError", std::string(what) + " rows must be equal-length arrays");
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (!row[c].is_number()) fail("ParseError", std::string(what) + " entries must be numbers");
      m(i, c) = row[c].get<double>();
    }
  }
  return m;
}

Json network_to_json(const NetworkParams& net) {
  Json j;
  j["activation"] = net.activation.name();
  j["input_dim"] = net.input_dim;
  j["hidden"] = net.hidden;
  j["output_dim"] = net.output_dim;
  j["w"] = matrix_to_json(net.w);
  j["v"] = matrix_to_json(net.v);
  return j;
}

NetworkParams network_from_json(const Json& j) {
  NetworkParams net;
  require_key(j, "activation", "network");
  std::string act = j["activation"].get<std::string>();
  if (act == "tanh")
    net.activation.kind = ActivationKind::Tanh;
  else if (act == "relu")
    net.activation.kind = ActivationKind::ReLU;
  else
    fail("ParseError", "unknown activation \"" + act + "\"");
  net.input_dim = get_count(j, "input_dim", "network");
  net.hidden = get_count(j, "hidden", "network");
  net.output_dim = get_count(j, "output_dim", "network");
  require_key(j, "w", "network");
  require_key(j, "v", "network");
  net.w = matrix_from_json(j["w"], "network w");
  net.v = matrix_from_json(j["v"], "network v");
  net.validate();
  return net;
}

Json dataset_to_json(const Dataset& data) {
  Json j;
  j["loss"] = data.loss == LossKind::SquaredError ? "squared" : "logistic";
  j["inputs"] = matrix_to_json(data.inputs);
  j["targets"] = matrix_to_json(data.targets);
  return j;
}

Dataset dataset_from_json(const Json& j) {
  Dataset data;
  require_key(j, "loss", "dataset");
  std::string loss = j["loss"].get<std::string>();
  if (loss == "squared")
    data.loss = LossKind::SquaredError;
  else if (loss == "logistic")
    data.loss = LossKind::Logistic;
  else
    fail("ParseError", "unknown loss \"" + loss + "\"");
  require_key(j, "inputs", "dataset");
  require_key(j, "targets", "dataset");
  data.inputs = matrix_from_json(j["inputs"], "dataset inputs");
  data.targets = matrix_from_json(j["targets"], "dataset targets");
  data.validate();
  return data;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void dump_rec(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += pad;
        out += Json(it.key()).dump();
        out += ": ";
        dump_rec(it.value(), out, indent, depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      out += close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad;
        dump_rec(j[i], out, indent, depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      out += close_pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();  // strings, integers, booleans, null
      return;
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += '\n';
  return out;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) fail("IoError", "cannot open " + path + " for writing");
  f << dump_json(j);
  if (!f.good()) fail("IoError", "write failed for " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("IoError", "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  Json j = Json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) fail("ParseError", path + " is not valid JSON");
  return j;
}

}  // namespace embedlab
