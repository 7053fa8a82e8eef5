#include "permsym/json_io.hpp"

#include <cstdio>
#include <stdexcept>

namespace permsym {

namespace {

void dump_impl(const Json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case Json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case Json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case Json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
      out += buf;
      break;
    }
    case Json::value_t::string:
      out += Json(j.get<std::string>()).dump();  // reuse string escaping
      break;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_impl(item, out, indent, depth + 1);
      }
      if (!first) newline(depth);
      out += ']';
      break;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_impl(it.value(), out, indent, depth + 1);
      }
      if (!first) newline(depth);
      out += '}';
      break;
    }
    default:
      throw std::invalid_argument("dump_json: unsupported value type");
  }
}

void collect_flat(const Json& j, std::vector<double>& flat,
                  std::vector<std::size_t>& shape, std::size_t depth) {
  if (j.is_array()) {
    if (depth == shape.size())
      shape.push_back(j.size());
    else if (shape[depth] != j.size())
      throw std::invalid_argument("array_from_json: ragged array");
    for (const auto& item : j) collect_flat(item, flat, shape, depth + 1);
  } else if (j.is_number()) {
    if (depth != shape.size())
      throw std::invalid_argument("array_from_json: inconsistent nesting");
    flat.push_back(j.get<double>());
  } else {
    throw std::invalid_argument("array_from_json: non-numeric entry");
  }
}

Json nest(const DenseArray& x, std::size_t axis, std::size_t offset,
          std::size_t stride) {
  Json out = Json::array();
  if (axis + 1 == x.rank()) {
    for (std::size_t i = 0; i < x.shape()[axis]; ++i)
      out.push_back(x[offset + i]);
    return out;
  }
  std::size_t inner = stride / x.shape()[axis];
  for (std::size_t i = 0; i < x.shape()[axis]; ++i)
    out.push_back(nest(x, axis + 1, offset + i * inner, inner));
  return out;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_impl(j, out, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

Json array_to_json(const DenseArray& x) {
  return nest(x, 0, 0, x.size());
}

DenseArray array_from_json(const Json& j) {
  std::vector<double> flat;
  std::vector<std::size_t> shape;
  collect_flat(j, flat, shape, 0);
  if (shape.empty())
    throw std::invalid_argument("array_from_json: scalar is not an array");
  return DenseArray(std::move(shape), std::move(flat));
}

Json perm_to_json(const Permutation& p) {
  Json out = Json::array();
  for (std::size_t i = 0; i < p.n(); ++i) out.push_back(p(i));
  return out;
}

Permutation perm_from_json(const Json& j) {
  if (!j.is_array())
    throw std::invalid_argument("perm_from_json: image vector expected");
  std::vector<std::size_t> img;
  for (const auto& v : j) img.push_back(v.get<std::size_t>());
  return Permutation(std::move(img));
}

Json tuple_to_json(const PermTuple& t) {
  Json out = Json::array();
  for (const auto& p : t.parts) out.push_back(perm_to_json(p));
  return out;
}

PermTuple tuple_from_json(const Json& j) {
  PermTuple t;
  for (const auto& p : j) t.parts.push_back(perm_from_json(p));
  return t;
}

Json report_to_json(const TestReport& r) {
  Json out;
  out["name"] = r.name;
  out["passed"] = r.passed;
  out["statistic"] = r.statistic;
  if (r.p_value) out["p_value"] = *r.p_value;
  out["max_deviation"] = r.max_deviation;
  out["cases_checked"] = r.cases_checked;
  if (!r.detail.empty()) out["detail"] = r.detail;
  return out;
}

TestReport report_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"name", "passed", "statistic", "p_value",
                       "max_deviation", "cases_checked", "detail"},
                      "report");
  TestReport r;
  r.name = j.at("name").get<std::string>();
  r.passed = j.at("passed").get<bool>();
  r.statistic = j.at("statistic").get<double>();
  if (j.contains("p_value")) r.p_value = j.at("p_value").get<double>();
  r.max_deviation = j.at("max_deviation").get<double>();
  r.cases_checked = j.at("cases_checked").get<std::size_t>();
  if (j.contains("detail")) r.detail = j.at("detail").get<std::string>();
  return r;
}

Json mlp_to_json(const MlpParams& p) {
  Json out;
  out["layer_sizes"] = p.layer_sizes;
  switch (p.activation) {
    case Activation::Relu: out["activation"] = "relu"; break;
    case Activation::Tanh: out["activation"] = "tanh"; break;
    case Activation::Identity: out["activation"] = "identity"; break;
  }
  out["weights"] = Json::array();
  out["biases"] = Json::array();
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    out["weights"].push_back(array_to_json(p.weights[l]));
    out["biases"].push_back(array_to_json(p.biases[l]));
  }
  return out;
}

MlpParams mlp_from_json(const Json& j) {
  reject_unknown_keys(j, {"layer_sizes", "activation", "weights", "biases"},
                      "mlp");
  MlpParams p;
  p.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  std::string act = j.at("activation").get<std::string>();
  if (act == "relu")
    p.activation = Activation::Relu;
  else if (act == "tanh")
    p.activation = Activation::Tanh;
  else if (act == "identity")
    p.activation = Activation::Identity;
  else
    throw std::invalid_argument("mlp_from_json: unknown activation " + act);
  for (const auto& w : j.at("weights")) p.weights.push_back(array_from_json(w));
  for (const auto& b : j.at("biases")) p.biases.push_back(array_from_json(b));
  validate_mlp(p);
  return p;
}

void reject_unknown_keys(const Json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!obj.is_object())
    throw std::invalid_argument(where + ": JSON object expected");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known)
      throw std::invalid_argument(where + ": unknown key \"" + it.key() +
                                  "\"");
  }
}

void check_schema_version(const Json& obj, const std::string& where) {
  if (!obj.is_object() || !obj.contains("schema_version"))
    throw std::invalid_argument(where + ": missing schema_version");
  if (obj.at("schema_version").get<std::string>() !=
      std::string(kSchemaVersion))
    throw std::invalid_argument(where + ": unsupported schema_version");
}

}  // namespace permsym
