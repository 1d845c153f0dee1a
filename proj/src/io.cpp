#include "ergorate/io.hpp"

#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ergorate::io {

namespace {

Vector<double> to_vector(const std::vector<double>& values) {
  Vector<double> v(static_cast<Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) v(static_cast<Index>(k)) = values[k];
  return v;
}

std::vector<double> number_array(const json& doc, const char* key) {
  const auto& node = doc.at(key);
  if (!node.is_array()) {
    throw Error(ErrorKind::InvalidInput, std::string("\"") + key + "\" must be an array");
  }
  std::vector<double> out;
  for (const auto& item : node) {
    if (!item.is_number()) {
      throw Error(ErrorKind::InvalidInput, std::string("\"") + key + "\" must hold numbers");
    }
    out.push_back(item.get<double>());
  }
  return out;
}

Matrix<double> number_matrix(const json& doc, const char* key) {
  const auto& node = doc.at(key);
  if (!node.is_array() || node.empty()) {
    throw Error(ErrorKind::InvalidInput, "\"Q\" must be a non-empty array of rows");
  }
  const auto n = static_cast<Index>(node.size());
  Matrix<double> q(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = node[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw Error(ErrorKind::InvalidInput, "\"Q\" must be square", static_cast<std::size_t>(i));
    }
    for (Index j = 0; j < n; ++j) {
      const auto& item = row[static_cast<std::size_t>(j)];
      if (!item.is_number()) {
        throw Error(ErrorKind::InvalidInput, "\"Q\" entries must be numbers",
                    static_cast<std::size_t>(i));
      }
      q(i, j) = item.get<double>();
    }
  }
  return q;
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* key) {
  if (!doc.contains(key)) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    if (!doc.at(key).is_number()) {
      throw Error(ErrorKind::InvalidInput, std::string("\"") + key + "\" must be a number");
    }
    return doc.at(key).get<double>();
  } else {
    return number_array(doc, key);
  }
}

std::optional<WeightFunction<double>> weight_or_default(const std::optional<std::vector<double>>& f) {
  if (!f) return std::nullopt;
  return WeightFunction<double>::validate(to_vector(*f));
}

}  // namespace

ChainSpec<double> builtin_family(const std::string& name, const FamilyParams& params,
                                 const Tolerances& tol) {
  if (name == "example21") {
    const auto pi = params.pi.value_or(std::vector<double>{0.5, 0.25, 0.25});
    auto spec = build_example21(Distribution<double>::validate(to_vector(pi), tol),
                                params.beta.value_or(2.0));
    if (params.f) spec.weight = *weight_or_default(params.f);
    if (spec.weight.size() != spec.size()) {
      throw Error(ErrorKind::InvalidInput, "weight length does not match state count");
    }
    return spec;
  }
  if (name == "example22") {
    auto spec = build_example22<double>(weight_or_default(params.f));
    if (spec.weight.size() != 3) {
      throw Error(ErrorKind::InvalidInput, "example22 takes a weight of length 3");
    }
    return spec;
  }
  if (name == "birth_death") {
    const auto birth = params.birth.value_or(std::vector<double>(5, 1.0));
    const auto death = params.death.value_or(std::vector<double>(birth.size(), 1.0));
    auto spec = build_birth_death(to_vector(birth), to_vector(death), weight_or_default(params.f));
    if (spec.weight.size() != spec.size()) {
      throw Error(ErrorKind::InvalidInput, "weight length does not match state count");
    }
    return spec;
  }
  throw Error(ErrorKind::InvalidInput, "unknown chain family \"" + name + "\"");
}

ChainSpec<double> parse_chain_spec(const json& doc, const Tolerances& tol) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidInput, "chain spec must be a JSON object");
  try {
    if (doc.contains("family")) {
      if (!doc.at("family").is_string()) {
        throw Error(ErrorKind::InvalidInput, "\"family\" must be a string");
      }
      FamilyParams params{optional_field<std::vector<double>>(doc, "pi"),
                          optional_field<double>(doc, "beta"),
                          optional_field<std::vector<double>>(doc, "f"),
                          optional_field<std::vector<double>>(doc, "birth"),
                          optional_field<std::vector<double>>(doc, "death")};
      auto spec = builtin_family(doc.at("family").get<std::string>(), params, tol);
      if (doc.contains("label") && doc.at("label").is_string()) {
        spec.label = doc.at("label").get<std::string>();
      }
      return spec;
    }
    auto q = RateMatrix<double>::validate(number_matrix(doc, "Q"), ValidateMode::Strict, tol);
    auto f = doc.contains("f") ? WeightFunction<double>::validate(to_vector(number_array(doc, "f")))
                               : WeightFunction<double>::ones(q.size());
    std::optional<Distribution<double>> pi;
    if (doc.contains("pi")) pi = Distribution<double>::validate(to_vector(number_array(doc, "pi")), tol);
    std::string label = doc.contains("label") && doc.at("label").is_string()
                            ? doc.at("label").get<std::string>()
                            : std::string{};
    return make_chain_spec(std::move(q), std::move(f), std::move(pi), std::move(label), tol);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("malformed chain spec: ") + e.what());
  }
}

ChainSpec<double> load_chain_spec(const std::string& path, const Tolerances& tol) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("invalid JSON: ") + e.what());
  }
  return parse_chain_spec(doc, tol);
}

json to_json(const SpectralReport<double>& report) {
  json eig = json::array();
  for (const auto& v : report.eigenvalues) eig.push_back({v.real(), v.imag()});
  return {{"gap", report.gap},
          {"eigenvalues", eig},
          {"reversible", report.reversible},
          {"rate_epsilon_max", report.rate_epsilon_max},
          {"true_decay_rate", report.true_decay_rate},
          {"constants", std::vector<double>(report.constants.begin(), report.constants.end())}};
}

json to_json(const RateFit<double>& fit) {
  return {{"rate", fit.rate},
          {"intercept", fit.intercept},
          {"window", {fit.t_min, fit.t_max}},
          {"residual", fit.residual},
          {"mode", to_string(fit.mode)},
          {"points", fit.points}};
}

json to_json(const DriftReport<double>& drift) {
  return {{"c_max", drift.c_max},
          {"b_min", drift.b_min},
          {"small_set", drift.small_set},
          {"Qf", std::vector<double>(drift.qf.begin(), drift.qf.end())}};
}

json to_json(const LemmaCheck<double>& check, json inputs) {
  inputs["t"] = check.t;
  inputs["n"] = check.states;
  return {{"lemma", check.lemma},
          {"inputs", std::move(inputs)},
          {"lhs", check.lhs},
          {"rhs", check.rhs},
          {"residual", check.residual},
          {"pass", check.pass}};
}

json error_json(const Error& error) {
  json out = {{"error", to_string(error.kind())}, {"message", error.what()}};
  if (error.index()) out["row"] = *error.index();
  return out;
}

void write_decay_csv(std::ostream& out, const DecayCurve<double>& curve) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "t,fnorm,envelope\n";
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    out << curve.times[k] << ',' << curve.fnorms[k] << ',' << curve.envelope[k] << '\n';
  }
  out.precision(old);
}

void write_fnorm_csv(std::ostream& out, const std::vector<FnormEstimate<double>>& rows) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "t,fnorm_est,stderr\n";
  for (const auto& row : rows) {
    out << row.t << ',' << row.estimate << ',' << row.std_error << '\n';
  }
  out.precision(old);
}

}  // namespace ergorate::io
