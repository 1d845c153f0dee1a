#ifndef ERGORATE_IO_HPP
#define ERGORATE_IO_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergorate/chain.hpp"
#include "ergorate/drift.hpp"
#include "ergorate/htransform.hpp"
#include "ergorate/montecarlo.hpp"
#include "ergorate/semigroup.hpp"
#include "ergorate/spectral.hpp"

namespace ergorate::io {

using json = nlohmann::json;

/// Parameters for the builtin chain families; unset fields take defaults.
struct FamilyParams {
  std::optional<std::vector<double>> pi;
  std::optional<double> beta;
  std::optional<std::vector<double>> f;
  std::optional<std::vector<double>> birth;
  std::optional<std::vector<double>> death;
};

ChainSpec<double> builtin_family(const std::string& name, const FamilyParams& params,
                                 const Tolerances& tol = {});

/// Chain-spec document: either {"label", "Q", "f", "pi"?} or
/// {"family": "example21" | "example22" | "birth_death", ...}.
ChainSpec<double> parse_chain_spec(const json& doc, const Tolerances& tol = {});
ChainSpec<double> load_chain_spec(const std::string& path, const Tolerances& tol = {});

json to_json(const SpectralReport<double>& report);
json to_json(const RateFit<double>& fit);
json to_json(const DriftReport<double>& drift);
json to_json(const LemmaCheck<double>& check, json inputs = json::object());
json error_json(const Error& error);

/// Header `t,fnorm,envelope`, full double precision.
void write_decay_csv(std::ostream& out, const DecayCurve<double>& curve);
/// Header `t,fnorm_est,stderr`.
void write_fnorm_csv(std::ostream& out, const std::vector<FnormEstimate<double>>& rows);

}  // namespace ergorate::io

#endif  // ERGORATE_IO_HPP
