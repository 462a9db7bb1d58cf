#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace bsnse {

/// Sampled audit of an inequality lhs <= rhs. A sample violates when
/// lhs > rhs + slack (slack covers rounding or a stated statistical tolerance).
struct EstimateReport {
  std::string name;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> slack;
  std::map<std::string, double> constants;
  std::uint64_t seed = 0;
  double margin_min = std::numeric_limits<double>::infinity();
  double margin_mean = 0.0;
  std::size_t violations = 0;

  void add(double l, double r, double s = 0.0) {
    lhs.push_back(l);
    rhs.push_back(r);
    slack.push_back(s);
  }

  EstimateReport& finalize() {
    violations = 0;
    margin_min = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t j = 0; j < lhs.size(); ++j) {
      const double m = rhs[j] - lhs[j];
      margin_min = std::min(margin_min, m);
      sum += m;
      if (m < -slack[j]) ++violations;
    }
    margin_mean = lhs.empty() ? 0.0 : sum / double(lhs.size());
    return *this;
  }

  bool passed() const { return violations == 0; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["samples"] = lhs.size();
    j["violations"] = violations;
    j["margin_min"] = lhs.empty() ? 0.0 : margin_min;
    j["margin_mean"] = margin_mean;
    j["seed"] = seed;
    j["constants"] = constants;
    return j;
  }
};

}  // namespace bsnse
