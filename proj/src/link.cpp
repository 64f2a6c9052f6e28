#include "sabandit/link.hpp"

#include <cmath>
#include <stdexcept>

namespace sabandit {

double link_mean(LinkKind link, double z) {
  switch (link) {
    case LinkKind::kLinear:
      return z;
    case LinkKind::kLogistic:
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
  }
  return z;
}

double link_mean_derivative(LinkKind link, double z) {
  switch (link) {
    case LinkKind::kLinear:
      return 1.0;
    case LinkKind::kLogistic: {
      // e^{-|z|} / (1 + e^{-|z|})^2 keeps the tails from underflowing to 0
      const double e = std::exp(-std::abs(z));
      return e / ((1.0 + e) * (1.0 + e));
    }
  }
  return 1.0;
}

double link_cumulant(LinkKind link, double z) {
  switch (link) {
    case LinkKind::kLinear:
      return 0.5 * z * z;
    case LinkKind::kLogistic:
      // log(1 + e^z) without overflow for large |z|
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return 0.5 * z * z;
}

std::string to_string(LinkKind link) {
  return link == LinkKind::kLinear ? "linear" : "logistic";
}

LinkKind parse_link(std::string_view name) {
  if (name == "linear") return LinkKind::kLinear;
  if (name == "logistic") return LinkKind::kLogistic;
  throw std::invalid_argument("unknown link '" + std::string(name) +
                              "' (expected linear or logistic)");
}

}  // namespace sabandit
