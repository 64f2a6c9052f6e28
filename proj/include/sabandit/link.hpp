#pragma once

#include <string>
#include <string_view>

namespace sabandit {

/// Inverse link of the reward model. Each kind carries the mean function
/// mu(z), its derivative, and the cumulant m(z) with m'(z) = mu(z).
enum class LinkKind { kLinear, kLogistic };

double link_mean(LinkKind link, double z);
double link_mean_derivative(LinkKind link, double z);
double link_cumulant(LinkKind link, double z);

std::string to_string(LinkKind link);
/// Accepts "linear" or "logistic"; throws std::invalid_argument otherwise.
LinkKind parse_link(std::string_view name);

}  // namespace sabandit
