#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace ivp {

// Pairwise (cascade) summation with a fixed split order, so the result is
// independent of how callers batch the data.
double pairwise_sum(std::span<const double> values);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Strict parse: the whole view must be a number (surrounding blanks allowed).
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace ivp
