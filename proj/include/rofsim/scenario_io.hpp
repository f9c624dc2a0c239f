#pragma once

#include <filesystem>
#include <string>

#include "rofsim/link.hpp"

namespace rofsim {

/// Parses a scenario document (YAML). Unknown keys, missing keys and
/// malformed values raise ParseError with the line number; out-of-range
/// values raise the validation error of LinkScenario::validate. Only the
/// `grid` section and `responsivity_a_w` may be omitted.
LinkScenario parse_scenario(const std::string& text, const std::string& source = "<string>");

LinkScenario load_scenario(const std::filesystem::path& path);

/// Serializes a scenario. parse_scenario(save_scenario(s)) == s for every
/// scenario a file can express (values that have an exact preimage in file
/// units, which includes anything parsed or built with with_override).
std::string save_scenario(const LinkScenario& s);

/// Copy of `s` with the numeric scenario key `dotted_key` (for example
/// `downlink_fiber.length_km`) set to `value`, in file units. Throws
/// AxisError if the key does not exist or is not numeric.
LinkScenario with_override(const LinkScenario& s, const std::string& dotted_key, double value);

/// Shortest decimal text that reads back as exactly `v`.
std::string format_number(double v);

}  // namespace rofsim
