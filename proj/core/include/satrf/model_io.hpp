#pragma once

#include <filesystem>
#include <iosfwd>

#include "satrf/attention.hpp"
#include "satrf/forest.hpp"

namespace satrf {

// Line-oriented text format, first line "satrf-forest 1" or "satrf-model 1".
// Doubles are written in shortest round-trip form, so a reloaded model
// predicts bit-identically and equal inputs produce byte-identical files.
inline constexpr int kModelFormatVersion = 1;

void write_forest(const Forest& forest, std::ostream& out);
Forest read_forest(std::istream& in);

void write_model(const SatRfModel& model, std::ostream& out);
SatRfModel read_model(std::istream& in);

void save_model(const SatRfModel& model, const std::filesystem::path& path);
SatRfModel load_model(const std::filesystem::path& path);

}  // namespace satrf
