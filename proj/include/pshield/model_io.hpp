// "pshield-model/1" files: one JSON document holding the spec, the input
// representation, the training fingerprint and base64 little-endian f64
// parameter arrays.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "pshield/trainer.hpp"

namespace pshield {

inline constexpr std::string_view kModelFormat = "pshield-model/1";

// Output is a pure function of the model, so equal models give equal bytes.
void save_model(const TrainedModel& model, std::ostream& out);
void save_model_file(const TrainedModel& model, const std::filesystem::path& path);

// Throws std::runtime_error on a wrong format tag or inconsistent arrays.
TrainedModel load_model(std::istream& in);
TrainedModel load_model_file(const std::filesystem::path& path);

}  // namespace pshield
