#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "timesynth/signal_gen.hpp"

namespace timesynth {

// On-disk layout of one dataset directory:
//   manifest.json         family, ranges, grid, seeds, splits, perturbation
//   series_<index>.csv    header "t,value", doubles printed with %.17g

nlohmann::json spec_to_json(const SignalSpec& spec);
SignalSpec spec_from_json(Family family, const nlohmann::json& j);

nlohmann::json ranges_to_json(const FamilyRanges& ranges);
// Missing keys keep the values of `base`.
FamilyRanges ranges_from_json(const nlohmann::json& j, const FamilyRanges& base);

nlohmann::json perturbation_to_json(const Perturbation& p);
Perturbation perturbation_from_json(const nlohmann::json& j);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

std::string series_file_name(std::size_t index);

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// True when `dir` already holds exactly this manifest and every series file.
bool dataset_matches(const DatasetManifest& manifest, const std::filesystem::path& dir);

}  // namespace timesynth
