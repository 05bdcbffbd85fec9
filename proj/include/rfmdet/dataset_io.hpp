#pragma once

#include <filesystem>

#include "rfmdet/scenario.hpp"

namespace rfmdet {

/// Wire format RFD1: magic "RFD1", little-endian u32 version=1, u32 N, u32 D,
/// u64 row count, u64 seed, u8 split tag, then row-major 32-bit floats.
/// A JSON sidecar `<name>.meta.json` carries the full ScenarioConfig.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// CSV export: header re_0..re_{N-1},im_0..im_{N-1}, one row per sample.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// Writes to `<path>.tmp` then renames; partial outputs are never left behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

std::string split_name(Split split);
Split split_from_name(const std::string& name);

}  // namespace rfmdet
