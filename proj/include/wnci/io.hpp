#pragma once

// On-disk formats: binary model checkpoints and JSON dataset files.
// Layouts are documented in docs/formats.md.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "wnci/model.hpp"

namespace wnci {

void write_checkpoint(std::ostream& os, const MlpModel& model);
MlpModel read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const MlpModel& model);
MlpModel load_checkpoint(const std::string& path);

struct DatasetSeeds {
    std::uint64_t design = 0;
    std::uint64_t truth = 0;
    std::uint64_t noise = 0;
};

struct DatasetFile {
    Dataset data;
    DatasetSeeds seeds;
};

void write_dataset(std::ostream& os, const DatasetFile& file);
DatasetFile read_dataset(std::istream& is);
void save_dataset(const std::string& path, const DatasetFile& file);
DatasetFile load_dataset(const std::string& path);
/// x0..x{d-1},y[,truth]
void write_dataset_csv(std::ostream& os, const Dataset& data);

}  // namespace wnci
