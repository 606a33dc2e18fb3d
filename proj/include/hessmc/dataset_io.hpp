#ifndef HESSMC_DATASET_IO_HPP
#define HESSMC_DATASET_IO_HPP

#include <hessmc/models.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace hessmc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// <dir>/<model>_seed<seed>.csv plus its .json sidecar.
DatasetFiles dataset_paths(const std::filesystem::path& dir, ModelKind model, std::uint64_t seed);

/// CSV body with header `t,y`; SIR counts are written as integers.
std::string dataset_csv(const Dataset& data);
/// Sidecar `{model, true_theta, T, seed}`.
std::string dataset_sidecar(const Dataset& data);

DatasetFiles write_dataset(const Dataset& data, const std::filesystem::path& dir);
/// Reads a CSV and the sidecar next to it.
Dataset read_dataset(const std::filesystem::path& csv_path);

/// Shortest round-trip formatting of a double.
std::string format_double(double value);

}  // namespace hessmc

#endif
