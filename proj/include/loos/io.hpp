#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "loos/estimators.hpp"

namespace loos {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset file: a JSON object with keys
///   format ("loos-dataset"), version (1), model (kind name),
///   lattice {nx, ny, x_range, y_range}, covariates (row list or null),
///   truth {tau, kappa, sigma_eps?, beta} or null, obs_indices,
///   replicates (list of value lists), outliers
///   (list of {replicate, index, original, replaced}).
void write_dataset_json(std::ostream& out, const Dataset& data);
Dataset read_dataset_json(std::istream& in);

/// Columns: replicate, node_index, s1, s2, value, is_outlier.
void write_replicates_csv(std::ostream& out, const Dataset& data);

void write_fit_report(std::ostream& out, const FitResult& result, const Method& method,
                      const ModelSpec& model);
/// Columns: method, rule, parameter, estimate, wall_time_s, n_eval, converged.
void write_fit_csv(std::ostream& out, const FitResult& result, const Method& method,
                   const ModelSpec& model, bool header = true);

void write_godambe_report(std::ostream& out, const GodambeResult& result, const Method& method,
                          const ModelSpec& model);

std::string read_file(const std::filesystem::path& path);
/// Writes text to path, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace loos
