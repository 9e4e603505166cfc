#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "commspec/hypotest.hpp"
#include "commspec/inversion.hpp"
#include "commspec/measure.hpp"
#include "commspec/simulate.hpp"

namespace commspec {

using json = nlohmann::json;
using AnyMeasure = std::variant<BivariateSpectralMeasure, UnivariateSpectralMeasure>;

/// Float formatted with 17 significant digits.
std::string fmt17(double v);

/// {"atoms":[{"l1":..,"l2":..,"w":..}]} or {"atoms":[{"l":..,"w":..}]}.
AnyMeasure measure_from_json(const json& j);
json measure_to_json(const BivariateSpectralMeasure& H);
json measure_to_json(const UnivariateSpectralMeasure& H);
json measure_to_json(const AnyMeasure& H);
AnyMeasure read_measure(const std::string& path);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Single column with header `lambda`.
std::vector<double> read_eigen_csv(const std::string& path);
void write_eigen_csv(const std::string& path, const std::vector<double>& vals);

/// `# point_mass_zero=<v>` line, then `x,f` header and rows.
void write_density_csv(const std::string& path, const DensityCurve& curve);
DensityCurve read_density_csv(const std::string& path);

/// Rows are coordinates, columns observations. No header.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M);

/// "CMSP0001", rows and cols as little-endian u32, then column-major
/// little-endian float64 entries.
Eigen::MatrixXd read_matrix_bin(const std::string& path);
void write_matrix_bin(const std::string& path, const Eigen::MatrixXd& M);

/// Picks the binary reader when the file starts with the magic bytes.
Eigen::MatrixXd read_matrix(const std::string& path);

json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const json& j);

json test_result_to_json(const TestResult& r);

}  // namespace commspec
