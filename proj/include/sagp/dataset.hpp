#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace sagp {

// Parsed CSV in original units: columns x1..xd then y.
struct RawTable {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

// Affine maps taking original units to the model scale: per-dimension
// min-max onto [0,1] for inputs, mean-zero unit-variance for the response.
struct Transform {
    Eigen::VectorXd x_min;
    Eigen::VectorXd x_max;
    double y_mean = 0.0;
    double y_sd = 1.0;

    Eigen::Index dim() const { return x_min.size(); }
    double to_unit(double x, Eigen::Index k) const { return (x - x_min[k]) / (x_max[k] - x_min[k]); }
    double from_unit(double u, Eigen::Index k) const { return x_min[k] + u * (x_max[k] - x_min[k]); }
    double to_standard_y(double y) const { return (y - y_mean) / y_sd; }
    double from_standard_y(double s) const { return y_mean + s * y_sd; }
};

struct Dataset {
    Eigen::MatrixXd X;  // n x d, every coordinate in [0,1]
    Eigen::VectorXd y;  // mean 0, sample variance 1
    Transform transform;
};

// Header must name columns x1..xd (d >= 1) and, when require_y, a final y.
RawTable load_csv(std::istream& in, const std::string& name, bool require_y = true);
RawTable load_csv(const std::string& path, bool require_y = true);

// Points-only grid (x1..xd header, no y column).
Eigen::MatrixXd load_points_csv(const std::string& path);

// Pick named columns out of an arbitrary-header CSV, in the order requested.
Eigen::MatrixXd load_columns_csv(const std::string& path, const std::vector<std::string>& names);

Dataset standardize(const RawTable& raw);

// Apply a stored transform to new points in original units; coordinates that
// land outside [0,1] are clipped and counted (extrapolation).
Eigen::MatrixXd standardize_points(const Eigen::MatrixXd& pts, const Transform& transform,
                                   long* clipped_count = nullptr);

void save_dataset(const Dataset& data, std::ostream& out);
Dataset load_dataset(std::istream& in);
void save_dataset_file(const Dataset& data, const std::string& path);
Dataset load_dataset_file(const std::string& path);

// CSV writer for tables in original units (used by simulate and predict).
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& columns);

}  // namespace sagp
