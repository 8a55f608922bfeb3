#pragma once

#include "afpca/dataset.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace afpca {

/// One parsed record of a long-format observation file.
struct LongRow {
    std::string subject;
    double t = 0.0;
    double y = 0.0;
};

using LongFormatTable = std::vector<LongRow>;

/// Parse a long-format CSV with header columns subject_id,t,y
/// (case-insensitive, any order; extra columns are ignored).
LongFormatTable parse_long_csv(const std::string& path);

/// Parse and regroup into a FunctionalDataset: rows grouped by subject in
/// first-appearance order, stably sorted by t within subject. Duplicate
/// (subject, t) pairs are rejected. The domain is the global t range.
FunctionalDataset ingest_csv(const std::string& path);

/// Inverse of ingest_csv up to float formatting (17 significant digits
/// round-trip exactly).
void write_dataset_csv(const FunctionalDataset& data, const std::string& path);

/// Parse a two-column CSV with header t,y (case-insensitive, any order).
void read_ty_csv(const std::string& path, Eigen::VectorXd& t, Eigen::VectorXd& y);

/// %.17g rendering; non-finite values become the undefined marker "NA".
std::string format_double(double v);

}  // namespace afpca
