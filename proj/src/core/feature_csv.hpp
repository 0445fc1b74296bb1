#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace flowsentry {

/// Column headers for the 20 features, CICIDS2018 spellings, fixed order.
const std::array<std::string, kFeatureCount>& feature_column_names();

/// "Dst Port,...,Bwd IAT Min,Label"
std::string feature_csv_header();

/// One CSV row: every value with six decimal places, then the label name.
std::string feature_csv_row(const FeatureVector& fv);

void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& rows);

struct FeatureCsvStats {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_skipped = 0;  // repeated headers, short rows, non-finite values
};

/// Reads a feature CSV. Accepts our own output and genuine CICIDS2018 day
/// files: columns are located by header name through an alias table, extra
/// columns are ignored, repeated mid-file header lines and rows with
/// unparseable or non-finite values are counted and skipped. A file without
/// a Label column yields Unlabeled rows.
std::vector<FeatureVector> read_feature_csv(std::istream& in, FeatureCsvStats* stats = nullptr);

std::vector<FeatureVector> read_feature_csv_file(const std::string& path,
                                                 FeatureCsvStats* stats = nullptr);
void write_feature_csv_file(const std::string& path, const std::vector<FeatureVector>& rows);

}  // namespace flowsentry
