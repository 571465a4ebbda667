#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fosnet {

// Scalar predictors paired with discretely observed functional responses.
// Irregular observation patterns are represented on the union time grid with
// a 0/1 mask; `regular` is true iff every subject is observed everywhere.
// Times are affinely rescaled to [0,1] on construction; the original axis is
// kept in `grid_orig` so files round-trip exactly.
struct FunctionalDataset {
    Eigen::MatrixXd predictors;   // N x P
    Eigen::VectorXd grid;         // m, strictly increasing, in [0,1]
    Eigen::MatrixXd values;       // N x m; meaningful only where mask is 1
    Eigen::MatrixXd mask;         // N x m of {0,1}
    bool regular = true;
    Eigen::VectorXd grid_orig;    // the time axis as read from disk
    std::vector<std::string> subject_ids;

    Eigen::Index n_subjects() const { return predictors.rows(); }
    Eigen::Index n_predictors() const { return predictors.cols(); }
    Eigen::Index grid_size() const { return grid.size(); }

    // throws std::invalid_argument on any invariant violation
    void validate() const;
};

// Normalizes the grid to [0,1], derives `regular`, validates.
FunctionalDataset make_dataset(Eigen::MatrixXd predictors, Eigen::VectorXd grid,
                               Eigen::MatrixXd values, Eigen::MatrixXd mask,
                               std::vector<std::string> subject_ids = {});

enum class CsvFormat { Wide, Long };

// Wide: `path` is a CSV file with header x1,...,xP,t=<v1>,...,t=<vm>; an
// empty value cell marks an unobserved pair. Long: `path` is a directory
// holding predictors.csv (subject_id + P columns) and observations.csv
// (subject_id,time,value); the union grid and mask are built from the rows.
FunctionalDataset load_dataset(const std::string& path, CsvFormat format);
void save_dataset(const FunctionalDataset& ds, const std::string& path, CsvFormat format);

nlohmann::json dataset_to_json(const FunctionalDataset& ds);
FunctionalDataset dataset_from_json(const nlohmann::json& j);

// Seeded subject-level partition; train size = max(1, floor(N * fraction)).
std::pair<FunctionalDataset, FunctionalDataset> split(const FunctionalDataset& ds,
                                                      double train_fraction,
                                                      std::uint64_t seed);

// Row subset in the given order (shared grid and metadata).
FunctionalDataset subset(const FunctionalDataset& ds, const std::vector<Eigen::Index>& rows);

}  // namespace fosnet
